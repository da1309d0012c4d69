import numpy as np
import pytest

from mststream.errors import ConfigError
from mststream.generators import generate_uniform
from mststream.geometry import PointMultiset
from mststream.oracle import mst_oracle
from mststream.quadtree import (Quadtree, QuadtreeConfig, build_levels, check_nesting, onepass_levels,
                                quadtree_cost, side_exponent, snap, vertex_set)


def test_onepass_levels():
    assert onepass_levels(16).tolist() == [1, 2, 4, 8, 16]
    cfg = QuadtreeConfig(d=1, Delta=16, epsilon=0.5, delta=1.0, beta=10.0)
    # the multi-level grid carries one extra level past Delta for the telescoped sum
    assert build_levels(cfg).levels.tolist()[:5] == [1, 2, 4, 8, 16]


def test_block_anchors():
    cfg = QuadtreeConfig(d=1, Delta=16, epsilon=0.5)
    assert build_levels(cfg).anchors == [1.0, 4.0]


def test_level_count_small_delta():
    cfg = QuadtreeConfig(d=1, Delta=2, epsilon=1.0, delta=0.01, beta=1000)
    assert build_levels(cfg).L == 71
    assert 1.01 ** 70 >= 2 > 1.01 ** 69


def test_config_validation():
    with pytest.raises(ConfigError):
        QuadtreeConfig(d=1, Delta=12)
    with pytest.raises(ConfigError):
        QuadtreeConfig(d=1, Delta=16, delta=0.5, beta=1.0)
    with pytest.raises(ConfigError):
        QuadtreeConfig(d=0, Delta=16)


def test_snap_center_convention():
    # side 4 needs T/(d beta) in [4, 8)
    cfg = QuadtreeConfig(d=1, Delta=64, epsilon=0.5, delta=1.0, beta=10.0, shift=[0])
    T = 40.0
    assert side_exponent(cfg, T) == 2
    assert snap(cfg, T, [1])[0] == 2.0


def test_far_points_get_distinct_cells():
    for shift in range(8):
        cfg = QuadtreeConfig(d=1, Delta=64, epsilon=0.5, delta=1.0, beta=10.0, shift=[shift])
        T = 40.0
        for a in range(1, 40):
            for b in range(a + 1, 60):
                if b - a > T:
                    assert snap(cfg, T, [a])[0] != snap(cfg, T, [b])[0]


def test_vertex_set_examples():
    cfg = QuadtreeConfig(d=2, Delta=1024, epsilon=0.5, delta=1.0, beta=20.0, shift=[0, 0])
    T = 1000.0
    side = 2 ** side_exponent(cfg, T)
    P = PointMultiset.from_points([[1, 1], [2, 1], [1, 2]])
    V = vertex_set(cfg, T, P)
    assert V.size == 1 and V.mult.tolist() == [3]
    far = PointMultiset.from_points([[1 + 3 * side * i, 1] for i in range(5)])
    assert vertex_set(cfg, T, far).size == 5


def test_nesting_random():
    for s in range(5):
        P = generate_uniform(40, 2, 256, s)
        cfg = QuadtreeConfig.for_points(P, epsilon=0.5, seed=s)
        anchors = build_levels(cfg).anchors
        assert check_nesting(cfg, P, anchors[0], anchors[-1])


def test_quadtree_cost_trivial():
    P = PointMultiset.from_points([[3, 3]])
    cfg = QuadtreeConfig(d=2, Delta=1, epsilon=0.5)
    assert quadtree_cost(cfg, build_levels(cfg), P) == 0
    two = PointMultiset.from_points([[1], [3]])
    cfg = QuadtreeConfig(d=1, Delta=2, epsilon=0.5, delta=1.0, beta=10.0, shift=[0])
    T = 1000.0
    assert vertex_set(cfg, T, two).size == 1


def test_quadtree_cost_bounded():
    P = generate_uniform(30, 2, 128, 1)
    mst = mst_oracle(P)[0]
    ratios = [Quadtree(QuadtreeConfig.for_points(P, epsilon=0.5, seed=s), P).cost() / mst
              for s in range(20)]
    assert max(ratios) < 10 * 2 / 0.5
