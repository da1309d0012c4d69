from fractions import Fraction
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mststream.components import (EstimatorParams, LevelTable, ThresholdGraph, connected_components,
                                  cs_sandwich_check, cs_sandwich_value, estimator_Z, ideal_estimator,
                                  sampled_estimator)
from mststream.generators import generate_uniform
from mststream.geometry import PointMultiset
from mststream.oracle import bfs_labels, component_count_true, mst_oracle
from mststream.quadtree import DiscretizedLevel, Quadtree, QuadtreeConfig
from mststream.geometry import pairwise_l1


def level_of(rows):
    idx = np.array(rows, dtype=np.int64)
    if idx.ndim == 1:
        idx = idx[:, None]
    n = len(idx)
    return DiscretizedLevel(1.0, 0, idx, np.ones(n, np.int64), np.arange(n), np.zeros(idx.shape[1], np.int64))


points = st.lists(st.tuples(st.integers(0, 30), st.integers(0, 30)), min_size=1, max_size=25, unique=True)


def test_components_example():
    g = ThresholdGraph(level_of([0, 1, 3]), 1)
    labels, c = connected_components(g)
    assert c == 2 and labels.tolist() == [0, 0, 2]
    assert connected_components(ThresholdGraph(level_of([0, 1, 3]), 3))[1] == 1


@settings(max_examples=40, deadline=None)
@given(points, st.integers(0, 12))
def test_components_match_bfs(rows, t):
    g = ThresholdGraph(level_of(rows), t)
    ref = bfs_labels(pairwise_l1(np.array(rows)), t)
    a, b = g.labels(), ref
    assert all((a[i] == a[j]) == (b[i] == b[j]) for i in range(len(rows)) for j in range(len(rows)))
    assert math.isclose(g.x_all().sum(), g.n_components())


def test_x_examples():
    g = ThresholdGraph(level_of([0, 1, 2, 10]), 1)
    assert g.x(3) == 1.0
    assert g.x(0) == pytest.approx(1 / 3)


def test_ball_examples():
    rows = [[0, 0], [1, 0], [5, 5]]
    g = ThresholdGraph(level_of(rows), 1)
    assert g.ball(0, 0).tolist() == [0]
    assert g.ball(0, 100).tolist() == [0, 1, 2]


@settings(max_examples=30, deadline=None)
@given(points, st.integers(0, 12))
def test_ball_linear_scan(rows, r):
    g = ThresholdGraph(level_of(rows), 1)
    X = np.array(rows)
    scan = [i for i in range(len(rows)) if np.abs(X[i] - X[0]).sum() <= r]
    assert g.ball(0, r).tolist() == scan


@settings(max_examples=40, deadline=None)
@given(points, st.integers(1, 6), st.integers(2, 8), st.integers(0, 4))
def test_y_z_vs_x(rows, t, thr, rounds):
    g = ThresholdGraph(level_of(rows), t)
    params = EstimatorParams(size_threshold=thr, bfs_rounds=rounds, logL=3)
    y, z, x = g.y_all(params), g.z_all(params), g.x_all()
    for p in range(len(rows)):
        assert y[p] == g.y(p, params)
        assert z[p] == g.z(p, params)
        if y[p]:
            assert y[p] >= x[p] - 1e-12
        if z[p]:
            assert z[p] >= x[p] - 1e-12


def test_isolated_values():
    g = ThresholdGraph(level_of([0, 50]), 1)
    params = EstimatorParams(size_threshold=4, bfs_rounds=1, logL=2)
    assert g.y(0, params) == 1.0 and g.z(0, params) == 1.0


def test_bfs_path():
    g = ThresholdGraph(level_of([0, 1, 2, 3, 4]), 1)
    assert sorted(g.bfs_limited(0, 0)[0].tolist()) == [0]
    assert sorted(g.bfs_limited(2, 2)[0].tolist()) == [0, 1, 2, 3, 4]
    assert sorted(g.bfs_limited(0, 2)[0].tolist()) == [0, 1, 2]


@settings(max_examples=30, deadline=None)
@given(points, st.integers(1, 5), st.integers(1, 4), st.integers(1, 10))
def test_bfs_overflow_flag(rows, t, rounds, cap):
    g = ThresholdGraph(level_of(rows), t)
    full, _ = g.bfs_limited(0, rounds)
    _, over = g.bfs_limited(0, rounds, cap)
    assert over == (len(full) >= cap)


def test_sandwich_hand_example():
    P = PointMultiset.from_points([[1], [2], [4]])
    value, Delta, h = cs_sandwich_value(P, 1, Delta=4)
    assert (value, Delta, h) == (3, 4, 2)
    assert cs_sandwich_check(P, 1, Delta=4) == (True, True)


def test_sandwich_two_points():
    for D in (1, 3, 8, 27):
        P = PointMultiset.from_points([[1], [1 + D]])
        value, Dl, _ = cs_sandwich_value(P, 0.5)
        assert D <= value <= Fraction(3, 2) * D


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(1, 40), st.integers(1, 40)), min_size=1, max_size=20, unique=True))
def test_sandwich_random(rows):
    assert cs_sandwich_check(PointMultiset.from_points(rows), 0.5) == (True, True)


def _qt(P, seed=0, **kw):
    cfg = QuadtreeConfig.for_points(P, epsilon=0.5, seed=seed, **kw)
    return Quadtree(cfg, P)


def test_estimator_single_point():
    qt = _qt(PointMultiset.from_points([[4, 4]]))
    params = EstimatorParams.for_structure(qt.structure)
    d = qt.structure.delta
    direct = 1 - (1 + d) ** (qt.structure.L + 1) + d * sum(qt.levels)
    assert estimator_Z(qt, params) == pytest.approx(direct, abs=1e-6)
    assert ideal_estimator(qt) == pytest.approx(0.0, abs=1e-6)


def test_Z_equals_ideal_when_nothing_dead():
    P = PointMultiset.from_points([[1], [2], [4]])
    qt = _qt(P, delta=0.1)
    params = EstimatorParams.for_structure(qt.structure, size_threshold=100, bfs_rounds=None)
    table = LevelTable(qt, params)
    for t in qt.levels:
        mz, x = table.values(t)
        assert np.allclose(mz, x)
    assert estimator_Z(qt, params) == pytest.approx(ideal_estimator(qt, params))


def test_ideal_two_points():
    for D in (4, 16, 64):
        P = PointMultiset.from_points([[1], [1 + D]])
        qt = _qt(P, delta=0.1)
        d = qt.structure.delta
        val = ideal_estimator(qt)
        assert (1 - 4 * d) * D <= val <= (1 + d) * D + 1e-9


def test_ideal_collinear_hand():
    P = PointMultiset.from_points([[1], [2], [4]])
    qt = _qt(P, delta=0.1)
    d = qt.structure.delta
    # snapped level graphs reproduce c_t of the raw points up to the grid resolution
    direct = (3 - 1) + d * sum(t * (component_count_true(qt.level_vertices(t).centers(), t) - 1)
                               for t in qt.levels)
    assert ideal_estimator(qt) == pytest.approx(direct)


def test_sampled_exhaustive_equals_Z():
    P = generate_uniform(20, 2, 64, 3)
    qt = _qt(P, delta=0.1)
    params = EstimatorParams.for_structure(qt.structure, size_threshold=6)
    assert sampled_estimator(qt, params, 1, exhaustive=True) == pytest.approx(estimator_Z(qt, params))


def test_sampled_concentrates():
    P = generate_uniform(20, 2, 64, 4)
    qt = _qt(P, delta=0.1)
    params = EstimatorParams.for_structure(qt.structure, size_threshold=6)
    Z = estimator_Z(qt, params)
    spreads = []
    for k in (4, 64):
        vals = [sampled_estimator(qt, params, k, seed=s) for s in range(50)]
        assert abs(np.mean(vals) - Z) < 4 * np.std(vals) / np.sqrt(50) + 1e-9
        spreads.append(np.std(vals))
    # standard deviation shrinks like 1/sqrt(k)
    assert spreads[1] < spreads[0] / 2


def test_small_threshold_underestimates():
    # dead vertices contribute 0, so a threshold below the component sizes pulls Z down
    P = generate_uniform(15, 2, 64, 0)
    qt = _qt(P, delta=0.1)
    lo = estimator_Z(qt, EstimatorParams.for_structure(qt.structure, size_threshold=4))
    assert lo < ideal_estimator(qt)


def test_Z_upper_bounds_mst():
    ok = 0
    for s in range(20):
        P = generate_uniform(15, 2, 64, s)
        qt = _qt(P, seed=s, delta=0.1)
        params = EstimatorParams.for_structure(qt.structure)
        Z = estimator_Z(qt, params)
        eps = qt.cfg.epsilon
        ok += mst_oracle(P)[0] <= (1 + qt.cfg.Delta ** (-8 * eps)) * Z
    assert ok >= 18
