"""Threshold graphs on snapped vertex sets and the per-vertex estimators.

x_t(p) = 1/|CC(p, G_t)|. y_t(p) looks at growing balls of radius 2^j t
and returns 1/|CC| inside the largest ball that is still below the size
threshold (0 if even the radius-t ball is too big). z_t(p) is 1/|BFS|
for a hop-limited BFS, 0 if the BFS reaches the size threshold. The
estimators combine these across levels:

    Z     = n - (1+delta)^{L+1} + delta * sum_t t * sum_p min(y, z)
    ideal = n - (1+delta)^{L+1} + delta * sum_t t * sum_p x
"""
from dataclasses import dataclass
from fractions import Fraction
import math

import numpy as np

from . import _kernels as K
from ._random import rng_from
from .errors import ConfigError
from .geometry import PointMultiset
from .oracle import diameter_oracle, mst_edge_weights, mst_oracle

INF_ROUNDS = 1 << 30


@dataclass
class EstimatorParams:
    size_threshold: float = 64
    bfs_rounds: int = 1
    logL: int = None

    def __post_init__(self):
        if self.size_threshold < 1:
            raise ConfigError("size_threshold must be >= 1")
        if self.bfs_rounds is not None and self.bfs_rounds < 0:
            raise ConfigError("bfs_rounds must be >= 0")

    @classmethod
    def for_structure(cls, structure, **kw):
        kw.setdefault("logL", max(0, math.ceil(math.log2(max(structure.L, 1)))))
        return cls(**kw)

    @classmethod
    def natural(cls, cfg, structure, **kw):
        """Threshold beta^2 * Delta^(10 eps); far above n at any practical size."""
        kw.setdefault("size_threshold", natural_threshold(cfg))
        return cls.for_structure(structure, **kw)


def natural_threshold(cfg):
    try:
        return float(cfg.beta) ** 2 * float(cfg.Delta) ** (10 * cfg.epsilon)
    except OverflowError:
        return math.inf


class ThresholdGraph:
    """G_t on a discretized level: p ~ q iff |p - q|_1 <= t."""

    def __init__(self, V, t):
        self.V = V
        self.t = t
        self.r = V.radius_units(t)
        self._labels = None

    @property
    def idx(self):
        return self.V.idx

    @property
    def size(self):
        return self.V.size

    def labels(self):
        if self._labels is None:
            self._labels = K.uf_labels(self.V.idx, self.r)
        return self._labels

    def component_sizes(self):
        lab = self.labels()
        return np.bincount(lab, minlength=self.size)[lab]

    def n_components(self):
        lab = self.labels()
        return int(np.count_nonzero(lab == np.arange(self.size)))

    def x(self, p):
        return 1.0 / self.component_sizes()[p]

    def x_all(self):
        return 1.0 / self.component_sizes()

    def ball(self, p, radius):
        """Indices q with |q - p|_1 <= radius (radius in real units)."""
        return np.flatnonzero(self.V.dist_row(p) <= self.V.radius_units(radius))

    def radii_units(self, logL):
        return np.array([self.V.radius_units((2 ** j) * self.t) for j in range(logL + 1)],
                        dtype=np.int64)

    def y(self, p, params):
        """Direct evaluation of y_t(p), written out step by step."""
        row = self.V.dist_row(p)
        radii = self.radii_units(params.logL)
        n = [int(np.count_nonzero(row <= rj)) for rj in radii]
        if n[0] >= params.size_threshold:
            return 0.0
        jstar = max(j for j in range(len(n)) if n[j] < params.size_threshold)
        members = np.flatnonzero(row <= radii[jstar])
        return 1.0 / K.induced_cc_size(self.V.idx, members, p, self.r)

    def y_all(self, params):
        return K.y_values(self.V.idx, self.r, self.radii_units(params.logL),
                          float(params.size_threshold))

    def bfs_limited(self, p, rounds, cap=math.inf):
        found, over = K.bfs_limited(self.V.idx, p, self.r, _rounds(rounds), float(cap))
        return found, bool(over)

    def z(self, p, params):
        found, over = self.bfs_limited(p, params.bfs_rounds, params.size_threshold)
        return 0.0 if over else 1.0 / len(found)

    def z_all(self, params):
        return K.z_values(self.V.idx, self.r, _rounds(params.bfs_rounds),
                          float(params.size_threshold))


def _rounds(r):
    return INF_ROUNDS if r is None or r == math.inf else int(r)


def connected_components(g):
    """(labels, count) for a ThresholdGraph; labels are smallest member indices."""
    return g.labels(), g.n_components()


class LevelTable:
    """Per-level min(y, z) and x vectors with reuse across identical levels.

    Levels that share an anchor and whose radii cut the same distance
    classes produce identical graphs and balls, so results are keyed by
    the rank of each radius among the distinct pairwise distances.
    """

    def __init__(self, qt, params):
        self.qt = qt
        self.params = params
        self._cache = {}
        self._xcache = {}
        self._ranks = {}

    def _distinct(self, V):
        key = id(V)
        if key not in self._ranks:
            self._ranks[key] = np.unique(V.dist_units())
        return self._ranks[key]

    def _key(self, V, g, radii):
        d = self._distinct(V)
        return (id(V), int(np.searchsorted(d, g.r, "right")),
                tuple(int(np.searchsorted(d, r, "right")) for r in radii))

    def graph(self, t):
        return ThresholdGraph(self.qt.level_vertices(t), t)

    def values(self, t):
        """(min(y,z), x) arrays over V_t."""
        g = self.graph(t)
        radii = g.radii_units(self.params.logL)
        key = self._key(g.V, g, radii)
        if key not in self._cache:
            x = self._x(g)
            if self.params.size_threshold > g.size and radii[-1] >= self._distinct(g.V)[-1]:
                # every ball holds all of V_t, so y = x, and z >= x always
                self._cache[key] = (x, x)
            else:
                self._cache[key] = (np.minimum(g.y_all(self.params), g.z_all(self.params)), x)
        return self._cache[key]

    def _x(self, g):
        key = (id(g.V), int(np.searchsorted(self._distinct(g.V), g.r, "right")))
        if key not in self._xcache:
            self._xcache[key] = g.x_all()
        return self._xcache[key]

    def x_values(self, t):
        return self._x(self.graph(t))


def _telescoped(n, delta, levels, sums):
    """n - (1+delta)^{L+1} + delta*sum t*S_t, evaluated as (n-1) + delta*sum t*(S_t-1)."""
    return (n - 1) + delta * math.fsum(float(t) * (s - 1.0) for t, s in zip(levels, sums))


def estimator_Z(qt, params, table=None, diagnostics=None):
    table = table or LevelTable(qt, params)
    sums = [float(table.values(t)[0].sum()) for t in qt.levels]
    if diagnostics is not None:
        diagnostics["level_sums"] = sums
    n = qt.P.n_distinct
    return _telescoped(n, qt.structure.delta, qt.levels, sums)


def ideal_estimator(qt, params=None, table=None):
    params = params or EstimatorParams.for_structure(qt.structure)
    table = table or LevelTable(qt, params)
    sums = [float(table.x_values(t).sum()) for t in qt.levels]
    n = qt.P.n_distinct
    return _telescoped(n, qt.structure.delta, qt.levels, sums)


def sampled_estimator(qt, params, k, hat_n=None, seed=0, exhaustive=False, table=None):
    """Monte Carlo version of Z: k uniform vertex samples per level.

    hat_n maps a level index to an estimate of |V_t| (exact by default);
    hat_n[0] also replaces n. With exhaustive=True every vertex is used
    once, which reproduces estimator_Z exactly.
    """
    table = table or LevelTable(qt, params)
    rng = rng_from("sampled-estimator", seed)
    delta = qt.structure.delta
    terms = []
    for i, t in enumerate(qt.levels):
        vals = table.values(t)[0]
        m = len(vals)
        nt = float(m) if hat_n is None else float(hat_n[i])
        if m == 1:
            nt = 1.0
            mean = float(vals[0])
        elif exhaustive:
            mean = float(vals.mean())
        else:
            mean = float(vals[rng.integers(0, m, size=k)].mean())
        terms.append(float(t) * (nt * mean - 1.0))
    n0 = float(qt.level_vertices(qt.levels[0]).size) if hat_n is None else float(hat_n[0])
    return (n0 - 1) + delta * math.fsum(terms)


def cs_sandwich_value(P, epsilon, Delta=None):
    """n - Delta + eps * sum_{i<h} (1+eps)^i c*_{(1+eps)^i} on the exact graphs.

    Returns (value, Delta, h) as exact Fractions. Delta defaults to the
    smallest power of (1+eps) bounding all pairwise distances.
    """
    X = P.distinct() if isinstance(P, PointMultiset) else np.unique(np.asarray(P), axis=0)
    n = len(X)
    eps = Fraction(epsilon).limit_denominator(1 << 20)
    w = mst_edge_weights(X) if n > 1 else np.zeros(0, dtype=np.int64)
    if n > 1 and w.min() < 1:
        raise ValueError("pairwise distances must be at least 1")
    base = 1 + eps
    if Delta is None:
        h, Dl = 0, Fraction(1)
        top = diameter_oracle(X) if n > 1 else 1
        while Dl < top:
            Dl *= base
            h += 1
    else:
        Dl = Fraction(Delta)
        h, acc = 0, Fraction(1)
        while acc < Dl:
            acc *= base
            h += 1
        if acc != Dl:
            raise ValueError("Delta must be a power of (1 + epsilon)")
    if n > 1 and diameter_oracle(X) > Dl:
        raise ValueError("pairwise distances exceed Delta")
    total = Fraction(0)
    t = Fraction(1)
    for _ in range(h):
        # c*_t = n - #(MST edges of weight <= t)
        c = n - sum(1 for x in w.tolist() if x <= t)
        total += t * c
        t *= base
    return n - Dl + eps * total, Dl, h


def cs_sandwich_check(P, epsilon, Delta=None):
    """(lower_ok, upper_ok): MST <= value and value <= (1+eps) MST."""
    value, _, _ = cs_sandwich_value(P, epsilon, Delta)
    mst, _ = mst_oracle(P)
    eps = Fraction(epsilon).limit_denominator(1 << 20)
    return mst <= value, value <= (1 + eps) * mst
