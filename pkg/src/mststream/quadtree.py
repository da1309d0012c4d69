"""Randomly shifted nested grids, level/block structure and snapped vertex sets.

A point x is snapped at anchor T to the cell index floor((x + shift)/side)
with side the largest power of two not exceeding T/(d*beta). Power-of-two
sides make the grids nested, and the l1 snapping error is at most
d*side/2 <= T/(2*beta). Vertices are kept as integer cell indices, so
every distance between two vertices is (integer) * side, exactly.
"""
from dataclasses import dataclass, field
from fractions import Fraction
import math

import numpy as np

from ._random import rng_from
from .errors import ConfigError
from .geometry import PointMultiset, next_pow2, pairwise_l1


@dataclass
class QuadtreeConfig:
    d: int
    Delta: int
    epsilon: float = 0.5
    alpha: int = 1
    beta: float = None
    Lambda: int = None
    seed: int = 0
    shift: np.ndarray = None
    delta: float = None
    warnings: list = field(default_factory=list)

    def __post_init__(self):
        if self.d < 1:
            raise ConfigError("d must be positive")
        if not 0 < self.epsilon < 1 and self.epsilon != 1:
            raise ConfigError("epsilon must lie in (0, 1]")
        if self.alpha < 1:
            raise ConfigError("alpha must be >= 1")
        if self.Delta < 1 or self.Delta & (self.Delta - 1):
            raise ConfigError("Delta must be a power of 2")
        if self.delta is None:
            self.delta = min(0.01, 1.0 / (self.epsilon * self.alpha))
        if self.beta is None:
            self.beta = max(10.0 * self.d, 10.0 / self.delta)
        if self.beta * self.delta < 10 - 1e-9:
            raise ConfigError(f"beta*delta = {self.beta * self.delta:.3g} < 10")
        if self.shift is None:
            rng = rng_from("quadtree-shift", self.seed)
            self.shift = rng.integers(0, max(self.Delta // 2, 1), size=self.d)
        self.shift = np.asarray(self.shift, dtype=np.int64)
        if self.Delta > 2 and self.Delta ** self.epsilon < math.log2(self.Delta) ** 2:
            self.warnings.append("Delta^epsilon < log^2 Delta: epsilon small for this Delta")

    @classmethod
    def for_points(cls, P, **kw):
        """Config whose Delta is the next power of two above the diameter."""
        kw.setdefault("Lambda", P.Lambda)
        return cls(d=P.d, Delta=next_pow2(max(P.diameter(), 1)), **kw)


@dataclass
class LevelStructure:
    levels: np.ndarray
    L: int
    anchors: list
    block_of: np.ndarray
    delta: float

    def anchor_for(self, t):
        """Largest block anchor <= t (levels below the first anchor use it)."""
        i = np.searchsorted(self.anchors, t * (1 + 1e-12), side="right") - 1
        return self.anchors[max(int(i), 0)]


def build_levels(cfg):
    """Levels (1+delta)^0..(1+delta)^L split into blocks anchored at Delta^{(i-1)eps}."""
    delta = cfg.delta
    Delta = cfg.Delta
    # smallest L with (1+delta)^{L-1} >= Delta
    L = 1 + max(0, math.ceil(math.log(Delta) / math.log1p(delta) - 1e-12))
    while (1 + delta) ** (L - 1) < Delta:
        L += 1
    while L > 1 and (1 + delta) ** (L - 2) >= Delta:
        L -= 1
    levels = (1 + delta) ** np.arange(L + 1)
    nblocks = max(1, math.ceil(1 / cfg.epsilon - 1e-12))
    anchors = [float(Delta) ** ((i - 1) * cfg.epsilon) for i in range(1, nblocks + 1)]
    block_of = np.searchsorted(anchors, levels * (1 + 1e-12), side="right") - 1
    block_of = np.maximum(block_of, 0)
    return LevelStructure(levels, L, anchors, block_of, delta)


def onepass_levels(Delta):
    """Power-of-two levels 1, 2, 4, ..., Delta used by the one-pass estimator."""
    return 2.0 ** np.arange(int(math.log2(Delta)) + 1)


def side_exponent(cfg, T):
    """k with side = 2^k the largest power of two <= T/(d*beta)."""
    k = math.floor(math.log2(T / (cfg.d * cfg.beta)))
    # guard the float floor against representation error
    while 2.0 ** (k + 1) <= T / (cfg.d * cfg.beta):
        k += 1
    while 2.0 ** k > T / (cfg.d * cfg.beta):
        k -= 1
    return k


def cell_index(cfg, k, X):
    """floor((X + shift) / 2^k) for integer rows X."""
    Y = np.asarray(X, dtype=np.int64) + cfg.shift
    if k >= 0:
        return Y >> k
    return Y << (-k)


def snap(cfg, T, p):
    """Center of the cell containing p at anchor T (float, exact for dyadic values)."""
    k = side_exponent(cfg, T)
    idx = cell_index(cfg, k, np.asarray(p, dtype=np.int64)[None, :])[0]
    return (idx + 0.5) * 2.0 ** k - cfg.shift


@dataclass
class DiscretizedLevel:
    """Snapped vertex set V_T.

    idx rows are the distinct cell indices in lexicographic order, mult the
    summed multiplicities, and owner[i] the vertex row of the i-th distinct
    input point (in PointMultiset.distinct() order).
    """
    anchor: float
    k: int
    idx: np.ndarray
    mult: np.ndarray
    owner: np.ndarray
    shift: np.ndarray
    _D: np.ndarray = None

    @property
    def side(self):
        return Fraction(2) ** self.k

    @property
    def side_float(self):
        return 2.0 ** self.k

    @property
    def size(self):
        return len(self.idx)

    def centers(self):
        return (self.idx + 0.5) * self.side_float - self.shift

    def radius_units(self, r):
        """Largest integer m with m*side <= r."""
        return math.floor(r / self.side_float)

    def dist_units(self):
        """Pairwise l1 distances in units of side (cached)."""
        if self._D is None:
            self._D = pairwise_l1(self.idx)
        return self._D

    def dist_row(self, i):
        if self._D is not None:
            return self._D[i]
        return np.abs(self.idx - self.idx[i]).sum(axis=1)


def vertex_set(cfg, T, P):
    X = P.distinct() if isinstance(P, PointMultiset) else np.asarray(P, dtype=np.int64)
    mult = P.multiplicities() if isinstance(P, PointMultiset) else np.ones(len(X), dtype=np.int64)
    k = side_exponent(cfg, T)
    cells = cell_index(cfg, k, X)
    if len(cells) == 0:
        return DiscretizedLevel(T, k, cells, mult, np.zeros(0, np.int64), cfg.shift)
    uniq, owner = np.unique(cells, axis=0, return_inverse=True)
    owner = owner.reshape(-1)
    m = np.bincount(owner, weights=mult, minlength=len(uniq)).astype(np.int64)
    return DiscretizedLevel(T, k, uniq, m, owner, cfg.shift)


class Quadtree:
    """All anchors' vertex sets for one shift, plus the level structure."""

    def __init__(self, cfg, P, structure=None):
        self.cfg = cfg
        self.P = P
        self.structure = structure if structure is not None else build_levels(cfg)
        self.vertex_sets = {T: vertex_set(cfg, T, P) for T in self.structure.anchors}

    @property
    def levels(self):
        return self.structure.levels

    def level_vertices(self, t):
        return self.vertex_sets[self.structure.anchor_for(t)]

    def cost(self):
        return quadtree_cost(self.cfg, self.structure, self.P, self.vertex_sets)


def quadtree_cost(cfg, structure, P, vertex_sets=None):
    """Sum over anchors of (T/beta) * (|V_T| - 1)."""
    total = 0.0
    for T in structure.anchors:
        V = vertex_sets[T] if vertex_sets else vertex_set(cfg, T, P)
        total += (T / cfg.beta) * max(V.size - 1, 0)
    return total


def check_nesting(cfg, P, T_fine, T_coarse):
    """True iff every pair merged at T_fine is also merged at T_coarse."""
    a = vertex_set(cfg, T_fine, P).owner
    b = vertex_set(cfg, T_coarse, P).owner
    for v in np.unique(a):
        if len(np.unique(b[a == v])) != 1:
            return False
    return True


__all__ = [
    "QuadtreeConfig", "LevelStructure", "DiscretizedLevel", "Quadtree",
    "build_levels", "onepass_levels", "snap", "vertex_set", "quadtree_cost",
    "check_nesting", "side_exponent", "cell_index",
]
