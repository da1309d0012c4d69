"""l1 locality-sensitive hashing with verifiable recovery, and diameter sketching.

A hash function at scale t and precision eps carves space with balls of
radius r = t/eps. It is an infinite sequence of layers; layer u is the
lattice (sigma_u + w Z)^d with a uniform random offset sigma_u and spacing
w = 2(r + t) + 1, so the radius-(r + t) balls around one layer's centres
are disjoint. x hashes to (u, c) for the first layer u with a centre c
within r of x. That centre is uniform on B(x, r), exactly as for a stream
of uniform anchors, but each layer covers x with a probability that does
not depend on the size of the universe.

Colliding points are within 2r of each other. The tester accepts x when
its centre is within r - t, which for a uniform centre happens with
probability (1 - eps)^d. Offsets are dyadic (multiples of 2^-grid_bits),
which keeps every l1 comparison exact in float64.
"""
import math

import numpy as np
from numba import njit

from ._random import counter_uniform, derive_seed
from .errors import CapExhausted, ConfigError
from .sketches import L0Estimator

DEFAULT_CAP = 10 ** 6


@njit(cache=True)
def _offset(seed, u, j, d, w, grid):
    return math.floor(counter_uniform(seed, u * d + j) * w * grid) / grid


@njit(cache=True)
def _cell(x, off, w):
    return math.floor((x - off) / w + 0.5)


@njit(cache=True)
def layer_dist(seed, u, x, w, grid):
    """l1 distance from x to the nearest centre of layer u."""
    d = x.shape[0]
    s = 0.0
    for j in range(d):
        off = _offset(seed, u, j, d, w, grid)
        s += abs(off + _cell(x[j], off, w) * w - x[j])
    return s


@njit(cache=True)
def same_centre(seed, u, x, y, w, grid):
    """True when x and y share their nearest centre in layer u."""
    d = x.shape[0]
    for j in range(d):
        off = _offset(seed, u, j, d, w, grid)
        if _cell(x[j], off, w) != _cell(y[j], off, w):
            return False
    return True


@njit(cache=True)
def first_layer(seed, x, r, w, grid, cap):
    """First layer with a centre within r of x, or -1 if none below cap."""
    for u in range(cap):
        if layer_dist(seed, u, x, w, grid) <= r:
            return u
    return -1


@njit(cache=True)
def _first_layers(seed, X, r, w, grid, cap):
    m, d = X.shape
    layers = np.empty(m, dtype=np.int64)
    cells = np.empty((m, d), dtype=np.int64)
    for n in range(m):
        u = first_layer(seed, X[n], r, w, grid, cap)
        layers[n] = u
        if u >= 0:
            for j in range(d):
                off = _offset(seed, u, j, d, w, grid)
                cells[n, j] = _cell(X[n, j], off, w)
    return layers, cells


class LshFunction:
    """One draw h ~ H_eps(t) over [1, Lambda]^d."""

    def __init__(self, t, epsilon, Lambda, d, seed=0, cap=DEFAULT_CAP, grid_bits=24, raw_seed=None):
        if not 0 < epsilon < 1:
            raise ConfigError("LSH precision must lie in (0, 1) so that t/eps - t > 0")
        self.t = float(t)
        self.epsilon = float(epsilon)
        self.r = self.t / self.epsilon
        self.w = 2 * (self.r + self.t) + 1
        self.Lambda = int(Lambda)
        self.d = int(d)
        self.seed = int(seed)
        self.cap = int(cap)
        self.grid = float(2 ** grid_bits)
        self._s = np.uint64(derive_seed("lsh", self.seed) if raw_seed is None else raw_seed)
        # cell indices of centres near [1, Lambda] lie in [kmin, kmin + span)
        self._kmin = math.floor((1 - self.r - self.w) / self.w) - 1
        self.span = math.ceil((self.Lambda + self.r) / self.w) - self._kmin + 2
        self.exact_codes = self.span ** self.d * self.cap < 2 ** 62

    def expected_scan(self):
        """Mean number of layers scanned per point: cell volume / ball volume."""
        return float(self.w ** self.d * math.factorial(self.d) / (2 * self.r) ** self.d)

    def layers(self, X, radius=None):
        """(layer, lattice cell) of the first centre within radius (default r) of each row."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        radius = self.r if radius is None else radius
        u, cells = _first_layers(self._s, X, radius, self.w, self.grid, self.cap)
        if np.any(u < 0):
            raise CapExhausted(
                f"no centre within {radius:g} after {self.cap} layers; "
                f"expected {self.expected_scan():.3g}, raise cap")
        return u, cells

    def _encode(self, u, cells):
        k = cells - self._kmin
        if np.any(k < 0) or np.any(k >= self.span):
            raise ConfigError(f"points outside [1, {self.Lambda}]^{self.d}")
        if self.exact_codes:
            code = u.copy()
            for j in range(self.d):
                code = code * self.span + k[:, j]
            return code
        # too many buckets for an exact 63-bit code: hash the (layer, cell) tuple
        code = u.astype(np.uint64)
        with np.errstate(over="ignore"):
            for j in range(self.d):
                code = (code ^ k[:, j].astype(np.uint64)) * np.uint64(0x9E3779B97F4A7C15)
                code ^= code >> np.uint64(29)
        return (code >> np.uint64(1)).astype(np.int64)

    def hash(self, X):
        """Bucket code of each row of X (one code per (layer, centre))."""
        return self._encode(*self.layers(X))

    def centres(self, X):
        """Centre of each row's bucket."""
        u, cells = self.layers(X)
        off = np.array([[_offset(self._s, int(v), j, self.d, self.w, self.grid)
                         for j in range(self.d)] for v in u]).reshape(len(u), self.d)
        return off + cells * self.w

    def tester(self, X):
        """True where |x - centre(h(x))|_1 <= t/eps - t."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return np.abs(self.centres(X) - X).sum(axis=1) <= self.r - self.t

    def strict_tester(self, X):
        """True where the first centre within t/eps + t of x lies within t/eps - t.

        Earlier layers then miss the whole ball B(x, t), so every point of
        that ball hashes with x. The plain tester only looks at x's own
        centre, and an earlier layer can capture a neighbour of x.
        """
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        u, _ = self.layers(X, self.r + self.t)
        dist = np.array([layer_dist(self._s, int(v), x, self.w, self.grid) for v, x in zip(u, X)])
        return dist <= self.r - self.t


def lsh_hash(h, x):
    return int(h.hash(np.asarray(x)[None, :])[0])


def tester(h, p):
    return bool(h.tester(np.asarray(p)[None, :])[0])


def diameter_reps(epsilon, d, Lambda, n):
    return int(math.ceil((1 - epsilon) ** (-d) * math.log(max(Lambda * n * d, 4))))


def diameter_sketch(stream_or_points, epsilon, Lambda, d, seed=0, reps=None, cap=DEFAULT_CAP):
    """Integer Delta with diam <= Delta <= (4/eps) diam (w.h.p.).

    For t = 1, 2, 4, ... and each of `reps` hash functions from H_eps(t), a
    distinct-count sketch over bucket ids is fed the stream; the answer is
    2 t0 / eps for the smallest t0 where some repetition sees one bucket.
    Accepts a PointMultiset or a list of (sign, point) updates.
    """
    from .geometry import PointMultiset
    if isinstance(stream_or_points, PointMultiset):
        pts = stream_or_points.distinct().astype(np.float64)
        signs = stream_or_points.multiplicities()
        n = max(len(pts), 1)
    else:
        ups = list(stream_or_points)
        pts = np.array([u.point for u in ups], dtype=np.float64).reshape(-1, d)
        signs = np.array([u.sign for u in ups], dtype=np.int64)
        n = max(len(ups), 1)
    reps = reps or diameter_reps(epsilon, d, Lambda, n)
    top = int(math.ceil(math.log2(d * Lambda))) + 1
    # subsampling depth only needs to reach the number of distinct buckets
    levels = max(8, int(math.ceil(math.log2(n + 1))) + 4)
    for i in range(top + 1):
        t = 2.0 ** i
        for rep in range(reps):
            h = LshFunction(t, epsilon, Lambda, d, seed=derive_seed("diam", seed, i, rep), cap=cap)
            est = L0Estimator(eps0=0.25, seed=derive_seed("diam-l0", seed, i, rep), reps=5, levels=levels)
            if len(pts):
                est.update_batch(h.hash(pts).astype(np.uint64), signs)
            if round(est.estimate()) <= 1:
                return int(math.ceil(2 * t / epsilon))
    return int(math.ceil(2 * 2.0 ** top / epsilon))
