"""Three-level recursive lp sampling with exponential scaling and p-stable towers.

Coordinates are indexed by (i1, i2, i3). One sample is produced by drawing
independent exponentials t_{i1}, t_{i1,i2}, t_{i1,i2,i3} and taking, level
by level, the argmax of mass / (product of exponentials)^{1/p}; the law of
the result is the hierarchical lp^p law. The sketch recovers each argmax
from a count-sketch tower whose cells are medians of p-stable projections
of the exponentially scaled vector.

Batches use S independent second-level exponential sets and up to S^2
third-level sets, one tower each. All randomness is regenerated from the
seed; the sketch stores only accumulators.

Accumulators hold values as (mantissa, binary exponent) pairs so that the
enormous dynamic range of small-p weights stays representable while every
cell remains a plain sum of weighted updates.
"""
from dataclasses import dataclass
import math

import numpy as np
from numba import njit

from ._random import counter_uniform, derive_seed, mix64
from .errors import ConfigError, SketchMismatch
from .sketches import FAIL

LN2 = math.log(2.0)


@dataclass(frozen=True)
class HierIndexSpace:
    n1: int
    n2: int
    n3: int

    def __post_init__(self):
        if min(self.n1, self.n2, self.n3) < 1:
            raise ConfigError("all level sizes must be at least 1")

    @property
    def size(self):
        return self.n1 * self.n2 * self.n3

    def flat(self, i1, i2, i3):
        return (i1 * self.n2 + i2) * self.n3 + i3

    def unflat(self, k):
        k, i3 = divmod(int(k), self.n3)
        i1, i2 = divmod(k, self.n2)
        return i1, i2, i3

    def check(self, i1, i2, i3):
        i1, i2, i3 = (np.asarray(a) for a in (i1, i2, i3))
        if (np.any(i1 < 0) or np.any(i1 >= self.n1) or np.any(i2 < 0) or np.any(i2 >= self.n2)
                or np.any(i3 < 0) or np.any(i3 >= self.n3)):
            raise IndexError("index outside the hierarchical space")


@dataclass
class SampleBatch:
    """i1, the S second-level indices and the S x S third-level matrix.

    Entries of i3 that were not requested (cross pattern) are -1.
    """
    i1: int
    i2: np.ndarray
    i3: np.ndarray
    copy: int = 0

    @property
    def n_samples(self):
        return 1 + len(self.i2) + int(np.count_nonzero(self.i3 >= 0))


# ---------------------------------------------------------------- kernels

@njit(cache=True)
def _exp_at(seed, a, b):
    return -math.log(counter_uniform(seed ^ mix64(np.uint64(a)), np.uint64(b)))


@njit(cache=True)
def _cms_log(u_theta, u_r, p):
    """(sign, log|X|) of a p-stable draw; no clipping is needed."""
    th = math.pi * (u_theta - 0.5)
    if p == 1.0:
        v = math.tan(th)
        if v == 0.0:
            return 0.0, -np.inf
        return (1.0 if v > 0 else -1.0), math.log(abs(v))
    s = math.sin(p * th)
    if s == 0.0:
        return 0.0, -np.inf
    w = -math.log(u_r)
    lg = math.log(abs(s)) - math.log(math.cos(th)) / p
    lg += (1.0 - p) / p * (math.log(math.cos((1.0 - p) * th)) - math.log(w))
    return (1.0 if s > 0 else -1.0), lg


@njit(cache=True)
def _alpha_log(aseed, tower, row, key, rep, p):
    h = mix64(aseed ^ mix64(np.uint64(tower)))
    h = mix64(h ^ np.uint64(row))
    bits = mix64(h ^ mix64(np.uint64(key)) ^ mix64(np.uint64(rep) + np.uint64(0x51ED27)))
    hi = bits >> np.uint64(32)
    lo = bits & np.uint64(0xFFFFFFFF)
    a = (np.float64(hi) + 0.5) * 2.0 ** -32
    b = (np.float64(lo) + 0.5) * 2.0 ** -32
    return _cms_log(a, b, p)


@njit(cache=True)
def _bucket(hseed, level, row, key, B):
    return np.int64(mix64(hseed ^ mix64(np.uint64(level * 64 + row)) ^ mix64(np.uint64(key) + np.uint64(1)))
                    % np.uint64(B))


@njit(cache=True)
def _xadd(m, e, vm, ve):
    if vm == 0.0:
        return m, e
    if m == 0.0:
        return vm, ve
    if ve > e:
        m, e, vm, ve = vm, ve, m, e
    diff = ve - e
    r = m if diff < -1100 else m + math.ldexp(vm, diff)
    if r == 0.0:
        return 0.0, np.int64(0)
    fm, fe = math.frexp(r)
    return fm, e + fe


@njit(cache=True)
def _update(M, E, towers, seeds, p, n2, n3, i1s, i2s, i3s, deltas):
    """Add deltas at (i1, i2, i3) into every tower of one copy.

    towers[k] = (level, l1, l2); seeds = (t1, t2, t3, alpha, hash).
    """
    nt, rows, B, lam = M.shape
    inv = 1.0 / p
    for n in range(i1s.shape[0]):
        d = deltas[n]
        if d == 0.0:
            continue
        i1 = i1s[n]
        i2 = i2s[n]
        i3 = i3s[n]
        k2 = i1 * n2 + i2
        k3 = k2 * n3 + i3
        lt1 = math.log(_exp_at(seeds[0], 0, i1))
        dsign = 1.0 if d > 0 else -1.0
        ld = math.log(abs(d))
        for k in range(nt):
            level = towers[k, 0]
            l1 = towers[k, 1]
            l2 = towers[k, 2]
            lw = lt1
            key = i1
            if level >= 2:
                lw += math.log(_exp_at(seeds[1], l1 + 1, k2))
                key = k2
            if level == 3:
                lw += math.log(_exp_at(seeds[2], l1 * 1048576 + l2 + 1, k3))
                key = k3
            lw = ld - inv * lw
            for r in range(rows):
                b = _bucket(seeds[4], level, r, key, B)
                for t in range(lam):
                    sg, la = _alpha_log(seeds[3], k, r, k3, t, p)
                    if sg == 0.0:
                        continue
                    lv = la + lw
                    ve = np.int64(math.floor(lv / 0.6931471805599453)) + 1
                    vm = dsign * sg * math.exp(lv - ve * 0.6931471805599453)
                    M[k, r, b, t], E[k, r, b, t] = _xadd(M[k, r, b, t], E[k, r, b, t], vm, ve)


@njit(cache=True)
def _cell_log(M, E, k, r, b, buf):
    """Median over repetitions of log|A| in one cell."""
    lam = M.shape[3]
    for t in range(lam):
        m = M[k, r, b, t]
        buf[t] = -np.inf if m == 0.0 else math.log(abs(m)) + E[k, r, b, t] * 0.6931471805599453
    return np.median(buf)


@njit(cache=True)
def _scores(M, E, k, hseed, level, keys):
    """Median over rows of the cell estimate each key hashes to."""
    _, rows, B, lam = M.shape
    memo = np.full((rows, B), np.nan)
    buf = np.empty(lam)
    out = np.empty(keys.shape[0])
    col = np.empty(rows)
    for i in range(keys.shape[0]):
        for r in range(rows):
            b = _bucket(hseed, level, r, keys[i], B)
            if np.isnan(memo[r, b]):
                memo[r, b] = _cell_log(M, E, k, r, b, buf)
            col[r] = memo[r, b]
        out[i] = np.median(col)
    return out


# ---------------------------------------------------------------- sketch

def default_gamma(S):
    return min(0.02, 1.0 / (48.0 * S * S))


def l0_p(n_max, c=0.02):
    """Small p for which |x|^p is within a factor e^c of 1 for 1 <= |x| <= n_max."""
    return float(min(1.0, c / max(math.log(max(n_max, 2)), 1.0)))


class RecSamplerSketch:
    """Linear sketch answering one hierarchical lp sample batch per copy.

    pairs: 'full' builds all S^2 third-level towers; 'cross' only those
    with l1 == 0 or l2 == 0 (2S - 1 towers), which is what a consumer needs
    when it only wants S samples inside one (i1, i2) block and one sample
    per second-level draw.
    """

    def __init__(self, space, p=1.0, S=1, gamma=None, rows=5, buckets=256, reps=65,
                 seed=0, copies=1, pairs="full"):
        if not 0 < p <= 2:
            raise ConfigError("p must lie in (0, 2]")
        if S < 1 or rows < 1 or buckets < 1 or reps < 1 or copies < 1:
            raise ConfigError("S, rows, buckets, reps and copies must be positive")
        if pairs not in ("full", "cross"):
            raise ConfigError("pairs must be 'full' or 'cross'")
        self.space = space
        self.p = float(p)
        self.S = int(S)
        self.gamma = default_gamma(self.S) if gamma is None else float(gamma)
        self.rows, self.buckets, self.reps = int(rows), int(buckets), int(reps)
        self.seed = int(seed)
        self.copies = int(copies)
        self.pairs = pairs
        towers = [(1, 0, 0)] + [(2, l1, 0) for l1 in range(self.S)]
        for l1 in range(self.S):
            for l2 in range(self.S):
                if pairs == "full" or l1 == 0 or l2 == 0:
                    towers.append((3, l1, l2))
        self.towers = np.array(towers, dtype=np.int64)
        self._index = {tuple(t): k for k, t in enumerate(towers)}
        shape = (self.copies, len(towers), self.rows, self.buckets, self.reps)
        self.M = np.zeros(shape)
        self.E = np.zeros(shape, dtype=np.int64)

    def copy_seeds(self, c):
        return np.array([derive_seed("rs", self.seed, c, role) for role in
                         ("t1", "t2", "t3", "alpha", "hash")], dtype=np.uint64)

    @property
    def n_cells(self):
        return int(self.M.size)

    # -- updates

    def update(self, i1, i2, i3, delta):
        self.update_batch([i1], [i2], [i3], [delta])

    def update_batch(self, i1, i2, i3, deltas):
        i1, i2, i3 = (np.ascontiguousarray(a, dtype=np.int64) for a in (i1, i2, i3))
        self.space.check(i1, i2, i3)
        deltas = np.ascontiguousarray(deltas, dtype=np.float64)
        for c in range(self.copies):
            _update(self.M[c], self.E[c], self.towers, self.copy_seeds(c), self.p,
                    self.space.n2, self.space.n3, i1, i2, i3, deltas)

    def update_dense(self, x):
        """Feed a dense array of shape (n1, n2, n3)."""
        x = np.asarray(x, dtype=np.float64)
        nz = np.nonzero(x)
        self.update_batch(nz[0], nz[1], nz[2], x[nz])

    def _compatible(self, other):
        return (type(other) is type(self) and other.space == self.space and other.p == self.p
                and other.seed == self.seed and other.M.shape == self.M.shape
                and other.pairs == self.pairs)

    def merge(self, other):
        """Cell-wise sum with a sketch of the same shape and seed."""
        if not self._compatible(other):
            raise SketchMismatch("recursive sampler sketches differ in shape or seed")
        out = self.copy()
        m, e = _merge_arrays(self.M.reshape(-1), self.E.reshape(-1),
                             other.M.reshape(-1), other.E.reshape(-1))
        out.M = m.reshape(self.M.shape)
        out.E = e.reshape(self.E.shape)
        return out

    def copy(self):
        out = object.__new__(type(self))
        out.__dict__.update(self.__dict__)
        out.M = self.M.copy()
        out.E = self.E.copy()
        return out

    def is_zero(self):
        return not np.any(self.M)

    def cell_values(self, c, tower):
        """log|A| for every cell of one tower (for tests)."""
        k = self._index[tower]
        M, E = self.M[c, k], self.E[c, k]
        with np.errstate(divide="ignore"):
            return np.where(M == 0, -np.inf, np.log(np.abs(M)) + E * LN2)

    # -- exponentials, recomputed for oracles

    def exponentials(self, c=0, l1=0, l2=0):
        """(t1, t2, t3) arrays for one copy and one (l1, l2) trio."""
        s = self.copy_seeds(c)
        sp = self.space
        t1 = np.array([_exp_at(s[0], 0, i) for i in range(sp.n1)])
        t2 = np.array([_exp_at(s[1], l1 + 1, k) for k in range(sp.n1 * sp.n2)]).reshape(sp.n1, sp.n2)
        t3 = np.array([_exp_at(s[2], l1 * 1048576 + l2 + 1, k)
                       for k in range(sp.size)]).reshape(sp.n1, sp.n2, sp.n3)
        return t1, t2, t3


@njit(cache=True)
def _merge_arrays(m1, e1, m2, e2):
    m = np.empty_like(m1)
    e = np.empty_like(e1)
    for i in range(m1.shape[0]):
        m[i], e[i] = _xadd(m1[i], e1[i], m2[i], e2[i])
    return m, e


# ---------------------------------------------------------------- recovery

def _recover(sk, c, tower, keys):
    """argmax over candidate keys, or FAIL on an empty tower, a tie, or a
    failed self-check (max below gamma^3 of the candidates' total mass)."""
    k = sk._index[tower]
    seeds = sk.copy_seeds(c)
    sc = _scores(sk.M[c], sk.E[c], k, seeds[4], tower[0], np.asarray(keys, dtype=np.int64))
    top = sc.max()
    if not np.isfinite(top):
        return FAIL
    winners = np.flatnonzero(sc == top)
    if len(winners) != 1:
        return FAIL
    fin = sc[np.isfinite(sc)] * sk.p
    total = np.logaddexp.reduce(fin)
    if sk.p * top - total < 3 * math.log(sk.gamma):
        return FAIL
    return int(winners[0])


def rs_recover_i1(sk, c=0):
    return _recover(sk, c, (1, 0, 0), np.arange(sk.space.n1))


def rs_recover_i2(sk, i1, l1=0, c=0):
    n2 = sk.space.n2
    return _recover(sk, c, (2, l1, 0), i1 * n2 + np.arange(n2))


def rs_recover_i3(sk, i1, i2, l1=0, l2=0, c=0):
    sp = sk.space
    return _recover(sk, c, (3, l1, l2), (i1 * sp.n2 + i2) * sp.n3 + np.arange(sp.n3))


def _batch_from_copy(sk, c):
    i1 = rs_recover_i1(sk, c)
    if i1 is FAIL:
        return FAIL
    i2 = np.empty(sk.S, dtype=np.int64)
    for l1 in range(sk.S):
        v = rs_recover_i2(sk, i1, l1, c)
        if v is FAIL:
            return FAIL
        i2[l1] = v
    i3 = np.full((sk.S, sk.S), -1, dtype=np.int64)
    for (level, l1, l2) in sk.towers.tolist():
        if level != 3:
            continue
        v = rs_recover_i3(sk, i1, int(i2[l1]), l1, l2, c)
        if v is FAIL:
            return FAIL
        i3[l1, l2] = v
    return SampleBatch(i1, i2, i3, c)


def rs_sample_batch(sk, S=None):
    """First copy whose recovery passes every self-check; FAIL if none does."""
    if S is not None and S != sk.S:
        raise ConfigError(f"sketch was built for S={sk.S}")
    for c in range(sk.copies):
        got = _batch_from_copy(sk, c)
        if got is not FAIL:
            return got
    return FAIL


def rs_l0_mode(sk):
    """A batch from a sketch built with small p, approximating support-uniform
    hierarchical sampling."""
    if sk.p > 0.1:
        raise ConfigError("l0 mode needs a small p; build the sketch with p=l0_p(n)")
    return rs_sample_batch(sk)


# ---------------------------------------------------------------- oracles

def block_masses(x, p):
    """(|x_i|_p^p, |x_{ij}|_p^p, |x_{ijk}|^p) for a dense (n1, n2, n3) array."""
    a = np.abs(np.asarray(x, dtype=np.float64))
    w = np.where(a > 0, a ** p, 0.0)
    return w.sum(axis=(1, 2)), w.sum(axis=2), w


def exact_law(x, p):
    """Joint probability of (i1, i2, i3) for one draw, shape (n1, n2, n3)."""
    m1, m2, m3 = block_masses(x, p)
    tot = m1.sum()
    if tot == 0:
        raise ValueError("zero vector has no sampling law")
    return m3 / tot


def ideal_indices(x, p, t1, t2, t3):
    """The exact exponential-scaled argmax at each level."""
    m1, m2, m3 = block_masses(x, p)
    with np.errstate(divide="ignore"):
        i1 = int(np.argmax(np.log(m1) - np.log(t1)))
        i2 = int(np.argmax(np.log(m2[i1]) - np.log(t2[i1])))
        i3 = int(np.argmax(np.log(m3[i1, i2]) - np.log(t3[i1, i2])))
    return i1, i2, i3


def _gap_event(mass, t, total, gamma):
    with np.errstate(divide="ignore"):
        v = np.where(mass > 0, mass / t, 0.0)
    order = np.sort(v)[::-1]
    top = order[0]
    second = order[1] if len(order) > 1 else 0.0
    return bool(top >= gamma * total and top >= (1 + gamma) * second)


def conditioning_events(x, p, gamma, t1, t2, t3):
    """The six regularity events on the exponentials, as a dict of bools."""
    m1, m2, m3 = block_masses(x, p)
    n = m3.size
    tot = m1.sum()
    i1, i2, _ = ideal_indices(x, p, t1, t2, t3)
    c = 4 * math.log(n / gamma) / gamma
    s1 = float(np.sum(m1 / t1))
    s2 = float(np.sum(m2 / (t1[:, None] * t2)))
    s3 = float(np.sum(m3 / (t1[:, None, None] * t2[:, :, None] * t3)))
    return {
        "E1_1": _gap_event(m1, t1, tot, gamma),
        "E1_2": _gap_event(m2[i1], t2[i1], m1[i1], gamma),
        "E1_3": _gap_event(m3[i1, i2], t3[i1, i2], m2[i1, i2], gamma),
        "E2_1": s1 <= c * tot,
        "E2_2": s2 <= c * c * tot,
        "E2_3": s3 <= c ** 3 * tot,
    }
