"""p-stable random variables and the median-of-absolute-values norm sketch.

Draws use the Chambers-Mallows-Stuck representation

    X = sin(p th) / cos(th)^{1/p} * (cos((1-p) th) / W)^{(1-p)/p}

with th uniform on (-pi/2, pi/2) and W = -ln(r) standard exponential,
evaluated in the log domain so small p does not overflow.
"""
import math
from functools import lru_cache

import numpy as np
from numba import njit
from scipy import integrate, optimize

from .._random import counter_bits, derive_seed, mix64
from ..errors import ConfigError, SketchMismatch
from .serialize import pack, unpack

LOG_CLIP = 665.0  # |X| <= e^665 ~ 1e289 keeps sums of a few draws finite


@njit(cache=True)
def cms_draw(u_theta, u_r, p):
    """One p-stable value from two uniforms in (0, 1)."""
    th = math.pi * (u_theta - 0.5)
    w = -math.log(u_r)
    if p == 1.0:
        return math.tan(th)
    s = math.sin(p * th)
    if s == 0.0:
        return 0.0
    lg = math.log(abs(s)) - math.log(math.cos(th)) / p
    lg += (1.0 - p) / p * (math.log(math.cos((1.0 - p) * th)) - math.log(w))
    if lg > LOG_CLIP:
        lg = LOG_CLIP
    v = math.exp(lg)
    return v if s > 0 else -v


@njit(cache=True)
def _uniform_pair(bits):
    hi = bits >> np.uint64(32)
    lo = bits & np.uint64(0xFFFFFFFF)
    return (np.float64(hi) + 0.5) * 2.0 ** -32, (np.float64(lo) + 0.5) * 2.0 ** -32


@njit(cache=True)
def coefficient(seed, key, rep, p):
    """p-stable coefficient for (key, repetition), regenerated from the seed."""
    bits = counter_bits(seed ^ mix64(key), np.uint64(rep))
    a, b = _uniform_pair(bits)
    return cms_draw(a, b, p)


@njit(cache=True)
def _pstable_update(acc, seed, p, keys, vals):
    lam = acc.shape[0]
    for n in range(keys.shape[0]):
        k = keys[n]
        v = vals[n]
        for r in range(lam):
            acc[r] += v * coefficient(seed, k, r, p)


@njit(cache=True)
def _draw_many(seed, n, p):
    out = np.empty(n)
    for i in range(n):
        a, b = _uniform_pair(counter_bits(seed, np.uint64(i)))
        out[i] = cms_draw(a, b, p)
    return out


def gen_p_stable(u_theta, u_r, p):
    """Public wrapper: a p-stable draw from uniforms u_theta, u_r in (0, 1)."""
    _check_p(p)
    return float(cms_draw(float(u_theta), float(u_r), float(p)))


def p_stable_sample(p, n, seed=0):
    _check_p(p)
    return _draw_many(np.uint64(derive_seed("pstable-sample", seed)), int(n), float(p))


def _check_p(p):
    if not 0 < p <= 2:
        raise ConfigError(f"p must lie in (0, 2], got {p}")


@lru_cache(maxsize=None)
def pstable_median(p):
    """median(|X|) for the standard p-stable law, by numerical integration.

    For fixed th the event |X| <= m is an event on W alone, so
    P(|X| <= m) is a one-dimensional integral over th that is solved for
    1/2 with a bracketing root finder.
    """
    _check_p(p)
    if p == 1:
        return 1.0

    def log_k(th):
        return (math.log(math.sin(p * th)) - math.log(math.cos(th)) / p
                + (1 - p) / p * math.log(math.cos((1 - p) * th)))

    a = p / abs(1 - p)

    def cdf(logm):
        def f(th):
            e = a * (log_k(th) - logm)
            if p < 1:  # P(W >= (K/m)^a)
                return math.exp(-math.exp(e)) if e < 700 else 0.0
            return -math.expm1(-math.exp(-e)) if -e < 700 else 1.0
        val, _ = integrate.quad(f, 1e-300, math.pi / 2, limit=400, epsabs=1e-13, epsrel=1e-12)
        return val * 2 / math.pi

    lo, hi = -50.0 / p, 50.0 / p
    root = optimize.brentq(lambda x: cdf(x) - 0.5, lo, hi, xtol=1e-13)
    return math.exp(root)


def pstable_median_mc(p, draws=10 ** 6, seed=0):
    """Monte Carlo median(|X|); cross-check for pstable_median."""
    return float(np.median(np.abs(p_stable_sample(p, draws, seed))))


def default_reps(p, eps0):
    """Repetitions giving about 95% per-trial accuracy at relative error eps0.

    The sample median of |X| has log-scale spread close to 1.5/(p sqrt(lam)).
    """
    return int(math.ceil(10.0 / (p * eps0) ** 2))


class PStableSketch:
    """lam accumulators A_r = sum_i x_i X_{i,r}; estimate median|A|/median|X|."""

    kind = "pstable"

    def __init__(self, p, reps=None, eps0=0.1, seed=0):
        _check_p(p)
        self.p = float(p)
        self.eps0 = float(eps0)
        self.reps = int(reps) if reps else default_reps(self.p, self.eps0)
        self.seed = int(seed)
        self._s = np.uint64(derive_seed("pstable", self.seed))
        self.acc = np.zeros(self.reps)

    def update(self, key, delta):
        self.update_batch([key], [delta])

    def update_batch(self, keys, deltas):
        keys = np.asarray(keys, dtype=np.uint64)
        _pstable_update(self.acc, self._s, self.p, keys, np.asarray(deltas, dtype=np.float64))

    def merge(self, other):
        if (type(other) is not type(self) or other.seed != self.seed or other.p != self.p
                or other.reps != self.reps):
            raise SketchMismatch("p-stable sketches differ in seed or shape")
        out = self.copy()
        out.acc = self.acc + other.acc
        return out

    def copy(self):
        out = object.__new__(type(self))
        out.__dict__.update(self.__dict__)
        out.acc = self.acc.copy()
        return out

    def estimate(self):
        return float(np.median(np.abs(self.acc))) / pstable_median(self.p)

    def to_bytes(self):
        return pack(self.kind, dict(p=self.p, reps=self.reps, eps0=self.eps0, seed=self.seed),
                    [self.acc])

    @classmethod
    def from_bytes(cls, blob):
        meta, arrays = unpack(blob, cls.kind)
        out = cls(**meta)
        (out.acc,) = arrays
        return out

    @property
    def n_cells(self):
        return self.reps
