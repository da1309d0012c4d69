"""l0 sampling and l0 (distinct count) estimation.

Both use nested geometric subsampling: a key reaches level l with
probability 2^-l, where its depth is the number of trailing zeros of a
seeded 64-bit hash. The sampler keeps one 1-sparse cell per level and
returns the key alone at the shallowest level that holds exactly one key,
i.e. the key of unique maximal depth; exchangeability makes that key
uniform over the support. The estimator keeps K fingerprint buckets per
level and inverts the occupancy count at the first level that is at most
half full.
"""
import math

import numpy as np
from numba import njit

from . import DEFAULT_FAIL_PROB, FAIL
from .._random import derive_seed, mix64
from ..errors import SketchMismatch
from .hashing import PRIME, addmod61, hash_coefficients, modinv, mulmod61, poly4, to_field
from .ksparse import _from_field, as_keys, to_field_py
from .serialize import pack, unpack


@njit(cache=True)
def _depth(seed, key, cap):
    h = mix64(seed ^ mix64(key))
    d = 0
    while d < cap and (h & np.uint64(1)) == np.uint64(0):
        h >>= np.uint64(1)
        d += 1
    return d


@njit(cache=True)
def _sampler_update(count, s1, s2, spay, seeds, fpcoef, keys, vals, pay):
    reps, levels = count.shape
    dp = spay.shape[2]
    for n in range(keys.shape[0]):
        key = keys[n]
        v = vals[n]
        vf = to_field(v)
        kv = mulmod61(vf, key)
        fv = mulmod61(vf, poly4(fpcoef, key))
        for r in range(reps):
            dep = _depth(seeds[r], key, levels - 1)
            for l in range(dep + 1):
                count[r, l] += v
                s1[r, l] = addmod61(s1[r, l], kv)
                s2[r, l] = addmod61(s2[r, l], fv)
                for c in range(dp):
                    spay[r, l, c] = addmod61(spay[r, l, c], mulmod61(vf, pay[n, c]))


class L0Sampler:
    """Uniform sample from the support of a turnstile vector, or FAIL."""

    kind = "l0sampler"

    def __init__(self, seed=0, fail_prob=DEFAULT_FAIL_PROB, levels=64, reps=None, payload_dim=0):
        self.seed = int(seed)
        self.fail_prob = fail_prob
        self.levels = int(levels)
        # a repetition fails when the deepest level is shared (well under 1/2)
        self.reps = int(reps) if reps else max(2, math.ceil(math.log2(1.0 / fail_prob)))
        self.payload_dim = int(payload_dim)
        s = derive_seed("l0sampler", self.seed)
        self._seeds = hash_coefficients(s, 1, self.reps)[0]
        self._fpcoef = hash_coefficients(s ^ 0xA5A5A5A5, 1)[0]
        shape = (self.reps, self.levels)
        self.count = np.zeros(shape, dtype=np.int64)
        self.s1 = np.zeros(shape, dtype=np.uint64)
        self.s2 = np.zeros(shape, dtype=np.uint64)
        self.spay = np.zeros(shape + (self.payload_dim,), dtype=np.uint64)

    def update(self, key, delta, payload=()):
        self.update_batch([key], [delta], [payload] if self.payload_dim else None)

    def update_batch(self, keys, deltas, payload=None):
        keys = as_keys(keys)
        vals = np.asarray(deltas, dtype=np.int64)
        if self.payload_dim:
            pay = np.array([[to_field_py(c) for c in row] for row in payload],
                           dtype=np.uint64).reshape(len(keys), self.payload_dim)
        else:
            pay = np.zeros((len(keys), 0), dtype=np.uint64)
        _sampler_update(self.count, self.s1, self.s2, self.spay, self._seeds, self._fpcoef,
                        keys, vals, pay)

    def merge(self, other):
        if (type(other) is not type(self) or other.seed != self.seed or other.reps != self.reps
                or other.levels != self.levels or other.payload_dim != self.payload_dim):
            raise SketchMismatch("l0 samplers differ in seed or shape")
        out = self.copy()
        out.count += other.count
        P = np.uint64(PRIME)
        out.s1 = (out.s1 + other.s1) % P
        out.s2 = (out.s2 + other.s2) % P
        out.spay = (out.spay + other.spay) % P
        return out

    def copy(self):
        out = object.__new__(type(self))
        out.__dict__.update(self.__dict__)
        for name in ("count", "s1", "s2", "spay"):
            setattr(out, name, getattr(self, name).copy())
        return out

    def _one_sparse(self, r, l):
        c = int(self.count[r, l])
        if c == 0:
            return None
        inv = modinv(c)
        key = int(self.s1[r, l]) * inv % PRIME
        fp = int(poly4(self._fpcoef, np.uint64(key)))
        if int(self.s2[r, l]) != c * fp % PRIME:
            return None
        return key, c, inv

    def sample(self, with_value=False):
        """A support key (optionally with value and payload), or FAIL."""
        for r in range(self.reps):
            for l in range(self.levels):
                if self.count[r, l] == 0 and self.s1[r, l] == 0:
                    break
                hit = self._one_sparse(r, l)
                if hit is None:
                    continue
                key, c, inv = hit
                if not with_value:
                    return key
                pay = tuple(_from_field(int(self.spay[r, l, j]) * inv % PRIME)
                            for j in range(self.payload_dim))
                return key, c, pay
        return FAIL

    def to_bytes(self):
        meta = dict(seed=self.seed, fail_prob=self.fail_prob, levels=self.levels,
                    reps=self.reps, payload_dim=self.payload_dim)
        return pack(self.kind, meta, [self.count, self.s1, self.s2, self.spay])

    @classmethod
    def from_bytes(cls, blob):
        meta, arrays = unpack(blob, cls.kind)
        out = cls(**meta)
        out.count, out.s1, out.s2, out.spay = arrays
        return out

    @property
    def n_cells(self):
        return self.reps * self.levels


@njit(cache=True)
def _estimator_update(fp, seeds, bcoef, fpcoef, keys, vals):
    reps, levels, K = fp.shape
    for n in range(keys.shape[0]):
        key = keys[n]
        fv = mulmod61(to_field(vals[n]), poly4(fpcoef, key))
        for r in range(reps):
            dep = _depth(seeds[r], key, levels - 1)
            b = poly4(bcoef[r], key) % np.uint64(K)
            for l in range(dep + 1):
                fp[r, l, b] = addmod61(fp[r, l, b], fv)


class L0Estimator:
    """(1 +- eps0) estimate of the number of nonzero coordinates."""

    kind = "l0estimator"

    def __init__(self, eps0=0.2, seed=0, fail_prob=0.01, levels=48, reps=None, buckets=None):
        self.eps0 = float(eps0)
        self.seed = int(seed)
        self.fail_prob = fail_prob
        self.levels = int(levels)
        self.buckets = int(buckets) if buckets else max(8, math.ceil(12.0 / self.eps0 ** 2))
        self.reps = int(reps) if reps else 2 * math.ceil(math.log2(1.0 / fail_prob) / 2) + 1
        s = derive_seed("l0estimator", self.seed)
        self._seeds = hash_coefficients(s, 1, self.reps)[0]
        self._bcoef = hash_coefficients(s ^ 0x3C3C3C3C, self.reps)
        self._fpcoef = hash_coefficients(s ^ 0x77777777, 1)[0]
        self.fp = np.zeros((self.reps, self.levels, self.buckets), dtype=np.uint64)

    def update(self, key, delta):
        self.update_batch([key], [delta])

    def update_batch(self, keys, deltas):
        _estimator_update(self.fp, self._seeds, self._bcoef, self._fpcoef,
                          as_keys(keys), np.asarray(deltas, dtype=np.int64))

    def merge(self, other):
        if (type(other) is not type(self) or other.seed != self.seed
                or other.fp.shape != self.fp.shape):
            raise SketchMismatch("l0 estimators differ in seed or shape")
        out = self.copy()
        out.fp = (self.fp + other.fp) % np.uint64(PRIME)
        return out

    def copy(self):
        out = object.__new__(type(self))
        out.__dict__.update(self.__dict__)
        out.fp = self.fp.copy()
        return out

    def estimate(self):
        K = self.buckets
        occ = np.count_nonzero(self.fp, axis=2)
        ests = []
        for r in range(self.reps):
            row = occ[r]
            if row[0] == 0:
                ests.append(0.0)
                continue
            l = int(np.argmax(row <= K // 2))
            o = row[l]
            if o >= K:
                o = K - 1
            ests.append((2.0 ** l) * math.log(1.0 - o / K) / math.log(1.0 - 1.0 / K))
        return float(np.median(ests))

    def to_bytes(self):
        meta = dict(eps0=self.eps0, seed=self.seed, fail_prob=self.fail_prob,
                    levels=self.levels, reps=self.reps, buckets=self.buckets)
        return pack(self.kind, meta, [self.fp])

    @classmethod
    def from_bytes(cls, blob):
        meta, arrays = unpack(blob, cls.kind)
        out = cls(**meta)
        (out.fp,) = arrays
        return out

    @property
    def n_cells(self):
        return self.fp.size
