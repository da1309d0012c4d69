"""k-sparse recovery by peeling an invertible table of field checksums.

Every row hashes each key to one of 2k cells. A cell keeps the plain sum
of values, the sum of value*key and of value*g(key) mod p (g a random
polynomial used as a fingerprint), plus value*payload sums so decoded
keys can carry extra integers (e.g. point coordinates). A cell whose
three sums are consistent with a single key is "pure"; peeling pure cells
until nothing changes recovers the vector if it has at most k nonzeros.
"""
import numpy as np
from numba import njit

from . import DEFAULT_FAIL_PROB, FAIL
from .._random import derive_seed
from ..errors import SketchMismatch
from .hashing import PRIME, addmod61, hash_coefficients, key_to_field, modinv, mulmod61, poly4, to_field
from .serialize import pack, unpack


@njit(cache=True)
def _update(count, skey, sfp, spay, rowcoef, fpcoef, width, keys, vals, pay):
    R = count.shape[0]
    dp = spay.shape[2]
    for n in range(keys.shape[0]):
        key = keys[n]
        v = vals[n]
        vf = to_field(v)
        kv = mulmod61(vf, key)
        fv = mulmod61(vf, poly4(fpcoef, key))
        for r in range(R):
            b = poly4(rowcoef[r], key) % np.uint64(width)
            count[r, b] += v
            skey[r, b] = addmod61(skey[r, b], kv)
            sfp[r, b] = addmod61(sfp[r, b], fv)
            for c in range(dp):
                spay[r, b, c] = addmod61(spay[r, b, c], mulmod61(vf, pay[n, c]))


@njit(cache=True)
def _buckets(rowcoef, width, key):
    R = rowcoef.shape[0]
    out = np.empty(R, dtype=np.int64)
    for r in range(R):
        out[r] = poly4(rowcoef[r], key) % np.uint64(width)
    return out


@njit(cache=True)
def _fingerprint(fpcoef, key):
    return poly4(fpcoef, key)


class KSparseSketch:
    """Recovers all nonzero (key, value) pairs of a vector with <= k nonzeros."""

    kind = "ksparse"

    def __init__(self, k, seed=0, fail_prob=DEFAULT_FAIL_PROB, payload_dim=0, rows=None):
        self.k = int(k)
        self.seed = int(seed)
        self.fail_prob = fail_prob
        self.rows = int(rows) if rows else max(4, int(np.ceil(np.log2(1.0 / fail_prob))))
        self.width = max(2, 2 * self.k)
        self.payload_dim = int(payload_dim)
        s = derive_seed("ksparse", self.seed)
        self._rowcoef = hash_coefficients(s, self.rows)
        self._fpcoef = hash_coefficients(s ^ 0x5DEECE66D, 1)[0]
        shape = (self.rows, self.width)
        self.count = np.zeros(shape, dtype=np.int64)
        self.skey = np.zeros(shape, dtype=np.uint64)
        self.sfp = np.zeros(shape, dtype=np.uint64)
        self.spay = np.zeros(shape + (self.payload_dim,), dtype=np.uint64)

    # -- linear updates -------------------------------------------------
    def update(self, key, delta, payload=()):
        self.update_batch([key], [delta], [payload] if self.payload_dim else None)

    def update_batch(self, keys, deltas, payload=None):
        keys = as_keys(keys)
        vals = np.asarray(deltas, dtype=np.int64)
        if self.payload_dim:
            pay = np.array([[to_field_py(c) for c in row] for row in payload], dtype=np.uint64) \
                .reshape(len(keys), self.payload_dim)
        else:
            pay = np.zeros((len(keys), 0), dtype=np.uint64)
        if np.any(keys >= np.uint64(PRIME)):
            raise ValueError("keys must be below 2^61 - 1")
        _update(self.count, self.skey, self.sfp, self.spay, self._rowcoef, self._fpcoef,
                self.width, keys, vals, pay)

    def _compatible(self, other):
        if (type(other) is not type(self) or other.seed != self.seed or other.k != self.k
                or other.rows != self.rows or other.payload_dim != self.payload_dim):
            raise SketchMismatch("k-sparse sketches differ in seed or shape")

    def merge(self, other):
        """Cell-wise sum; sketch(x) + sketch(y) = sketch(x + y)."""
        self._compatible(other)
        out = self.copy()
        out.count += other.count
        out.skey = (out.skey + other.skey) % np.uint64(PRIME)
        out.sfp = (out.sfp + other.sfp) % np.uint64(PRIME)
        out.spay = (out.spay + other.spay) % np.uint64(PRIME)
        return out

    def copy(self):
        out = object.__new__(type(self))
        out.__dict__.update(self.__dict__)
        for name in ("count", "skey", "sfp", "spay"):
            setattr(out, name, getattr(self, name).copy())
        return out

    def cells(self):
        return self.count, self.skey, self.sfp, self.spay

    def is_zero(self):
        return not (self.count.any() or self.skey.any() or self.sfp.any() or self.spay.any())

    # -- decoding ---------------------------------------------------------
    def _pure(self, r, b):
        c = int(self.count[r, b])
        if c == 0:
            return None
        key = int(self.skey[r, b]) * modinv(c) % PRIME
        if int(self.sfp[r, b]) != mulmod_py(c, int(_fingerprint(self._fpcoef, np.uint64(key)))):
            return None
        return key

    def decode(self):
        """Sorted list of (key, value[, payload]) or FAIL."""
        count = self.count.copy()
        skey = self.skey.copy()
        sfp = self.sfp.copy()
        spay = self.spay.copy()
        work = self.copy()
        work.count, work.skey, work.sfp, work.spay = count, skey, sfp, spay
        found = {}
        progress = True
        while progress:
            progress = False
            rs, bs = np.nonzero(count)
            for r, b in zip(rs.tolist(), bs.tolist()):
                if count[r, b] == 0:
                    continue
                key = work._pure(r, b)
                if key is None:
                    continue
                c = int(count[r, b])
                inv = modinv(c)
                pay = tuple(_from_field(int(spay[r, b, j]) * inv % PRIME) for j in range(self.payload_dim))
                found[key] = (found.get(key, (0, pay))[0] + c, pay)
                if len(found) > self.k:
                    return FAIL
                work.update_batch(np.array([key], dtype=np.uint64), [-c],
                                  [pay] if self.payload_dim else None)
                progress = True
        if not work.is_zero():
            return FAIL
        out = []
        for key in sorted(found):
            c, pay = found[key]
            if c != 0:
                out.append((key, c, pay) if self.payload_dim else (key, c))
        return out

    # -- persistence ------------------------------------------------------
    def to_bytes(self):
        meta = dict(k=self.k, seed=self.seed, fail_prob=self.fail_prob,
                    payload_dim=self.payload_dim, rows=self.rows)
        return pack(self.kind, meta, [self.count, self.skey, self.sfp, self.spay])

    @classmethod
    def from_bytes(cls, blob):
        meta, arrays = unpack(blob, cls.kind)
        out = cls(**meta)
        out.count, out.skey, out.sfp, out.spay = arrays
        return out

    @property
    def n_cells(self):
        return self.rows * self.width


def as_keys(keys):
    """Field keys as uint64; integer arrays are taken as-is (must be < p)."""
    if isinstance(keys, np.ndarray) and keys.dtype.kind in "iu":
        if keys.dtype.kind == "i" and np.any(keys < 0):
            raise ValueError("keys must be nonnegative")
        return keys.astype(np.uint64)
    return np.array([key_to_field(k) for k in keys], dtype=np.uint64)


def mulmod_py(a, b):
    return a * b % PRIME


def to_field_py(v):
    return int(v) % PRIME


def _from_field(v):
    """Field residue back to a signed integer (values near p are negatives)."""
    return v - PRIME if v > PRIME // 2 else v
