"""Arithmetic mod the Mersenne prime 2^61 - 1 and 4-wise independent hashing."""
import numpy as np
from numba import njit

from .._random import MASK64, mix64_py

PRIME = (1 << 61) - 1
_P = np.uint64(PRIME)
_M32 = np.uint64(0xFFFFFFFF)
_M29 = np.uint64((1 << 29) - 1)


@njit(cache=True)
def reduce61(x):
    x = (x & _P) + (x >> np.uint64(61))
    x = (x & _P) + (x >> np.uint64(61))
    if x >= _P:
        x -= _P
    return x


@njit(cache=True)
def mulmod61(a, b):
    """a*b mod 2^61-1 for a, b < 2^61, using 32-bit limbs."""
    a_lo = a & _M32
    a_hi = a >> np.uint64(32)
    b_lo = b & _M32
    b_hi = b >> np.uint64(32)
    lo = a_lo * b_lo
    mid = a_lo * b_hi + a_hi * b_lo
    hi = a_hi * b_hi
    # hi*2^64 + mid*2^32 + lo with 2^61 == 1
    r = (lo & _P) + (lo >> np.uint64(61)) + (hi << np.uint64(3))
    r += (mid >> np.uint64(29)) + ((mid & _M29) << np.uint64(32))
    return reduce61(r)


@njit(cache=True)
def addmod61(a, b):
    return reduce61(a + b)


@njit(cache=True)
def to_field(v):
    """Signed int64 to its residue mod 2^61-1."""
    if v >= 0:
        return reduce61(np.uint64(v))
    return reduce61(_P - reduce61(np.uint64(-v)))


@njit(cache=True)
def poly4(coef, x):
    """((c3 x + c2) x + c1) x + c0 mod p: a 4-wise independent hash of x."""
    h = coef[3]
    h = addmod61(mulmod61(h, x), coef[2])
    h = addmod61(mulmod61(h, x), coef[1])
    h = addmod61(mulmod61(h, x), coef[0])
    return h


def hash_coefficients(seed, rows, per_row=4):
    """Deterministic field coefficients for `rows` independent polynomials."""
    out = np.empty((rows, per_row), dtype=np.uint64)
    s = seed & MASK64
    for r in range(rows):
        for c in range(per_row):
            s = mix64_py(s)
            out[r, c] = s % PRIME
    return out


def key_to_field(key):
    """Map an arbitrary nonnegative integer (or tuple) key into [0, p)."""
    if isinstance(key, tuple):
        h = 0x243F6A8885A308D3
        for k in key:
            h = mix64_py(h ^ (int(k) & MASK64))
        return h % PRIME
    key = int(key)
    if 0 <= key < PRIME:
        return key
    return mix64_py(key & MASK64) % PRIME


def modinv(a):
    return pow(int(a) % PRIME, PRIME - 2, PRIME)
