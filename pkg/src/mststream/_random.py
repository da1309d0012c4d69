"""Stateless counter-mode randomness.

Every random quantity used by a sketch is a pure function of
(seed, counter), so coefficients can be regenerated on demand instead of
stored, and two processes holding the same seed agree bit for bit.
"""
import hashlib

import numpy as np
from numba import njit

MASK64 = (1 << 64) - 1
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def derive_seed(*labels):
    """Hash an arbitrary tuple of labels (ints, strings) into a 64-bit seed."""
    h = hashlib.blake2b(digest_size=8)
    for lab in labels:
        h.update(repr(lab).encode())
        h.update(b"\x1f")
    return int.from_bytes(h.digest(), "little")


def mix64_py(x):
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


@njit(cache=True)
def mix64(x):
    x = x + _GOLDEN
    x = (x ^ (x >> np.uint64(30))) * _M1
    x = (x ^ (x >> np.uint64(27))) * _M2
    return x ^ (x >> np.uint64(31))


@njit(cache=True)
def counter_bits(seed, counter):
    return mix64(np.uint64(seed) ^ mix64(np.uint64(counter)))


@njit(cache=True)
def counter_uniform(seed, counter):
    """Uniform in the open interval (0, 1) on a 2^-40 grid."""
    b = counter_bits(seed, counter) >> np.uint64(24)
    return (np.float64(b) + 0.5) * 2.0 ** -40


@njit(cache=True)
def counter_exponential(seed, counter, rate):
    return -np.log(counter_uniform(seed, counter)) / rate


def uniform_array(seed, counters):
    """Vectorised counter_uniform over an integer array of counters."""
    return _uniform_array(np.uint64(seed & MASK64),
                          np.ascontiguousarray(counters, dtype=np.uint64))


@njit(cache=True)
def _uniform_array(seed, counters):
    out = np.empty(counters.shape[0])
    for i in range(counters.shape[0]):
        out[i] = counter_uniform(seed, counters[i])
    return out


def rng_from(*labels):
    """A numpy Generator seeded from labels, for non-sketch randomness."""
    return np.random.default_rng(derive_seed(*labels))
