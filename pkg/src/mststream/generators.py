"""Seeded, versioned instance generators.

A generator spec string looks like ``uniform:n=100,d=2,Lambda=1024,seed=3``
or ``file:path=points.txt``. Every generator returns a PointMultiset in
[1, Lambda]^d; its version string is echoed in reports and must be
bumped whenever the generated points change.
"""
from dataclasses import dataclass, field
import math

import numpy as np

from ._random import rng_from
from .errors import ConfigError
from .geometry import PointMultiset, read_stream, apply_stream

VERSIONS = {
    "uniform": "uniform-1",
    "clustered": "clustered-1",
    "cantor": "cantor-1",
    "grid": "grid-1",
    "file": "file-1",
}


@dataclass
class InstanceSpec:
    generator: str
    n: int = 64
    d: int = 2
    Lambda: int = 1024
    seed: int = 0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.generator not in VERSIONS:
            raise ConfigError(f"unknown generator {self.generator!r}")
        if self.generator != "file" and (self.n < 1 or self.d < 1 or self.Lambda < 1):
            raise ConfigError("n, d and Lambda must be positive")

    @property
    def version(self):
        return VERSIONS[self.generator]

    def describe(self):
        out = {"generator": self.generator, "version": self.version, "n": self.n, "d": self.d,
               "Lambda": self.Lambda, "seed": self.seed}
        out.update(self.params)
        return out

    def build(self):
        return generate(self)


def _num(v):
    try:
        return int(v)
    except ValueError:
        try:
            return float(v)
        except ValueError:
            return v


def parse_spec(text, seed=None):
    """Parse ``name:key=value,...`` into an InstanceSpec."""
    name, _, rest = text.partition(":")
    kw = {}
    for item in filter(None, rest.split(",")):
        if "=" not in item:
            raise ConfigError(f"bad generator parameter {item!r}")
        k, v = item.split("=", 1)
        kw[k.strip()] = _num(v.strip())
    base = {}
    for k in ("n", "d", "Lambda", "seed"):
        if k in kw:
            base[k] = kw.pop(k)
    if "L" in kw:
        base["Lambda"] = kw.pop("L")
    if seed is not None and "seed" not in base:
        base["seed"] = seed
    if name == "cantor":
        base.setdefault("d", 1)
    return InstanceSpec(name.strip(), params=kw, **base)


def generate_uniform(n, d, Lambda, seed=0):
    rng = rng_from("gen-uniform", seed)
    return PointMultiset.from_points(rng.integers(1, Lambda + 1, size=(n, d)), Lambda=Lambda)


def generate_clustered(n, d, Lambda, seed=0, clusters=4, spread=None):
    """Points scattered around a few uniform centres, clipped to the box."""
    rng = rng_from("gen-clustered", seed)
    spread = max(1, Lambda // 64) if spread is None else spread
    centres = rng.integers(1, Lambda + 1, size=(clusters, d))
    which = rng.integers(0, clusters, size=n)
    X = centres[which] + rng.integers(-spread, spread + 1, size=(n, d))
    return PointMultiset.from_points(np.clip(X, 1, Lambda), Lambda=Lambda)


def generate_grid(n, d, Lambda, seed=0, spacing=None):
    """Up to n lattice points with a common spacing, randomly offset."""
    rng = rng_from("gen-grid", seed)
    side = max(1, math.ceil(n ** (1.0 / d)))
    spacing = max(1, (Lambda - 1) // side) if spacing is None else spacing
    if (side - 1) * spacing + 1 > Lambda:
        raise ConfigError("grid does not fit in [1, Lambda]^d")
    axes = np.stack(np.meshgrid(*[np.arange(side)] * d, indexing="ij"), -1).reshape(-1, d)[:n]
    room = Lambda - (side - 1) * spacing
    off = rng.integers(1, room + 1, size=d)
    return PointMultiset.from_points(axes * spacing + off, Lambda=Lambda)


def cantor_gaps(n, base=2):
    """Gap k (1 <= k < n) is base^{v2(k)}: pairs, then pairs of pairs, and so on."""
    ks = np.arange(1, n, dtype=np.int64)
    v2 = np.zeros_like(ks)
    m = ks.copy()
    while (m % 2 == 0).any():
        even = m % 2 == 0
        v2[even] += 1
        m[even] //= 2
    return base ** v2


def generate_cantor(n, base=2, d=1, Lambda=None):
    """Hierarchically paired points on a line, embedded in the first axis.

    With base 2 the threshold graph at 2^i has n/2^{i+1} components and
    the MST costs (n/2) log2(n) + ... = Theta(n log n).
    """
    if n < 1 or n & (n - 1):
        raise ConfigError("cantor needs n a power of two")
    x = np.concatenate([[1], 1 + np.cumsum(cantor_gaps(n, base))]) if n > 1 else np.array([1])
    X = np.ones((n, d), dtype=np.int64)
    X[:, 0] = x
    L = int(x.max()) if Lambda is None else Lambda
    if x.max() > L:
        raise ConfigError("cantor instance does not fit in Lambda")
    return PointMultiset.from_points(X, Lambda=L)


def generate(spec):
    g, kw = spec.generator, dict(spec.params)
    if g == "uniform":
        return generate_uniform(spec.n, spec.d, spec.Lambda, spec.seed)
    if g == "clustered":
        return generate_clustered(spec.n, spec.d, spec.Lambda, spec.seed, **kw)
    if g == "grid":
        return generate_grid(spec.n, spec.d, spec.Lambda, spec.seed, **kw)
    if g == "cantor":
        return generate_cantor(spec.n, kw.get("base", 2), spec.d)
    if g == "file":
        if "path" not in kw:
            raise ConfigError("file generator needs path=...")
        Lambda, d, updates = read_stream(str(kw["path"]))
        return apply_stream(updates, d=d, Lambda=Lambda)
    raise ConfigError(f"unknown generator {g!r}")


def random_families(n, d, Lambda, seed):
    """The five random families used by the end-to-end checks."""
    return [
        InstanceSpec("uniform", n, d, Lambda, seed),
        InstanceSpec("clustered", n, d, Lambda, seed, {"clusters": 3}),
        InstanceSpec("clustered", n, d, Lambda, seed, {"clusters": 8, "spread": max(1, Lambda // 16)}),
        InstanceSpec("grid", n, d, Lambda, seed),
        InstanceSpec("uniform", n, d, max(4, Lambda // 8), seed + 7919),
    ]
