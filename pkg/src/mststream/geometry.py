"""Integer points, the l1 metric, turnstile streams and aspect-ratio reduction."""
from collections import Counter, namedtuple
from fractions import Fraction
import math

import numpy as np

from .errors import ConfigError, StreamError

StreamUpdate = namedtuple("StreamUpdate", ["sign", "point"])


def l1_distance(a, b):
    if len(a) != len(b):
        raise ValueError(f"dimension mismatch: {len(a)} vs {len(b)}")
    return sum(abs(int(x) - int(y)) for x, y in zip(a, b))


def pairwise_l1(X, Y=None):
    """Exact integer l1 distance matrix between the rows of X and Y."""
    X = np.asarray(X, dtype=np.int64)
    Y = X if Y is None else np.asarray(Y, dtype=np.int64)
    out = np.zeros((X.shape[0], Y.shape[0]), dtype=np.int64)
    for j in range(X.shape[1]):
        out += np.abs(X[:, j, None] - Y[None, :, j])
    return out


class PointMultiset:
    """Multiset of integer points in [1, Lambda]^d.

    Stored as a Counter keyed by coordinate tuples. `distinct()` returns
    the support as a lexicographically sorted int64 array, which is the
    canonical vertex order everywhere else in the package.
    """

    def __init__(self, d, Lambda=None, counts=None):
        self.d = int(d)
        self.Lambda = None if Lambda is None else int(Lambda)
        self.counts = Counter()
        if counts:
            for p, c in dict(counts).items():
                self.add(p, c)

    @classmethod
    def from_points(cls, points, Lambda=None):
        pts = np.asarray(points, dtype=np.int64)
        if pts.ndim == 1:
            pts = pts[:, None]
        ms = cls(pts.shape[1], Lambda)
        for row in map(tuple, pts.tolist()):
            ms.add(row)
        return ms

    def _check(self, p):
        p = tuple(int(c) for c in p)
        if len(p) != self.d:
            raise ValueError(f"point {p} has dimension {len(p)}, expected {self.d}")
        if self.Lambda is not None and any(c < 1 or c > self.Lambda for c in p):
            raise ValueError(f"point {p} outside [1, {self.Lambda}]^{self.d}")
        return p

    def add(self, p, count=1):
        p = self._check(p)
        new = self.counts[p] + count
        if new < 0:
            raise StreamError(f"delete of absent point {p}")
        if new == 0:
            del self.counts[p]
        else:
            self.counts[p] = new

    def merge(self, other):
        if other.d != self.d:
            raise ValueError("dimension mismatch")
        out = PointMultiset(self.d, self.Lambda, self.counts)
        for p, c in other.counts.items():
            out.add(p, c)
        return out

    def distinct(self):
        if not self.counts:
            return np.zeros((0, self.d), dtype=np.int64)
        return np.array(sorted(self.counts), dtype=np.int64).reshape(-1, self.d)

    def multiplicities(self):
        return np.array([self.counts[k] for k in sorted(self.counts)], dtype=np.int64)

    @property
    def n_distinct(self):
        return len(self.counts)

    @property
    def total(self):
        return sum(self.counts.values())

    def diameter(self):
        X = self.distinct()
        if len(X) < 2:
            return 0
        return int(pairwise_l1(X).max())

    def __eq__(self, other):
        return isinstance(other, PointMultiset) and self.d == other.d and self.counts == other.counts

    def __len__(self):
        return self.total

    def __repr__(self):
        return f"PointMultiset(d={self.d}, distinct={self.n_distinct}, total={self.total})"


def apply_stream(updates, d=None, Lambda=None):
    """Fold a sequence of StreamUpdate into a PointMultiset.

    Deletes are applied in order, so a delete arriving before its insert is
    reported as malformed even if the final tally would be nonnegative.
    """
    updates = list(updates)
    if d is None:
        d = len(updates[0].point) if updates else 1
    ms = PointMultiset(d, Lambda)
    for u in updates:
        if u.sign not in (1, -1):
            raise StreamError(f"bad sign {u.sign}")
        ms.add(u.point, u.sign)
    return ms


def parse_stream(text):
    """Parse the line format: header `LAMBDA D`, then `+ c1 .. cD` / `- c1 .. cD`."""
    Lambda = d = None
    updates = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if Lambda is None:
            if len(parts) != 2:
                raise StreamError(f"line {lineno}: header must be 'LAMBDA D'")
            Lambda, d = int(parts[0]), int(parts[1])
            continue
        if parts[0] not in "+-" or len(parts) != d + 1:
            raise StreamError(f"line {lineno}: expected sign and {d} coordinates")
        coords = tuple(int(c) for c in parts[1:])
        if any(c < 1 or c > Lambda for c in coords):
            raise StreamError(f"line {lineno}: coordinate outside [1, {Lambda}]")
        updates.append(StreamUpdate(1 if parts[0] == "+" else -1, coords))
    if Lambda is None:
        raise StreamError("empty stream file (missing header)")
    return Lambda, d, updates


def read_stream(path):
    with open(path) as fh:
        return parse_stream(fh.read())


def format_stream(Lambda, d, updates):
    lines = [f"{Lambda} {d}"]
    for u in updates:
        lines.append(("+" if u.sign > 0 else "-") + " " + " ".join(str(int(c)) for c in u.point))
    return "\n".join(lines) + "\n"


def write_stream(path, Lambda, d, updates):
    with open(path, "w") as fh:
        fh.write(format_stream(Lambda, d, updates))


def inserts_of(P):
    """Insert-only stream realising a multiset."""
    return [StreamUpdate(1, p) for p, c in sorted(P.counts.items()) for _ in range(c)]


def normalize_aspect(P, epsilon, beta=1.0, shift=None, return_scale=False):
    """Snap P to a grid of side eps*diam/(n d) and re-express it in cell units.

    The grid is the one used by the snapping map at scale
    t = eps*beta*diam/n with cells of side t/(d*beta), so beta cancels; it is
    accepted for symmetry with the quadtree parameters. Output coordinates
    are integer cell indices shifted into [1, ...]^d, hence the minimum
    nonzero distance is at least 1 and the max/min ratio is at most
    n*d/eps + d. Multiplying output distances by the returned scale undoes
    the rescaling.
    """
    if not 0 < epsilon < 1 or beta <= 0:
        raise ConfigError("epsilon must be in (0,1) and beta positive")
    if P.n_distinct == 0:
        raise ConfigError("empty point set")
    diam = P.diameter()
    if diam == 0:
        return (P, Fraction(1)) if return_scale else P
    X = P.distinct()
    n, d = X.shape
    eps = Fraction(epsilon).limit_denominator(1 << 20)
    side = eps * diam / (n * d)
    if shift is None:
        shift = np.zeros(d, dtype=np.int64)
    # floor((x + shift) / side) with side = a/b exact
    a, b = side.numerator, side.denominator
    idx = [[((int(x) + int(s)) * b) // a for x, s in zip(row, shift)] for row in X.tolist()]
    idx = np.array(idx, dtype=object)
    lo = idx.min(axis=0)
    out = PointMultiset(d)
    for row, c in zip(idx.tolist(), P.multiplicities().tolist()):
        out.add(tuple(int(v - l + 1) for v, l in zip(row, lo)), c)
    out.Lambda = max(max(p) for p in out.counts)
    return (out, side) if return_scale else out


def aspect_ratio(P):
    X = P.distinct()
    if len(X) < 2:
        return 1.0
    D = pairwise_l1(X)
    nz = D[D > 0]
    return float(D.max()) / float(nz.min())


def next_pow2(x):
    x = math.ceil(x)
    return 1 if x <= 1 else 1 << (int(x) - 1).bit_length()
