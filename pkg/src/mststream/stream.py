"""Replayable turnstile streams, in memory or backed by a stream file."""
import numpy as np

from .geometry import PointMultiset, StreamUpdate, inserts_of, read_stream


class StreamSource:
    """A stream that can be replayed any number of times.

    replay() yields (signs, points) chunks as int64 arrays and counts how
    many times the stream was read.
    """

    def __init__(self, updates=None, path=None, d=None, Lambda=None, chunk=1 << 16):
        if (updates is None) == (path is None):
            raise ValueError("give exactly one of updates or path")
        self.path = path
        self.chunk = chunk
        self.replays = 0
        if path is not None:
            self.Lambda, self.d, _ = read_stream(path)
            self._updates = None
        else:
            self._updates = list(updates)
            self.d = d if d is not None else (len(self._updates[0].point) if self._updates else 1)
            self.Lambda = Lambda

    @classmethod
    def from_multiset(cls, P):
        return cls(inserts_of(P), d=P.d, Lambda=P.Lambda)

    def _load(self):
        if self._updates is not None:
            return self._updates
        _, _, ups = read_stream(self.path)
        return ups

    def replay(self):
        self.replays += 1
        ups = self._load()
        for s in range(0, len(ups), self.chunk):
            part = ups[s:s + self.chunk]
            signs = np.array([u.sign for u in part], dtype=np.int64)
            pts = np.array([u.point for u in part], dtype=np.int64).reshape(-1, self.d)
            yield signs, pts

    def multiset(self):
        ms = PointMultiset(self.d, self.Lambda)
        for u in self._load():
            ms.add(u.point, u.sign)
        return ms


def as_source(x):
    if isinstance(x, StreamSource):
        return x
    if isinstance(x, PointMultiset):
        return StreamSource.from_multiset(x)
    x = list(x)
    if x and isinstance(x[0], StreamUpdate):
        return StreamSource(x)
    raise TypeError("expected a StreamSource, PointMultiset or list of StreamUpdate")
