"""EstimateReport: the JSON document emitted by every estimator run.

Field names are frozen; see the README for the schema.
"""
from dataclasses import asdict, dataclass, field
import json
import math

import numpy as np

MODES = ("exact", "ideal", "Z", "alpha", "onepass")


def _plain(x):
    """Convert numpy scalars/arrays and non-finite floats into JSON-safe values."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        if math.isnan(x):
            return "nan"
        return x
    return x


@dataclass
class EstimateReport:
    mode: str
    parameters: dict
    estimate: float
    seed: int = 0
    oracle_mst: float = None
    ratio: float = None
    levels: list = field(default_factory=list)
    wall_time: float = 0.0
    warnings: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode}")

    def attach_oracle(self, mst):
        self.oracle_mst = mst
        self.ratio = (self.estimate / mst) if mst else None
        return self

    def to_dict(self):
        return _plain(asdict(self))

    def to_json(self, indent=None):
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        return cls(**json.loads(text))

    def __eq__(self, other):
        return isinstance(other, EstimateReport) and self.to_dict() == other.to_dict()
