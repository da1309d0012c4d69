"""Mergeable linear sketches over implicit integer vectors."""


class _Fail:
    """Failure symbol returned by decoders; distinct from any index."""
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "FAIL"

    def __bool__(self):
        return False


FAIL = _Fail()
DEFAULT_FAIL_PROB = 2.0 ** -20

from .ksparse import KSparseSketch  # noqa: E402
from .l0 import L0Estimator, L0Sampler  # noqa: E402
from .pstable import PStableSketch, gen_p_stable, pstable_median  # noqa: E402
from .exponential import exp_argmax_distribution_check, exp_draw  # noqa: E402

__all__ = [
    "FAIL", "KSparseSketch", "L0Sampler", "L0Estimator", "PStableSketch",
    "gen_p_stable", "pstable_median", "exp_draw", "exp_argmax_distribution_check",
]
