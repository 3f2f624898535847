"""Arctic curves of doubly periodic Aztec diamond dimer models via the eta-discriminant."""

from .aztec_curve import PeriodicWeights, build_curve, validate
from .pencil import build_dF
from .disc_engine import make_context, discriminant_eval
from .arctic import trace, degree_check
from .shuffler import sample, empirical_boundary, compare_boundary

__version__ = "0.1.0"

__all__ = [
    "PeriodicWeights",
    "build_curve",
    "validate",
    "build_dF",
    "make_context",
    "discriminant_eval",
    "trace",
    "degree_check",
    "sample",
    "empirical_boundary",
    "compare_boundary",
]
