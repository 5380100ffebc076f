"""Certified high-precision ground-state energy of the quartic oscillator -psi'' + z**4 psi = eps psi."""

__version__ = "0.1.0"

from .bound import Bracket, Schedule, Stage, certified_digits, default_schedule, lambda_bounds, staged_ground_state
from .errors import (
    CheckpointError,
    ContextMismatchError,
    ConvergenceError,
    NoSignChangeError,
    PrecisionError,
    QanhoError,
)
from .precision import BigReal, PrecisionContext, find_root_bracketed, make_context, sign_scan, to_decimal
from .report import REFERENCE_TEMPLATE, compare_digits

__all__ = [
    "BigReal",
    "Bracket",
    "CheckpointError",
    "ContextMismatchError",
    "ConvergenceError",
    "NoSignChangeError",
    "PrecisionContext",
    "PrecisionError",
    "QanhoError",
    "REFERENCE_TEMPLATE",
    "Schedule",
    "Stage",
    "certified_digits",
    "compare_digits",
    "default_schedule",
    "find_root_bracketed",
    "lambda_bounds",
    "make_context",
    "sign_scan",
    "staged_ground_state",
    "to_decimal",
]
