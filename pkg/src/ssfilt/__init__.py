"""Differentiable linear state-space filters with closed-form gradients."""

from .errors import DimensionError, InvalidCoefficientsError, NotDiagonalizableError, RtfConfigError
from .grad import backward_recurrence, filter_backward, recurrence_vjp
from .model import (
    DiagonalizedSystem,
    FilterTape,
    GradientBundle,
    StateSpaceSystem,
    TransferFunction,
    diagonalize,
    spectral_radius,
    tf_to_ss,
    transpose_system,
)
from .scan import (
    ScanConfig,
    ScanElement,
    Strategy,
    combine,
    diagonal_recurrence,
    filter_forward,
    filter_reverse_time,
    filter_tf,
    recurrence,
)

__all__ = [
    "DiagonalizedSystem",
    "DimensionError",
    "FilterTape",
    "GradientBundle",
    "InvalidCoefficientsError",
    "NotDiagonalizableError",
    "RtfConfigError",
    "ScanConfig",
    "ScanElement",
    "StateSpaceSystem",
    "Strategy",
    "TransferFunction",
    "backward_recurrence",
    "combine",
    "diagonal_recurrence",
    "diagonalize",
    "filter_backward",
    "filter_forward",
    "filter_reverse_time",
    "filter_tf",
    "recurrence",
    "recurrence_vjp",
    "spectral_radius",
    "tf_to_ss",
    "transpose_system",
]
