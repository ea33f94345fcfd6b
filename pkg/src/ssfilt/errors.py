"""Exception types raised across the package."""

import numpy as np


class InvalidCoefficientsError(ValueError):
    """Transfer-function coefficients cannot be normalized or realized."""


class DimensionError(ValueError):
    """Array shapes disagree with the system order or signal length."""


class NotDiagonalizableError(np.linalg.LinAlgError):
    """The transition matrix has no well-conditioned eigenbasis."""


class RtfConfigError(ValueError):
    """FFT size too small for a linear (non-circular) convolution."""
