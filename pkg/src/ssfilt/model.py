"""Filter realizations and conversions between them.

A filter of order ``M`` is held either as transfer-function coefficients
``(b, a)`` or as a state-space quadruple ``(A, B, C, D)`` evolving as::

    v(n+1) = A v(n) + B x(n)
    y(n)   = C^T v(n) + D x(n)

Signals and state trajectories are plain numpy arrays: a signal has shape
``(N,)`` and a trajectory ``v(0..N)`` has shape ``(N + 1, M)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, InvalidCoefficientsError, NotDiagonalizableError

DEFAULT_DIAG_TOL = 1e-8
DEFAULT_COND_MAX = 1e8


def _frozen_array(values, dtype=None) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TransferFunction:
    """Rational transfer function ``B(z^-1) / A(z^-1)`` with monic denominator.

    Coefficients are divided through by ``a[0]`` and the shorter side is
    zero-padded so that ``len(b) == len(a) == order + 1``.
    """

    b: np.ndarray
    a: np.ndarray

    def __post_init__(self):
        b = np.atleast_1d(np.asarray(self.b, dtype=float))
        a = np.atleast_1d(np.asarray(self.a, dtype=float))
        if b.ndim != 1 or a.ndim != 1 or b.size == 0 or a.size == 0:
            raise InvalidCoefficientsError("b and a must be non-empty 1-D sequences")
        if not (np.all(np.isfinite(b)) and np.all(np.isfinite(a))):
            raise InvalidCoefficientsError("coefficients must be finite")
        if a[0] == 0:
            raise InvalidCoefficientsError("leading denominator coefficient a[0] is zero")
        size = max(b.size, a.size)
        b = np.pad(b, (0, size - b.size))
        a = np.pad(a, (0, size - a.size))
        if a[0] != 1:
            b = b / a[0]
            a = a / a[0]
        object.__setattr__(self, "b", _frozen_array(b))
        object.__setattr__(self, "a", _frozen_array(a))

    @property
    def order(self) -> int:
        return self.a.size - 1

    def __eq__(self, other):
        if not isinstance(other, TransferFunction):
            return NotImplemented
        return np.array_equal(self.b, other.b) and np.array_equal(self.a, other.a)

    __hash__ = None


@dataclass(frozen=True)
class StateSpaceSystem:
    """Time-invariant state-space filter ``(A, B, C, D)`` of order ``M``.

    The dtype of ``A`` fixes the working precision; ``B`` and ``C`` are
    cast to it and ``D`` is stored as a numpy scalar of the same dtype.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: float

    def __post_init__(self):
        A = np.asarray(self.A)
        if not np.issubdtype(A.dtype, np.floating):
            A = A.astype(float)
        dtype = A.dtype
        B = np.asarray(self.B, dtype=dtype).reshape(-1)
        C = np.asarray(self.C, dtype=dtype).reshape(-1)
        D = np.asarray(self.D, dtype=dtype)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
            raise DimensionError(f"A must be a non-empty square matrix, got shape {A.shape}")
        M = A.shape[0]
        if B.shape != (M,) or C.shape != (M,) or D.shape != ():
            raise DimensionError(
                f"inconsistent shapes for order {M}: B {B.shape}, C {C.shape}, D {D.shape}"
            )
        if not all(np.all(np.isfinite(t)) for t in (A, B, C, D)):
            raise ValueError("state-space entries must be finite")
        object.__setattr__(self, "A", _frozen_array(A))
        object.__setattr__(self, "B", _frozen_array(B))
        object.__setattr__(self, "C", _frozen_array(C))
        object.__setattr__(self, "D", dtype.type(D))

    @property
    def M(self) -> int:
        return self.A.shape[0]

    @property
    def dtype(self) -> np.dtype:
        return self.A.dtype

    def astype(self, dtype) -> StateSpaceSystem:
        dtype = np.dtype(dtype)
        return StateSpaceSystem(self.A.astype(dtype), self.B.astype(dtype), self.C.astype(dtype), dtype.type(self.D))

    def __eq__(self, other):
        if not isinstance(other, StateSpaceSystem):
            return NotImplemented
        return (
            self.A.dtype == other.A.dtype
            and np.array_equal(self.A, other.A)
            and np.array_equal(self.B, other.B)
            and np.array_equal(self.C, other.C)
            and self.D == other.D
        )

    __hash__ = None


@dataclass(frozen=True)
class DiagonalizedSystem:
    """Eigen-decomposition ``A = P diag(eigenvalues) P^-1`` with modal ``B``, ``C``.

    In modal coordinates ``w = P^-1 v`` the recursion decouples into ``M``
    scalar complex recursions ``w(n+1) = eigenvalues * w(n) + B_tilde x(n)``
    and the output is ``y(n) = C_tilde^T w(n) + D x(n)``.
    """

    eigenvalues: np.ndarray
    right_eigenvectors: np.ndarray
    inv_eigenvectors: np.ndarray
    B_tilde: np.ndarray
    C_tilde: np.ndarray
    D: float

    @property
    def M(self) -> int:
        return self.eigenvalues.size

    def reconstruct(self) -> np.ndarray:
        P = self.right_eigenvectors
        return ((P * self.eigenvalues) @ self.inv_eigenvectors).real


@dataclass(frozen=True)
class FilterTape:
    """Forward quantities saved for the backward pass."""

    system: StateSpaceSystem
    states: np.ndarray  # v(0..N), shape (N + 1, M)
    x: np.ndarray

    def __post_init__(self):
        if self.states.shape != (self.x.size + 1, self.system.M):
            raise DimensionError(
                f"trajectory shape {self.states.shape} does not match "
                f"N={self.x.size}, M={self.system.M}"
            )


@dataclass(frozen=True)
class GradientBundle:
    """Gradients of a scalar loss with respect to every filter input."""

    dA: np.ndarray
    dB: np.ndarray
    dC: np.ndarray
    dD: float
    dv0: np.ndarray
    dx: np.ndarray
    dz: np.ndarray | None = field(default=None, repr=False, compare=False)

    def items(self):
        """Yield ``(name, array)`` pairs for the public components."""
        for name in ("dA", "dB", "dC", "dD", "dv0", "dx"):
            yield name, np.asarray(getattr(self, name))


def tf_to_ss(tf: TransferFunction) -> StateSpaceSystem:
    """Direct-form realization of ``tf`` with a first-row companion matrix.

    ``A`` has ``-a[1:]`` on its first row and ones on the first subdiagonal,
    ``B = e_1``, ``C = b[1:] - a[1:] * b[0]`` and ``D = b[0]``.
    """
    M = tf.order
    if M < 1:
        raise InvalidCoefficientsError(
            "order-zero transfer function is a pure gain; use b[0] directly"
        )
    b, a = tf.b, tf.a
    A = np.zeros((M, M))
    A[0, :] = -a[1:]
    A[np.arange(1, M), np.arange(M - 1)] = 1.0
    B = np.zeros(M)
    B[0] = 1.0
    C = b[1:] - a[1:] * b[0]
    return StateSpaceSystem(A, B, C, b[0])


def transpose_system(sys: StateSpaceSystem) -> StateSpaceSystem:
    """Transposed realization ``(A^T, C, B, D)``; same transfer function."""
    return StateSpaceSystem(sys.A.T, sys.C, sys.B, sys.D)


def spectral_radius(sys: StateSpaceSystem) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(sys.A.astype(float)))))


def _eig2(A: np.ndarray):
    """Closed-form eigenpairs of a real 2x2 matrix."""
    (p, q), (r, s) = A
    half_tr = 0.5 * (p + s)
    disc = complex(half_tr * half_tr - (p * s - q * r))
    root = np.sqrt(disc)
    lam = np.array([half_tr + root, half_tr - root])
    if q == 0 and r == 0:
        return np.array([p, s], dtype=complex), np.eye(2, dtype=complex)
    if q != 0:
        P = np.array([[q, q], [lam[0] - p, lam[1] - p]], dtype=complex)
    else:
        P = np.array([[lam[0] - s, lam[1] - s], [r, r]], dtype=complex)
    norms = np.linalg.norm(P, axis=0)
    return lam, P / np.where(norms > 0, norms, 1.0)


def eigendecompose(A: np.ndarray, diag_tol: float = DEFAULT_DIAG_TOL, cond_max: float = DEFAULT_COND_MAX):
    """Return ``(eigenvalues, P, P^-1)`` for ``A`` or raise ``NotDiagonalizableError``."""
    A = np.asarray(A, dtype=float)
    if A.shape == (2, 2):
        lam, P = _eig2(A)
    else:
        lam, P = np.linalg.eig(A)
        lam = lam.astype(complex)
        P = P.astype(complex)
    cond = np.linalg.cond(P)
    if not np.isfinite(cond) or cond > cond_max:
        raise NotDiagonalizableError(
            f"eigenvector matrix condition number {cond:.3g} exceeds {cond_max:.3g} "
            "(repeated or nearly repeated poles)"
        )
    P_inv = np.linalg.inv(P)
    err = np.linalg.norm((P * lam) @ P_inv - A, np.inf)
    if err > diag_tol * np.linalg.norm(A, np.inf):
        raise NotDiagonalizableError(f"reconstruction error {err:.3g} above tolerance")
    return lam, P, P_inv


def diagonalize(
    sys: StateSpaceSystem, diag_tol: float = DEFAULT_DIAG_TOL, cond_max: float = DEFAULT_COND_MAX
) -> DiagonalizedSystem:
    """Modal form of ``sys``.

    Raises ``NotDiagonalizableError`` for defective or ill-conditioned
    ``A``; callers are expected to fall back to a non-diagonal strategy.
    """
    lam, P, P_inv = eigendecompose(sys.A, diag_tol, cond_max)
    ctype = np.result_type(sys.dtype, np.complex64)
    return DiagonalizedSystem(
        eigenvalues=lam.astype(ctype),
        right_eigenvectors=P.astype(ctype),
        inv_eigenvectors=P_inv.astype(ctype),
        B_tilde=(P_inv @ sys.B.astype(float)).astype(ctype),
        C_tilde=(P.T @ sys.C.astype(float)).astype(ctype),
        D=sys.D,
    )
