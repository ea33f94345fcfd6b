"""Closed-form reverse-mode gradients of the state-space filter.

The adjoint of the recursion is again a recursion, over ``A^T`` and
running backwards in time::

    dz(n) = A^T dz(n+1) + dL/dv(n+1)

so every forward strategy in :mod:`ssfilt.scan` also evaluates the
backward pass. With ``dL/dv(n+1) = dy(n+1) C`` and ``dx(n) = B^T dz(n) +
D dy(n)`` this is the transposed filter ``(A^T, C, B, D)`` run on the
time-reversed upstream gradient.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionError
from .model import FilterTape, GradientBundle
from .scan import SEQUENTIAL, ScanConfig, recurrence_reverse_time


def backward_recurrence(A, dv_inst, cfg: ScanConfig = SEQUENTIAL) -> np.ndarray:
    """Adjoint states ``dz(0..N-1)`` with ``dz(N-1) = dv_inst[N-1]``.

    ``dv_inst[n]`` is the direct gradient reaching ``v(n+1)``.
    """
    A = np.asarray(A)
    dv_inst = np.asarray(dv_inst)
    if dv_inst.ndim != 2 or dv_inst.shape[1:] != A.shape[:1]:
        raise DimensionError(f"dv_inst must have shape (N, {A.shape[0]}), got {dv_inst.shape}")
    return np.ascontiguousarray(recurrence_reverse_time(A.T, None, dv_inst, cfg))


def _blocks(N: int, cfg: ScanConfig):
    block = cfg.resolve_block_size(N)
    return [(s, min(s + block, N)) for s in range(0, N, block)]


def _outer_sum(left, right, bounds):
    """``sum_n left[n] (x) right[n]`` as per-block partials added in block order."""
    total = None
    for s, e in bounds:
        part = left[s:e].T @ right[s:e]
        total = part if total is None else total + part
    return total


def recurrence_vjp(A, v0, z, trajectory, dv, cfg: ScanConfig = SEQUENTIAL):
    """Vector-Jacobian product of ``recurrence(A, v0, z)``.

    ``dv[n]`` is the upstream gradient of ``v(n+1)``; ``z`` only fixes the
    expected shape and may be ``None``. Returns ``(dA, dv0,
    dz)`` where ``dA[i, j] = sum_n dz(n)[i] v(n)[j]`` over ``v(0..N-1)``.
    """
    A = np.asarray(A)
    trajectory = np.asarray(trajectory)
    dv = np.asarray(dv)
    N = dv.shape[0]
    if trajectory.shape != (N + 1, A.shape[0]) or (z is not None and np.shape(z) != dv.shape):
        raise DimensionError(
            f"trajectory {trajectory.shape}, z {np.shape(z)} and dv {dv.shape} are inconsistent"
        )
    dz = backward_recurrence(A, dv, cfg)
    dv0 = A.T @ dz[0]
    dA = _outer_sum(dz, trajectory[:-1], _blocks(N, cfg))
    return dA, dv0, dz


def filter_backward(
    tape: FilterTape, dy, cfg: ScanConfig = SEQUENTIAL, return_adjoint: bool = False
) -> GradientBundle:
    """Gradients of ``L`` given ``dy[n] = dL/dy(n)`` for the taped forward call."""
    sys, states, x = tape.system, tape.states, tape.x
    dy = np.asarray(dy, dtype=x.dtype)
    N = x.size
    if dy.shape != (N,):
        raise DimensionError(f"upstream gradient has shape {dy.shape}, expected ({N},)")
    C = sys.C
    dv = np.zeros((N, sys.M), dtype=x.dtype)
    dv[:-1] = np.outer(dy[1:], C)
    dA, dv0, dz = recurrence_vjp(sys.A, states[0], None, states, dv, cfg)

    bounds = _blocks(N, cfg)
    col_dy = dy[:, None]
    col_x = x[:, None]
    dC = _outer_sum(col_dy, states[:-1], bounds)[0]
    dB = _outer_sum(col_x, dz, bounds)[0]
    dD = _outer_sum(col_dy, col_x, bounds)[0, 0]
    dx = dz @ sys.B + sys.D * dy
    return GradientBundle(
        dA=dA,
        dB=dB,
        dC=dC,
        dD=dD,
        dv0=dv0 + dy[0] * C,
        dx=dx,
        dz=dz if return_adjoint else None,
    )
