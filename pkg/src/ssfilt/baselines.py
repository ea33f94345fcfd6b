"""Reference evaluations the scan engine is compared and benchmarked against.

* ``unrolled_*``: work-efficient (Blelloch) scan built from batched
  matrix products at every tree level.
* ``dispatch_*``: a per-sample loop calling a generic step function,
  paying one Python call per time step.
* ``rtf_forward``: convolution with a truncated impulse response via FFT.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, RtfConfigError
from .grad import _blocks, _outer_sum
from .model import FilterTape, GradientBundle, StateSpaceSystem, TransferFunction, spectral_radius, tf_to_ss
from .scan import SEQUENTIAL, _as_signal, _check_recurrence_args, filter_tf


# -- unrolled matrix-product scan ---------------------------------------------------------


def _combine_batched(mats_l, vecs_l, mats_r, vecs_r):
    # earlier element on the left
    mats = mats_r @ mats_l
    vecs = np.einsum("nij,nj->ni", mats_r, vecs_l) + vecs_r
    return mats, vecs


def unrolled_recurrence(A, v0, z, levels: int | None = None) -> np.ndarray:
    """States ``v(0..N)`` via an exclusive Blelloch scan over ``(A, z(n))`` elements.

    ``levels`` caps the tree depth; the ``ceil(N / 2**levels)`` top-level
    partial sums are then scanned serially. ``None`` unrolls the full tree.
    """
    A, v0, z = _check_recurrence_args(A, v0, z)
    N, M = z.shape
    dtype = A.dtype
    depth = max(1, math.ceil(math.log2(N))) if N > 1 else 0
    levels = depth if levels is None else max(0, min(levels, depth))
    size = 1 << depth
    mats = np.broadcast_to(np.eye(M, dtype=dtype), (size, M, M)).copy()
    vecs = np.zeros((size, M), dtype=dtype)
    mats[:N] = A
    vecs[:N] = z
    elem_mats, elem_vecs = mats.copy(), vecs.copy()

    for d in range(levels):
        half = 1 << d
        right = np.arange(2 * half - 1, size, 2 * half)
        left = right - half
        mats[right], vecs[right] = _combine_batched(mats[left], vecs[left], mats[right], vecs[right])

    # serial exclusive scan over the top-level partial sums
    stride = 1 << levels
    tops = np.arange(stride - 1, size, stride)
    acc_m, acc_v = np.eye(M, dtype=dtype), np.zeros(M, dtype=dtype)
    for t in tops:
        m, v = mats[t].copy(), vecs[t].copy()
        mats[t], vecs[t] = acc_m, acc_v
        acc_m, acc_v = m @ acc_m, m @ acc_v + v

    for d in reversed(range(levels)):
        half = 1 << d
        right = np.arange(2 * half - 1, size, 2 * half)
        left = right - half
        lm, lv = mats[left], vecs[left]
        mats[left], vecs[left] = mats[right], vecs[right]
        mats[right], vecs[right] = _combine_batched(mats[right], vecs[right], lm, lv)

    # inclusive prefix = exclusive prefix followed by the element itself
    pm, pv = _combine_batched(mats[:N], vecs[:N], elem_mats[:N], elem_vecs[:N])
    out = np.empty((N + 1, M), dtype=dtype)
    out[0] = v0
    out[1:] = np.einsum("nij,j->ni", pm, v0) + pv
    return out


def unrolled_forward(sys: StateSpaceSystem, v0, x, levels: int | None = None) -> np.ndarray:
    y, _ = unrolled_filter(sys, v0, x, levels)
    return y


def unrolled_filter(sys: StateSpaceSystem, v0, x, levels: int | None = None):
    x = np.asarray(_as_signal(x), dtype=np.result_type(sys.dtype, x))
    sys = sys.astype(x.dtype)
    states = unrolled_recurrence(sys.A, v0, np.outer(x, sys.B), levels)
    return states[:-1] @ sys.C + sys.D * x, FilterTape(sys, states, x)


# -- per-step dispatch ------------------------------------------------------------------------


def matvec_step(A, v, z):
    return A @ v + z


def dispatch_recurrence(A, v0, z, step=matvec_step) -> np.ndarray:
    """Sequential recursion taking one ``step(A, v, z)`` call per sample."""
    A, v0, z = _check_recurrence_args(A, v0, z)
    out = np.empty((z.shape[0] + 1, z.shape[1]), dtype=A.dtype)
    out[0] = v = v0
    for n in range(z.shape[0]):
        v = step(A, v, z[n])
        out[n + 1] = v
    return out


def dispatch_filter(sys: StateSpaceSystem, v0, x, step=matvec_step):
    x = np.asarray(_as_signal(x), dtype=np.result_type(sys.dtype, x))
    sys = sys.astype(x.dtype)
    states = dispatch_recurrence(sys.A, v0, np.outer(x, sys.B), step)
    return states[:-1] @ sys.C + sys.D * x, FilterTape(sys, states, x)


def _assemble_backward(tape: FilterTape, dy, reverse_recurrence) -> GradientBundle:
    """Gradient bundle with the adjoint recursion evaluated by ``reverse_recurrence``."""
    sys, states, x = tape.system, tape.states, tape.x
    dy = np.asarray(dy, dtype=x.dtype)
    N = x.size
    if dy.shape != (N,):
        raise DimensionError(f"upstream gradient has shape {dy.shape}, expected ({N},)")
    dv = np.zeros((N, sys.M), dtype=x.dtype)
    dv[:-1] = np.outer(dy[1:], sys.C)
    dz = np.ascontiguousarray(reverse_recurrence(sys.A.T, np.zeros(sys.M, x.dtype), dv[::-1])[:0:-1])
    bounds = _blocks(N, SEQUENTIAL)
    return GradientBundle(
        dA=_outer_sum(dz, states[:-1], bounds),
        dB=_outer_sum(x[:, None], dz, bounds)[0],
        dC=_outer_sum(dy[:, None], states[:-1], bounds)[0],
        dD=_outer_sum(dy[:, None], x[:, None], bounds)[0, 0],
        dv0=sys.A.T @ dz[0] + dy[0] * sys.C,
        dx=dz @ sys.B + sys.D * dy,
    )


def unrolled_backward(tape: FilterTape, dy, levels: int | None = None) -> GradientBundle:
    return _assemble_backward(tape, dy, lambda A, v0, z: unrolled_recurrence(A, v0, z, levels))


def dispatch_backward(tape: FilterTape, dy, step=matvec_step) -> GradientBundle:
    return _assemble_backward(tape, dy, lambda A, v0, z: dispatch_recurrence(A, v0, z, step))


# -- frequency sampling ------------------------------------------------------------------------


@dataclass(frozen=True)
class RtfConfig:
    fft_size: int
    ir_length: int

    @classmethod
    def for_length(cls, N: int, ir_length: int | None = None) -> RtfConfig:
        K = min(N, 8192) if ir_length is None else ir_length
        return cls(fft_size=1 << max(0, math.ceil(math.log2(N + K - 1))), ir_length=K)


def impulse_response(tf: TransferFunction, length: int) -> np.ndarray:
    """First ``length`` samples of the response to a unit impulse."""
    if length < 1:
        raise ValueError("length must be >= 1")
    delta = np.zeros(length)
    delta[0] = 1.0
    return filter_tf(tf, delta)


def rtf_forward(tf: TransferFunction, x, cfg: RtfConfig | None = None) -> np.ndarray:
    """Zero-state output approximated by FFT convolution with a truncated impulse response."""
    x = _as_signal(x)
    N = x.size
    cfg = RtfConfig.for_length(N) if cfg is None else cfg
    K = cfg.ir_length
    if K < 1 or K > cfg.fft_size:
        raise RtfConfigError(f"ir_length must lie in [1, fft_size], got {K}")
    if cfg.fft_size < N + K - 1:
        raise RtfConfigError(
            f"fft_size {cfg.fft_size} < N + K - 1 = {N + K - 1}; the convolution would wrap"
        )
    if tf.order >= 1 and spectral_radius(tf_to_ss(tf)) >= 1:
        warnings.warn("denominator is not stable; truncated response error is unbounded", RuntimeWarning)
    h = impulse_response(tf, K).astype(x.dtype)
    ftype = np.result_type(x.dtype, np.float32)
    prod = np.fft.rfft(x, cfg.fft_size) * np.fft.rfft(h, cfg.fft_size)
    return np.fft.irfft(prod, cfg.fft_size)[:N].astype(ftype)
