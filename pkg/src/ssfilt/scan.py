"""Forward evaluation of the state recursion.

Three interchangeable strategies compute ``v(n+1) = A v(n) + z(n)``:

* ``SEQUENTIAL``: one compiled loop over time.
* ``BLOCKED``: associative scan over contiguous blocks. Each block is
  reduced to a single ``(A^L, end_state)`` element in parallel, the block
  elements are scanned in order, and each block is then re-expanded from
  its incoming state, again in parallel.
* ``DIAGONAL``: the same blocked scan in the eigenbasis of ``A``, where the
  matrix products reduce to element-wise complex products.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _kernels
from .errors import DimensionError
from .model import (
    DiagonalizedSystem,
    FilterTape,
    StateSpaceSystem,
    TransferFunction,
    diagonalize,
    eigendecompose,
    tf_to_ss,
)


class Strategy(str, enum.Enum):
    SEQUENTIAL = "sequential"
    BLOCKED = "blocked-scan"
    DIAGONAL = "diagonal-scan"


@dataclass(frozen=True)
class ScanConfig:
    strategy: Strategy = Strategy.SEQUENTIAL
    workers: int = 1
    block_size: int | None = None  # None: auto

    def __post_init__(self):
        object.__setattr__(self, "strategy", Strategy(self.strategy))
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.block_size is not None and self.block_size < 1:
            raise ValueError("block_size must be positive")

    def resolve_block_size(self, N: int) -> int:
        if self.block_size is not None:
            return self.block_size
        return max(1024, math.ceil(N / (4 * self.workers)))


SEQUENTIAL = ScanConfig()


@dataclass(frozen=True)
class ScanElement:
    """Pair ``(mat, vec)`` standing for the affine map ``v -> mat @ v + vec``."""

    mat: np.ndarray
    vec: np.ndarray

    @classmethod
    def identity(cls, M: int, dtype=float) -> ScanElement:
        return cls(np.eye(M, dtype=dtype), np.zeros(M, dtype=dtype))


def combine(e1: ScanElement, e2: ScanElement) -> ScanElement:
    """Apply ``e1`` then ``e2``: ``(A, z) + (A', z') -> (A' A, A' z + z')``."""
    return ScanElement(e2.mat @ e1.mat, e2.mat @ e1.vec + e2.vec)


@lru_cache(maxsize=None)
def _executor(workers: int) -> ThreadPoolExecutor:
    return ThreadPoolExecutor(max_workers=workers, thread_name_prefix="ssfilt")


def _run_tasks(fn, items, workers):
    if workers == 1 or len(items) == 1:
        return [fn(item) for item in items]
    return list(_executor(workers).map(fn, items))


def _blocked_scan(T, v0, z, out, block, workers, diagonal):
    """Blocked associative scan; ``T`` is a matrix, or eigenvalues if ``diagonal``."""
    N = z.shape[0]
    bounds = [(s, min(s + block, N)) for s in range(0, N, block)]
    if diagonal:
        final, expand = _kernels.diag_final_state, _kernels.diag_scan_into
    else:
        final, expand = _kernels.final_state, _kernels.scan_into
    zero = np.zeros_like(v0)

    # phase 1: per-block summary (T^L, state reached from zero)
    ends = _run_tasks(lambda be: final(T, zero, z[be[0]:be[1]]), bounds, workers)

    # phase 2: exclusive scan of the block summaries, in block order
    starts = [v0]
    for (s, e), end in zip(bounds[:-1], ends[:-1]):
        if diagonal:
            starts.append(T ** (e - s) * starts[-1] + end)
        else:
            starts.append(np.linalg.matrix_power(T, e - s) @ starts[-1] + end)

    # phase 3: re-expand each block from its incoming state
    def expand_block(k):
        s, e = bounds[k]
        expand(T, starts[k], z[s:e], out[s:e])

    _run_tasks(expand_block, list(range(len(bounds))), workers)


def _check_recurrence_args(A, v0, z):
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"A must be square, got shape {A.shape}")
    M = A.shape[0]
    z = np.asarray(z)
    if z.ndim != 2 or z.shape[1] != M or z.shape[0] < 1:
        raise DimensionError(f"z must have shape (N >= 1, {M}), got {z.shape}")
    dtype = np.result_type(A, z, np.float32)
    v0 = np.zeros(M, dtype) if v0 is None else np.asarray(v0, dtype=dtype)
    if v0.shape != (M,):
        raise DimensionError(f"v0 must have shape ({M},), got {v0.shape}")
    return (
        np.ascontiguousarray(A, dtype=dtype),
        np.ascontiguousarray(v0),
        np.ascontiguousarray(z, dtype=dtype),
    )


def recurrence(A, v0, z, cfg: ScanConfig = SEQUENTIAL) -> np.ndarray:
    """States ``v(0..N)`` of ``v(n+1) = A v(n) + z(n)``, shape ``(N + 1, M)``."""
    A, v0, z = _check_recurrence_args(A, v0, z)
    N, M = z.shape
    if cfg.strategy is Strategy.DIAGONAL:
        lam, P, P_inv = eigendecompose(A)
        ctype = np.result_type(A.dtype, np.complex64)
        lam, P, P_inv = lam.astype(ctype), P.astype(ctype), P_inv.astype(ctype)
        w = _modal_scan(lam, P_inv @ v0, z @ P_inv.T, cfg)
        return np.ascontiguousarray((w @ P.T).real, dtype=A.dtype)
    out = np.empty((N + 1, M), dtype=A.dtype)
    out[0] = v0
    if cfg.strategy is Strategy.SEQUENTIAL:
        _kernels.scan_into(A, v0, z, out[1:])
    else:
        _blocked_scan(A, v0, z, out[1:], cfg.resolve_block_size(N), cfg.workers, diagonal=False)
    return out


def recurrence_reverse_time(A, v0, z, cfg: ScanConfig = SEQUENTIAL) -> np.ndarray:
    """Run the recursion backwards in time: ``flip(recurrence(A, v0, flip(z))[1:])``."""
    z = np.asarray(z)
    return recurrence(A, v0, z[::-1], cfg)[:0:-1]


def _modal_scan(lam, w0, u, cfg: ScanConfig) -> np.ndarray:
    N, M = u.shape
    u = np.ascontiguousarray(u)
    w0 = np.ascontiguousarray(w0)
    out = np.empty((N + 1, M), dtype=u.dtype)
    out[0] = w0
    _blocked_scan(lam, w0, u, out[1:], cfg.resolve_block_size(N), cfg.workers, diagonal=True)
    return out


def diagonal_recurrence(dsys: DiagonalizedSystem, v0, x, cfg: ScanConfig = SEQUENTIAL) -> np.ndarray:
    """Modal trajectory ``w(0..N)`` driven by ``x``; ``Re(P w(n))`` equals ``v(n)``."""
    x = _as_signal(x)
    ctype = dsys.eigenvalues.dtype
    v0 = np.zeros(dsys.M) if v0 is None else np.asarray(v0)
    if v0.shape != (dsys.M,):
        raise DimensionError(f"v0 must have shape ({dsys.M},), got {v0.shape}")
    w0 = (dsys.inv_eigenvectors @ v0).astype(ctype)
    u = np.outer(x, dsys.B_tilde).astype(ctype)
    return _modal_scan(dsys.eigenvalues, w0, u, cfg)


def _as_signal(x) -> np.ndarray:
    x = np.asarray(x)
    if x.ndim != 1 or x.size < 1:
        raise DimensionError(f"signal must be 1-D with at least one sample, got shape {x.shape}")
    if not np.issubdtype(x.dtype, np.floating):
        x = x.astype(float)
    return x


def filter_forward(sys: StateSpaceSystem, v0, x, cfg: ScanConfig = SEQUENTIAL):
    """Filter ``x`` through ``sys`` from initial state ``v0``.

    Returns ``(y, tape)``; the tape holds ``v(0..N)`` for ``filter_backward``.
    """
    x = _as_signal(x)
    dtype = np.result_type(sys.dtype, x.dtype)
    if sys.dtype != dtype:
        sys = sys.astype(dtype)
    x = np.ascontiguousarray(x, dtype=dtype)
    if cfg.strategy is Strategy.DIAGONAL:
        dsys = diagonalize(sys)
        w = diagonal_recurrence(dsys, v0, x, cfg)
        y_c = w[:-1] @ dsys.C_tilde
        y = y_c.real.astype(dtype) + sys.D * x
        if __debug__ and np.all(np.isfinite(y_c)):
            ymax = np.max(np.abs(y))
            assert np.max(np.abs(y_c.imag)) <= 1e-3 * ymax + np.finfo(dtype).tiny, (
                "modal output has a non-negligible imaginary part"
            )
        states = np.ascontiguousarray((w @ dsys.right_eigenvectors.T).real, dtype=dtype)
    else:
        z = np.outer(x, sys.B)
        states = recurrence(sys.A, v0, z, cfg)
        y = states[:-1] @ sys.C + sys.D * x
    return y, FilterTape(sys, states, x)


def filter_reverse_time(sys: StateSpaceSystem, v0, x, cfg: ScanConfig = SEQUENTIAL) -> np.ndarray:
    """``flip(filter_forward(sys, v0, flip(x)))``."""
    x = _as_signal(x)
    y, _ = filter_forward(sys, v0, x[::-1], cfg)
    return y[::-1]


def filter_tf(tf: TransferFunction, x, cfg: ScanConfig = SEQUENTIAL, v0=None) -> np.ndarray:
    """Filter through a transfer function in the precision of ``x``.

    Order zero short-circuits to a gain.
    """
    x = _as_signal(x)
    if tf.order == 0:
        if v0 is not None and np.size(v0):
            raise DimensionError("a pure gain has no state")
        return (tf.b[0] * x).astype(x.dtype)
    y, _ = filter_forward(tf_to_ss(tf).astype(x.dtype), v0, x, cfg)
    return y
