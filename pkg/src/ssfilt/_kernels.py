"""Compiled inner loops. All kernels release the GIL so blocks can run on threads."""

import numba
import numpy as np


@numba.njit(nogil=True, cache=True)
def scan_into(A, v0, z, out):
    """Write ``v(1..L)`` of ``v(n+1) = A v(n) + z(n)`` into ``out`` (shape ``(L, M)``)."""
    L, M = z.shape
    prev = v0.copy()
    for n in range(L):
        for i in range(M):
            acc = z[n, i]
            for j in range(M):
                acc += A[i, j] * prev[j]
            out[n, i] = acc
        for i in range(M):
            prev[i] = out[n, i]


@numba.njit(nogil=True, cache=True)
def final_state(A, v0, z):
    """Last state ``v(L)`` of the same recursion without storing the trajectory."""
    L, M = z.shape
    prev = v0.copy()
    cur = np.empty_like(prev)
    for n in range(L):
        for i in range(M):
            acc = z[n, i]
            for j in range(M):
                acc += A[i, j] * prev[j]
            cur[i] = acc
        prev, cur = cur, prev
    return prev


@numba.njit(nogil=True, cache=True)
def diag_scan_into(lam, w0, u, out):
    """Element-wise recursion ``w(n+1) = lam * w(n) + u(n)``; writes ``w(1..L)``."""
    L, M = u.shape
    for i in range(M):
        prev = w0[i]
        li = lam[i]
        for n in range(L):
            prev = li * prev + u[n, i]
            out[n, i] = prev


@numba.njit(nogil=True, cache=True)
def diag_final_state(lam, w0, u):
    L, M = u.shape
    res = w0.copy()
    for i in range(M):
        prev = w0[i]
        li = lam[i]
        for n in range(L):
            prev = li * prev + u[n, i]
        res[i] = prev
    return res
