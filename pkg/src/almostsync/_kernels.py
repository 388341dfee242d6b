"""Hot inner loops, compiled with numba when available.

Set ``ALMOSTSYNC_DISABLE_NUMBA=1`` to force the pure-numpy path. Both paths
are always importable as ``*_numba`` / ``*_numpy`` so tests and the benchmark
can compare them directly.
"""
import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and os.environ.get("ALMOSTSYNC_DISABLE_NUMBA", "") not in ("1", "true", "yes")
# Above this many multiply-adds the BLAS product beats the compiled loop.
CORRELATION_JIT_LIMIT = 1 << 15


def correlation_tensor_numpy(left, right):
    """Return ``out[x, y, a, b] = sum_ij left[x, a, i, j] * right[y, b, i, j]``.

    Real and imaginary parts are returned separately.
    """
    nx, na, n, _ = left.shape
    ny, nb = right.shape[:2]
    flat = left.reshape(nx * na, n * n) @ right.reshape(ny * nb, n * n).T
    full = flat.reshape(nx, na, ny, nb).transpose(0, 2, 1, 3)
    return np.ascontiguousarray(full.real), np.ascontiguousarray(full.imag)


def prefix_block_sums_numpy(w):
    """``out[r, s] = w[:r, :s].sum()`` for all ``r <= n``, ``s <= m``."""
    n, m = w.shape
    out = np.zeros((n + 1, m + 1))
    out[1:, 1:] = np.cumsum(np.cumsum(w, axis=0), axis=1)
    return out


if HAVE_NUMBA:

    @numba.njit(cache=True)
    def correlation_tensor_numba(left, right):
        nx, na, n, _ = left.shape
        ny, nb = right.shape[0], right.shape[1]
        re = np.zeros((nx, ny, na, nb))
        im = np.zeros((nx, ny, na, nb))
        for x in range(nx):
            for a in range(na):
                for y in range(ny):
                    for b in range(nb):
                        sr = 0.0
                        si = 0.0
                        for i in range(n):
                            for j in range(n):
                                p = left[x, a, i, j] * right[y, b, i, j]
                                sr += p.real
                                si += p.imag
                        re[x, y, a, b] = sr
                        im[x, y, a, b] = si
        return re, im

    @numba.njit(cache=True)
    def prefix_block_sums_numba(w):
        n, m = w.shape
        out = np.zeros((n + 1, m + 1))
        for r in range(n):
            row = 0.0
            for s in range(m):
                row += w[r, s]
                out[r + 1, s + 1] = out[r, s + 1] + row
        return out

else:  # pragma: no cover
    correlation_tensor_numba = correlation_tensor_numpy
    prefix_block_sums_numba = prefix_block_sums_numpy


def correlation_tensor(left, right):
    left = np.ascontiguousarray(left, dtype=np.complex128)
    right = np.ascontiguousarray(right, dtype=np.complex128)
    work = left.shape[0] * left.shape[1] * right.shape[0] * right.shape[1] * left.shape[2] ** 2
    if USE_NUMBA and work <= CORRELATION_JIT_LIMIT:
        return correlation_tensor_numba(left, right)
    return correlation_tensor_numpy(left, right)


def prefix_block_sums(w):
    w = np.ascontiguousarray(w, dtype=np.float64)
    if USE_NUMBA:
        return prefix_block_sums_numba(w)
    return prefix_block_sums_numpy(w)


def backend():
    return "numba" if USE_NUMBA else "numpy"
