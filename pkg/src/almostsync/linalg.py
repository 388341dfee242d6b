"""Dense complex linear algebra used throughout the package.

Matrices are plain ``numpy`` ``complex128`` arrays; nothing here mutates its
inputs.
"""
from typing import Callable, NamedTuple

import numpy as np

from . import _config
from .errors import DimensionMismatch, NonFinite, NonHermitian, NotIsometry, NotNormalized


class HermitianEigensystem(NamedTuple):
    """Eigenvalues sorted non-increasing with matching eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def as_matrix(m) -> np.ndarray:
    m = np.asarray(m, dtype=np.complex128)
    if m.ndim != 2:
        raise DimensionMismatch(f"expected a 2-d matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NonFinite("matrix has NaN or infinite entries")
    return m


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def is_hermitian(h: np.ndarray, tol: float = None) -> bool:
    tol = _config.TOL.hermitian if tol is None else tol
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        return False
    scale = max(1.0, np.linalg.norm(h))
    return np.linalg.norm(h - h.conj().T) <= tol * scale


def check_hermitian(h) -> np.ndarray:
    h = as_matrix(h)
    if h.shape[0] != h.shape[1]:
        raise NonHermitian(f"matrix of shape {h.shape} is not square")
    if not is_hermitian(h):
        raise NonHermitian("matrix fails the Hermitian symmetry check")
    return h


def eigh(h) -> HermitianEigensystem:
    """Hermitian eigendecomposition with eigenvalues sorted non-increasing."""
    h = check_hermitian(h)
    h = 0.5 * (h + h.conj().T)
    w, v = np.linalg.eigh(h)
    return HermitianEigensystem(w[::-1].copy(), v[:, ::-1].copy())


def spectral_map(h, f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Apply the real function ``f`` to ``h`` through its spectral decomposition.

    ``f`` receives the full eigenvalue vector and must return an array of the
    same length.
    """
    w, v = eigh(h)
    fw = np.asarray(f(w), dtype=np.float64)
    if fw.shape != w.shape:
        fw = np.array([float(f(x)) for x in w])
    return (v * fw) @ v.conj().T


def threshold(lam: float) -> Callable[[np.ndarray], np.ndarray]:
    """Indicator of ``[lam, inf)``; closed at the threshold."""
    return lambda w: (np.asarray(w) >= lam).astype(np.float64)


def psd_sqrt(h) -> np.ndarray:
    return spectral_map(h, lambda w: np.sqrt(np.clip(w, 0.0, None)))


def pinv_sqrt(h, tol: float = None) -> np.ndarray:
    """``h^{-1/2}`` on the support of the PSD matrix ``h``, zero on its kernel."""
    tol = _config.TOL.rank if tol is None else tol

    def f(w):
        out = np.zeros_like(w)
        keep = w > tol
        out[keep] = 1.0 / np.sqrt(w[keep])
        return out

    return spectral_map(h, f)


def range_projector(h, tol: float = None) -> np.ndarray:
    """Orthogonal projector onto the span of eigenvectors with eigenvalue above ``tol``."""
    tol = _config.TOL.rank if tol is None else tol
    w, v = eigh(h)
    cols = v[:, w > tol]
    return cols @ cols.conj().T


def _split_keep(keep):
    if keep in (0, "A", "a"):
        return 0
    if keep in (1, "B", "b"):
        return 1
    raise ValueError(f"keep must be 'A' or 'B', got {keep!r}")


def partial_trace(m, dims, keep="A") -> np.ndarray:
    """Reduced operator on one factor of ``C^{d_A} (x) C^{d_B}``.

    ``dims`` is ``(d_A, d_B)``; ``keep`` selects the surviving factor.
    """
    m = as_matrix(m)
    d_a, d_b = (int(d) for d in dims)
    if m.shape != (d_a * d_b, d_a * d_b):
        raise DimensionMismatch(f"operator of shape {m.shape} does not act on {d_a}x{d_b}")
    t = m.reshape(d_a, d_b, d_a, d_b)
    if _split_keep(keep) == 0:
        return np.einsum("ijkj->ik", t)
    return np.einsum("ijil->jl", t)


def reduced_density(psi, d_a: int, d_b: int, keep="A") -> np.ndarray:
    """Reduced density of a pure bipartite state without forming the full projector."""
    psi = np.asarray(psi, dtype=np.complex128).reshape(d_a, d_b)
    if _split_keep(keep) == 0:
        return psi @ psi.conj().T
    return psi.T @ psi.conj()


class Schmidt(NamedTuple):
    coefficients: np.ndarray
    left: np.ndarray   # columns are the A-side vectors
    right: np.ndarray  # columns are the B-side vectors


def schmidt(psi, d_a: int, d_b: int, full: bool = False) -> Schmidt:
    """Schmidt decomposition ``psi = sum_j s_j left_j (x) right_j``.

    Coefficients below the rank tolerance are dropped unless ``full`` is set.
    """
    psi = np.asarray(psi, dtype=np.complex128).ravel()
    if psi.size != d_a * d_b:
        raise DimensionMismatch(f"vector of length {psi.size} is not in C^{d_a} (x) C^{d_b}")
    if abs(np.linalg.norm(psi) - 1.0) > _config.TOL.normalization:
        raise NotNormalized(f"state has norm {np.linalg.norm(psi):.12g}")
    u, s, vh = np.linalg.svd(psi.reshape(d_a, d_b))
    if not full:
        k = max(1, int(np.sum(s > np.sqrt(_config.TOL.rank))))
        u, s, vh = u[:, :k], s[:k], vh[:k]
    return Schmidt(s, u, vh.T)


def check_isometry(v) -> np.ndarray:
    v = as_matrix(v)
    rows, cols = v.shape
    if rows < cols:
        raise NotIsometry(f"shape {v.shape} cannot be an isometry")
    err = np.linalg.norm(v.conj().T @ v - np.eye(cols))
    if err > _config.TOL.unitary:
        raise NotIsometry(f"V^dag V deviates from identity by {err:.3e}")
    return v


def complete_to_unitary(v) -> np.ndarray:
    """Extend an isometry to a unitary whose first columns are ``v``.

    Missing columns come from Gram-Schmidt against the standard basis in index
    order, so the result is deterministic.
    """
    v = check_isometry(v)
    n, k = v.shape
    if k == n:
        return v.copy()
    cols = np.zeros((n, n), dtype=np.complex128)
    cols[:, :k] = v
    filled = k
    for i in range(n):
        if filled == n:
            break
        e = np.zeros(n, dtype=np.complex128)
        e[i] = 1.0
        basis = cols[:, :filled]
        for _ in range(2):
            e = e - basis @ (basis.conj().T @ e)
        norm = np.linalg.norm(e)
        if norm > 1e-6:
            cols[:, filled] = e / norm
            filled += 1
    return cols


def transpose_in_basis(x, basis) -> np.ndarray:
    """Transpose of ``x`` with respect to the orthonormal columns of ``basis``."""
    u = np.asarray(basis, dtype=np.complex128)
    inner = u.conj().T @ np.asarray(x) @ u
    return u @ np.swapaxes(inner, -1, -2) @ u.conj().T


def frobenius(m) -> float:
    return float(np.linalg.norm(m))
