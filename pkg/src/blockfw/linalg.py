"""Dense symmetric kernels: eigendecomposition, PSD projection and distance, semidefinite Cholesky."""

from __future__ import annotations

import numpy as np

from .errors import DimensionError, NumericError

SYM_TOL = 1e-12
PSD_RTOL = 1e-8


def as_sym(A, tol: float = SYM_TOL) -> np.ndarray:
    """Validate ``A`` as a finite square symmetric matrix and return an exactly symmetric copy.

    Asymmetry up to ``tol * (1 + max|A|)`` is averaged away, anything larger is rejected.
    """
    A = np.array(A, dtype=float, copy=True)
    if A.ndim == 0:
        A = A.reshape(1, 1)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise NumericError("matrix has non-finite entries")
    asym = np.max(np.abs(A - A.T)) if A.size else 0.0
    if asym > tol * (1.0 + np.max(np.abs(A), initial=0.0)):
        raise DimensionError(f"matrix is not symmetric (max asymmetry {asym:.3g})")
    return 0.5 * (A + A.T)


def sym_eig(A) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and orthonormal eigenvectors of a symmetric matrix."""
    A = np.asarray(A, dtype=float)
    if A.shape[0] < 1:
        raise DimensionError("empty matrix")
    if not np.all(np.isfinite(A)):
        raise NumericError("matrix has non-finite entries")
    w, V = np.linalg.eigh(A)
    return w, V


def min_eig(A) -> float:
    A = np.asarray(A, dtype=float)
    if A.size == 0:
        return 0.0
    return float(np.linalg.eigvalsh(A)[0])


def psd_threshold(A, rtol: float = PSD_RTOL) -> float:
    return rtol * (1.0 + np.linalg.norm(A))


def is_psd(A, rtol: float = PSD_RTOL) -> bool:
    """``min eig(A) >= -rtol * (1 + ||A||_F)``."""
    return min_eig(A) >= -psd_threshold(A, rtol)


def project_psd(A) -> np.ndarray:
    """Nearest PSD matrix in Frobenius norm (negative eigenvalues clipped)."""
    w, V = sym_eig(A)
    P = (V * np.maximum(w, 0.0)) @ V.T
    return 0.5 * (P + P.T)


def project_psd_batch(S: np.ndarray) -> np.ndarray:
    """Project a stack ``(g, k, k)`` of symmetric matrices onto the PSD cone."""
    w, V = np.linalg.eigh(S)
    P = (V * np.maximum(w, 0.0)[..., None, :]) @ np.swapaxes(V, -1, -2)
    return 0.5 * (P + np.swapaxes(P, -1, -2))


def dist_psd(A) -> float:
    """Frobenius distance from ``A`` to the PSD cone."""
    w = np.linalg.eigvalsh(np.asarray(A, dtype=float))
    return float(np.sqrt(np.sum(np.minimum(w, 0.0) ** 2)))


def cholesky_psd(A, tol: float = 1e-10) -> np.ndarray | None:
    """Lower-triangular ``F`` with ``F F^T ~= A`` for PSD (possibly singular) ``A``.

    Returns ``None`` when ``A`` has an eigenvalue below ``-tol``. Zero
    pivots give zero columns, so rank-deficient inputs produce exact
    low-rank factors; if round-off defeats that, a diagonal shift of at
    most ``tol`` is used instead.
    """
    A = as_sym(A, tol=max(tol, SYM_TOL))
    n = A.shape[0]
    if n == 0:
        return np.zeros((0, 0))
    lam = min_eig(A)
    if lam < -tol:
        return None
    scale = 1.0 + np.linalg.norm(A)
    try:
        return np.linalg.cholesky(A)
    except np.linalg.LinAlgError:
        pass
    F = _semidefinite_cholesky(A, piv_tol=max(tol, 1e-13) * scale)
    if F is not None and np.linalg.norm(F @ F.T - A) <= tol * scale:
        return F
    shift = max(0.0, -lam)
    while shift <= tol:
        shift = max(2 * shift, 1e-15 * scale)
        try:
            F = np.linalg.cholesky(A + min(shift, tol) * np.eye(n))
        except np.linalg.LinAlgError:
            continue
        if np.linalg.norm(F @ F.T - A) <= tol * scale:
            return F
        break
    return None


def _semidefinite_cholesky(A: np.ndarray, piv_tol: float) -> np.ndarray | None:
    n = A.shape[0]
    R = A.copy()
    F = np.zeros_like(A)
    for k in range(n):
        d = R[k, k]
        if d <= piv_tol:
            if np.max(np.abs(R[k + 1:, k]), initial=0.0) > np.sqrt(piv_tol):
                return None
            continue
        col = R[k:, k] / np.sqrt(d)
        F[k:, k] = col
        R[k:, k:] -= np.outer(col, col)
    return F


def svec_size(k: int) -> int:
    return k * (k + 1) // 2
