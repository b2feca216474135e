"""How far the dual cone of FW(alpha, 2) can stick out of FW(alpha, 2) and the PSD cone."""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .cone import dual_membership
from .errors import BlockFWError, PartitionError
from .linalg import as_sym
from .partition import Partition, make_partition


def upper_bound_dist(p: int) -> Fraction:
    """``(p - 2) / p``: distance from any unit dual-cone matrix to FW(alpha, 2)."""
    if p < 2:
        raise PartitionError("need at least two blocks")
    return Fraction(p - 2, p)


def lower_bound_dist(n: int, p: int) -> float:
    """Distance to the PSD cone achieved by the worst unit dual-cone matrix (homogeneous partitions)."""
    if p < 2:
        raise PartitionError("need at least two blocks")
    return float(Fraction(p - 2, p)) / np.sqrt(4 * n / p**2 - 4 / p + 1)


def g_matrix(a: float, b: float, n: int) -> np.ndarray:
    """``(a + b) I - a * ones``; eigenvalues ``b - (n-1) a`` once and ``a + b`` otherwise."""
    return (a + b) * np.eye(n) - a * np.ones((n, n))


def worst_case_witness(n: int, p: int):
    """Unit-norm ``G(a, b, n)`` in the dual cone for blocks of size ``n/p``, and its distance to PSD."""
    if p < 2 or n % p:
        raise PartitionError(f"need a homogeneous partition with p >= 2, got n={n}, p={p}")
    amax = 2 * n / p
    a = 1.0 / np.sqrt((amax - 1) ** 2 * n + n * (n - 1))
    b = (amax - 1) * a
    return g_matrix(a, b, n), (n - amax) * a


def dual_hat(M, alpha):
    """Sum of the lifted pair submatrices of ``M`` and the residual ``||M - (2/p) M_hat||_F``.

    ``M`` is normalised to unit norm first. Each summand is PSD when ``M``
    is in the dual cone, so ``(2/p) M_hat`` lies in FW(alpha, 2) and the
    residual bounds the distance from ``M`` to it.
    """
    M = as_sym(M)
    alpha = make_partition(alpha)
    ok, _, _ = dual_membership(M, alpha)
    if not ok:
        raise BlockFWError("matrix is not in the dual cone")
    M = M / np.linalg.norm(M)
    p = alpha.p
    H = np.zeros_like(M)
    for i, j in alpha.pairs:
        idx = alpha.pair_indices(i, j)
        H[np.ix_(idx, idx)] += M[np.ix_(idx, idx)]
    return H, float(np.linalg.norm(M - (2.0 / p) * H))


def homogeneous_partition(n: int, p: int) -> Partition:
    if n % p:
        raise PartitionError(f"{p} does not divide {n}")
    return Partition((n // p,) * p)
