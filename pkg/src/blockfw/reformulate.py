"""Restrict a single-block SDP to FW(alpha, 2) and lift block solutions back.

Replacing ``X >= 0`` by ``X = sum_ij E_ij^T X_ij E_ij`` with ``X_ij >= 0``
gives a program over the pair blocks whose data are the pair truncations
of the original data. Its optimum is an upper bound on the SDP optimum.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import DimensionError, ProgramError
from .partition import Partition, make_partition
from .solver import ConicProgram


@dataclass
class BlockFwProgram(ConicProgram):
    """A ConicProgram whose blocks are the pair blocks ``pairs`` of ``alpha``."""

    alpha: Partition | None = None
    pairs: list = field(default_factory=list)


def _truncate_any(M, idx):
    if sp.issparse(M):
        M = sp.csr_matrix(M)
        return M[idx][:, idx]
    return np.asarray(M)[np.ix_(idx, idx)]


def _is_zero(M):
    return (M.nnz == 0 or abs(M).max() == 0) if sp.issparse(M) else not np.any(M)


def to_block_fw_program(sdp: ConicProgram, alpha, drop_zero: bool = False) -> ConicProgram:
    """Pair-block program for the restriction of ``sdp`` to FW(alpha, 2).

    With ``drop_zero`` the pair blocks on which the objective and every
    constraint vanish are left out (they can be set to zero).
    """
    if len(sdp.block_sizes) != 1:
        raise ProgramError("expected a program with a single PSD block")
    alpha = make_partition(alpha)
    n = sdp.block_sizes[0]
    if alpha.n != n:
        raise DimensionError(f"partition covers {alpha.n}, program block is {n}")
    if alpha.p == 1:
        return sdp
    pairs = list(alpha.pairs)
    C = sdp.objective[0]
    data = []
    for i, j in pairs:
        idx = alpha.pair_indices(i, j)
        Cij = C[np.ix_(idx, idx)]
        Aij = [_truncate_any(blocks[0], idx) if 0 in blocks else None for blocks, _ in sdp.constraints]
        data.append((Cij, Aij))
    keep = list(range(len(pairs)))
    if drop_zero:
        keep = [t for t, (Cij, Aij) in enumerate(data)
                if np.any(Cij) or any(M is not None and not _is_zero(M) for M in Aij)]
    cons = []
    for r, (_, rhs) in enumerate(sdp.constraints):
        blocks = {}
        for pos, t in enumerate(keep):
            M = data[t][1][r]
            if M is not None and not _is_zero(M):
                blocks[pos] = M
        cons.append((blocks, rhs))
    sizes = [alpha.sizes[pairs[t][0]] + alpha.sizes[pairs[t][1]] for t in keep]
    return BlockFwProgram(sizes, [data[t][0] for t in keep], cons, sdp.offset, alpha=alpha,
                          pairs=[pairs[t] for t in keep])


def lift_solution(blocks, alpha, pairs=None, C=None):
    """Recompose pair blocks into ``X``; also returns ``<C, X>`` when ``C`` is given.

    ``pairs`` defaults to all pairs of ``alpha`` in order.
    """
    alpha = make_partition(alpha)
    pairs = list(alpha.pairs) if pairs is None else list(pairs)
    if len(blocks) != len(pairs):
        raise DimensionError(f"{len(blocks)} blocks for {len(pairs)} pairs")
    X = np.zeros((alpha.n, alpha.n))
    for Xb, (i, j) in zip(blocks, pairs):
        idx = alpha.pair_indices(i, j)
        if np.shape(Xb) != (len(idx), len(idx)):
            raise DimensionError(f"block for pair {(i, j)} has shape {np.shape(Xb)}")
        X[np.ix_(idx, idx)] += Xb
    obj = None if C is None else float(np.sum(np.asarray(C) * X))
    return X, obj


@dataclass
class RsocProgram:
    """Variables are ``(a_b, c_b, w_b)`` per block, with ``2 a_b c_b >= w_b^2``, ``a_b, c_b >= 0``.

    ``w_b = sqrt(2) X_b[0, 1]`` so the cone is exactly ``a c >= b^2``.
    The objective and constraints are dense rows over ``3 * nblocks`` variables.
    """

    objective: np.ndarray
    A: np.ndarray
    b: np.ndarray
    offset: float = 0.0

    @property
    def n_cones(self):
        return self.objective.size // 3


def rsoc_reformulate(prog: ConicProgram) -> RsocProgram:
    if any(k != 2 for k in prog.block_sizes):
        raise ProgramError("rotated SOC form needs every block of size 2")
    nb = len(prog.block_sizes)
    r2 = np.sqrt(2.0)

    def row(blocks):
        out = np.zeros(3 * nb)
        for b, M in blocks.items():
            M = M.toarray() if sp.issparse(M) else np.asarray(M)
            out[3 * b:3 * b + 3] = [M[0, 0], M[1, 1], r2 * M[0, 1]]
        return out

    c = row(dict(enumerate(prog.objective)))
    A = np.array([row(bl) for bl, _ in prog.constraints]).reshape(prog.m, 3 * nb)
    return RsocProgram(c, A, prog.b, prog.offset)


def rsoc_point(X):
    """``(a, c, w)`` coordinates of a symmetric 2x2 matrix."""
    X = np.asarray(X, dtype=float)
    return X[0, 0], X[1, 1], np.sqrt(2.0) * X[0, 1]


def in_rsoc(a, c, w, tol: float = 0.0) -> bool:
    return a >= -tol and c >= -tol and 2 * a * c - w * w >= -tol
