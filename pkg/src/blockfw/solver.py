"""ADMM for standard-primal conic programs over a product of PSD blocks.

    min  sum_b <C_b, X_b> + offset
    s.t. sum_b <A_ib, X_b> = b_i,   X_b >= 0

Matrices are handled in svec coordinates (upper triangle, off-diagonals
scaled by sqrt(2)) so the trace inner product becomes the dot product.
The iteration alternates an exact projection onto the affine set with a
projection onto the cone, with over-relaxation and an adaptive penalty.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .errors import NumericError, ProgramError
from .linalg import project_psd_batch

SQRT2 = np.sqrt(2.0)


@dataclass
class ConicProgram:
    """``constraints`` is a list of ``(blocks, rhs)`` with ``blocks`` a dict block index -> matrix.

    Missing blocks are zero. Matrices may be dense arrays or scipy sparse.
    ``offset`` is a constant added to the objective.
    """

    block_sizes: list
    objective: list
    constraints: list = field(default_factory=list)
    offset: float = 0.0

    def __post_init__(self):
        self.block_sizes = [int(k) for k in self.block_sizes]
        if any(k < 1 for k in self.block_sizes):
            raise ProgramError("block sizes must be positive")
        if len(self.objective) != len(self.block_sizes):
            raise ProgramError(f"{len(self.objective)} objective blocks for {len(self.block_sizes)} cone blocks")
        self.objective = [_dense_sym(C, k, "objective") for C, k in zip(self.objective, self.block_sizes)]
        checked = []
        for i, (blocks, rhs) in enumerate(self.constraints):
            out = {}
            for b, M in blocks.items():
                if not 0 <= b < len(self.block_sizes):
                    raise ProgramError(f"constraint {i} refers to block {b}")
                k = self.block_sizes[b]
                if M.shape != (k, k):
                    raise ProgramError(f"constraint {i}, block {b}: shape {M.shape}, expected {(k, k)}")
                if sp.issparse(M):
                    M = sp.csr_matrix(M)
                    if abs(M - M.T).max() > 1e-12 * (1 + abs(M).max()):
                        raise ProgramError(f"constraint {i}, block {b} is not symmetric")
                else:
                    M = _dense_sym(M, k, f"constraint {i}")
                out[b] = M
            rhs = float(rhs)
            if not np.isfinite(rhs):
                raise ProgramError(f"constraint {i} has a non-finite right-hand side")
            checked.append((out, rhs))
        self.constraints = checked

    @property
    def m(self) -> int:
        return len(self.constraints)

    @property
    def b(self) -> np.ndarray:
        return np.array([rhs for _, rhs in self.constraints], dtype=float)


def _dense_sym(M, k, what):
    M = M.toarray() if sp.issparse(M) else np.asarray(M, dtype=float)
    if M.shape != (k, k):
        raise ProgramError(f"{what}: shape {M.shape}, expected {(k, k)}")
    if not np.all(np.isfinite(M)):
        raise ProgramError(f"{what}: non-finite entries")
    if np.max(np.abs(M - M.T), initial=0.0) > 1e-12 * (1 + np.max(np.abs(M), initial=0.0)):
        raise ProgramError(f"{what}: matrix is not symmetric")
    return 0.5 * (M + M.T)


@dataclass
class Solution:
    status: str  # optimal | infeasible_evidence | unbounded_evidence | max_iters
    X: list
    y: np.ndarray
    objective: float
    primal_residual: float
    dual_residual: float
    iterations: int
    dual_objective: float = np.nan
    certificate: object = None

    @property
    def gap(self):
        return abs(self.objective - self.dual_objective)


class _Layout:
    """Map between per-block symmetric matrices and one svec vector."""

    def __init__(self, sizes):
        self.sizes = list(sizes)
        lens = [k * (k + 1) // 2 for k in self.sizes]
        self.offsets = np.concatenate([[0], np.cumsum(lens)]).astype(int)
        self.dim = int(self.offsets[-1])
        self.groups = {}
        for b, k in enumerate(self.sizes):
            self.groups.setdefault(k, []).append(b)
        self.gather = {}
        for k, bs in self.groups.items():
            L = k * (k + 1) // 2
            self.gather[k] = np.stack([np.arange(self.offsets[b], self.offsets[b] + L) for b in bs])
        self._tri = {k: np.triu_indices(k) for k in self.groups}
        self._w = {k: np.where(self._tri[k][0] == self._tri[k][1], 1.0, SQRT2) for k in self.groups}

    def svec(self, mats):
        x = np.empty(self.dim)
        for b, M in enumerate(mats):
            k = self.sizes[b]
            iu = self._tri[k]
            x[self.offsets[b]:self.offsets[b + 1]] = np.asarray(M)[iu] * self._w[k]
        return x

    def smat(self, x):
        out = [None] * len(self.sizes)
        for k, bs in self.groups.items():
            S = self._smat_group(x[self.gather[k]], k)
            for t, b in enumerate(bs):
                out[b] = S[t]
        return out

    def _smat_group(self, V, k):
        iu = self._tri[k]
        S = np.zeros((V.shape[0], k, k))
        vals = V / self._w[k]
        S[:, iu[0], iu[1]] = vals
        S[:, iu[1], iu[0]] = vals
        return S

    def project(self, x):
        """Projection onto the product of PSD cones."""
        out = np.empty_like(x)
        for k, bs in self.groups.items():
            idx = self.gather[k]
            if k == 1:
                out[idx] = np.maximum(x[idx], 0.0)
                continue
            P = project_psd_batch(self._smat_group(x[idx], k))
            iu = self._tri[k]
            out[idx] = P[:, iu[0], iu[1]] * self._w[k]
        return out

    def dist(self, x):
        return float(np.linalg.norm(x - self.project(x)))

    def block_scale(self, d_blocks):
        """Per-coordinate vector holding the scalar of each block."""
        return np.repeat(d_blocks, np.diff(self.offsets))


def _assemble(prog: ConicProgram, lay: _Layout):
    rows, cols, vals = [], [], []
    for i, (blocks, _) in enumerate(prog.constraints):
        for b, M in blocks.items():
            k = prog.block_sizes[b]
            if sp.issparse(M):
                T = sp.triu(M).tocoo()
                r, c, v = T.row, T.col, T.data
            else:
                r, c = np.triu_indices(k)
                v = M[r, c]
                keep = v != 0
                r, c, v = r[keep], c[keep], v[keep]
            pos = r * k - r * (r - 1) // 2 + (c - r)
            rows.append(np.full(len(v), i))
            cols.append(lay.offsets[b] + pos)
            vals.append(np.where(r == c, v, v * SQRT2))
    if rows:
        A = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(prog.m, lay.dim))
    else:
        A = sp.csr_matrix((prog.m, lay.dim))
    c = lay.svec(prog.objective)
    return A, c


class _AffineProjector:
    """Projection onto ``{x : A x = b}`` with a cached factorisation of ``A A^T``."""

    def __init__(self, A):
        self.A = A
        G = (A @ A.T).toarray() if sp.issparse(A) else A @ A.T
        self.m = G.shape[0]
        self.chol = None
        self.pinv = None
        if self.m == 0:
            return
        try:
            self.chol = sla.cho_factor(G)
            # reject numerically singular Gram matrices
            d = np.diag(self.chol[0])
            if np.min(np.abs(d)) ** 2 < 1e-12 * np.max(np.abs(d)) ** 2:
                raise np.linalg.LinAlgError
        except (np.linalg.LinAlgError, ValueError):
            self.chol = None
            w, V = np.linalg.eigh(G)
            keep = w > 1e-10 * max(w[-1], 1e-300)
            self.pinv = (V[:, keep] / w[keep]) @ V[:, keep].T
            self.range_basis = V[:, keep]

    def solve(self, r):
        if self.m == 0:
            return np.zeros(0)
        if self.chol is not None:
            return sla.cho_solve(self.chol, r)
        return self.pinv @ r

    def inconsistency(self, b):
        """Component of ``b`` outside the range of ``A`` (zero when ``A`` has full row rank)."""
        if self.chol is not None or self.m == 0:
            return np.zeros_like(b)
        return b - self.range_basis @ (self.range_basis.T @ b)


def _ruiz(A, lay: _Layout, iters=15):
    """Row scaling ``E`` and per-block scalar column scaling ``D``."""
    m = A.shape[0]
    E = np.ones(m)
    D = np.ones(len(lay.sizes))
    if m == 0 or A.nnz == 0:
        return E, D
    blk_of_col = np.repeat(np.arange(len(lay.sizes)), np.diff(lay.offsets))
    M = abs(A).tocsr().astype(float)
    for _ in range(iters):
        S = sp.diags(E) @ M @ sp.diags(lay.block_scale(D))
        rn = np.asarray(S.max(axis=1).toarray()).ravel()
        cn_col = np.asarray(S.max(axis=0).toarray()).ravel()
        cn = np.zeros(len(lay.sizes))
        np.maximum.at(cn, blk_of_col, cn_col)
        rn[rn == 0] = 1.0
        cn[cn == 0] = 1.0
        E /= np.sqrt(rn)
        D /= np.sqrt(cn)
        if np.max(np.abs(rn - 1)) < 1e-3 and np.max(np.abs(cn - 1)) < 1e-3:
            break
    return E, D


def residuals(prog: ConicProgram, X, y):
    """Primal residual ``||A(X) - b||``, dual residual ``dist_K(C - A^T y)`` and objective."""
    lay = _Layout(prog.block_sizes)
    if len(X) != len(prog.block_sizes) or any(np.shape(Xb) != (k, k) for Xb, k in zip(X, prog.block_sizes)):
        raise ProgramError("candidate blocks do not match the program")
    y = np.asarray(y, dtype=float)
    if y.shape != (prog.m,):
        raise ProgramError(f"expected {prog.m} multipliers, got {y.shape}")
    A, c = _assemble(prog, lay)
    x = lay.svec([0.5 * (np.asarray(Xb) + np.asarray(Xb).T) for Xb in X])
    rp = float(np.linalg.norm(A @ x - prog.b))
    rd = lay.dist(c - A.T @ y)
    return rp, rd, float(c @ x) + prog.offset


def solve(prog: ConicProgram, eps_abs: float = 1e-6, eps_rel: float = 1e-6, max_iters: int = 50000,
          rho: float = 1.0, relax: float = 1.6, verbose: bool = False,
          rho_step: float = 5.0, rho_min: float = 1e-4, rho_max: float = 1e4) -> Solution:
    lay = _Layout(prog.block_sizes)
    A0, c0 = _assemble(prog, lay)
    b0 = prog.b
    m = prog.m

    E, D = _ruiz(A0, lay)
    Dv = lay.block_scale(D)
    A = sp.diags(E) @ A0 @ sp.diags(Dv)
    A = sp.csr_matrix(A)
    b1 = E * b0
    c1 = Dv * c0
    sb = 1.0 / max(1.0, np.linalg.norm(b1))
    sc = 1.0 / max(1.0, np.linalg.norm(c1))
    b = sb * b1
    c = sc * c1

    proj = _AffineProjector(A)
    miss = proj.inconsistency(b)
    if np.linalg.norm(miss) > 1e-9 * (1 + np.linalg.norm(b)):
        # b is not in the range of A: d = miss gives A^T d = 0, b^T d > 0
        d = E * miss
        return Solution("infeasible_evidence", lay.smat(np.zeros(lay.dim)), np.zeros(m), np.nan,
                        float(np.linalg.norm(miss) / sb), np.nan, 0, certificate=d / np.linalg.norm(d))

    def unscale(z, y_s):
        x = Dv * z / sb
        y = E * y_s / sc
        return x, y

    def check(z, y_s):
        x, y = unscale(z, y_s)
        Ax = A0 @ x
        ATy = A0.T @ y
        rp = np.linalg.norm(Ax - b0)
        s = c0 - ATy
        rd = lay.dist(s)
        pobj = c0 @ x
        dobj = b0 @ y
        ok_p = rp <= eps_abs + eps_rel * max(np.linalg.norm(b0), np.linalg.norm(Ax))
        ok_d = rd <= eps_abs + eps_rel * max(np.linalg.norm(c0), np.linalg.norm(ATy))
        ok_g = abs(pobj - dobj) <= eps_abs + eps_rel * max(abs(pobj), abs(dobj), 1.0)
        return ok_p and ok_d and ok_g, x, y, rp, rd, pobj, dobj

    z = np.zeros(lay.dim)
    u = np.zeros(lay.dim)
    y_s = np.zeros(m)
    hist_y, hist_z = [], []
    status = "max_iters"
    it = 0
    for it in range(1, max_iters + 1):
        v = z - u - c / rho
        lam = proj.solve(A @ v - b)
        x = v - A.T @ lam
        y_s = -rho * lam
        xh = relax * x + (1 - relax) * z
        z_old = z
        z = lay.project(xh + u)
        u = u + xh - z
        if not np.all(np.isfinite(z)):
            raise NumericError("iterates overflowed")

        if it % 10 == 0:
            done, *rest = check(z, y_s)
            if done:
                status = "optimal"
                break
        if it % 50 == 0:
            # adaptive penalty from the balance of scaled primal and dual residuals
            Az = A @ z
            s_s = -rho * u
            ATy = A.T @ y_s
            rp_s = np.linalg.norm(Az - b) / (1.0 + max(np.linalg.norm(b), np.linalg.norm(Az)))
            rd_s = np.linalg.norm(c - ATy - s_s) / (1.0 + max(np.linalg.norm(c), np.linalg.norm(ATy), np.linalg.norm(s_s)))
            ratio = np.sqrt((rp_s + 1e-15) / (rd_s + 1e-15))
            if ratio > rho_step or ratio < 1 / rho_step:
                new_rho = float(np.clip(rho * ratio, rho_min, rho_max))
                if new_rho != rho:
                    u *= rho / new_rho
                    rho = new_rho
            hist_y.append(y_s.copy())
            hist_z.append(z.copy())
            if verbose:
                print(it, rho, rp_s, rd_s)
            if it >= 1000 and len(hist_y) >= 2:
                ev = _evidence(A0, c0, b0, lay, E, Dv, sb, sc, hist_y[-1] - hist_y[-2], hist_z[-1] - hist_z[-2])
                if ev is not None:
                    kind, cert = ev
                    x, y = unscale(z, y_s)
                    rp, rd, pobj = residuals_from(A0, b0, c0, lay, x, y)
                    return Solution(kind, lay.smat(x), y, float(pobj) + prog.offset, rp, rd, it,
                                    float(b0 @ y) + prog.offset, cert)
    _, x, y, rp, rd, pobj, dobj = check(z, y_s)
    X = lay.smat(x)
    return Solution(status, X, y, float(pobj) + prog.offset, float(rp), float(rd), it, float(dobj) + prog.offset)


def residuals_from(A0, b0, c0, lay, x, y):
    return float(np.linalg.norm(A0 @ x - b0)), lay.dist(c0 - A0.T @ y), float(c0 @ x)


def _evidence(A0, c0, b0, lay, E, Dv, sb, sc, dy_s, dz, eps=1e-5):
    """Infeasibility / unboundedness certificates from iterate differences."""
    if np.linalg.norm(dy_s) > 0:
        d = E * dy_s
        d /= np.linalg.norm(d)
        bd = b0 @ d
        if bd > 0:
            ATd = A0.T @ d
            if lay.dist(-ATd) <= eps * bd:
                return "infeasible_evidence", d
    if np.linalg.norm(dz) > 0:
        w = Dv * dz
        w /= np.linalg.norm(w)
        cw = c0 @ w
        if cw < 0:
            if np.linalg.norm(A0 @ w) <= eps * -cw and lay.dist(w) <= eps * -cw:
                return "unbounded_evidence", lay.smat(w)
    return None
