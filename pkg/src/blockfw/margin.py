"""Largest diagonal margin of a block dominance certificate, by a log-barrier method.

Solves

    max t  s.t.  [[Z_ij, A_ij], [A_ji, Z_ji]] >= 0        (i < j)
                 A_ii - sum_{j != i} Z_ij - t I >= 0

whose optimum is nonnegative exactly when ``A`` lies in FW(alpha, 2). Any
strictly feasible point with ``t > 0`` is already a membership
certificate, and the barrier multipliers give a dual-cone separator when
the optimum is negative, so the iteration can stop early either way.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .partition import Partition


@dataclass
class MarginResult:
    status: str  # "positive" | "negative" | "boundary"
    t: float
    t_upper: float
    z_blocks: dict
    separator: np.ndarray | None
    newton_steps: int


def _sym_basis(k):
    """Symmetric unit matrices spanning S^k, in upper-triangular order."""
    out = []
    for a in range(k):
        for b in range(a, k):
            E = np.zeros((k, k))
            E[a, b] = E[b, a] = 1.0
            out.append(E)
    return out


class _Constraint:
    """An affine matrix inequality ``F0 + sum_a v[idx[a]] B[a] >= 0``."""

    def __init__(self, F0, idx, B):
        self.F0 = F0
        self.idx = np.asarray(idx, dtype=int)
        self.B = np.asarray(B)
        self.size = F0.shape[0]

    def value(self, v):
        return self.F0 + np.einsum("a,ars->rs", v[self.idx], self.B)


def _build(A, alpha):
    p = alpha.p
    nvar = 0
    var = {}
    for i in range(p):
        for j in range(p):
            if i != j:
                k = alpha.sizes[i]
                var[i, j] = np.arange(nvar, nvar + k * (k + 1) // 2)
                nvar += k * (k + 1) // 2
    t_idx = nvar
    nvar += 1
    bases = {k: _sym_basis(k) for k in set(alpha.sizes)}

    def blk(i, j):
        bi, bj = alpha.block(i), alpha.block(j)
        return A[bi.start:bi.stop, bj.start:bj.stop]

    cons = []
    for i, j in alpha.pairs:
        ki, kj = alpha.sizes[i], alpha.sizes[j]
        s = ki + kj
        F0 = np.zeros((s, s))
        F0[:ki, ki:] = blk(i, j)
        F0[ki:, :ki] = blk(i, j).T
        B, idx = [], []
        for a, E in enumerate(bases[ki]):
            M = np.zeros((s, s))
            M[:ki, :ki] = E
            B.append(M)
            idx.append(var[i, j][a])
        for a, E in enumerate(bases[kj]):
            M = np.zeros((s, s))
            M[ki:, ki:] = E
            B.append(M)
            idx.append(var[j, i][a])
        cons.append(_Constraint(F0, idx, B))
    for i in range(p):
        k = alpha.sizes[i]
        B, idx = [], []
        for j in range(p):
            if j != i:
                for a, E in enumerate(bases[k]):
                    B.append(-E)
                    idx.append(var[i, j][a])
        B.append(-np.eye(k))
        idx.append(t_idx)
        cons.append(_Constraint(blk(i, i).copy(), idx, B))
    return cons, var, t_idx, nvar


def _barrier(cons, v, need_derivs=True):
    """Value, gradient and Hessian of ``-sum logdet F_c(v)``; ``None`` outside the domain."""
    n = v.size
    val = 0.0
    g = np.zeros(n) if need_derivs else None
    H = np.zeros((n, n)) if need_derivs else None
    facts = []
    for c in cons:
        F = c.value(v)
        try:
            L = np.linalg.cholesky(F)
        except np.linalg.LinAlgError:
            return None
        val -= 2.0 * np.sum(np.log(np.diag(L)))
        facts.append(L)
        if need_derivs:
            Li = np.linalg.inv(L)
            G = np.einsum("rs,ast,ut->aru", Li, c.B, Li).reshape(len(c.idx), -1)
            np.add.at(g, c.idx, -np.trace(G.reshape(len(c.idx), c.size, c.size), axis1=1, axis2=2))
            H[np.ix_(c.idx, c.idx)] += G @ G.T
    return val, g, H, facts


def _separator(cons, v, alpha):
    """Matrix assembled from the barrier multipliers ``F_c^{-1}``."""
    n = alpha.n
    Y = np.zeros((n, n))
    npairs = len(alpha.pairs)
    for c, (i, j) in zip(cons[:npairs], alpha.pairs):
        W = np.linalg.inv(c.value(v))
        bi, bj = alpha.block(i), alpha.block(j)
        ki = alpha.sizes[i]
        Y[bi.start:bi.stop, bj.start:bj.stop] = W[:ki, ki:]
        Y[bj.start:bj.stop, bi.start:bi.stop] = W[ki:, :ki]
    for c, i in zip(cons[npairs:], range(alpha.p)):
        b = alpha.block(i)
        Y[b.start:b.stop, b.start:b.stop] = np.linalg.inv(c.value(v))
    return 0.5 * (Y + Y.T)


def _z_from(v, var, alpha):
    z = {}
    for (i, j), idx in var.items():
        k = alpha.sizes[i]
        Z = np.zeros((k, k))
        Z[np.triu_indices(k)] = v[idx]
        z[i, j] = Z + np.triu(Z, 1).T
    return z


def max_margin(A, alpha: Partition, eps: float = 1e-9, max_newton: int = 2000, is_separator=None):
    """Run the barrier method on the margin problem for ``A`` (assumed scaled to unit norm).

    Stops as soon as a strictly feasible ``t > 0`` is found ("positive"),
    as soon as ``is_separator`` accepts the multiplier matrix ("negative"),
    or when the duality gap drops below ``eps`` ("boundary").
    """
    cons, var, t_idx, nvar = _build(A, alpha)
    theta = sum(c.size for c in cons)
    v = np.zeros(nvar)
    s = 1.0 + max((np.linalg.norm(c.F0, 2) for c in cons[:len(alpha.pairs)]), default=0.0)
    for idx in var.values():
        k = int(round((np.sqrt(8 * len(idx) + 1) - 1) / 2))
        diag_pos = [a * k - a * (a - 1) // 2 for a in range(k)]
        v[idx[diag_pos]] = s
    v[t_idx] = 0.0
    t0 = min(np.linalg.eigvalsh(c.value(v))[0] for c in cons[len(alpha.pairs):])
    v[t_idx] = t0 - 1.0

    tau = max(1.0, theta / (abs(t0) + 1.0))
    steps = 0
    while steps < max_newton:
        # centre for the current tau
        for _ in range(100):
            val, g, H, _ = _barrier(cons, v)
            g[t_idx] -= tau
            H[np.diag_indices_from(H)] += 1e-14 * (1 + np.max(np.abs(np.diag(H))))
            try:
                dv = -np.linalg.solve(H, g)
            except np.linalg.LinAlgError:
                dv = -np.linalg.lstsq(H, g, rcond=None)[0]
            dec2 = -g @ dv
            steps += 1
            phi = val - tau * v[t_idx]
            step = 1.0
            while step > 1e-12:
                trial = v + step * dv
                r = _barrier(cons, trial, need_derivs=False)
                if r is not None and r[0] - tau * trial[t_idx] <= phi - 0.25 * step * dec2:
                    break
                step *= 0.5
            else:
                break
            v = trial
            if v[t_idx] > 0:
                return MarginResult("positive", float(v[t_idx]), np.inf, _z_from(v, var, alpha), None, steps)
            if dec2 / 2 <= 1e-10 or steps >= max_newton:
                break
        t = float(v[t_idx])
        t_upper = t + theta / tau
        if is_separator is not None:
            Y = _separator(cons, v, alpha)
            if is_separator(Y):
                return MarginResult("negative", t, t_upper, _z_from(v, var, alpha), Y, steps)
        if theta / tau <= eps:
            return MarginResult("boundary", t, t_upper, _z_from(v, var, alpha), None, steps)
        tau *= 8.0
    t = float(v[t_idx])
    return MarginResult("boundary", t, t + theta / tau, _z_from(v, var, alpha), None, steps)
