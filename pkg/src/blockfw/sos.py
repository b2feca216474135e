"""Sum-of-squares programs over the PSD cone and over FW(alpha, 2).

A polynomial ``p`` of degree ``2d`` is SOS when ``p = v^T Q v`` for a PSD
Gram matrix ``Q`` over the monomial vector ``v = v_d(x)``. Requiring
``Q`` in FW(alpha, 2) instead gives the alpha-SDSOS restriction; the
trivial partition gives SDSOS and a two-block partition gives SOS again.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations_with_replacement
from math import comb

import numpy as np

from .errors import BlockFWError, DimensionError
from .linalg import cholesky_psd
from .partition import Partition, make_partition
from .reformulate import to_block_fw_program
from .solver import ConicProgram


class PolynomialForm:
    """Multivariate polynomial stored as exponent tuple -> coefficient."""

    def __init__(self, n_vars: int, terms=None):
        self.n_vars = int(n_vars)
        self.terms = {}
        for e, c in (terms or {}).items():
            e = tuple(int(t) for t in e)
            if len(e) != self.n_vars or min(e, default=0) < 0:
                raise DimensionError(f"exponent {e} does not fit {self.n_vars} variables")
            c = float(c)
            if c != 0:
                self.terms[e] = self.terms.get(e, 0.0) + c
        self.terms = {e: c for e, c in self.terms.items() if c != 0}

    @classmethod
    def constant(cls, n_vars, c):
        return cls(n_vars, {(0,) * n_vars: c})

    @classmethod
    def variable(cls, n_vars, i):
        e = [0] * n_vars
        e[i] = 1
        return cls(n_vars, {tuple(e): 1.0})

    @property
    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    def _coerce(self, other):
        if isinstance(other, PolynomialForm):
            if other.n_vars != self.n_vars:
                raise DimensionError("polynomials in different numbers of variables")
            return other
        return PolynomialForm.constant(self.n_vars, other)

    def __add__(self, other):
        other = self._coerce(other)
        t = dict(self.terms)
        for e, c in other.terms.items():
            t[e] = t.get(e, 0.0) + c
        return PolynomialForm(self.n_vars, t)

    __radd__ = __add__

    def __neg__(self):
        return PolynomialForm(self.n_vars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        t = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                t[e] = t.get(e, 0.0) + c1 * c2
        return PolynomialForm(self.n_vars, t)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        out = PolynomialForm.constant(self.n_vars, 1.0)
        for _ in range(k):
            out = out * self
        return out

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return sum(c * np.prod(x ** np.array(e)) for e, c in self.terms.items())

    def coefficient(self, e) -> float:
        return self.terms.get(tuple(e), 0.0)

    def __repr__(self):
        return f"PolynomialForm({self.n_vars}, {self.terms!r})"


def polynomial_distance(p: PolynomialForm, q: PolynomialForm) -> float:
    """Euclidean norm of the coefficient difference."""
    d = p - q
    return float(np.sqrt(sum(c * c for c in d.terms.values())))


@dataclass(frozen=True)
class MonomialBasis:
    n_vars: int
    d: int
    monomials: tuple

    @property
    def N(self) -> int:
        return len(self.monomials)


def monomials_of_degree(n_vars: int, k: int):
    """Exponent tuples of total degree ``k``, lexicographically descending (``x_1`` first)."""
    out = []
    for combo in combinations_with_replacement(range(n_vars), k):
        e = [0] * n_vars
        for v in combo:
            e[v] += 1
        out.append(tuple(e))
    return sorted(out, reverse=True)


def monomial_basis(n_vars: int, d: int) -> MonomialBasis:
    """All monomials of degree ``<= d`` in graded lexicographic order, constant first."""
    if n_vars < 1 or d < 0:
        raise DimensionError("need n_vars >= 1 and d >= 0")
    mons = tuple(m for k in range(d + 1) for m in monomials_of_degree(n_vars, k))
    assert len(mons) == comb(n_vars + d, d)
    return MonomialBasis(n_vars, d, mons)


@dataclass
class GramEquality:
    monomial: tuple
    positions: list  # (row, col) with row <= col
    coefficient: float


def gram_equalities(poly: PolynomialForm, basis: MonomialBasis) -> list:
    """One equality per monomial of ``v v^T``: the Gram positions producing it and its target coefficient.

    ``Q`` satisfies them (``Q_ii`` plus ``2 Q_ij`` for ``i < j``) exactly when ``v^T Q v = poly``.
    """
    if poly.n_vars != basis.n_vars:
        raise DimensionError("polynomial and basis use different variables")
    if poly.degree > 2 * basis.d:
        raise DimensionError(f"degree {poly.degree} exceeds twice the basis degree {basis.d}")
    pos = {}
    mons = basis.monomials
    for i in range(len(mons)):
        for j in range(i, len(mons)):
            e = tuple(a + b for a, b in zip(mons[i], mons[j]))
            pos.setdefault(e, []).append((i, j))
    missing = [e for e in poly.terms if e not in pos]
    if missing:
        raise DimensionError(f"monomials {missing} cannot be produced by the basis")
    order = [m for k in range(2 * basis.d + 1) for m in monomials_of_degree(basis.n_vars, k) if m in pos]
    return [GramEquality(e, pos[e], poly.coefficient(e)) for e in order]


def _position_matrix(N, positions):
    M = np.zeros((N, N))
    for i, j in positions:
        M[i, j] = M[j, i] = 1.0
    return M


def half_degree(poly: PolynomialForm) -> int:
    if poly.degree % 2:
        raise DimensionError(f"odd degree {poly.degree}: not a candidate for SOS")
    return poly.degree // 2


def build_sos_program(poly: PolynomialForm, d: int | None = None) -> ConicProgram:
    """``min gamma`` such that ``poly + gamma`` is SOS, as a single-block conic program.

    ``gamma`` only enters the constant coefficient, so it is eliminated:
    the objective is ``Q_00 - poly(0)`` and the constant equality is dropped.
    """
    if d is None:
        d = half_degree(poly)
    elif poly.degree > 2 * d:
        raise DimensionError("basis degree too small")
    basis = monomial_basis(poly.n_vars, d)
    N = basis.N
    const = (0,) * poly.n_vars
    C = np.zeros((N, N))
    C[0, 0] = 1.0
    cons = []
    for eq in gram_equalities(poly, basis):
        if eq.monomial == const:
            continue
        cons.append(({0: _position_matrix(N, eq.positions)}, eq.coefficient))
    return ConicProgram([N], [C], cons, offset=-poly.coefficient(const))


def build_alpha_sdsos_program(poly: PolynomialForm, alpha, d: int | None = None) -> ConicProgram:
    """The SOS program with its Gram matrix restricted to FW(alpha, 2)."""
    sdp = build_sos_program(poly, d)
    alpha = make_partition(alpha)
    if alpha.n != sdp.block_sizes[0]:
        raise DimensionError(f"partition covers {alpha.n} but the basis has {sdp.block_sizes[0]} monomials")
    return to_block_fw_program(sdp, alpha)


def gram_from_solution(prog: ConicProgram, X) -> np.ndarray:
    """Full Gram matrix from a solution of either program form."""
    alpha = getattr(prog, "alpha", None)
    if alpha is None:
        return np.asarray(X[0])
    Q = np.zeros((alpha.n, alpha.n))
    for Xb, (i, j) in zip(X, prog.pairs):
        idx = alpha.pair_indices(i, j)
        Q[np.ix_(idx, idx)] += Xb
    return Q


def _linear_form(coeffs, monomials, n_vars):
    return PolynomialForm(n_vars, {m: c for m, c in zip(monomials, coeffs) if c != 0})


def extract_certificate(dec, basis: MonomialBasis, tol: float = 1e-8):
    """Squares ``f_{ij,t}`` from the pair blocks: ``sum f^2`` re-expands to ``v^T Q v``.

    ``dec`` is an FwDecomposition over the basis (or a PSD Gram matrix,
    treated as a single square block). Returns a list of
    ``(pair, PolynomialForm)``; raises if a block is indefinite.
    """
    mons = basis.monomials
    if isinstance(dec, np.ndarray):
        items = [(None, np.arange(basis.N), dec)]
    else:
        if dec.alpha.n != basis.N:
            raise DimensionError("decomposition does not match the basis")
        items = [((i, j), dec.alpha.pair_indices(i, j), X) for (i, j), X in sorted(dec.blocks.items())]
    out = []
    for pair, idx, X in items:
        F = cholesky_psd(X, tol=tol * (1 + np.linalg.norm(X)))
        if F is None:
            raise BlockFWError(f"block {pair} is not PSD; no certificate")
        sub = [mons[k] for k in idx]
        for t in range(F.shape[1]):
            if np.any(F[:, t]):
                out.append((pair, _linear_form(F[:, t], sub, basis.n_vars)))
    return out


def expand_certificate(terms, n_vars: int) -> PolynomialForm:
    total = PolynomialForm(n_vars)
    for _, f in terms:
        total = total + f * f
    return total


def _check_matrix(P):
    r = len(P)
    if r == 0 or any(len(row) != r for row in P):
        raise DimensionError("polynomial matrix must be square")
    n = P[0][0].n_vars
    for k in range(r):
        for l in range(r):
            if P[k][l].n_vars != n:
                raise DimensionError("entries use different numbers of variables")
            if polynomial_distance(P[k][l], P[l][k]) > 1e-12:
                raise DimensionError(f"polynomial matrix is not symmetric at ({k}, {l})")
    return r, n


def matrix_sos_equalities(P, gamma_shift: float = 0.0, d: int | None = None):
    """Gram equalities for ``y^T (P(x) + shift I) y`` over the basis ``I_r (x) v_d(x)``.

    Returns ``(basis, constraints)`` where each constraint is
    ``(positions, coefficient)`` on the ``rN x rN`` Gram matrix, one per
    monomial ``x^mu y_k y_l``.
    """
    r, n = _check_matrix(P)
    deg = max(P[k][l].degree for k in range(r) for l in range(r))
    if d is None:
        d = (deg + 1) // 2
    if deg > 2 * d:
        raise DimensionError("basis degree too small")
    basis = monomial_basis(n, d)
    N = basis.N
    prods = {}
    for a in range(N):
        for b in range(N):
            e = tuple(s + t for s, t in zip(basis.monomials[a], basis.monomials[b]))
            prods.setdefault(e, []).append((a, b))
    cons = []
    for k in range(r):
        for l in range(k, r):
            target = P[k][l] + (gamma_shift if k == l else 0.0)
            # y_k y_l x^mu collects Q[(k,a),(l,b)] and Q[(l,b),(k,a)]
            for deg_mu in range(2 * d + 1):
                for mu in monomials_of_degree(n, deg_mu):
                    if mu not in prods:
                        continue
                    coef = target.coefficient(mu)
                    if k != l:
                        coef *= 2.0
                    positions = set()
                    for a, b in prods[mu]:
                        i, j = k * N + a, l * N + b
                        positions.add((min(i, j), max(i, j)))
                    cons.append((sorted(positions), coef))
    return basis, cons


def matrix_sos_program(P, gamma_shift: float = 0.0, d: int | None = None):
    """Feasibility programs certifying ``P(x) + shift I >= 0`` for all ``x``.

    Returns ``(full_sdp, block_program, natural_partition)``; the block
    program restricts the Gram matrix to FW(alpha, 2) with
    ``alpha = (N, ..., N)``.
    """
    basis, eqs = matrix_sos_equalities(P, gamma_shift, d)
    r = len(P)
    N = basis.N
    size = r * N
    cons = []
    for positions, coef in eqs:
        M = np.zeros((size, size))
        for i, j in positions:
            if i == j:
                M[i, i] = 1.0
            else:
                M[i, j] = M[j, i] = 1.0
        cons.append(({0: M}, coef))
    sdp = ConicProgram([size], [np.zeros((size, size))], cons)
    alpha = Partition((N,) * r)
    block = to_block_fw_program(sdp, alpha) if r > 1 else sdp
    return sdp, block, alpha


def _position_sym(size, positions):
    M = np.zeros((size, size))
    for i, j in positions:
        M[i, j] = M[j, i] = 1.0
    return M


def matrix_sos_shift_program(P, d: int | None = None):
    """Programs for the least ``gamma`` making ``P(x) + gamma I`` SOS (and alpha-SDSOS).

    ``gamma`` only enters the constant coefficient of each ``y_k^2``, so it
    is eliminated as in :func:`build_sos_program`: the objective is
    ``Q[0, 0] - P_00(0)`` and the other constant diagonal equalities become
    ``Q[kN, kN] - Q[0, 0] = P_kk(0) - P_00(0)``.
    Returns ``(full_sdp, block_program, natural_partition)``.
    """
    basis, eqs = matrix_sos_equalities(P, 0.0, d)
    r = len(P)
    N = basis.N
    size = r * N
    const = (0,) * basis.n_vars
    p00 = P[0][0].coefficient(const)
    cons = []
    for positions, coef in eqs:
        M = _position_sym(size, positions)
        if positions == [(0, 0)]:
            continue
        diag_const = len(positions) == 1 and positions[0][0] == positions[0][1] and positions[0][0] % N == 0
        if diag_const:
            M[0, 0] -= 1.0
            coef -= p00
        cons.append(({0: M}, coef))
    C = np.zeros((size, size))
    C[0, 0] = 1.0
    sdp = ConicProgram([size], [C], cons, offset=-p00)
    alpha = Partition((N,) * r)
    block = to_block_fw_program(sdp, alpha) if r > 1 else sdp
    return sdp, block, alpha


@dataclass
class ShiftCheck:
    """Outcome of testing whether ``P + shift I`` has a certificate in a given cone."""

    feasible: bool | None
    min_shift: float
    status: str
    evidence: object = None


def check_matrix_shift(P, shift: float, alpha=None, d: int | None = None, **solve_kw) -> ShiftCheck:
    """Decide whether ``P(x) + shift I`` is alpha-SDSOS (full SOS when ``alpha`` is None).

    ``alpha="natural"`` uses the partition ``(N, ..., N)``. The decision
    compares ``shift`` with the least feasible shift; when that least shift
    is larger, its dual multipliers ``d`` are a Farkas certificate for the
    fixed-shift program (``b^T d > 0``, ``-A^T d`` in the cone, up to the
    reported residual).
    """
    from .solver import solve

    sdp, block, nat = matrix_sos_shift_program(P, d)
    if alpha is None:
        prog = sdp
    else:
        alpha = nat if isinstance(alpha, str) and alpha == "natural" else make_partition(alpha)
        prog = to_block_fw_program(sdp, alpha)
    sol = solve(prog, **solve_kw)
    if sol.status != "optimal":
        return ShiftCheck(None, sol.objective, sol.status)
    tol = 10 * (solve_kw.get("eps_abs", 1e-6) + solve_kw.get("eps_rel", 1e-6) * max(1.0, abs(sol.objective)))
    if sol.objective <= shift - tol:
        return ShiftCheck(True, sol.objective, "feasible", sol)
    if sol.dual_objective >= shift + tol:
        return ShiftCheck(False, sol.objective, "infeasible_evidence", -sol.y)
    return ShiftCheck(None, sol.objective, "inconclusive", sol)


def broyden_poly(n_vars: int) -> PolynomialForm:
    """Broyden tridiagonal residuals squared and summed, plus ``(x_1 + ... + x_n)^2``."""
    if n_vars < 2:
        raise DimensionError("need at least two variables")
    x = [PolynomialForm.variable(n_vars, i) for i in range(n_vars)]
    one = PolynomialForm.constant(n_vars, 1.0)
    q = ((3 - 2 * x[0]) * x[0] - 2 * x[1] + one) ** 2
    for i in range(1, n_vars - 1):
        q = q + ((3 - 2 * x[i]) * x[i] - x[i - 1] - 2 * x[i + 1] + one) ** 2
    q = q + ((3 - 2 * x[-1]) * x[-1] - x[-2] + one) ** 2
    s = PolynomialForm(n_vars)
    for xi in x:
        s = s + xi
    return q + s ** 2


def sos_minimum(poly, alpha=None, **solve_kw):
    """Solve ``min gamma : poly + gamma`` SOS (or alpha-SDSOS when ``alpha`` is given)."""
    from .solver import solve

    prog = build_sos_program(poly) if alpha is None else build_alpha_sdsos_program(poly, alpha)
    return prog, solve(prog, **solve_kw)
