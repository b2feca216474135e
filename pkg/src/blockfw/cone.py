"""The block factor-width-two cone FW(alpha, 2) and its dual.

A matrix ``Z`` belongs to FW(alpha, 2) when it can be written as a sum of
PSD matrices, each supported on the principal submatrix of a pair of
blocks ``(i, j)``. The dual cone consists of the matrices whose every
pair principal submatrix is PSD.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import CertificateError, DecompositionError, DimensionError, PartitionError
from .margin import max_margin
from .linalg import PSD_RTOL, as_sym, min_eig, project_psd, psd_threshold
from .partition import (
    Partition,
    SubPartitionWitness,
    lift,
    make_partition,
    trivial_partition,
    truncate,
)


@dataclass
class FwDecomposition:
    """Pair blocks ``X_ij`` (``i < j``) of size ``k_i + k_j``; missing pairs are zero."""

    alpha: Partition
    blocks: dict = field(default_factory=dict)

    def __post_init__(self):
        self.alpha = make_partition(self.alpha)
        for (i, j), X in self.blocks.items():
            if not 0 <= i < j < self.alpha.p:
                raise DecompositionError(f"pair {(i, j)} out of range for {self.alpha.p} blocks")
            k = self.alpha.sizes[i] + self.alpha.sizes[j]
            if np.shape(X) != (k, k):
                raise DecompositionError(f"block {(i, j)} has shape {np.shape(X)}, expected {(k, k)}")

    def split(self, i, j):
        """The three parts ``(X_ij,1, X_ij,2, X_ij,3)`` of a pair block."""
        X = self.blocks[i, j]
        ki = self.alpha.sizes[i]
        return X[:ki, :ki], X[:ki, ki:], X[ki:, ki:]


@dataclass
class DecompositionReport:
    passed: bool
    min_eigs: dict
    residual: float


@dataclass
class FwProjection:
    point: np.ndarray
    decomposition: FwDecomposition
    distance: float
    converged: bool
    iterations: int


@dataclass
class DominanceCertificate:
    """Blocks ``Z_ij`` (``i != j``, size ``k_i``) with ``A_ii >= sum_j Z_ij``
    and ``[[Z_ij, A_ij], [A_ji, Z_ji]] >= 0`` for every pair."""

    alpha: Partition
    z_blocks: dict


@dataclass
class MembershipResult:
    status: str  # "member" | "non_member" | "inconclusive"
    decomposition: FwDecomposition | None = None
    separator: np.ndarray | None = None
    gap: float = np.inf
    iterations: int = 0

    @property
    def is_member(self):
        return self.status == "member"


def _check_dims(A, alpha):
    if A.shape[0] != alpha.n:
        raise DimensionError(f"matrix is {A.shape[0]}x{A.shape[0]} but partition covers {alpha.n}")


def recompose(dec: FwDecomposition) -> np.ndarray:
    alpha = dec.alpha
    Z = np.zeros((alpha.n, alpha.n))
    for (i, j), X in dec.blocks.items():
        if not 0 <= i < j < alpha.p:
            raise DecompositionError(f"pair {(i, j)} out of range")
        idx = alpha.pair_indices(i, j)
        Z[np.ix_(idx, idx)] += X
    return Z


def validate_decomposition(dec: FwDecomposition, target, tol: float = PSD_RTOL) -> DecompositionReport:
    target = as_sym(target)
    _check_dims(target, dec.alpha)
    min_eigs = {pair: min_eig(X) for pair, X in dec.blocks.items()}
    residual = float(np.linalg.norm(recompose(dec) - target))
    passed = all(v >= -tol for v in min_eigs.values()) and residual <= tol * (1 + np.linalg.norm(target))
    return DecompositionReport(passed, min_eigs, residual)


def dual_membership(A, alpha, tol: float = PSD_RTOL):
    """Is ``A`` in the dual cone? Returns ``(ok, worst_pair, worst_min_eig)``.

    With a single block this is a plain PSD test and ``worst_pair`` is ``None``.
    """
    A = as_sym(A)
    alpha = make_partition(alpha)
    _check_dims(A, alpha)
    thresh = tol * (1 + np.linalg.norm(A))
    if alpha.p == 1:
        lam = min_eig(A)
        return bool(lam >= -thresh), None, lam
    worst_pair, worst = None, np.inf
    for i, j in alpha.pairs:
        lam = min_eig(truncate(A, alpha, i, j))
        if lam < worst:
            worst_pair, worst = (i, j), lam
    return bool(worst >= -thresh), worst_pair, worst


def _dykstra_sweep(y, X, alpha, index):
    """One cyclic pass of Dykstra's method over the pair polar cones.

    ``y`` converges to the projection of the starting point onto the polar
    of FW(alpha, 2); ``A - y`` always equals the sum of the lifted ``X``.
    """
    for pair in alpha.pairs:
        idx = index[pair]
        sub = np.ix_(idx, idx)
        t = y[sub] + X[pair]
        Xn = project_psd(t)
        y[sub] = t - Xn
        X[pair] = Xn


def _dykstra(A, alpha, max_iters, tol, check=None, check_every=10):
    index = {pair: alpha.pair_indices(*pair) for pair in alpha.pairs}
    sizes = alpha.sizes
    X = {(i, j): np.zeros((sizes[i] + sizes[j],) * 2) for i, j in alpha.pairs}
    y = A.copy()
    best = (np.linalg.norm(y), {k: v.copy() for k, v in X.items()})
    converged, it = False, 0
    for it in range(1, max_iters + 1):
        y_old = y.copy()
        _dykstra_sweep(y, X, alpha, index)
        dist = np.linalg.norm(y)
        if dist < best[0]:
            best = (dist, {k: v.copy() for k, v in X.items()})
        if np.linalg.norm(y - y_old) <= tol:
            converged = True
            break
        if check is not None and it % check_every == 0 and check(y, X):
            break
    return y, X, best, converged, it


def project_fw(A, alpha, max_iters: int = 20000, tol: float = 1e-10) -> FwProjection:
    """Frobenius projection of ``A`` onto FW(alpha, 2).

    The returned point is always in the cone (it is the recomposition of
    the returned PSD pair blocks), so ``distance`` is a valid upper bound
    on the true distance even when ``converged`` is false.
    """
    A = as_sym(A)
    alpha = make_partition(alpha)
    _check_dims(A, alpha)
    if alpha.p < 2:
        raise PartitionError("projection needs at least two blocks")
    _, _, (dist, blocks), converged, it = _dykstra(A, alpha, max_iters, tol)
    dec = FwDecomposition(alpha, blocks)
    return FwProjection(recompose(dec), dec, float(dist), converged, it)


def certificate_from_decomposition(dec: FwDecomposition) -> DominanceCertificate:
    """``Z_ij`` is the block-``i`` corner of ``X_ij`` (or of ``X_ji`` when ``i > j``)."""
    z = {}
    for i, j in dec.alpha.pairs:
        if (i, j) in dec.blocks:
            X1, _, X3 = dec.split(i, j)
            z[i, j], z[j, i] = X1.copy(), X3.copy()
        else:
            z[i, j] = np.zeros((dec.alpha.sizes[i],) * 2)
            z[j, i] = np.zeros((dec.alpha.sizes[j],) * 2)
    return DominanceCertificate(dec.alpha, z)


def certificate_violation(cert: DominanceCertificate, A) -> float:
    """Largest negative eigenvalue over the slack blocks and pair blocks (0 when valid)."""
    alpha = cert.alpha
    worst = 0.0
    for i in range(alpha.p):
        b = alpha.block(i)
        Q = A[b.start:b.stop, b.start:b.stop] - sum(cert.z_blocks[i, j] for j in range(alpha.p) if j != i)
        worst = min(worst, min_eig(Q))
    for i, j in alpha.pairs:
        bi, bj = alpha.block(i), alpha.block(j)
        Aij = A[bi.start:bi.stop, bj.start:bj.stop]
        M = np.block([[cert.z_blocks[i, j], Aij], [Aij.T, cert.z_blocks[j, i]]])
        worst = min(worst, min_eig(M))
    for Z in cert.z_blocks.values():
        worst = min(worst, min_eig(Z))
    return -worst


def certificate_to_decomposition(cert: DominanceCertificate, A, tol: float = PSD_RTOL) -> FwDecomposition:
    """Rebuild pair blocks from a certificate; the slack ``A_ii - sum_j Z_ij`` is shared evenly.

    The result recomposes ``A`` exactly (off-diagonal blocks are copied).
    """
    A = as_sym(A)
    alpha = cert.alpha
    _check_dims(A, alpha)
    if alpha.p < 2:
        raise PartitionError("certificates need at least two blocks")
    if certificate_violation(cert, A) > psd_threshold(A, tol):
        raise CertificateError("certificate conditions are violated for this matrix")
    p = alpha.p
    slack = {}
    for i in range(p):
        b = alpha.block(i)
        slack[i] = A[b.start:b.stop, b.start:b.stop] - sum(cert.z_blocks[i, j] for j in range(p) if j != i)
    blocks = {}
    for i, j in alpha.pairs:
        bi, bj = alpha.block(i), alpha.block(j)
        X1 = cert.z_blocks[i, j] + slack[i] / (p - 1)
        X3 = cert.z_blocks[j, i] + slack[j] / (p - 1)
        Aij = A[bi.start:bi.stop, bj.start:bj.stop]
        X = np.block([[X1, Aij], [Aij.T, X3]])
        blocks[i, j] = 0.5 * (X + X.T)
    return FwDecomposition(alpha, blocks)


def _polish(A, alpha, X):
    """Turn approximate pair blocks into blocks recomposing ``A`` exactly.

    Returns the decomposition and the Frobenius norm of its negative
    eigenvalues (a bound on how far the clipped blocks are from ``A``).
    """
    cert = certificate_from_decomposition(FwDecomposition(alpha, X))
    p = alpha.p
    blocks = {}
    neg = 0.0
    for i, j in alpha.pairs:
        bi, bj = alpha.block(i), alpha.block(j)
        Si = A[bi.start:bi.stop, bi.start:bi.stop] - sum(cert.z_blocks[i, l] for l in range(p) if l != i)
        Sj = A[bj.start:bj.stop, bj.start:bj.stop] - sum(cert.z_blocks[j, l] for l in range(p) if l != j)
        Aij = A[bi.start:bi.stop, bj.start:bj.stop]
        Xn = np.block([[cert.z_blocks[i, j] + Si / (p - 1), Aij], [Aij.T, cert.z_blocks[j, i] + Sj / (p - 1)]])
        Xn = 0.5 * (Xn + Xn.T)
        w = np.linalg.eigvalsh(Xn)
        neg += float(np.sum(np.minimum(w, 0.0) ** 2))
        blocks[i, j] = Xn
    return FwDecomposition(alpha, blocks), np.sqrt(neg)


def _repair_separator(Y, alpha):
    """Shift ``Y`` by a multiple of the identity until every pair submatrix is PSD."""
    worst = min(min_eig(truncate(Y, alpha, i, j)) for i, j in alpha.pairs)
    if worst < 0:
        Y = Y + (-worst * (1 + 1e-12)) * np.eye(alpha.n)
    return Y


def _separator_ok(Y, A, alpha, margin=1e-8):
    ok, _, _ = dual_membership(Y, alpha, tol=0.0)
    return ok and float(np.sum(Y * A)) < -margin * np.linalg.norm(Y) * np.linalg.norm(A)


def certify_membership(A, alpha, tol: float | None = None, max_iters: int = 20000) -> MembershipResult:
    """Decide ``A in FW(alpha, 2)`` with a certificate either way.

    Members come with a decomposition; non-members with a separator ``Y``
    in the dual cone satisfying ``<Y, A> < 0``. ``tol`` is the accepted
    Frobenius gap for membership (default ``1e-8 * (1 + ||A||_F)``).

    The decision is made by maximising the diagonal margin of a block
    dominance certificate with a barrier method. If that ends on the
    boundary without a verified separator, Dykstra's projection decides.
    """
    A = as_sym(A)
    alpha = make_partition(alpha)
    _check_dims(A, alpha)
    if tol is None:
        tol = psd_threshold(A)
    if alpha.p == 1:
        lam = min_eig(A)
        if lam >= -tol:
            return MembershipResult("member", gap=max(0.0, -lam))
        w, V = np.linalg.eigh(A)
        v = V[:, 0]
        return MembershipResult("non_member", separator=np.outer(v, v), gap=-lam)
    scale = np.linalg.norm(A)
    if scale == 0:
        return MembershipResult("member", decomposition=FwDecomposition(alpha, {}), gap=0.0)
    An = A / scale

    def is_sep(Y):
        return _separator_ok(_repair_separator(Y, alpha), An, alpha)

    res = max_margin(An, alpha, is_separator=is_sep)
    if res.status == "negative":
        Y = _repair_separator(res.separator, alpha)
        Y = Y / np.linalg.norm(Y)
        return MembershipResult("non_member", separator=Y, gap=max(0.0, -res.t_upper) * scale, iterations=res.newton_steps)
    # boundary or positive: the margin bounds the distance by |t| ||I||_F
    gap = max(0.0, -res.t) * np.sqrt(alpha.n) * scale
    if gap <= tol:
        cert = DominanceCertificate(alpha, {k: v * scale for k, v in res.z_blocks.items()})
        if res.t < 0:
            # absorb the small negative margin into the certificate
            for i in range(alpha.p):
                j = 1 if i == 0 else 0
                cert.z_blocks[i, j] = cert.z_blocks[i, j] + res.t * scale * np.eye(alpha.sizes[i])
            cert = _clip_certificate(cert, A)
        dec = certificate_to_decomposition(cert, A, tol=max(PSD_RTOL, tol / (1 + scale)))
        return MembershipResult("member", decomposition=dec, gap=gap, iterations=res.newton_steps)
    proj = _dykstra_decision(A, alpha, tol, max_iters)
    if proj is not None:
        proj.iterations += res.newton_steps
        return proj
    return MembershipResult("inconclusive", gap=gap, iterations=res.newton_steps)


def _clip_certificate(cert, A):
    """Make the pair blocks PSD again after a small shift by clipping them."""
    alpha = cert.alpha
    z = dict(cert.z_blocks)
    for i, j in alpha.pairs:
        bi, bj = alpha.block(i), alpha.block(j)
        ki = alpha.sizes[i]
        Aij = A[bi.start:bi.stop, bj.start:bj.stop]
        M = np.block([[z[i, j], Aij], [Aij.T, z[j, i]]])
        lam = min_eig(M)
        if lam < 0:
            z[i, j] = z[i, j] - lam * np.eye(ki)
            z[j, i] = z[j, i] - lam * np.eye(alpha.sizes[j])
    return DominanceCertificate(alpha, z)


def _dykstra_decision(A, alpha, tol, max_iters):
    found = {}

    def check(y, X):
        dec, neg = _polish(A, alpha, X)
        if neg <= min(tol, 1e-10 * (1 + np.linalg.norm(A))):
            found["member"] = (dec, neg)
            return True
        Y = _repair_separator(-y, alpha)
        if _separator_ok(Y, A, alpha):
            found["separator"] = Y
            return True
        return False

    y, X, (dist, blocks), converged, it = _dykstra(A, alpha, max_iters, 1e-14 * (1 + np.linalg.norm(A)), check)
    if not found:
        check(y, X)
    if "member" in found:
        dec, neg = found["member"]
        return MembershipResult("member", decomposition=dec, gap=float(neg), iterations=it)
    if "separator" in found:
        return MembershipResult("non_member", separator=found["separator"], gap=float(dist), iterations=it)
    if dist <= tol:
        return MembershipResult("member", decomposition=FwDecomposition(alpha, blocks), gap=float(dist), iterations=it)
    return None


def dominance_certificate(A, alpha, tol: float | None = None, decomposition: FwDecomposition | None = None):
    """Certificate blocks ``Z_ij`` for a member, built from a decomposition of ``A``.

    Without ``decomposition`` one is computed by :func:`certify_membership`.
    Returns ``None`` for non-members.
    """
    A = as_sym(A)
    alpha = make_partition(alpha)
    _check_dims(A, alpha)
    if tol is None:
        tol = psd_threshold(A)
    if decomposition is None and not block_graph_edges(A, alpha, zero_tol=0.0):
        # block diagonal: zero pair blocks work whenever the diagonal blocks are PSD
        if all(min_eig(_diag_block(A, alpha, i)) >= -tol for i in range(alpha.p)):
            z = {(i, j): np.zeros((alpha.sizes[i],) * 2) for i in range(alpha.p) for j in range(alpha.p) if i != j}
            return DominanceCertificate(alpha, z)
        return None
    if decomposition is None:
        res = certify_membership(A, alpha, tol=tol)
        if not res.is_member:
            return None
        decomposition = res.decomposition
    cert = certificate_from_decomposition(decomposition)
    if certificate_violation(cert, A) > tol:
        return None
    return cert


def _merge_adjacent(dec: FwDecomposition, q: int) -> FwDecomposition:
    """Merge blocks ``q`` and ``q + 1``; the ``(q, q+1)`` block is shared evenly among the new pairs."""
    alpha = dec.alpha
    sizes = alpha.sizes
    beta = Partition(sizes[:q] + (sizes[q] + sizes[q + 1],) + sizes[q + 2:])
    if beta.p < 2:
        raise PartitionError("cannot coarsen below two blocks")

    def old(b):
        return b if b < q else b + 1

    def full(pair):
        X = dec.blocks.get(pair)
        return None if X is None else lift(X, alpha, *pair)

    inner = full((q, q + 1))
    blocks = {}
    for a, c in beta.pairs:
        if q not in (a, c):
            if (old(a), old(c)) in dec.blocks:
                blocks[a, c] = dec.blocks[old(a), old(c)].copy()
            continue
        other = c if a == q else a
        o = old(other)
        terms = [full(tuple(sorted((o, q)))), full(tuple(sorted((o, q + 1))))]
        if inner is not None:
            terms.append(inner / (beta.p - 1))
        terms = [t for t in terms if t is not None]
        if terms:
            blocks[a, c] = truncate(sum(terms), beta, a, c)
    return FwDecomposition(beta, blocks)


def coarsen_decomposition(dec: FwDecomposition, witness: SubPartitionWitness) -> FwDecomposition:
    """Re-express a decomposition under a coarser partition given by ``witness``.

    Works by repeated merges of adjacent blocks; the represented matrix is unchanged.
    """
    bounds = witness.merge_bounds
    if bounds[0] != 0 or bounds[-1] != dec.alpha.p or any(b >= c for b, c in zip(bounds, bounds[1:])):
        raise PartitionError(f"witness {bounds} does not fit a partition with {dec.alpha.p} blocks")
    if len(bounds) - 1 < 2:
        raise PartitionError("target partition must have at least two blocks")
    for g in reversed(witness.groups()):
        for _ in range(len(g) - 1):
            dec = _merge_adjacent(dec, g.start)
    return dec


def dc_split(X, alpha, try_zero: bool = True):
    """Write ``X = recompose(A) - recompose(B)`` with both parts in FW(alpha, 2).

    ``A`` represents ``X + lam I`` and ``B`` represents ``lam I``. ``lam``
    is taken from spectral-norm dominance bounds so both certificates hold
    in closed form; ``lam = 0`` when ``X`` is already a member.
    """
    X = as_sym(X)
    alpha = make_partition(alpha)
    _check_dims(X, alpha)
    if alpha.p < 2:
        raise PartitionError("need at least two blocks")
    p = alpha.p
    if try_zero:
        res = certify_membership(X, alpha)
        if res.is_member and res.decomposition is not None:
            return res.decomposition, FwDecomposition(alpha, {}), 0.0
    sig = {}
    for i, j in alpha.pairs:
        bi, bj = alpha.block(i), alpha.block(j)
        sig[i, j] = np.linalg.norm(X[bi.start:bi.stop, bj.start:bj.stop], 2)
    lam = 0.0
    for i in range(p):
        b = alpha.block(i)
        need = sum(sig[tuple(sorted((i, j)))] for j in range(p) if j != i)
        lam = max(lam, need - min_eig(X[b.start:b.stop, b.start:b.stop]))
    z = {}
    for i, j in alpha.pairs:
        z[i, j] = sig[i, j] * np.eye(alpha.sizes[i])
        z[j, i] = sig[i, j] * np.eye(alpha.sizes[j])
    cert = DominanceCertificate(alpha, z)
    shifted = X + lam * np.eye(alpha.n)
    A_dec = certificate_to_decomposition(cert, shifted)
    zero = {(i, j): np.zeros((alpha.sizes[i],) * 2) for i in range(p) for j in range(p) if i != j}
    B_dec = certificate_to_decomposition(DominanceCertificate(alpha, zero), lam * np.eye(alpha.n))
    return A_dec, B_dec, lam


def check_dd(A) -> bool:
    """Row diagonal dominance ``a_ii >= sum_{j != i} |a_ij|``."""
    A = as_sym(A)
    off = np.sum(np.abs(A), axis=1) - np.abs(np.diag(A))
    tol = 1e-12 * (1 + np.max(np.sum(np.abs(A), axis=1), initial=0.0))
    return bool(np.all(np.diag(A) >= off - tol))


def _dd_margin_ok(A, rtol=1e-8):
    off = np.sum(np.abs(A), axis=1) - np.abs(np.diag(A))
    tol = rtol * (1 + np.max(np.sum(np.abs(A), axis=1), initial=0.0))
    return bool(np.all(np.diag(A) >= off - tol))


def sdd_scaling_from_z(z, A, tol: float = 1e-8, max_iters: int | None = None) -> np.ndarray:
    """Positive weights ``d`` with ``diag(d) A diag(d)`` diagonally dominant.

    ``z`` is a nonnegative ``n x n`` array with ``a_ii >= sum_j z_ij`` and
    ``|a_ij| <= sqrt(z_ij z_ji)``. The squared weights are a positive left
    null vector of the generator matrix ``M`` (``m_ij = z_ij``, rows summing
    to zero), found per connected component by power iteration on
    ``M + 2 xi I``.
    """
    A = as_sym(A)
    z = np.array(z, dtype=float)
    n = A.shape[0]
    if z.shape != (n, n):
        raise DimensionError("z must match the matrix size")
    np.fill_diagonal(z, 0.0)
    scale = 1 + np.max(np.abs(A), initial=0.0)
    if np.min(z, initial=0.0) < -tol * scale:
        raise CertificateError("z has negative entries")
    z = np.maximum(z, 0.0)
    if np.any(np.diag(A) < z.sum(axis=1) - tol * scale):
        raise CertificateError("row sums of z exceed the diagonal")
    iu = np.triu_indices(n, 1)
    if np.any(np.abs(A[iu]) > np.sqrt(z[iu] * z.T[iu]) + tol * scale):
        raise CertificateError("z does not dominate the off-diagonal entries")
    # symmetric nonzero pattern: a one-sided z_ij can be dropped
    tiny = 1e-300
    mask = (z > tiny) & (z.T > tiny)
    z = np.where(mask, z, 0.0)
    M = z.copy()
    np.fill_diagonal(M, -z.sum(axis=1))
    ncomp, labels = connected_components(csr_matrix(mask), directed=False)
    w = np.ones(n)
    if max_iters is None:
        max_iters = max(10 * n * n, 5000)
    for c in range(ncomp):
        idx = np.flatnonzero(labels == c)
        if len(idx) == 1:
            continue
        Mc = M[np.ix_(idx, idx)]
        xi = np.max(np.abs(np.diag(Mc)))
        H = (Mc + 2 * xi * np.eye(len(idx))).T
        v = np.ones(len(idx)) / np.sqrt(len(idx))
        for _ in range(max_iters):
            v_new = H @ v
            v_new /= np.linalg.norm(v_new)
            if np.linalg.norm(Mc.T @ v_new) <= 1e-15 * xi and np.linalg.norm(v_new - v) <= 1e-15:
                v = v_new
                break
            v = v_new
        if np.min(v) <= 0:
            raise CertificateError("Perron vector lost positivity")
        w[idx] = v / np.max(v)
    return np.sqrt(w)


def check_sdd(A, tol: float | None = None):
    """Scaled diagonal dominance test. Returns ``(is_sdd, d)``; ``is_sdd`` may be ``None`` when undecided.

    Decided through FW membership under the trivial partition; a member's
    certificate is turned into explicit weights ``d``.
    """
    A = as_sym(A)
    n = A.shape[0]
    if np.any(np.diag(A) < 0):
        return False, None
    if check_dd(A):
        return True, np.ones(n)
    if n == 1:
        return bool(A[0, 0] >= 0), np.ones(1)
    res = certify_membership(A, trivial_partition(n), tol=tol)
    if res.status == "non_member":
        return False, None
    if res.status == "inconclusive":
        return None, None
    cert = certificate_from_decomposition(res.decomposition)
    z = np.zeros((n, n))
    for (i, j), Z in cert.z_blocks.items():
        z[i, j] = Z[0, 0]
    # the exact row sums absorb the shared slack
    z = np.maximum(z, 0.0)
    d = sdd_scaling_from_z(z, A, tol=1e-7)
    return True, d


def scaled_is_dd(A, d, rtol: float = 1e-8) -> bool:
    D = np.diag(d)
    return _dd_margin_ok(D @ A @ D, rtol)


def block_graph_edges(A, alpha, zero_tol: float = 1e-12):
    """Pairs ``(i, j)`` whose off-diagonal block has Frobenius norm above ``zero_tol``."""
    edges = []
    for i, j in alpha.pairs:
        bi, bj = alpha.block(i), alpha.block(j)
        if np.linalg.norm(A[bi.start:bi.stop, bj.start:bj.stop]) > zero_tol:
            edges.append((i, j))
    return edges


def _is_forest(p, edges):
    parent = list(range(p))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i, j in edges:
        ri, rj = find(i), find(j)
        if ri == rj:
            return False
        parent[ri] = rj
    return True


def _diag_block(A, alpha, i):
    b = alpha.block(i)
    return A[b.start:b.stop, b.start:b.stop]


def _off_block(A, alpha, i, j):
    bi, bj = alpha.block(i), alpha.block(j)
    return A[bi.start:bi.stop, bj.start:bj.stop]


def _degree_split(A, alpha, edges, adj, tol):
    blocks = {}
    for i, j in edges:
        Aij = _off_block(A, alpha, i, j)
        X = np.block([[_diag_block(A, alpha, i) / len(adj[i]), Aij], [Aij.T, _diag_block(A, alpha, j) / len(adj[j])]])
        if min_eig(X) < -tol:
            return None
        blocks[i, j] = X
    return blocks


def _leaf_sweep(A, alpha, edges, adj, tol):
    """Eliminate leaves towards a root, passing the Schur-complement share to the parent."""
    remaining = {i: _diag_block(A, alpha, i).copy() for i in range(alpha.p)}
    nbrs = {i: set(adj[i]) for i in range(alpha.p)}
    parts = {}  # edge -> (leaf, leaf block, parent block)
    last_edge = {}
    leaves = [i for i in range(alpha.p) if len(nbrs[i]) == 1]
    while leaves:
        leaf = leaves.pop()
        if len(nbrs[leaf]) != 1:
            continue
        (par,) = nbrs[leaf]
        L = remaining[leaf]
        B = _off_block(A, alpha, leaf, par)
        share = B.T @ np.linalg.pinv(L, rcond=1e-12, hermitian=True) @ B
        share = 0.5 * (share + share.T)
        parts[tuple(sorted((leaf, par)))] = (leaf, L, share)
        last_edge[par] = tuple(sorted((leaf, par)))
        remaining[par] = remaining[par] - share
        nbrs[par].discard(leaf)
        nbrs[leaf].clear()
        if len(nbrs[par]) == 1:
            leaves.append(par)
        elif not nbrs[par]:
            # par is the root of its tree: its leftover goes to the last edge
            leaf_r, Lr, share_r = parts[last_edge[par]]
            parts[last_edge[par]] = (leaf_r, Lr, share_r + remaining[par])
    blocks = {}
    for (i, j), (leaf, L, share) in parts.items():
        Aij = _off_block(A, alpha, i, j)
        top, bottom = (L, share) if leaf == i else (share, L)
        X = np.block([[top, Aij], [Aij.T, bottom]])
        X = 0.5 * (X + X.T)
        if min_eig(X) < -tol:
            return None
        blocks[i, j] = X
    return blocks


def sparse_forest_decompose(A, alpha, zero_tol: float = 1e-12) -> FwDecomposition | None:
    """Decomposition supported on the nonzero block pattern when that pattern is a forest.

    First tries splitting each diagonal block evenly over its incident
    edges; if a pair block comes out indefinite, falls back to a
    leaf-to-root elimination. Blocks with no incident edge are put into an
    arbitrary pair. Returns ``None`` when the pattern has a cycle or the
    split fails.
    """
    A = as_sym(A)
    alpha = make_partition(alpha)
    _check_dims(A, alpha)
    if alpha.p < 2:
        raise PartitionError("need at least two blocks")
    edges = block_graph_edges(A, alpha, zero_tol)
    if not _is_forest(alpha.p, edges):
        return None
    tol = psd_threshold(A)
    adj = {i: [] for i in range(alpha.p)}
    for i, j in edges:
        adj[i].append(j)
        adj[j].append(i)
    blocks = _degree_split(A, alpha, edges, adj, tol)
    if blocks is None:
        blocks = _leaf_sweep(A, alpha, edges, adj, tol)
        if blocks is None:
            return None
    for i in range(alpha.p):
        if adj[i]:
            continue
        D = _diag_block(A, alpha, i)
        if min_eig(D) < -tol:
            return None
        j = 1 if i == 0 else 0
        pair = tuple(sorted((i, j)))
        k = alpha.sizes[pair[0]] + alpha.sizes[pair[1]]
        X = blocks.get(pair, np.zeros((k, k))).copy()
        off = 0 if pair[0] == i else alpha.sizes[pair[0]]
        X[off:off + alpha.sizes[i], off:off + alpha.sizes[i]] += D
        blocks[pair] = X
    return FwDecomposition(alpha, blocks)
