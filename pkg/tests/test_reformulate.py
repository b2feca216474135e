import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from blockfw.errors import DimensionError, ProgramError
from blockfw.linalg import min_eig
from blockfw.partition import Partition, balanced_partition
from blockfw.reformulate import in_rsoc, lift_solution, rsoc_point, rsoc_reformulate, to_block_fw_program
from blockfw.solver import ConicProgram, residuals, solve
from blockfw.sos import broyden_poly, build_sos_program, monomial_basis

from conftest import EX2_X


def random_sdp(seed, n=5, m=4):
    rng = np.random.default_rng(seed)
    B = rng.standard_normal((n, n))
    B = B @ B.T + np.eye(n)
    cons = []
    for _ in range(m):
        M = rng.standard_normal((n, n))
        M = M + M.T
        cons.append(({0: M}, float(np.sum(M * B))))
    G = rng.standard_normal((n, n))
    return ConicProgram([n], [G @ G.T / n + 0.1 * np.eye(n)], cons)


def test_identity_objective_bookkeeping():
    n = 5
    alpha = Partition((2, 1, 2))
    prog = to_block_fw_program(ConicProgram([n], [np.eye(n)], []), alpha)
    for C, (i, j) in zip(prog.objective, prog.pairs):
        assert np.array_equal(C, np.eye(alpha.sizes[i] + alpha.sizes[j]))
    rng = np.random.default_rng(0)
    blocks = [rng.standard_normal((k, k)) for k in prog.block_sizes]
    blocks = [B + B.T for B in blocks]
    X, obj = lift_solution(blocks, alpha, prog.pairs, np.eye(n))
    assert obj == pytest.approx(sum(np.trace(B) for B in blocks))
    assert obj == pytest.approx(np.trace(X))


def test_two_scalar_blocks_keep_the_program():
    sdp = random_sdp(1, n=2, m=2)
    prog = to_block_fw_program(sdp, (1, 1))
    assert prog.block_sizes == [2]
    assert np.array_equal(prog.objective[0], sdp.objective[0])
    for (a, ra), (b, rb) in zip(prog.constraints, sdp.constraints):
        assert np.array_equal(a[0], b[0]) and ra == rb


def test_single_block_partition_returns_input():
    sdp = random_sdp(2)
    assert to_block_fw_program(sdp, (5,)) is sdp


@pytest.mark.parametrize("sizes", [(1, 1, 1, 1, 1), (2, 2, 1), (3, 2)])
def test_counts_preserved(sizes):
    alpha = Partition(sizes)
    prog = to_block_fw_program(random_sdp(3), alpha)
    assert prog.m == 4
    assert len(prog.block_sizes) == alpha.p * (alpha.p - 1) // 2


def test_drop_zero_removes_unused_pairs():
    n = 4
    C = np.diag([1.0, 1.0, 0.0, 0.0])
    E = np.zeros((n, n))
    E[0, 1] = E[1, 0] = 1.0
    sdp = ConicProgram([n], [C], [({0: E}, 1.0)])
    full = to_block_fw_program(sdp, (1, 1, 1, 1))
    lean = to_block_fw_program(sdp, (1, 1, 1, 1), drop_zero=True)
    assert len(full.block_sizes) == 6
    assert lean.pairs == [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3)]
    assert solve(lean).objective == pytest.approx(solve(full).objective, abs=1e-5)


def test_example_feasibility_lifts_back():
    n = 4
    cons = []
    for i in range(n):
        for j in range(i, n):
            E = np.zeros((n, n))
            E[i, j] = E[j, i] = 1.0
            cons.append(({0: E}, EX2_X[i, j] * (1 if i == j else 2)))
    prog = to_block_fw_program(ConicProgram([n], [np.zeros((n, n))], cons), (1, 1, 1, 1))
    sol = solve(prog, eps_abs=1e-9, eps_rel=1e-9)
    X, _ = lift_solution(sol.X, prog.alpha, prog.pairs)
    assert np.abs(X - EX2_X).max() <= 1e-6
    assert all(min_eig(B) >= -1e-7 for B in sol.X)


def test_zero_blocks_lift_to_zero():
    alpha = Partition((1, 2, 1))
    blocks = [np.zeros((alpha.sizes[i] + alpha.sizes[j],) * 2) for i, j in alpha.pairs]
    X, obj = lift_solution(blocks, alpha, C=np.eye(4))
    assert not np.any(X) and obj == 0.0


def test_lift_rejects_wrong_shapes():
    with pytest.raises(DimensionError):
        lift_solution([np.zeros((2, 2))], (1, 1, 1))


def test_residuals_transfer_to_lifted_matrix():
    sdp = random_sdp(4)
    alpha = Partition((2, 2, 1))
    prog = to_block_fw_program(sdp, alpha)
    sol = solve(prog)
    X, obj = lift_solution(sol.X, alpha, prog.pairs, sdp.objective[0])
    block_rows = np.array([sum(np.sum(np.asarray(M) * sol.X[b]) for b, M in blocks.items()) - r
                           for blocks, r in prog.constraints])
    full_rows = np.array([np.sum(blocks[0] * X) - r for blocks, r in sdp.constraints])
    assert np.abs(block_rows - full_rows).max() <= 1e-7
    assert obj == pytest.approx(sol.objective, abs=1e-7)
    assert residuals(sdp, [X], np.zeros(sdp.m))[0] == pytest.approx(np.linalg.norm(full_rows))


def test_two_block_partition_matches_full_optimum():
    sdp = random_sdp(5, n=6, m=5)
    prog = to_block_fw_program(sdp, (3, 3))
    sol = solve(prog)
    X, obj = lift_solution(sol.X, prog.alpha, prog.pairs, sdp.objective[0])
    assert obj == pytest.approx(solve(sdp).objective, abs=1e-5 * max(1, abs(obj)))


def test_broyden_block_program_upper_bounds_sos():
    q = broyden_poly(3)
    sdp = build_sos_program(q)
    N = monomial_basis(3, 2).N
    prog = to_block_fw_program(sdp, balanced_partition(N, 3))
    assert len(prog.block_sizes) == 3
    assert solve(prog).objective >= solve(sdp).objective - 1e-4


def test_rsoc_examples():
    assert in_rsoc(*rsoc_point([[1, 1], [1, 1]]), tol=1e-12)
    assert not in_rsoc(*rsoc_point([[1, 2], [2, 1]]))


@settings(max_examples=1000, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=3, max_size=3))
def test_rsoc_agrees_with_eigenvalues(v):
    X = np.array([[v[0], v[1]], [v[1], v[2]]])
    lam = np.linalg.eigvalsh(X)[0]
    if abs(lam) > 1e-9:
        assert in_rsoc(*rsoc_point(X)) == (lam > 0)


def test_rsoc_reformulation_rows():
    sdp = random_sdp(6, n=4, m=3)
    prog = to_block_fw_program(sdp, (1, 1, 1, 1))
    r = rsoc_reformulate(prog)
    assert r.n_cones == 6 and r.A.shape == (3, 18)
    rng = np.random.default_rng(1)
    blocks = [rng.standard_normal((2, 2)) for _ in range(6)]
    blocks = [B + B.T for B in blocks]
    x = np.concatenate([rsoc_point(B) for B in blocks])
    rows = [sum(np.sum(M * blocks[b]) for b, M in bl.items()) for bl, _ in prog.constraints]
    assert np.allclose(r.A @ x, rows)
    with pytest.raises(ProgramError):
        rsoc_reformulate(to_block_fw_program(sdp, (2, 1, 1)))
