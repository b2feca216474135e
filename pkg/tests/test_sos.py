import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from blockfw.cone import FwDecomposition
from blockfw.errors import BlockFWError, DimensionError
from blockfw.partition import Partition, balanced_partition, trivial_partition
from blockfw.solver import solve
from blockfw.sos import (
    PolynomialForm,
    broyden_poly,
    build_alpha_sdsos_program,
    build_sos_program,
    check_matrix_shift,
    expand_certificate,
    extract_certificate,
    gram_equalities,
    gram_from_solution,
    matrix_sos_equalities,
    matrix_sos_program,
    monomial_basis,
    polynomial_distance,
    sos_minimum,
)

x1 = PolynomialForm.variable(1, 0)
x = PolynomialForm.variable(2, 0)
y = PolynomialForm.variable(2, 1)


def evaluate_gram(Q, basis, pt):
    v = np.array([np.prod([pt[k] ** e for k, e in enumerate(m)]) for m in basis.monomials])
    return v @ Q @ v


def test_polynomial_arithmetic():
    p = (x + y) ** 2
    assert p.terms == {(2, 0): 1.0, (1, 1): 2.0, (0, 2): 1.0}
    assert p([1.0, 2.0]) == pytest.approx(9.0)
    assert (p - p).terms == {}
    assert (3 * x - x).coefficient((1, 0)) == 2.0
    assert p.degree == 2


def test_monomial_basis_sizes_and_order():
    assert monomial_basis(3, 2).N == 10
    assert monomial_basis(2, 2).N == 6
    assert monomial_basis(1, 3).monomials == ((0,), (1,), (2,), (3,))
    assert monomial_basis(2, 1).monomials == ((0, 0), (1, 0), (0, 1))


def test_gram_equalities_square():
    eqs = {e.monomial: e for e in gram_equalities(x1 ** 2, monomial_basis(1, 1))}
    assert eqs[(2,)].positions == [(1, 1)] and eqs[(2,)].coefficient == 1.0
    assert eqs[(0,)].coefficient == 0.0 and eqs[(1,)].coefficient == 0.0


def test_gram_equalities_binomial_square():
    basis = monomial_basis(2, 1)
    Q = np.array([[0, 0, 0], [0, 1, 1], [0, 1, 1.0]])
    for e in gram_equalities((x + y) ** 2, basis):
        got = sum(Q[i, j] * (1 if i == j else 2) for i, j in e.positions)
        assert got == e.coefficient


def test_gram_equalities_constant():
    eqs = [e for e in gram_equalities(PolynomialForm.constant(2, 5.0), monomial_basis(2, 0))]
    assert len(eqs) == 1 and eqs[0].positions == [(0, 0)] and eqs[0].coefficient == 5.0


def test_gram_equalities_reject_odd_or_large():
    with pytest.raises(DimensionError):
        gram_equalities(x1 ** 4, monomial_basis(1, 1))


@pytest.mark.parametrize("poly,gamma", [
    (x1 ** 2, 0.0),
    ((x1 ** 2 - 1) ** 2, 0.0),
    (x1 ** 4 - x1 ** 2, 0.25),
])
def test_univariate_minima(poly, gamma):
    prog, sol = sos_minimum(poly)
    assert sol.status == "optimal"
    assert sol.objective == pytest.approx(gamma, abs=1e-5)
    # the SOS bound never exceeds sampled values
    assert -sol.objective <= min(poly([t]) for t in np.linspace(-3, 3, 601)) + 1e-5


def test_quartic_minimum_matches_sampling():
    poly = x1 ** 4 - x1 ** 2
    vals = [poly([t]) for t in np.linspace(-2, 2, 4001)]
    _, sol = sos_minimum(poly)
    assert -sol.objective == pytest.approx(min(vals), abs=1e-5)


def test_certificate_identity_gram():
    basis = monomial_basis(1, 1)
    terms = extract_certificate(np.eye(2), basis)
    assert polynomial_distance(expand_certificate(terms, 1), 1 + x1 ** 2) <= 1e-12


def test_certificate_single_square():
    basis = monomial_basis(2, 1)
    Q = np.array([[0, 0, 0], [0, 1, 1], [0, 1, 1.0]])
    terms = extract_certificate(Q, basis)
    assert len(terms) == 1
    assert polynomial_distance(expand_certificate(terms, 2), (x + y) ** 2) <= 1e-12


def test_certificate_rejects_indefinite_block():
    dec = FwDecomposition((1, 1), {(0, 1): np.array([[1.0, 2.0], [2.0, 1.0]])})
    with pytest.raises(BlockFWError):
        extract_certificate(dec, monomial_basis(1, 1))


def test_broyden_values():
    assert broyden_poly(2)([0.0, 0.0]) == pytest.approx(2.0)
    rng = np.random.default_rng(0)
    q = broyden_poly(4)
    assert q.degree == 4
    assert all(q(rng.uniform(-3, 3, 4)) >= 0 for _ in range(1000))
    with pytest.raises(DimensionError):
        broyden_poly(1)


def test_broyden_round_trip_certificate():
    q = broyden_poly(3)
    prog, sol = sos_minimum(q, eps_abs=1e-8, eps_rel=1e-8)
    Q = gram_from_solution(prog, sol.X)
    basis = monomial_basis(3, 2)
    target = q + sol.objective
    assert polynomial_distance(expand_certificate(extract_certificate(Q, basis), 3), target) <= 1e-5
    rng = np.random.default_rng(1)
    for _ in range(20):
        pt = rng.uniform(-1, 1, 3)
        val = target(pt)
        assert evaluate_gram(Q, basis, pt) == pytest.approx(val, rel=1e-6, abs=1e-6)


def test_block_certificate_round_trip():
    q = broyden_poly(2)
    N = monomial_basis(2, 2).N
    alpha = balanced_partition(N, 3)
    prog = build_alpha_sdsos_program(q, alpha)
    sol = solve(prog, eps_abs=1e-8, eps_rel=1e-8)
    dec = FwDecomposition(alpha, dict(zip(prog.pairs, sol.X)))
    terms = extract_certificate(dec, monomial_basis(2, 2), tol=1e-6)
    assert polynomial_distance(expand_certificate(terms, 2), q + sol.objective) <= 1e-5


def test_two_block_matches_sos_and_chain_is_monotone():
    q = broyden_poly(2)
    N = monomial_basis(2, 2).N
    J = {}
    for name, alpha in [("sos", None), ("two", Partition((3, 3))), ("three", balanced_partition(N, 3)),
                        ("trivial", trivial_partition(N))]:
        _, sol = sos_minimum(q, alpha)
        assert sol.status == "optimal"
        J[name] = sol.objective
    assert J["two"] == pytest.approx(J["sos"], abs=1e-5)
    assert J["trivial"] >= J["three"] - 2e-4 >= J["two"] - 4e-4


def test_single_entry_matrix_matches_scalar_equalities():
    poly = broyden_poly(2)
    basis, cons = matrix_sos_equalities([[poly]])
    scalar = gram_equalities(poly, basis)
    assert [(sorted(e.positions), e.coefficient) for e in scalar] == cons


def test_constant_identity_matrix_is_feasible():
    one = PolynomialForm.constant(2, 1.0)
    zero = PolynomialForm(2)
    P = [[one, zero], [zero, one]]
    sdp, block, alpha = matrix_sos_program(P, d=0)
    assert alpha.sizes == (1, 1)
    sol = solve(sdp)
    assert sol.status == "optimal"
    assert np.allclose(sol.X[0], np.eye(2), atol=1e-5)


def test_shift_threshold_on_small_matrix():
    # P = [[x^2, x], [x, x^2]] needs shift 1/4 in each cone (diagonal dominance is exact here)
    P = [[x1 ** 2, x1], [x1, x1 ** 2]]
    res = check_matrix_shift(P, 0.3, None)
    assert res.feasible is True and res.min_shift == pytest.approx(0.25, abs=1e-4)
    assert check_matrix_shift(P, 0.2, None).feasible is False


@settings(max_examples=20, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=6, max_size=6))
def test_feasible_gram_reproduces_polynomial(c):
    # a random psd Gram matrix defines a polynomial; the equalities must hold for it
    basis = monomial_basis(2, 1)
    F = np.array(c).reshape(2, 3)
    Q = F.T @ F
    mons = basis.monomials
    poly = PolynomialForm(2)
    for i in range(3):
        for j in range(3):
            e = tuple(a + b for a, b in zip(mons[i], mons[j]))
            poly = poly + PolynomialForm(2, {e: Q[i, j]})
    rng = np.random.default_rng(0)
    for _ in range(20):
        pt = rng.uniform(-1, 1, 2)
        assert evaluate_gram(Q, basis, pt) == pytest.approx(poly(pt), rel=1e-7, abs=1e-9)
    for e in gram_equalities(poly, basis):
        got = sum(Q[i, j] * (1 if i == j else 2) for i, j in e.positions)
        assert got == pytest.approx(e.coefficient, abs=1e-9)
