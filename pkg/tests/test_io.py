from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from blockfw import io
from blockfw.errors import ParseError
from blockfw.partition import balanced_partition
from blockfw.solver import ConicProgram
from blockfw.sos import broyden_poly, build_alpha_sdsos_program, monomial_basis

from conftest import EX2_X

DATA = Path(__file__).parent / "data"

MINIMAL = "1\n1\n2\n1.0\n0 1 1 1 1.0\n1 1 1 1 1.0\n"


def test_minimal_sdpa():
    prog = io.parse_sdpa(MINIMAL)
    assert prog.m == 1 and prog.block_sizes == [2]
    assert np.array_equal(prog.objective[0], -np.diag([1.0, 0.0]))
    assert prog.b.tolist() == [1.0]


def test_entry_outside_declared_blocks():
    with pytest.raises(ParseError, match="line 5"):
        io.parse_sdpa("1\n1\n2\n1.0\n1 2 1 1 1.0\n")


@pytest.mark.parametrize("text,where", [
    ("1\n1\n2\n1.0\n1 1 3 1 1.0\n", "line 5"),
    ("1\n1\n2\n1.0\n1 1 1 1 abc\n", "line 5"),
    ("1\n1\n2\n", "line 3"),
    ("1\n1\n2\n1.0\n1 1 1 1\n", "line 5"),
    ("1\n1\n-2\n1.0\n1 1 1 2 1.0\n", "line 5"),
])
def test_malformed_sdpa(text, where):
    with pytest.raises(ParseError, match=where):
        io.parse_sdpa(text)


def test_comments_header_annotations_and_diagonal_blocks():
    prog = io.read_sdpa(DATA / "diag_block.dat-s")
    assert prog.block_sizes == [2, 1, 1]
    assert prog.offset == 0.5
    assert prog.b.tolist() == [1.0, 2.0]
    assert prog.constraints[0][0][1][0, 0] == 1.0


def test_broyden_block_program_round_trip(tmp_path):
    q = broyden_poly(3)
    prog = build_alpha_sdsos_program(q, balanced_partition(monomial_basis(3, 2).N, 3))
    io.write_sdpa(prog, tmp_path / "b.dat-s")
    back = io.read_sdpa(tmp_path / "b.dat-s")
    assert io.programs_equal(prog, back)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_random_program_round_trip(seed):
    rng = np.random.default_rng(seed)
    sizes = [int(k) for k in rng.integers(1, 4, int(rng.integers(1, 4)))]
    C = []
    for k in sizes:
        M = rng.standard_normal((k, k)) * 10.0 ** rng.integers(-8, 8)
        C.append(M + M.T)
    cons = []
    for _ in range(int(rng.integers(0, 4))):
        b = int(rng.integers(0, len(sizes)))
        M = rng.standard_normal((sizes[b], sizes[b]))
        cons.append(({b: M + M.T}, float(rng.standard_normal())))
    prog = ConicProgram(sizes, C, cons, offset=float(rng.standard_normal()))
    assert io.programs_equal(prog, io.parse_sdpa(io.format_sdpa(prog)))


def test_read_example_matrix():
    A = io.read_matrix(DATA / "ex2.mat")
    assert A.shape == (4, 4) and np.array_equal(A, EX2_X)


@pytest.mark.parametrize("text", [
    "2\n1 2\n3 4\n",
    "2\n1 2\n2\n",
    "2\n1 x\nx 1\n",
    "3\n1 0 0\n0 1 0\n",
])
def test_bad_matrices(text):
    with pytest.raises(ParseError):
        io.parse_matrix(text)


def test_matrix_round_trip():
    A = np.array([[1 / 3, 0.1], [0.1, 2e-17]])
    assert np.array_equal(io.parse_matrix(io.format_matrix(A)), A)


def test_poly_file():
    p = io.parse_poly("nvars 1\n1 4\n-1 2\n")
    assert p.terms == {(4,): 1.0, (2,): -1.0}
    assert io.parse_poly(io.format_poly(p)).terms == p.terms
    assert io.read_poly(DATA / "quartic.poly").terms == p.terms
    with pytest.raises(ParseError):
        io.parse_poly("nvars 2\n1 4\n")
    with pytest.raises(ParseError):
        io.parse_poly("vars 2\n")


def test_polymatrix_file():
    P = io.read_polymatrix(DATA / "shift3.pmat")
    assert len(P) == 3
    assert P[0][1] is P[1][0]
    assert P[2][2].terms == {(2, 0): 1.0, (0, 2): 25.0}
    with pytest.raises(ParseError, match="row <= col"):
        io.parse_polymatrix("nvars 1\nsize 2\n2 1 1.0 0\n")


def test_partitions():
    assert io.parse_partition("2 2 2").sizes == (2, 2, 2)
    assert io.parse_partition("# blocks\n1 2\n3\n").sizes == (1, 2, 3)
    assert io.read_partition(DATA / "three_pairs.part").sizes == (2, 2, 2)
    assert io.partition_arg(str(DATA / "three_pairs.part")).sizes == (2, 2, 2)
    assert io.partition_arg("1 3").sizes == (1, 3)
    with pytest.raises(ParseError):
        io.parse_partition("2 0")
    with pytest.raises(ParseError):
        io.partition_arg("no/such/file")
