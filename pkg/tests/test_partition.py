import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blockfw.errors import DimensionError, PartitionError
from blockfw.partition import (
    Partition,
    balanced_partition,
    block_permute,
    compositions,
    inverse_permutation,
    is_sub_partition,
    make_partition,
    pair_row_ranges,
)


def brute_force_witness(beta, alpha):
    """Search every increasing boundary sequence (0-based) for a refinement witness."""
    q, p = beta.p, alpha.p
    for inner in itertools.combinations(range(1, q), p - 1):
        m = (0, *inner, q)
        if all(sum(beta.sizes[m[i]:m[i + 1]]) == alpha.sizes[i] for i in range(p)):
            return m
    return None


def test_make_partition_examples():
    a = make_partition([4, 2])
    assert (a.p, a.n) == (2, 6)
    assert a.offsets == (0, 4, 6)
    t = make_partition([1] * 6)
    assert t.n == 6 and t.is_trivial
    s = make_partition([5])
    assert (s.p, s.n) == (1, 5)


@pytest.mark.parametrize("bad", [[], [0, 2], [3, -1], [1.5]])
def test_make_partition_rejects(bad):
    with pytest.raises(PartitionError):
        make_partition(bad)


def test_balanced_partition_matches_enumeration():
    n, p = 10, 4
    lo, hi = n // p, -(-n // p)
    candidates = [c for c in itertools.combinations_with_replacement([lo, hi], p) if sum(c) == n]
    # the rule: as many small blocks as possible
    best = max(candidates, key=lambda c: c.count(lo))
    assert balanced_partition(n, p).sizes == tuple(sorted(best)) == (2, 2, 3, 3)


def test_balanced_partition_trivial_cases():
    assert balanced_partition(6, 3).sizes == (2, 2, 2)
    assert balanced_partition(6, 6).sizes == (1,) * 6
    with pytest.raises(PartitionError):
        balanced_partition(3, 4)


@given(st.integers(1, 60), st.data())
def test_balanced_partition_properties(n, data):
    p = data.draw(st.integers(1, n))
    a = balanced_partition(n, p)
    assert a.n == n and a.p == p
    assert set(a.sizes) <= {n // p, -(-n // p)}
    assert list(a.sizes) == sorted(a.sizes)


def test_sub_partition_examples():
    w = is_sub_partition(Partition((2, 2, 2)), Partition((4, 2)))
    assert w.merge_bounds == (0, 2, 3)  # 1-based: (1, 3, 4)
    w = is_sub_partition(Partition((1,) * 6), Partition((2, 2, 2)))
    assert w.merge_bounds == (0, 2, 4, 6)
    assert is_sub_partition(Partition((3, 3)), Partition((4, 2))) is None
    assert brute_force_witness(Partition((3, 3)), Partition((4, 2))) is None
    with pytest.raises(DimensionError):
        is_sub_partition(Partition((1, 1)), Partition((3,)))


def test_sub_partition_identity_witness():
    a = Partition((2, 3, 1))
    assert is_sub_partition(a, a).merge_bounds == (0, 1, 2, 3)


@pytest.mark.parametrize("n", range(1, 9))
def test_sub_partition_agrees_with_brute_force_and_is_partial_order(n):
    parts = list(compositions(n))
    assert len(parts) == 2 ** (n - 1)
    rel = {}
    for a, b in itertools.product(parts, repeat=2):
        w = is_sub_partition(a, b)
        expected = brute_force_witness(a, b) if a.p >= b.p else None
        assert (w.merge_bounds if w else None) == expected
        rel[a, b] = w is not None
    for a in parts:
        assert rel[a, a]
    for a, b in itertools.product(parts, repeat=2):
        if a != b and rel[a, b]:
            assert not rel[b, a]
    if n <= 6:
        for a, b, c in itertools.product(parts, repeat=3):
            if rel[a, b] and rel[b, c]:
                assert rel[a, c]


def test_pair_row_ranges():
    (pair, (r1, r2)), = pair_row_ranges(Partition((4, 2)))
    assert pair == (0, 1) and r1 == range(0, 4) and r2 == range(4, 6)
    assert len(pair_row_ranges(Partition((2, 2, 2)))) == 3
    assert len(pair_row_ranges(Partition((1, 1, 1, 1)))) == 6
    with pytest.raises(PartitionError):
        pair_row_ranges(Partition((5,)))


@given(st.lists(st.integers(1, 4), min_size=2, max_size=7))
def test_pair_ranges_cover_each_block_p_minus_1_times(sizes):
    a = Partition(tuple(sizes))
    counts = np.zeros(a.n, dtype=int)
    for _, (r1, r2) in pair_row_ranges(a):
        counts[list(r1)] += 1
        counts[list(r2)] += 1
    assert np.all(counts == a.p - 1)


def test_block_permute_examples():
    rng = np.random.default_rng(0)
    a = Partition((4, 2))
    A = rng.standard_normal((6, 6))
    A = A + A.T
    same, a2 = block_permute(a, [0, 1], A)
    assert np.array_equal(same, A) and a2 == a
    D1, D2 = np.diag([1.0, 2, 3, 4]), np.array([[5.0, 6], [6, 7]])
    B = np.zeros((6, 6))
    B[:4, :4], B[4:, 4:] = D1, D2
    P, a3 = block_permute(a, [1, 0], B)
    assert a3.sizes == (2, 4)
    assert np.array_equal(P[:2, :2], D2) and np.array_equal(P[2:, 2:], D1)
    assert not P[:2, 2:].any()
    with pytest.raises(PartitionError):
        block_permute(a, [0, 0], A)


@settings(max_examples=50)
@given(st.lists(st.integers(1, 3), min_size=1, max_size=5), st.randoms(use_true_random=False), st.integers(0, 2**32 - 1))
def test_block_permute_roundtrip_and_spectrum(sizes, rnd, seed):
    a = Partition(tuple(sizes))
    perm = list(range(a.p))
    rnd.shuffle(perm)
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((a.n, a.n))
    A = A + A.T
    P, a2 = block_permute(a, perm, A)
    back, a3 = block_permute(a2, inverse_permutation(perm), P)
    assert a3 == a
    assert np.array_equal(back, A)
    assert np.allclose(np.linalg.eigvalsh(P), np.linalg.eigvalsh(A), atol=1e-10)
