"""Contiguous block partitions of a symmetric matrix dimension.

Block and pair indices are 0-based throughout the package. A partition
``(k_1, ..., k_p)`` splits ``range(n)`` into consecutive index ranges.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations

import numpy as np

from .errors import DimensionError, PartitionError


@dataclass(frozen=True)
class Partition:
    sizes: tuple[int, ...]
    offsets: tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        sizes = tuple(self.sizes)
        if not sizes:
            raise PartitionError("a partition needs at least one block")
        for k in sizes:
            if int(k) != k or k < 1:
                raise PartitionError(f"block sizes must be positive integers, got {k!r}")
        sizes = tuple(int(k) for k in sizes)
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "offsets", tuple(np.concatenate([[0], np.cumsum(sizes)]).tolist()))

    @property
    def n(self) -> int:
        return self.offsets[-1]

    @property
    def p(self) -> int:
        return len(self.sizes)

    def __len__(self):
        return len(self.sizes)

    def __str__(self):
        return " ".join(str(k) for k in self.sizes)

    def block(self, i: int) -> range:
        """Index range of block ``i``."""
        return range(self.offsets[i], self.offsets[i + 1])

    def pair_indices(self, i: int, j: int) -> np.ndarray:
        """Row indices selected by the truncation onto blocks ``i`` and ``j`` (in that order)."""
        return np.r_[self.offsets[i]:self.offsets[i + 1], self.offsets[j]:self.offsets[j + 1]]

    @cached_property
    def pairs(self) -> tuple[tuple[int, int], ...]:
        return tuple(combinations(range(self.p), 2))

    @property
    def is_trivial(self) -> bool:
        return all(k == 1 for k in self.sizes)

    @property
    def is_homogeneous(self) -> bool:
        return len(set(self.sizes)) == 1


@dataclass(frozen=True)
class SubPartitionWitness:
    """Boundaries mapping fine blocks onto coarse blocks.

    Coarse block ``i`` is the union of fine blocks
    ``merge_bounds[i] .. merge_bounds[i + 1] - 1`` (0-based, so
    ``merge_bounds[0] == 0`` and ``merge_bounds[-1] == q``).
    """

    merge_bounds: tuple[int, ...]

    def groups(self) -> list[range]:
        b = self.merge_bounds
        return [range(b[i], b[i + 1]) for i in range(len(b) - 1)]


def make_partition(sizes) -> Partition:
    if isinstance(sizes, Partition):
        return sizes
    return Partition(tuple(sizes))


def trivial_partition(n: int) -> Partition:
    return Partition((1,) * n)


def balanced_partition(n: int, p: int) -> Partition:
    """``p`` blocks of sizes ``floor(n/p)`` and ``ceil(n/p)``, the smaller ones first.

    Uses as many blocks of the smaller size as possible, which for sizes
    differing by one pins down the multiset uniquely.
    """
    if not 1 <= p <= n:
        raise PartitionError(f"need 1 <= p <= n, got n={n}, p={p}")
    small = n // p
    n_large = n - small * p
    return Partition((small,) * (p - n_large) + (small + 1,) * n_large)


def is_sub_partition(beta: Partition, alpha: Partition) -> SubPartitionWitness | None:
    """Witness that ``beta`` refines ``alpha`` (or equals it), else ``None``."""
    if beta.n != alpha.n:
        raise DimensionError(f"partitions cover different dimensions: {beta.n} vs {alpha.n}")
    fine_offsets = {off: idx for idx, off in enumerate(beta.offsets)}
    bounds = []
    # contiguous blocks: alpha's boundaries must all be boundaries of beta
    for off in alpha.offsets:
        if off not in fine_offsets:
            return None
        bounds.append(fine_offsets[off])
    return SubPartitionWitness(tuple(bounds))


def pair_row_ranges(alpha: Partition) -> list[tuple[tuple[int, int], tuple[range, range]]]:
    """For each pair ``i < j`` the two index ranges picked out by ``E_ij``."""
    if alpha.p < 2:
        raise PartitionError("a single-block partition has no block pairs")
    return [((i, j), (alpha.block(i), alpha.block(j))) for i, j in alpha.pairs]


def truncate(A: np.ndarray, alpha: Partition, i: int, j: int) -> np.ndarray:
    """Principal submatrix ``E_ij A E_ij^T`` on blocks ``i`` and ``j``."""
    idx = alpha.pair_indices(i, j)
    return A[np.ix_(idx, idx)]


def lift(X: np.ndarray, alpha: Partition, i: int, j: int) -> np.ndarray:
    """``E_ij^T X E_ij`` as a dense ``n x n`` matrix."""
    idx = alpha.pair_indices(i, j)
    out = np.zeros((alpha.n, alpha.n))
    out[np.ix_(idx, idx)] = X
    return out


def block_permutation_indices(alpha: Partition, perm) -> np.ndarray:
    """Scalar index order realising the block permutation ``perm``.

    ``perm[new_pos] = old_block``; the result ``idx`` satisfies
    ``(P A P^T) = A[np.ix_(idx, idx)]``.
    """
    perm = [int(q) for q in perm]
    if sorted(perm) != list(range(alpha.p)):
        raise PartitionError(f"{perm} is not a permutation of 0..{alpha.p - 1}")
    return np.concatenate([np.arange(alpha.offsets[q], alpha.offsets[q + 1]) for q in perm])


def block_permute(alpha: Partition, perm, A: np.ndarray) -> tuple[np.ndarray, Partition]:
    """Apply the block permutation ``P_alpha`` to ``A``; also permute the partition."""
    A = np.asarray(A, dtype=float)
    if A.shape != (alpha.n, alpha.n):
        raise DimensionError(f"matrix of shape {A.shape} does not match partition of size {alpha.n}")
    idx = block_permutation_indices(alpha, perm)
    new_alpha = Partition(tuple(alpha.sizes[q] for q in perm))
    return A[np.ix_(idx, idx)], new_alpha


def inverse_permutation(perm) -> list[int]:
    inv = [0] * len(perm)
    for new, old in enumerate(perm):
        inv[int(old)] = new
    return inv


def compositions(n: int):
    """All partitions (ordered compositions) of ``n``; 2**(n-1) of them."""
    for mask in range(2 ** (n - 1)):
        sizes, run = [], 1
        for bit in range(n - 1):
            if mask >> bit & 1:
                sizes.append(run)
                run = 1
            else:
                run += 1
        sizes.append(run)
        yield Partition(tuple(sizes))
