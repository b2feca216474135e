"""Membership in FW(alpha, 2) for a 6x6 PSD matrix under three partitions.

The matrix is PSD and decomposes over pairs of 2x2 blocks, but not over
pairs of scalars: finer partitions give strictly smaller cones.
"""

import numpy as np

from blockfw.cone import certify_membership, check_sdd, dual_membership, validate_decomposition
from blockfw.linalg import min_eig
from blockfw.partition import Partition, trivial_partition

A = np.array([
    [22, -4, -3, -7, 14, 18],
    [-4, 15, -1, -13, -8, -9],
    [-3, -1, 29, 2, 4, -21],
    [-7, -13, 2, 27, 4, 3],
    [14, -8, 4, 4, 15, 12],
    [18, -9, -21, 3, 12, 37],
], dtype=float)

print(f"smallest eigenvalue {min_eig(A):.4f}")
for alpha in [Partition((3, 3)), Partition((2, 2, 2)), trivial_partition(6)]:
    res = certify_membership(A, alpha)
    line = f"partition {alpha.sizes}: {res.status}"
    if res.is_member:
        rep = validate_decomposition(res.decomposition, A)
        line += f", {len(res.decomposition.blocks)} pair blocks, residual {rep.residual:.1e}"
    elif res.separator is not None:
        Y = res.separator
        ok, _, _ = dual_membership(Y, alpha)
        line += f", separator <Y, A> = {np.sum(Y * A):.4f}, Y in dual cone: {ok}"
    print(line)

sdd, _ = check_sdd(A)
print(f"scaled diagonally dominant: {sdd}")
