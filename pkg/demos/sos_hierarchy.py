"""Lower bounds on a Broyden-type quartic from SOS and its block-SDSOS restrictions.

Coarser partitions of the monomial basis give tighter bounds; two blocks
already recover the full SOS bound.
"""

import sys
import time

from blockfw.partition import balanced_partition, trivial_partition
from blockfw.sos import broyden_poly, monomial_basis, sos_minimum

n = int(sys.argv[1]) if len(sys.argv) > 1 else 3
q = broyden_poly(n)
N = monomial_basis(n, 2).N
print(f"{n} variables, {N} monomials in the basis")
rows = [("full SOS", None), ("2 blocks", balanced_partition(N, 2)),
        ("3 blocks", balanced_partition(N, 3)), ("scalar blocks", trivial_partition(N))]
for name, alpha in rows:
    t = time.perf_counter()
    _, sol = sos_minimum(q, alpha)
    print(f"{name:>14}: gamma = {sol.objective:10.4f}  ({sol.status}, {sol.iterations} iterations, "
          f"{time.perf_counter() - t:.1f}s)")
