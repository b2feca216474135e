"""How far unit-norm members of the dual cone can sit from FW(alpha, 2) and from the PSD cone."""

from blockfw.bounds import dual_hat, lower_bound_dist, upper_bound_dist, worst_case_witness
from blockfw.cone import project_fw
from blockfw.partition import Partition

print(" n  p  upper    lower    witness  projection")
for n, p in [(4, 2), (6, 3), (8, 4), (12, 4), (12, 6)]:
    G, dist = worst_case_witness(n, p)
    alpha = Partition((n // p,) * p)
    proj = project_fw(G, alpha, max_iters=3000).distance
    _, res = dual_hat(G, alpha)
    print(f"{n:2d} {p:2d}  {float(upper_bound_dist(p)):.5f}  {lower_bound_dist(n, p):.5f}  {dist:.5f}  "
          f"{proj:.5f} (dual_hat residual {res:.5f})")
