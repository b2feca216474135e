"""How much identity must be added to a 3x3 polynomial matrix before it has each kind of certificate.

The block-SDSOS cone with the natural partition needs almost no more shift
than full SOS; the scalar SDSOS cone needs visibly more, so the shift 0.315
separates them.
"""

from pathlib import Path

from blockfw import io
from blockfw.partition import trivial_partition
from blockfw.sos import check_matrix_shift

P = io.read_polymatrix(Path(__file__).parent.parent / "tests" / "data" / "shift3.pmat")
shift = 0.315
for name, alpha in [("SOS", None), ("natural blocks", "natural"), ("scalar SDSOS", trivial_partition(9))]:
    res = check_matrix_shift(P, shift, alpha)
    print(f"{name:>15}: least shift {res.min_shift:.6f}, shift {shift} -> {res.status}")
