import numpy as np
import pytest

EX2_X = np.array([[6.0, 8, -2, -2], [8, 16, 1, 1], [-2, 1, 10, -1], [-2, 1, -1, 24]])
EX2_BLOCKS = {
    (0, 1): [[4.5, 8], [8, 14.5]],
    (0, 2): [[1, -2], [-2, 6]],
    (0, 3): [[0.5, -2], [-2, 12]],
    (1, 2): [[1, 1], [1, 2]],
    (1, 3): [[0.5, 1], [1, 6]],
    (2, 3): [[2, -1], [-1, 6]],
}
COUNTER6 = np.array([
    [22, -4, -3, -7, 14, 18],
    [-4, 15, -1, -13, -8, -9],
    [-3, -1, 29, 2, 4, -21],
    [-7, -13, 2, 27, 4, 3],
    [14, -8, 4, 4, 15, 12],
    [18, -9, -21, 3, 12, 37],
], dtype=float)


@pytest.fixture
def ex2():
    from blockfw.cone import FwDecomposition
    return EX2_X.copy(), FwDecomposition((1, 1, 1, 1), {k: np.array(v, dtype=float) for k, v in EX2_BLOCKS.items()})


@pytest.fixture
def counter6():
    return COUNTER6.copy()
