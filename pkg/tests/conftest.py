import sys
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from icmech import Mechanism
from icmech.fixtures import fx1, fx2, fx3, fx4, fx5


@pytest.fixture(scope="session")
def inst_fx1():
    return fx1()


@pytest.fixture(scope="session")
def inst_fx2():
    return fx2()


@pytest.fixture(scope="session")
def inst_fx3():
    return fx3()


@pytest.fixture(scope="session")
def inst_fx4():
    return fx4()


@pytest.fixture(scope="session")
def inst_fx5():
    return fx5()


def matching_mechanism(space) -> Mechanism:
    """Choose the first option iff the two reports agree (by position)."""
    m, n = space.shape
    arr = np.array([[Fraction(1) if i == j else Fraction(0) for j in range(n)]
                    for i in range(m)], dtype=object)
    return Mechanism(space, arr)


@pytest.fixture
def xstar(inst_fx1):
    return matching_mechanism(inst_fx1.space)
