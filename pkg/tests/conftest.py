import math

import numpy as np
import pytest

from spinflip_lgi.qubit import prepare_linear_polarization

V_PM = 0.853
V_HV = 0.9997
INTRINSIC_MP = (1 - math.sqrt(2)) / 4


@pytest.fixture
def halfway_state():
    """Input polarization halfway between V and P."""
    return prepare_linear_polarization(np.pi / 8)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
