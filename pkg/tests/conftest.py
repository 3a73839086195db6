import numpy as np
import pytest

from flatsat import ConstraintParams, synthesize_certificate

# initial state used by the gamma-comparison regulation studies
CANONICAL_X0 = np.array([-3.77, -0.46, -3.60, 0.94, -0.24, 2.31])


@pytest.fixture(scope="session")
def params():
    return ConstraintParams()


@pytest.fixture(scope="session")
def cert075(params):
    return synthesize_certificate(params, alpha=0.75, gamma=1.0)


@pytest.fixture(scope="session")
def cert125(params):
    return synthesize_certificate(params, alpha=1.25, gamma=1.0)
