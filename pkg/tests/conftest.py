import numpy as np
import pytest

from cavityduo import LabCoefficients, ModelParams


@pytest.fixture
def weak_params():
    """Two degenerate modes, weak direct coupling, very different losses."""
    return ModelParams(omega_a=1.0, omega_b=1.0, g=0.05)


@pytest.fixture
def weak_coeffs():
    return LabCoefficients(
        k_aa=0.01, k_ab=0.0, k_ba=0.0, k_bb=0.5,
        d_aa=0.0, d_ab=0.0, d_ba=0.0, d_bb=0.0,
    )


@pytest.fixture
def dfs_params():
    return ModelParams(omega_a=1.0, omega_b=1.0, g=0.0)


@pytest.fixture
def dfs_coeffs():
    return LabCoefficients(
        k_aa=0.1, k_ab=0.1, k_ba=0.1, k_bb=0.1,
        d_aa=0.0, d_ab=0.0, d_ba=0.0, d_bb=0.0,
    )


def random_octet(rng: np.random.Generator):
    """Random parameter set for propagator identities (no physicality bias)."""
    params = ModelParams(
        omega_a=rng.uniform(0.5, 1.5),
        omega_b=rng.uniform(0.5, 1.5),
        g=rng.uniform(0.0, 0.3),
    )
    coeffs = LabCoefficients(
        k_aa=rng.uniform(0.0, 0.6),
        k_ab=rng.uniform(-0.2, 0.2),
        k_ba=rng.uniform(-0.2, 0.2),
        k_bb=rng.uniform(0.0, 0.6),
        d_aa=rng.uniform(-0.3, 0.3),
        d_ab=rng.uniform(-0.3, 0.3),
        d_ba=rng.uniform(-0.3, 0.3),
        d_bb=rng.uniform(-0.3, 0.3),
    )
    return params, coeffs
