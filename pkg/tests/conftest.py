import pytest

from threshold_risk.domain.sequences import (
    DEFAULT_LAMBDA,
    DEFAULT_LENGTH,
    CalibratedEnsemble,
    calibrate_ensemble,
    default_p_grid,
)


@pytest.fixture(scope="session")
def default_ensemble() -> CalibratedEnsemble:
    """N = 101、λ = 0.04、p ∈ [1/3, 75] の 50 点で較正した既定アンサンブル。"""
    return calibrate_ensemble(DEFAULT_LENGTH, DEFAULT_LAMBDA, default_p_grid(), sigma_w=1.0)
