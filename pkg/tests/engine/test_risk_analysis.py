import math

import numpy as np
import pytest
from scipy import integrate, special

from threshold_risk.domain.estimators import (
    EstimatorParams,
    HardThresholdParams,
    PiecewiseLinearParams,
    SemisoftParams,
    always_zero_estimator,
    identity_estimator,
)
from threshold_risk.engine.risk_analysis import (
    NARROW_RAMP_WIDTH,
    FisherInfo,
    QuadratureError,
    StandardizedArgs,
    bias,
    bias_deriv,
    bias_deriv_ht,
    bias_deriv_ss,
    bias_ht,
    bias_ss,
    check_bounds,
    crb_biased_scalar,
    crb_unbiased,
    crb_unbiased_total,
    f_ss,
    fisher_information,
    mse,
    mse_ht,
    mse_ht_terms,
    mse_linear,
    mse_pl,
    mse_pl_grid,
    mse_ss,
    mse_ss_grid,
    oracle_bound,
    oracle_gain,
    quadrature_oracle_bias,
    quadrature_oracle_mse,
    risk_curve,
    truncated_second_moment,
)

SIGMA = 1.0
X_GRID = np.arange(0.0, 8.0 + 1e-12, 0.25)


def _standard_estimators(sigma_w: float = SIGMA) -> list[EstimatorParams]:
    estimators: list[EstimatorParams] = []
    for t in (0.5, 1.0, 2.0, 3.0):
        threshold = t * sigma_w
        estimators.append(HardThresholdParams(threshold))
        estimators.extend(PiecewiseLinearParams(a, threshold) for a in (0.0, 0.25, 0.5, 0.75, 1.0))
        estimators.extend(SemisoftParams(r * threshold, threshold) for r in (0.0, 0.25, 0.5, 0.75))
    return estimators


class TestPointValues:
    def test_mse_ht_at_zero(self) -> None:
        """mse_ht(0; T=2σ) = (1 − Γ_inc(2, 3/2))σ²。"""
        assert mse_ht(0.0, 2.0, 1.0) == pytest.approx(0.26146, abs=1e-4)
        assert mse_ht(0.0, 2.0, 1.0) == pytest.approx(1.0 - special.gammainc(1.5, 2.0), abs=1e-14)

    def test_bias_ht_at_threshold(self) -> None:
        assert bias_ht(2.0, 2.0, 1.0) == pytest.approx(-0.6011, abs=1e-3)

    def test_crb_biased_at_zero(self) -> None:
        b = bias_ht(0.0, 2.0, 1.0)
        d = bias_deriv_ht(0.0, 2.0, 1.0)
        assert crb_biased_scalar(b, d, 1.0) == pytest.approx(0.06836, abs=1e-4)

    def test_scales_with_sigma(self) -> None:
        sigma = 3.0
        assert mse_ht(0.0, 2.0 * sigma, sigma) == pytest.approx(0.261464 * sigma**2, rel=1e-5)
        assert bias_ht(2.0 * sigma, 2.0 * sigma, sigma) == pytest.approx(-0.601129 * sigma, rel=1e-5)

    def test_zero_threshold_is_ml(self) -> None:
        assert bias_ht(1.7, 0.0, 1.0) == 0.0
        assert mse_ht(1.7, 0.0, 1.0) == pytest.approx(1.0, abs=1e-15)

    def test_ht_bias_at_threshold_one(self) -> None:
        expected = (1.0 - math.exp(-2.0)) / math.sqrt(2.0 * math.pi) - (0.5 - 0.5 * math.erfc(math.sqrt(2.0)))
        assert bias_ht(1.0, 1.0, 1.0) == pytest.approx(expected, abs=1e-14)


class TestValidation:
    def test_negative_threshold_raises(self) -> None:
        with pytest.raises(ValueError, match="threshold"):
            bias_ht(0.0, -1.0, 1.0)

    def test_nonpositive_sigma_raises(self) -> None:
        with pytest.raises(ValueError, match="sigma_w"):
            mse_ht(0.0, 1.0, 0.0)

    def test_alpha_out_of_range_raises(self) -> None:
        with pytest.raises(ValueError, match="alpha"):
            mse_pl_grid(0.0, 1.5, 1.0, 1.0)

    def test_semisoft_inner_above_outer_raises(self) -> None:
        with pytest.raises(ValueError, match="inner_threshold"):
            mse_ss_grid(0.0, 2.0, 1.0, 1.0)


class TestClosedFormAgainstQuadrature:
    @pytest.mark.parametrize("estimator", _standard_estimators(), ids=lambda e: f"{e.kind.label}-{e.as_dict()}")
    def test_bias_and_mse(self, estimator: EstimatorParams) -> None:
        b = np.asarray(bias(estimator, X_GRID, SIGMA))
        m = np.asarray(mse(estimator, X_GRID, SIGMA))
        for i, x in enumerate(X_GRID):
            assert b[i] == pytest.approx(quadrature_oracle_bias(estimator, float(x), SIGMA), abs=1e-9)
            assert m[i] == pytest.approx(quadrature_oracle_mse(estimator, float(x), SIGMA), abs=1e-9)

    def test_narrow_ramp_matches_quadrature(self) -> None:
        estimator = SemisoftParams(1.9, 2.0)
        for x in (0.0, 1.0, 1.95, 3.0):
            assert bias_ss(x, estimator, SIGMA) == pytest.approx(quadrature_oracle_bias(estimator, x, SIGMA), abs=1e-9)
            assert mse_ss(x, estimator, SIGMA) == pytest.approx(quadrature_oracle_mse(estimator, x, SIGMA), abs=1e-9)

    def test_non_unit_sigma(self) -> None:
        sigma = 0.5
        estimator = SemisoftParams(0.5, 1.0)
        for x in (0.0, 0.6, 2.0):
            assert mse_ss(x, estimator, sigma) == pytest.approx(
                quadrature_oracle_mse(estimator, x, sigma), abs=1e-9 * sigma**2
            )

    def test_ramp_integral_matches_quadrature(self) -> None:
        estimator = SemisoftParams(1.0, 2.0)
        beta = estimator.beta
        for x in (0.0, 1.5, 3.0):
            expected, _ = integrate.quad(
                lambda y: (beta**2 * (y - 1.0) ** 2 - 2 * x * beta * (y - 1.0))
                * math.exp(-0.5 * (y - x) ** 2)
                / math.sqrt(2 * math.pi),
                1.0,
                2.0,
                epsabs=1e-14,
            )
            assert f_ss(x, estimator, SIGMA) == pytest.approx(expected, abs=1e-11)


class TestSymmetryAndLimits:
    @pytest.mark.parametrize("estimator", _standard_estimators()[::3], ids=lambda e: e.kind.label)
    def test_bias_odd_mse_even(self, estimator: EstimatorParams) -> None:
        x = np.linspace(0.0, 6.0, 25)
        assert np.allclose(np.asarray(bias(estimator, -x, SIGMA)), -np.asarray(bias(estimator, x, SIGMA)), atol=1e-12)
        assert np.allclose(np.asarray(mse(estimator, -x, SIGMA)), np.asarray(mse(estimator, x, SIGMA)), atol=1e-12)

    def test_pl_with_zero_slope_is_ht(self) -> None:
        for t in (0.5, 2.0, 3.0):
            pl = np.asarray(mse_pl(X_GRID, PiecewiseLinearParams(0.0, t), SIGMA))
            assert np.allclose(pl, np.asarray(mse_ht(X_GRID, t, SIGMA)), rtol=0.0, atol=1e-12)

    def test_pl_with_unit_slope_is_ml(self) -> None:
        estimator = identity_estimator()
        assert np.all(np.asarray(mse(estimator, X_GRID, SIGMA)) == 1.0)
        assert np.all(np.asarray(bias(estimator, X_GRID, SIGMA)) == 0.0)

    def test_semisoft_degenerate_is_ht(self) -> None:
        estimator = SemisoftParams(2.0, 2.0)
        assert np.array_equal(np.asarray(mse_ss(X_GRID, estimator, SIGMA)), np.asarray(mse_ht(X_GRID, 2.0, SIGMA)))
        assert np.array_equal(np.asarray(bias_ss(X_GRID, estimator, SIGMA)), np.asarray(bias_ht(X_GRID, 2.0, SIGMA)))
        assert np.all(np.asarray(f_ss(X_GRID, estimator, SIGMA)) == 0.0)

    def test_semisoft_grid_at_equal_thresholds_is_ht(self) -> None:
        values = np.asarray(mse_ss_grid(X_GRID, 2.0, 2.0, SIGMA))
        assert np.array_equal(values, np.asarray(mse_ht(X_GRID, 2.0, SIGMA)))

    def test_semisoft_continuous_across_narrow_switch(self) -> None:
        t = 3.0
        below = mse_ss_grid(X_GRID, t - NARROW_RAMP_WIDTH * (1 - 1e-9), t, SIGMA)
        above = mse_ss_grid(X_GRID, t - NARROW_RAMP_WIDTH * (1 + 1e-9), t, SIGMA)
        assert np.allclose(np.asarray(below), np.asarray(above), atol=1e-9)

    def test_infinite_threshold_gives_squared_value(self) -> None:
        estimator = always_zero_estimator()
        x = np.array([0.0, 0.5, 3.0, 8.0])
        assert np.allclose(np.asarray(mse(estimator, x, SIGMA)), x**2, atol=1e-12)
        assert np.allclose(np.asarray(bias(estimator, x, SIGMA)), -x, atol=1e-12)
        assert np.allclose(np.asarray(bias_deriv(estimator, x, SIGMA)), -1.0, atol=1e-12)

    def test_large_threshold_approaches_squared_value(self) -> None:
        assert mse_ht(3.0, 40.0, 1.0) == pytest.approx(9.0, abs=1e-9)

    def test_mse_ht_sign_structure(self) -> None:
        """T = 2σ で x = 0 では σ² を下回り、[T/2, 2T] のどこかで上回り、8σ ではほぼ σ²。"""
        assert mse_ht(0.0, 2.0, 1.0) < 1.0
        middle = np.asarray(mse_ht(np.linspace(1.0, 4.0, 61), 2.0, 1.0))
        assert np.any(middle > 1.0)
        assert abs(mse_ht(8.0, 2.0, 1.0) - 1.0) < 0.01


class TestBiasDerivative:
    @pytest.mark.parametrize("threshold", [0.5, 1.0, 2.0, 3.0])
    def test_ht_matches_central_difference(self, threshold: float) -> None:
        h = 1e-5
        for x in X_GRID:
            numeric = (bias_ht(x + h, threshold, SIGMA) - bias_ht(x - h, threshold, SIGMA)) / (2 * h)
            analytic = bias_deriv_ht(x, threshold, SIGMA)
            assert analytic == pytest.approx(numeric, rel=1e-6, abs=1e-6)

    @pytest.mark.parametrize("inner", [0.0, 0.5, 1.0, 1.5, 1.95])
    def test_ss_matches_central_difference(self, inner: float) -> None:
        estimator = SemisoftParams(inner, 2.0)
        h = 1e-5
        for x in X_GRID:
            numeric = (bias_ss(x + h, estimator, SIGMA) - bias_ss(x - h, estimator, SIGMA)) / (2 * h)
            assert bias_deriv_ss(x, estimator, SIGMA) == pytest.approx(numeric, rel=1e-6, abs=1e-6)

    def test_pl_scales_ht(self) -> None:
        estimator = PiecewiseLinearParams(0.25, 2.0)
        assert bias_deriv(estimator, 1.0, SIGMA) == pytest.approx(0.75 * bias_deriv_ht(1.0, 2.0, SIGMA))


class TestMseDecomposition:
    def test_terms_sum_to_mse(self) -> None:
        ml, penalty, reduction = mse_ht_terms(X_GRID, 2.0, SIGMA)
        assert np.allclose(ml + penalty + reduction, np.asarray(mse_ht(X_GRID, 2.0, SIGMA)), atol=1e-12)

    def test_term_signs(self) -> None:
        _, penalty, reduction = mse_ht_terms(X_GRID, 2.0, SIGMA)
        assert np.all(penalty >= -1e-15)
        assert np.all(reduction <= 1e-15)

    def test_truncated_moment_full_line(self) -> None:
        assert truncated_second_moment(1.5, math.inf, 1.0) == pytest.approx(1.5**2 + 1.0, abs=1e-12)


class TestBounds:
    def test_fisher_information(self) -> None:
        info = fisher_information(2.0)
        assert info == FisherInfo(0.25)
        assert np.array_equal(info.matrix(3), 0.25 * np.eye(3))

    def test_crb_unbiased(self) -> None:
        assert crb_unbiased(2.0) == 4.0
        assert crb_unbiased_total(101, 1.0) == 101.0

    def test_oracle_values(self) -> None:
        assert oracle_bound(0.0, 1.0) == 0.0
        assert oracle_bound(1.0, 1.0) == pytest.approx(0.5)
        assert oracle_gain(0.0, 1.0) == 0.0
        assert oracle_gain(100.0, 1.0) == pytest.approx(1.0, abs=1e-3)

    def test_oracle_is_best_linear(self) -> None:
        x = np.linspace(0.0, 5.0, 11)
        assert np.allclose(np.asarray(mse_linear(x, oracle_gain(x, 1.0), 1.0)), np.asarray(oracle_bound(x, 1.0)))
        assert np.all(np.asarray(mse_linear(x, 0.9, 1.0)) >= np.asarray(oracle_bound(x, 1.0)) - 1e-15)

    @pytest.mark.parametrize("estimator", _standard_estimators(), ids=lambda e: e.kind.label)
    def test_mse_above_biased_crb(self, estimator: EstimatorParams) -> None:
        points = risk_curve(estimator, SIGMA, X_GRID)
        assert all(p.mse >= p.crb_biased - 1e-9 for p in points)

    @pytest.mark.parametrize("threshold", [0.5, 1.0, 2.0, 3.0])
    def test_ht_mse_above_oracle(self, threshold: float) -> None:
        points = risk_curve(HardThresholdParams(threshold), SIGMA, X_GRID)
        assert check_bounds(points, SIGMA) == []

    def test_check_bounds_reports_violation(self) -> None:
        point = risk_curve(HardThresholdParams(2.0), SIGMA, [1.0])[0]._replace(mse=0.0)
        violations = check_bounds([point], SIGMA)
        assert {v.bound for v in violations} == {"crb_biased", "oracle"}


class TestRiskCurve:
    def test_ht_example_at_zero(self) -> None:
        point = risk_curve(HardThresholdParams(2.0), 1.0, [0.0])[0]
        assert point.bias == 0.0
        assert point.mse == pytest.approx(0.26146, abs=1e-4)
        assert point.crb_biased == pytest.approx(0.06836, abs=1e-4)
        assert point.oracle == 0.0
        assert point.crb_unbiased == 1.0

    def test_ml_curve_is_flat(self) -> None:
        points = risk_curve(identity_estimator(), 1.0, X_GRID)
        assert all(p.mse == 1.0 and p.crb_biased == 1.0 for p in points)

    def test_normalized_keys(self) -> None:
        point = risk_curve(HardThresholdParams(4.0), 2.0, [2.0])[0]
        row = point.normalized(2.0)
        assert row["x_over_sigma"] == 1.0
        assert row["mse_over_sigma2"] == pytest.approx(point.mse / 4.0)

    def test_empty_grid_raises(self) -> None:
        with pytest.raises(ValueError, match="empty"):
            risk_curve(HardThresholdParams(2.0), 1.0, [])

    def test_unsorted_grid_raises(self) -> None:
        with pytest.raises(ValueError, match="sorted"):
            risk_curve(HardThresholdParams(2.0), 1.0, [1.0, 0.0])


class TestQuadratureOracle:
    def test_identity_map(self) -> None:
        estimator = HardThresholdParams(0.0)
        assert quadrature_oracle_bias(estimator, 1.3, 1.0) == pytest.approx(0.0, abs=1e-12)
        assert quadrature_oracle_mse(estimator, 1.3, 1.0) == pytest.approx(1.0, abs=1e-12)

    def test_ht_bias_example(self) -> None:
        assert quadrature_oracle_bias(HardThresholdParams(2.0), 2.0, 1.0) == pytest.approx(-0.6011, abs=1e-3)

    def test_degenerate_semisoft_matches_ht(self) -> None:
        ss = quadrature_oracle_mse(SemisoftParams(2.0, 2.0), 1.0, 1.0)
        assert ss == quadrature_oracle_mse(HardThresholdParams(2.0), 1.0, 1.0)

    def test_error_carries_diagnostics(self) -> None:
        error = QuadratureError("failed", estimate=0.5, abserr=1e-3, panels=4)
        assert error.estimate == 0.5
        assert error.abserr == 1e-3
        assert error.panels == 4
        assert isinstance(error, ArithmeticError)


class TestStandardizedArgs:
    def test_values(self) -> None:
        args = StandardizedArgs.compute(3.0, 1.0, 1.0, inner_threshold=0.5)
        root2 = math.sqrt(2.0)
        assert float(args.x_s) == pytest.approx(4.0 / root2)
        assert float(args.x_d) == pytest.approx(2.0 / root2)
        assert float(args.xi_s) == pytest.approx(3.5 / root2)
        assert float(args.xi_d) == pytest.approx(2.5 / root2)
