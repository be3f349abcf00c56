"""Fisher-information operations: pointwise values, posterior decomposition,
Gaussian closed forms, equicorrelated information, data-processing bound."""

import math

import numpy as np
import pytest

from distquant import (
    BinaryQuantizer,
    DegenerateResponse,
    FisherReport,
    NoiseModel,
    ParamPrior,
    ResponseCurve,
    SingularCovariance,
    SupportMismatch,
    data_processing_check,
    equicorrelated_fisher,
    fi_pointwise,
    gaussian_binary_threshold_fisher,
    gaussian_single_obs_fisher,
    least_favorable_gstar,
    posterior_fisher,
    response_curve,
)

QUARTER_PI_SQ = math.pi ** 2 / 4


class TestFiPointwise:
    def test_arch_center(self):
        assert fi_pointwise(0.5, math.pi / 4) == pytest.approx(QUARTER_PI_SQ, rel=1e-12)

    def test_flat_response_carries_nothing(self):
        assert fi_pointwise(0.3, 0.0) == 0.0

    def test_direct_evaluation(self):
        assert fi_pointwise(0.25, 0.5) == pytest.approx(0.25 / (0.25 * 0.75), rel=1e-12)

    @pytest.mark.parametrize("g", [1e-13, 1 - 1e-13, 0.0, 1.0])
    def test_degenerate_raises(self, g):
        with pytest.raises(DegenerateResponse):
            fi_pointwise(g, 0.1)

    def test_relabel_invariance(self):
        """Swapping the symbol labels (g -> 1-g, g' -> -g') changes nothing."""
        rng = np.random.default_rng(0)
        for _ in range(100):
            g = rng.uniform(0.01, 0.99)
            gp = rng.uniform(-2, 2)
            assert fi_pointwise(g, gp) == pytest.approx(fi_pointwise(1 - g, -gp), rel=1e-12)


class TestPosteriorFisher:
    def test_arch_ten_sensors(self):
        report = posterior_fisher(least_favorable_gstar(-1, 1),
                                  ParamPrior.uniform(-1, 1), 10)
        assert report.f_data == pytest.approx(10 * QUARTER_PI_SQ, rel=1e-9)
        assert report.f_prior == 0.0
        assert report.pcrlb == pytest.approx(4 / (10 * math.pi ** 2), rel=1e-9)

    def test_zero_sensors(self):
        report = posterior_fisher(least_favorable_gstar(-1, 1),
                                  ParamPrior.uniform(-1, 1), 0)
        assert report.f_data == 0.0
        assert report.per_sensor == ()

    def test_threshold_raised_cosine_single_sensor(self):
        curve = response_curve(BinaryQuantizer.threshold(0.0),
                               NoiseModel.raised_cosine(0.0), -1, 1)
        report = posterior_fisher(curve, ParamPrior.uniform(-1, 1), 1)
        assert report.f_data == pytest.approx(QUARTER_PI_SQ, abs=1e-6)

    def test_fc_contribution_adds(self):
        curve = least_favorable_gstar(-1, 1)
        report = posterior_fisher(curve, ParamPrior.uniform(-1, 1), 2, fc_info=0.7)
        assert report.f_total == pytest.approx(2 * QUARTER_PI_SQ + 0.7, rel=1e-9)

    def test_support_mismatch_raises(self):
        curve = least_favorable_gstar(-0.5, 0.5)
        with pytest.raises(SupportMismatch):
            posterior_fisher(curve, ParamPrior.uniform(-1, 1), 1)

    def test_interior_saturation_raises(self):
        grid = np.linspace(-1, 1, 201)
        vals = 0.5 * (1 + np.sin(np.pi * grid / 2))
        vals[90:110] = 1.0  # saturated plateau in the middle
        curve = ResponseCurve.from_values(grid, vals)
        with pytest.raises(DegenerateResponse):
            posterior_fisher(curve, ParamPrior.uniform(-1, 1), 1)

    def test_report_invariants(self):
        report = posterior_fisher(least_favorable_gstar(-1, 1),
                                  ParamPrior.uniform(-1, 1), 7)
        assert report.f_data == pytest.approx(sum(report.per_sensor), abs=1e-12)
        assert len(report.per_sensor) == 7
        assert min(report.f_data, report.f_fc, report.f_prior) >= 0
        row = report.csv_row()
        assert len(row) == len(FisherReport.csv_header(7))


class TestGaussianSingleObs:
    @pytest.mark.parametrize("var,expect", [(1.0, 1.0), (4.0, 0.25), (0.1, 10.0)])
    def test_reciprocal_variance(self, var, expect):
        assert gaussian_single_obs_fisher(var) == pytest.approx(expect, rel=1e-12)


class TestBinaryThresholdFisher:
    def test_concentrated_prior_limit(self):
        """A prior collapsing onto its mean leaves the integrand at the
        threshold point: 2/pi for unit noise variance."""
        prior = ParamPrior.gaussian(0.7, 1e-12)
        val = gaussian_binary_threshold_fisher(prior, 1.0)
        assert val == pytest.approx(2 / math.pi, rel=1e-6)

    @pytest.mark.parametrize("prior", [
        ParamPrior.gaussian(0.0, 0.2),
        ParamPrior.gaussian(-1.3, 0.45),
        ParamPrior.uniform(-1, 1),
    ], ids=["gauss_low", "gauss_shift", "uniform"])
    def test_never_beats_raw_observation(self, prior):
        val = gaussian_binary_threshold_fisher(prior, 1.0)
        assert val <= gaussian_single_obs_fisher(1.0) + 1e-9

    def test_low_snr_keeps_half(self):
        val = gaussian_binary_threshold_fisher(ParamPrior.gaussian(0.0, 0.2), 1.0)
        assert val >= 0.5

    def test_dual_path_agreement(self):
        """Closed-form expectation against the response-curve pipeline with
        finite-difference derivatives: two independent routes."""
        settings = [(0.0, 0.2, 1.0), (0.3, 0.04, 1.0), (-0.5, 0.5, 1.0),
                    (1.0, 0.3, 2.0), (0.0, 0.1, 0.5), (2.0, 0.6, 1.5)]
        for mean, pvar, nvar in settings:
            prior = ParamPrior.gaussian(mean, pvar)
            closed = gaussian_binary_threshold_fisher(prior, nvar)
            iv = prior.quad_interval()
            curve = response_curve(BinaryQuantizer.threshold(mean),
                                   NoiseModel.gaussian(math.sqrt(nvar)),
                                   iv.lo, iv.hi)
            fd_curve = ResponseCurve.from_values(curve.grid, curve.values)
            via_curve = posterior_fisher(fd_curve, prior, 1).f_data
            assert abs(closed - via_curve) / closed < 1e-6


class TestEquicorrelated:
    def test_independent_sensors_add(self):
        assert equicorrelated_fisher(5, 1.0, 0.0) == pytest.approx(5.0, rel=1e-12)

    def test_two_sensor_matrix_oracle(self):
        sigma = np.array([[1.0, 0.5], [0.5, 1.0]])
        oracle = float(np.ones(2) @ np.linalg.inv(sigma) @ np.ones(2))
        assert equicorrelated_fisher(2, 1.0, 0.5) == pytest.approx(oracle, rel=1e-12)
        assert oracle == pytest.approx(4 / 3, rel=1e-12)

    def test_full_correlation_limit(self):
        """As rho -> 1 the network knows no more than one sensor."""
        assert equicorrelated_fisher(10, 1.0, 0.999) == pytest.approx(1.0, rel=0.01)
        assert equicorrelated_fisher(50, 2.0, 0.9999) == pytest.approx(0.5, rel=0.01)

    def test_matrix_inverse_oracle_sweep(self):
        rng = np.random.default_rng(1)
        for _ in range(25):
            n = int(rng.integers(2, 51))
            rho = float(rng.uniform(-0.9 / (n - 1), 0.95))
            var = float(rng.uniform(0.3, 3.0))
            cov = var * ((1 - rho) * np.eye(n) + rho * np.ones((n, n)))
            oracle = float(np.ones(n) @ np.linalg.solve(cov, np.ones(n)))
            val = equicorrelated_fisher(n, var, rho)
            assert abs(val - oracle) / oracle < 1e-10

    def test_strictly_decreasing_in_rho(self):
        rhos = np.linspace(0.0, 0.99, 100)
        vals = [equicorrelated_fisher(8, 1.0, r) for r in rhos]
        assert np.all(np.diff(vals) < 0)

    @pytest.mark.parametrize("n,rho", [(4, 1.0), (4, -1.0 / 3), (4, -0.5), (2, 1.2)])
    def test_singular_covariance(self, n, rho):
        with pytest.raises(SingularCovariance):
            equicorrelated_fisher(n, 1.0, rho)


class TestDataProcessing:
    def test_arch_under_small_noise_ceiling(self):
        report = data_processing_check(least_favorable_gstar(-1, 1),
                                       ParamPrior.uniform(-1, 1), 0.01)
        assert report.applicable and report.holds
        assert report.single_obs_info == pytest.approx(100.0)

    def test_threshold_gaussian_band(self):
        """Low-SNR Gaussian case: sensor info lands in [I*/2, I*]."""
        prior = ParamPrior.gaussian(0.0, 0.2)
        iv = prior.quad_interval()
        curve = response_curve(BinaryQuantizer.threshold(0.0),
                               NoiseModel.gaussian(1.0), iv.lo, iv.hi)
        report = data_processing_check(curve, prior, 1.0)
        assert report.holds
        assert 0.5 <= report.sensor_info <= 1.0

    def test_noiseless_not_applicable(self):
        report = data_processing_check(least_favorable_gstar(-1, 1),
                                       ParamPrior.uniform(-1, 1), None)
        assert not report.applicable
        assert report.holds is None
        assert report.sensor_info == pytest.approx(QUARTER_PI_SQ, rel=1e-9)


class TestArchConstantInformation:
    def test_information_profile_is_flat(self):
        curve = least_favorable_gstar(-1, 1, n=1003)
        g = curve.values[1:-1]
        gp = curve.derivative_values[1:-1]
        fi = gp ** 2 / (g * (1 - g))
        assert np.max(fi) - np.min(fi) <= 1e-9 * QUARTER_PI_SQ
