"""Priors, noise laws, sampling determinism, and the latent-variable model."""

import numpy as np
import pytest

from distquant import (
    HciModel,
    InputError,
    NoiseModel,
    ParamPrior,
    UnboundedCurvature,
    prior_fisher,
    sample_noise,
    sample_theta,
    substream,
)
from distquant.numerics import derivative, simpson_uniform, uniform_grid


def gaussian_like_tabulated(n=2049, var=0.5):
    grid = np.linspace(-4, 4, n)
    return ParamPrior.tabulated(grid, np.exp(-0.5 * grid ** 2 / var))


class TestParamPrior:
    def test_uniform_support_membership(self):
        prior = ParamPrior.uniform(-1, 1)
        draws = sample_theta(prior, substream(7), size=1000)
        assert np.all((draws >= -1) & (draws <= 1))

    def test_degenerate_tabulated_concentrates(self):
        """A spike density returns (essentially) its location."""
        grid = np.linspace(0.0, 1.0, 2001)
        vals = np.where(np.abs(grid - 0.3) < 2.5e-4, 1.0, 0.0)
        prior = ParamPrior.tabulated(grid, vals)
        for seed in range(5):
            assert abs(sample_theta(prior, seed) - 0.3) <= 5e-4

    def test_uniform_sample_mean_clt(self):
        """Mean of 1e6 uniform[-1,1] draws within 3 sigma of 0."""
        draws = sample_theta(ParamPrior.uniform(-1, 1), substream(123), size=10 ** 6)
        assert abs(draws.mean()) <= 3.0 / np.sqrt(3.0 * 10 ** 6)

    @pytest.mark.parametrize("prior", [
        ParamPrior.uniform(-2, 3),
        ParamPrior.gaussian(0.4, 2.0),
        gaussian_like_tabulated(),
    ], ids=["uniform", "gaussian", "tabulated"])
    def test_density_normalized(self, prior):
        iv = prior.quad_interval()
        grid = uniform_grid(iv.lo, iv.hi, 4097)
        mass = simpson_uniform(prior.density(grid), grid[1] - grid[0])
        assert abs(mass - 1.0) < 1e-8

    def test_tabulated_rejects_negative_density(self):
        with pytest.raises(InputError):
            ParamPrior.tabulated(np.linspace(0, 1, 10), np.linspace(-0.1, 1, 10))

    def test_moments(self):
        prior = ParamPrior.uniform(-1, 3)
        assert prior.mean == pytest.approx(1.0)
        assert prior.variance == pytest.approx(16 / 12)
        tab = gaussian_like_tabulated(var=0.5)
        assert tab.mean == pytest.approx(0.0, abs=1e-10)
        assert tab.variance == pytest.approx(0.5, rel=1e-4)

    def test_sampling_deterministic_given_seed(self):
        prior = ParamPrior.gaussian(0, 1)
        assert sample_theta(prior, 42) == sample_theta(prior, 42)


class TestPriorFisher:
    def test_gaussian_unit_variance(self):
        assert prior_fisher(ParamPrior.gaussian(0.0, 1.0)) == pytest.approx(1.0, abs=1e-12)

    def test_gaussian_variance_four(self):
        assert prior_fisher(ParamPrior.gaussian(2.0, 4.0)) == pytest.approx(0.25, abs=1e-12)

    def test_uniform_interior_curvature_zero(self):
        assert prior_fisher(ParamPrior.uniform(-1, 1)) == 0.0

    def test_tabulated_matches_analytic(self):
        """Tabulated Gaussian's curvature integrates to about 1/var."""
        val = prior_fisher(gaussian_like_tabulated(var=0.5))
        assert val == pytest.approx(2.0, rel=1e-3)

    def test_unbounded_curvature_raises(self):
        grid = np.linspace(-1, 1, 101)
        vals = np.ones_like(grid)
        vals[50] = 0.0  # interior zero makes ln p blow up
        prior = ParamPrior.tabulated(grid, vals)
        with pytest.raises(UnboundedCurvature):
            prior.log_curvature(grid)


class TestNoiseModel:
    models = [
        NoiseModel.gaussian(0.7),
        NoiseModel.raised_cosine(0.0),
        NoiseModel.raised_cosine(1.5),
        NoiseModel.tabulated(np.linspace(-1, 1, 1001),
                             np.cos(0.5 * np.pi * np.linspace(-1, 1, 1001)) ** 2),
    ]
    ids = ["gaussian", "rc0", "rc_shift", "tabulated"]

    @pytest.mark.parametrize("noise", models, ids=ids)
    def test_cdf_endpoints(self, noise):
        assert abs(noise.cdf(noise.support.lo)) < 1e-10
        assert abs(noise.cdf(noise.support.hi) - 1.0) < 1e-10

    @pytest.mark.parametrize("noise", models, ids=ids)
    def test_cdf_nondecreasing(self, noise):
        grid = uniform_grid(noise.support.lo, noise.support.hi, 1001)
        assert np.all(np.diff(noise.cdf(grid)) >= -1e-15)

    @pytest.mark.parametrize("noise", models, ids=ids)
    def test_density_normalized(self, noise):
        grid = uniform_grid(noise.support.lo, noise.support.hi, 4097)
        mass = simpson_uniform(noise.density(grid), grid[1] - grid[0])
        assert abs(mass - 1.0) < 1e-8

    @pytest.mark.parametrize("noise", models, ids=ids)
    def test_cdf_derivative_matches_density(self, noise):
        """Central differences of the cdf reproduce the density on a
        1001-point grid within 1e-6."""
        grid = uniform_grid(noise.support.lo, noise.support.hi, 1001)
        dcdf = derivative(noise.cdf(grid), grid[1] - grid[0])
        err = np.abs(dcdf - noise.density(grid))
        assert np.max(err[2:-2]) < 1e-6

    def test_delta_samples_zero(self):
        assert sample_noise(NoiseModel.delta(), 3) == 0.0
        assert np.all(sample_noise(NoiseModel.delta(), 3, size=10) == 0.0)

    def test_raised_cosine_median_is_center(self):
        """Inverse cdf at u = 0.5 lands on the center for any T."""
        for t in (0.0, -0.4, 2.0):
            noise = NoiseModel.raised_cosine(t)
            assert noise.ppf(0.5) == pytest.approx(t, abs=1e-15)

    def test_raised_cosine_support(self):
        noise = NoiseModel.raised_cosine(0.0)
        draws = sample_noise(noise, substream(5), size=10 ** 5)
        assert np.all((draws >= -1.0) & (draws <= 1.0))

    def test_raised_cosine_density_peak(self):
        noise = NoiseModel.raised_cosine(0.0)
        assert noise.density(np.array([0.0]))[0] == pytest.approx(np.pi / 4)

    @pytest.mark.parametrize("noise", models, ids=ids)
    def test_inverse_cdf_sampling_ks(self, noise):
        """Kolmogorov distance of 1e5 inverse-cdf samples below 0.01."""
        draws = np.sort(sample_noise(noise, substream(11), size=10 ** 5))
        model = noise.cdf(draws)
        n = len(draws)
        empirical_hi = np.arange(1, n + 1) / n
        empirical_lo = np.arange(0, n) / n
        ks = max(np.max(np.abs(empirical_hi - model)),
                 np.max(np.abs(model - empirical_lo)))
        assert ks < 0.01

    def test_spectrum_dc_is_one(self):
        for noise in self.models:
            assert abs(noise.spectrum(np.array([0.0]))[0] - 1.0) < 1e-6

    def test_raised_cosine_spectrum_matches_fft(self):
        """Analytic transform agrees with a brute-force quadrature."""
        noise = NoiseModel.raised_cosine(0.3)
        w = uniform_grid(-0.7, 1.3, 8193)
        h = w[1] - w[0]
        for f in (0.1, 0.4, 1.2):
            phased = noise.density(w) * np.exp(-1j * 2 * np.pi * f * w)
            brute = simpson_uniform(phased.real, h) + 1j * simpson_uniform(phased.imag, h)
            assert abs(noise.spectrum(np.array([f]))[0] - brute) < 1e-9


class TestHciModel:
    def build(self, seed=0, n_theta=4, n_lam=3, grids=(3, 4)):
        rng = np.random.default_rng(seed)
        theta = np.sort(rng.uniform(-1, 1, n_theta))
        p_theta = rng.dirichlet(np.ones(n_theta))
        plgt = rng.dirichlet(np.ones(n_lam), size=n_theta)
        obs = tuple(rng.dirichlet(np.ones(m), size=n_lam) for m in grids)
        return HciModel(theta=theta, p_theta=p_theta, lam=np.arange(n_lam, dtype=float),
                        p_lam_given_theta=plgt, obs=obs)

    def test_marginal_rows_stochastic(self):
        model = self.build()
        for i in range(model.n_sensors):
            sums = model.marginal_obs_given_theta(i).sum(axis=1)
            assert np.max(np.abs(sums - 1.0)) < 1e-12

    def test_joint_marginal_rows_stochastic(self):
        """Summing the latent variable out of p(y1, y2 | theta) leaves a
        row-stochastic table."""
        model = self.build(seed=3)
        joint = model.joint_marginal_given_theta(0, 1)
        sums = joint.sum(axis=(1, 2))
        assert np.max(np.abs(sums - 1.0)) < 1e-12

    def test_rejects_bad_rows(self):
        model = self.build()
        bad = model.p_lam_given_theta.copy()
        bad[0, 0] += 1e-6
        with pytest.raises(InputError):
            HciModel(theta=model.theta, p_theta=model.p_theta, lam=model.lam,
                     p_lam_given_theta=bad, obs=model.obs)
