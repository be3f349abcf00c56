"""Quantizer actions and induced response curves."""

import numpy as np
import pytest

from distquant import (
    BinaryQuantizer,
    InputError,
    MultiLevelQuantizer,
    NoiseModel,
    QuadratureDivergence,
    ResponseCurve,
    apply_binary,
    apply_multilevel,
    response_curve,
    substream,
)
from distquant.numerics import simpson_uniform, uniform_grid


def arch(theta):
    return 0.5 * (1.0 + np.sin(np.pi * np.asarray(theta) / 2))


class TestApplyBinary:
    def test_threshold_fires_above(self):
        q = BinaryQuantizer.threshold(0.0)
        assert apply_binary(q, 0.7) == 1
        assert apply_binary(q, -0.7) == 0
        assert apply_binary(q, 0.0) == 1  # tie goes up

    def test_sine_endpoint_is_silent(self):
        q = BinaryQuantizer.sine()
        draws = apply_binary(q, np.full(1000, -1.0), substream(1))
        assert not np.any(draws)

    def test_sine_midpoint_is_fair(self):
        """Mean of 1e5 Bernoulli(1/2) draws within 0.005 of 1/2."""
        q = BinaryQuantizer.sine()
        draws = apply_binary(q, np.zeros(10 ** 5), substream(2))
        assert abs(draws.mean() - 0.5) < 0.005

    def test_deterministic_given_state(self):
        q = BinaryQuantizer.sine()
        y = np.linspace(-1, 1, 100)
        assert np.array_equal(apply_binary(q, y, 9), apply_binary(q, y, 9))

    def test_threshold_consumes_no_randomness(self):
        rng = substream(4)
        before = rng.bit_generator.state["state"]["counter"].copy()
        apply_binary(BinaryQuantizer.threshold(0.0), 0.3, rng)
        after = rng.bit_generator.state["state"]["counter"].copy()
        assert np.array_equal(before, after)


class TestApplyMultilevel:
    def test_binary_special_case(self):
        q = MultiLevelQuantizer(breakpoints=(0.0,))
        assert apply_multilevel(q, -0.5) == 1

    def test_interval_membership(self):
        q = MultiLevelQuantizer(breakpoints=(-0.5, 0.0, 0.5))
        assert apply_multilevel(q, 0.25) == 3

    def test_tie_goes_to_upper_cell(self):
        q = MultiLevelQuantizer(breakpoints=(-0.5, 0.0, 0.5))
        assert apply_multilevel(q, 0.5) == 4

    def test_monotone_in_y(self):
        rng = substream(3)
        for _ in range(20):
            b = np.sort(rng.uniform(-1, 1, rng.integers(1, 6)))
            if np.any(np.diff(b) <= 0):
                continue
            q = MultiLevelQuantizer(breakpoints=tuple(b))
            y = np.sort(rng.uniform(-2, 2, 200))
            syms = apply_multilevel(q, y)
            assert np.all(np.diff(syms) >= 0)

    def test_matches_threshold_rule(self):
        q2 = MultiLevelQuantizer(breakpoints=(0.3,))
        qb = BinaryQuantizer.threshold(0.3)
        y = np.linspace(-1, 1, 101)
        assert np.array_equal(apply_multilevel(q2, y) - 1, apply_binary(qb, y))

    def test_rejects_unsorted_breakpoints(self):
        with pytest.raises(InputError):
            MultiLevelQuantizer(breakpoints=(0.5, 0.0))


class TestResponseCurve:
    def test_threshold_raised_cosine_is_arch(self):
        """Closed form 1 - F_W(T - theta) against the analytic arch."""
        curve = response_curve(BinaryQuantizer.threshold(0.0),
                               NoiseModel.raised_cosine(0.0), -1, 1)
        assert np.max(np.abs(curve.values - arch(curve.grid))) <= 1e-8

    def test_threshold_rc_midpoint_quadrature_oracle(self):
        """g(0) = 1/2 re-derived by integrating the density over y >= T."""
        curve = response_curve(BinaryQuantizer.threshold(0.0),
                               NoiseModel.raised_cosine(0.0), -1, 1)
        noise = NoiseModel.raised_cosine(0.0)
        w = uniform_grid(0.0, 1.0, 4097)  # indicator support only, no jump
        direct = simpson_uniform(noise.density(w), w[1] - w[0])
        assert curve.value_at(0.0) == pytest.approx(0.5, abs=1e-12)
        assert direct == pytest.approx(0.5, abs=1e-10)

    def test_sine_delta_shortcircuit(self):
        curve = response_curve(BinaryQuantizer.sine(), NoiseModel.delta(), -1, 1)
        assert np.max(np.abs(curve.values - arch(curve.grid))) == 0.0

    def test_threshold_curves_nondecreasing(self):
        for noise in (NoiseModel.raised_cosine(0.0), NoiseModel.gaussian(0.5),
                      NoiseModel.delta()):
            curve = response_curve(BinaryQuantizer.threshold(0.1), noise, -1, 1)
            assert np.all(np.diff(curve.values) >= -1e-15)

    def test_quadrature_path_matches_fine_oracle(self):
        """Simpson path for a smooth tabulated rule against a much finer
        independent quadrature."""
        y = np.linspace(-4, 4, 8001)
        quant = BinaryQuantizer.tabulated(y, 1.0 / (1.0 + np.exp(-y / 0.1)))
        noise = NoiseModel.gaussian(0.8)
        curve = response_curve(quant, noise, -1, 1, n=257)
        w = uniform_grid(noise.support.lo, noise.support.hi, 65537)
        hw = w[1] - w[0]
        for theta in (-0.5, 0.0, 0.7):
            oracle = simpson_uniform(quant.response(theta + w) * noise.density(w), hw)
            assert curve.value_at(theta) == pytest.approx(oracle, abs=1e-5)

    def test_empirical_response_matches_curve(self):
        """1e5 simulated observations at fixed theta reproduce g(theta)
        within 0.01."""
        quant = BinaryQuantizer.sine()
        noise = NoiseModel.raised_cosine(0.0)
        curve = response_curve(quant, noise, -1, 1)
        rng = substream(17)
        for theta in (-0.4, 0.0, 0.55):
            y = theta + noise.ppf(rng.random(10 ** 5))
            bits = apply_binary(quant, y, rng)
            assert abs(bits.mean() - curve.value_at(theta)) < 0.01

    def test_derivative_consistency(self):
        curve = response_curve(BinaryQuantizer.threshold(0.0),
                               NoiseModel.gaussian(1.0), -2, 2)
        # overall check is limited by the recompute's one-sided end stencils
        assert curve.derivative_consistency() < 1e-5
        from distquant.numerics import derivative
        fresh = derivative(curve.values, curve.step)
        interior = np.abs(fresh - curve.derivative_values)[4:-4]
        assert np.max(interior) < 1e-10

    def test_values_outside_unit_interval_rejected(self):
        grid = np.linspace(-1, 1, 101)
        with pytest.raises(InputError):
            ResponseCurve(grid, np.full(101, 1.5), np.zeros(101))

    def test_quadrature_divergence_detected(self):
        """A response oscillating faster than the quadrature grid cannot
        pass the refinement check."""
        y = np.linspace(-1, 1, 20001)
        flicker = ((np.floor((y + 1) * 2500) % 2) == 0).astype(float)
        quant = BinaryQuantizer.tabulated(y, flicker)
        noise = NoiseModel.tabulated(np.linspace(-0.01, 0.01, 101),
                                     np.full(101, 50.0))
        with pytest.raises(QuadratureDivergence):
            response_curve(quant, noise, -0.5, 0.5, n=129)

    def test_csv_roundtrip(self, tmp_path):
        q = BinaryQuantizer.sine()
        path = tmp_path / "gamma.csv"
        q.to_csv(path)
        loaded = BinaryQuantizer.from_csv(path)
        y = np.linspace(-1, 1, 100)
        # reload interpolates linearly between the dumped samples
        assert np.max(np.abs(loaded.response(y) - q.response(y))) < 1e-6
