"""Tests for signal synthesis, fitting and the pulse sweeps."""

import math

import numpy as np
import pytest

from quadzeeman.core.exceptions import DomainError, PreconditionError
from quadzeeman.physics.atomdata import RB87, zeeman_coefficients
from quadzeeman.physics.circuit import reference_params, simulate_pulse
from quadzeeman.physics.spin import phases_from_trace
from quadzeeman.signal import (
    DEFAULT_FROZEN,
    FID_PARAMETERS,
    FidModel,
    amplitude_vs_tau,
    calibrate_field_per_ampere,
    fid_jacobian,
    fit_fid,
    phase_scaling,
    spectral_peak,
    synthesize_fid,
)
from quadzeeman.signal.sweeps import probe_times

COEFFS = zeeman_coefficients(RB87, -1)
TRUTH = FidModel(gamma=40.0, omega_L=2.0 * math.pi * 2600.0, alpha_R=0.3, alpha_I=0.1, beta=-0.05)


class TestFidModel:
    """Tests for the forward signal model."""

    def test_zero_expectations(self) -> None:
        """Test that vanishing expectation values give no signal."""
        model = FidModel(alpha_R=0.0)
        assert np.all(model.evaluate(np.linspace(0.0, 0.1, 50)) == 0.0)

    def test_undamped_sine(self) -> None:
        """Test gamma = 0 with only alpha_R: a pure sine at 2 omega_L."""
        model = FidModel(gamma=0.0, alpha_R=0.4, V_R=0.5, chi=2.0)
        t = np.linspace(0.0, 1e-3, 37)
        expected = 2.0 * 0.4 * 0.5 * np.sin(2.0 * model.omega_L * t)
        assert np.allclose(model.evaluate(t), expected, atol=1e-15)

    def test_value_at_zero(self) -> None:
        """Test delta_alpha(0) = chi (alpha_I V_R - beta V_I)."""
        model = FidModel(chi=1.5, alpha_I=0.2, beta=0.1, V_R=0.8, V_I=0.6)
        assert model.evaluate([0.0])[0] == pytest.approx(1.5 * (0.2 * 0.8 - 0.1 * 0.6))

    def test_negative_gamma(self) -> None:
        """Test that a negative decay rate raises DomainError."""
        with pytest.raises(DomainError) as exc_info:
            FidModel(gamma=-1.0)

        assert "gamma" in str(exc_info.value)

    def test_from_dict_unknown_key(self) -> None:
        """Test that an unknown parameter name raises DomainError."""
        with pytest.raises(DomainError):
            FidModel.from_dict({"delta": 1.0})

    def test_dict_round_trip(self) -> None:
        """Test that to_dict and from_dict agree."""
        assert FidModel.from_dict(TRUTH.to_dict()) == TRUTH

    def test_jacobian_matches_finite_differences(self) -> None:
        """Test the analytic Jacobian against central differences."""
        t = probe_times(TRUTH, 400)
        analytic = fid_jacobian(TRUTH, t, FID_PARAMETERS)
        for k, name in enumerate(FID_PARAMETERS):
            value = getattr(TRUTH, name)
            h = 1e-6 * max(abs(value), 1.0)
            up = TRUTH.with_vector((name,), [value + h]).evaluate(t)
            down = TRUTH.with_vector((name,), [value - h]).evaluate(t)
            numeric = (up - down) / (2.0 * h)
            scale = max(float(np.max(np.abs(numeric))), 1e-12)
            assert np.max(np.abs(analytic[:, k] - numeric)) < 1e-5 * scale


class TestSynthesis:
    """Tests for synthetic signals."""

    def test_noiseless_is_model(self) -> None:
        """Test that zero noise reproduces the model exactly."""
        t = probe_times(TRUTH, 100)
        assert np.array_equal(synthesize_fid(TRUTH, t), TRUTH.evaluate(t))

    def test_noise_needs_generator(self) -> None:
        """Test that noise without a seeded generator raises DomainError."""
        with pytest.raises(DomainError):
            synthesize_fid(TRUTH, probe_times(TRUTH, 100), noise_sigma=0.01)

    def test_noise_is_seeded(self) -> None:
        """Test that the same seed gives the same noisy series."""
        t = probe_times(TRUTH, 100)
        first = synthesize_fid(TRUTH, t, 0.01, np.random.default_rng(9))
        second = synthesize_fid(TRUTH, t, 0.01, np.random.default_rng(9))
        assert np.array_equal(first, second)

    def test_unsorted_times(self) -> None:
        """Test that descending times raise DomainError."""
        with pytest.raises(DomainError):
            synthesize_fid(TRUTH, [0.0, 2.0, 1.0])


class TestFit:
    """Tests for the least-squares fit."""

    def test_noiseless_round_trip(self) -> None:
        """Test that a noiseless fit recovers every free parameter."""
        t = probe_times(TRUTH)
        fit = fit_fid(t, synthesize_fid(TRUTH, t), FidModel())
        assert fit.converged
        for name in fit.free:
            assert getattr(fit.model, name) == pytest.approx(getattr(TRUTH, name), rel=1e-6)
        signal_scale = float(np.max(np.abs(TRUTH.evaluate(t))))
        assert fit.residual_rms is not None
        assert fit.residual_rms < 1e-10 * signal_scale

    def test_free_parameters(self) -> None:
        """Test that chi, V_R and V_I stay frozen by default."""
        t = probe_times(TRUTH)
        fit = fit_fid(t, synthesize_fid(TRUTH, t), FidModel())
        assert set(fit.free) == set(FID_PARAMETERS) - DEFAULT_FROZEN
        assert set(fit.std_errors) == set(fit.free)
        assert fit.model.chi == 1.0

    def test_spectral_peak_matches_fit(self) -> None:
        """Test that the fitted 2 omega_L lies within one bin of the spectral peak."""
        t = probe_times(TRUTH)
        values = synthesize_fid(TRUTH, t)
        fit = fit_fid(t, values, FidModel())
        bin_width = 1.0 / (t[-1] - t[0] + (t[1] - t[0]))
        peak = spectral_peak(t, values)
        assert abs(2.0 * fit.model.omega_L / (2.0 * math.pi) - peak) <= bin_width

    def test_gauge_invariance(self) -> None:
        """Test that scaling the frozen chi rescales alpha_R and keeps the products."""
        t = probe_times(TRUTH)
        values = synthesize_fid(TRUTH, t)
        unit = fit_fid(t, values, FidModel())
        doubled = fit_fid(t, values, FidModel(chi=2.0))
        assert doubled.model.alpha_R == pytest.approx(0.5 * unit.model.alpha_R, rel=1e-8)
        for key, value in unit.products().items():
            assert doubled.products()[key] == pytest.approx(value, rel=1e-8, abs=1e-14)
        assert np.allclose(doubled.model.evaluate(t), unit.model.evaluate(t), atol=1e-12)

    def test_gamma_basin(self) -> None:
        """Test convergence from a decay-rate guess 20% too high with omega_L frozen."""
        t = probe_times(TRUTH)
        guess = TRUTH.with_vector(("gamma", "alpha_R"), [1.2 * TRUTH.gamma, 0.5])
        fit = fit_fid(t, synthesize_fid(TRUTH, t), guess, frozen=DEFAULT_FROZEN | {"omega_L"})
        assert fit.converged
        assert fit.model.gamma == pytest.approx(TRUTH.gamma, rel=1e-6)

    def test_noisy_trials_within_three_sigma(self) -> None:
        """Test that alpha_R lands within 3 standard errors in at least 95 of 100 trials."""
        truth = TRUTH.with_vector(("omega_L",), [2.0 * math.pi * 1000.0])
        t = probe_times(truth, 1000)
        sigma = 0.01 * truth.alpha_R
        rng = np.random.default_rng(2024)
        passed = 0
        for _ in range(100):
            values = synthesize_fid(truth, t, sigma, rng)
            fit = fit_fid(t, values, truth.with_expectations(0.5, 0.0, 0.0))
            error = fit.std_errors["alpha_R"]
            if fit.converged and abs(fit.model.alpha_R - truth.alpha_R) <= 3.0 * error:
                passed += 1
        assert passed >= 95

    def test_too_few_points(self) -> None:
        """Test that fewer than 8 samples per free parameter raise PreconditionError."""
        t = probe_times(TRUTH, 30)
        with pytest.raises(PreconditionError) as exc_info:
            fit_fid(t, synthesize_fid(TRUTH, t), FidModel())

        assert "too few" in str(exc_info.value)

    def test_everything_frozen(self) -> None:
        """Test that a fully frozen mask raises DomainError."""
        t = probe_times(TRUTH, 100)
        with pytest.raises(DomainError) as exc_info:
            fit_fid(t, synthesize_fid(TRUTH, t), FidModel(), frozen=FID_PARAMETERS)

        assert "frozen" in str(exc_info.value)

    def test_unknown_frozen_name(self) -> None:
        """Test that an unknown name in the mask raises DomainError."""
        t = probe_times(TRUTH, 100)
        with pytest.raises(DomainError):
            fit_fid(t, synthesize_fid(TRUTH, t), FidModel(), frozen={"delta"})

    def test_non_convergence_is_flagged(self) -> None:
        """Test that running out of evaluations is reported, not raised."""
        t = probe_times(TRUTH)
        fit = fit_fid(t, synthesize_fid(TRUTH, t), FidModel(), max_evaluations=1)
        assert not fit.converged
        assert fit.residual_rms is None
        assert fit.to_dict()["converged"] is False

    def test_spectral_peak_needs_uniform_spacing(self) -> None:
        """Test that irregular samples raise DomainError."""
        t = np.array([0.0, 1.0, 2.0, 4.0, 5.0])
        with pytest.raises(DomainError):
            spectral_peak(t, np.sin(t))


class TestSweeps:
    """Tests for the pulse-length and voltage sweeps."""

    def test_amplitude_fit_matches_direct(self) -> None:
        """Test that fitted and directly evaluated amplitudes agree without noise."""
        points = amplitude_vs_tau(reference_params(), 1e-4, COEFFS, [0.0, 30e-6, 60e-6])
        for point in points:
            assert point.fitted is not None
            assert abs(point.fitted - point.expected) < 1e-6

    def test_zero_pulse_length(self) -> None:
        """Test that tau = 0 reads the untouched A/2."""
        (point,) = amplitude_vs_tau(reference_params(), 1e-4, COEFFS, [0.0])
        assert point.phi2 == 0.0
        assert point.expected == pytest.approx(0.5, abs=1e-12)

    def test_amplitude_follows_phase(self) -> None:
        """Test expected = (1 - sin phi2) / 2 at each point."""
        points = amplitude_vs_tau(reference_params(), 1e-4, COEFFS, [20e-6, 50e-6])
        for point in points:
            assert point.expected == pytest.approx(0.5 * (1.0 - math.sin(point.phi2)), abs=1e-12)

    def test_montecarlo_needs_ensemble(self) -> None:
        """Test that Monte Carlo mode without an ensemble raises DomainError."""
        with pytest.raises(DomainError):
            amplitude_vs_tau(reference_params(), 1e-4, COEFFS, [0.0], mode="montecarlo")

    def test_phase_scaling(self) -> None:
        """Test linear growth of phi2 in steady state and the V^2 slope ratio."""
        taus = np.arange(40e-6, 100.5e-6, 2e-6)
        result = phase_scaling(reference_params(), 3.6e-4, COEFFS, [11.5, 23.0], taus)
        assert result.phi2.shape == (2, len(taus))
        for line in result.lines:
            assert line.r_squared > 0.999
        assert result.slope_ratio() == pytest.approx(4.0, rel=0.02)

    def test_phase_scaling_needs_window(self) -> None:
        """Test that fewer than three pulse lengths in the window raise DomainError."""
        with pytest.raises(DomainError) as exc_info:
            phase_scaling(reference_params(), 3.6e-4, COEFFS, [23.0], [10e-6, 50e-6])

        assert "window" in str(exc_info.value)

    def test_calibration_period(self) -> None:
        """Test that the calibrated field advances phi2 by 2 pi per target period."""
        field = calibrate_field_per_ampere(reference_params(), COEFFS, 70e-6)
        taus = np.linspace(40e-6, 100e-6, 13)
        line = phase_scaling(reference_params(), field, COEFFS, [23.0], taus).lines[0]
        assert line.slope * 70e-6 == pytest.approx(2.0 * math.pi, rel=1e-9)

    def test_calibrated_phase_is_consistent(self) -> None:
        """Test that the calibrated field gives a positive phase over a full pulse."""
        field = calibrate_field_per_ampere(reference_params(), COEFFS, 70e-6)
        phases = phases_from_trace(simulate_pulse(reference_params()), field, COEFFS)
        assert phases.phi2 > 2.0 * math.pi * 0.5

    def test_calibration_period_must_be_positive(self) -> None:
        """Test that a non-positive period raises DomainError."""
        with pytest.raises(DomainError):
            calibrate_field_per_ampere(reference_params(), COEFFS, 0.0)
