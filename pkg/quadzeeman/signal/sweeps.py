"""Pulse-length and voltage sweeps built on the circuit, spin and signal stages."""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from typing import Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.stats import linregress

from quadzeeman.core.exceptions import DomainError
from quadzeeman.montecarlo.ensemble import evolve_pulse
from quadzeeman.montecarlo.models import EnsembleConfig
from quadzeeman.physics.atomdata import ZeemanCoefficients
from quadzeeman.physics.circuit import CircuitParams, simulate_pulse
from quadzeeman.physics.spin import ObservableScales, appendix_pipeline, phases_from_trace
from quadzeeman.signal.fid import fit_fid, synthesize_fid
from quadzeeman.signal.models import DEFAULT_FROZEN, FidModel

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]

ProgressCallback = Callable[[int, int], None]
Mode = Literal["motionless", "montecarlo"]

STEADY_WINDOW = (40e-6, 100e-6)


def probe_times(model: FidModel, n_points: int = 4000, duration: float | None = None) -> FloatArray:
    """Uniform probe sampling over `duration`, by default five decay times."""
    if duration is None:
        if model.gamma <= 0:
            raise DomainError("a duration is required when gamma is 0")
        duration = 5.0 / model.gamma
    return np.linspace(0.0, duration, n_points, endpoint=False)


@dataclass(frozen=True)
class AmplitudePoint:
    """One pulse length of the amplitude sweep."""

    tau: float
    phi1: float
    phi2: float
    expected: float
    fitted: float | None
    std_err: float | None


def amplitude_vs_tau(
    params: CircuitParams,
    field_per_ampere: float,
    coeffs: ZeemanCoefficients,
    taus: Sequence[float],
    model: FidModel | None = None,
    times: ArrayLike | None = None,
    noise_sigma: float = 0.0,
    rng: np.random.Generator | None = None,
    scales: ObservableScales | None = None,
    mode: Mode = "motionless",
    ensemble: EnsembleConfig | None = None,
    on_progress: ProgressCallback | None = None,
) -> list[AmplitudePoint]:
    """Fitted <alpha_R> for each pulse length.

    Each point runs circuit -> phases -> readout (motionless atom or Monte Carlo ensemble) ->
    synthetic signal -> fit. The fit starts from alpha_R = A/2 with the true gamma and omega_L.
    """
    base = model or FidModel()
    sample_times = probe_times(base) if times is None else np.asarray(times, dtype=np.float64)
    s = scales or ObservableScales()
    if mode == "montecarlo" and ensemble is None:
        raise DomainError("Monte Carlo mode needs an ensemble config")

    points: list[AmplitudePoint] = []
    for i, tau in enumerate(taus):
        pulse = params.with_updates(pulse_length=float(tau))
        phases = phases_from_trace(simulate_pulse(pulse), field_per_ampere, coeffs)
        if mode == "montecarlo":
            assert ensemble is not None
            run = ensemble.with_updates(circuit=pulse, scales=s)
            readout = evolve_pulse(run).readout()
            expectations = (readout.alpha_R, readout.alpha_I, readout.beta)
        else:
            expectations = appendix_pipeline(phases.phi2, s)

        truth = base.with_expectations(*expectations)
        values = synthesize_fid(truth, sample_times, noise_sigma, rng)
        guess = base.with_expectations(0.5 * s.A, 0.0, 0.0)
        fit = fit_fid(sample_times, values, guess, frozen=DEFAULT_FROZEN)
        points.append(
            AmplitudePoint(
                tau=float(tau),
                phi1=phases.phi1,
                phi2=phases.phi2,
                expected=expectations[0],
                fitted=fit.model.alpha_R if fit.converged else None,
                std_err=fit.std_errors.get("alpha_R") if fit.converged else None,
            )
        )
        if on_progress:
            on_progress(i + 1, len(taus))
    return points


@dataclass(frozen=True)
class PhaseLine:
    """Linear fit of phi2(tau) over the steady-state window for one supply voltage."""

    voltage: float
    slope: float
    intercept: float
    r_squared: float


@dataclass(frozen=True)
class PhaseScaling:
    """phi2 for every (voltage, tau) pair, with per-voltage linear fits."""

    voltages: tuple[float, ...]
    taus: tuple[float, ...]
    phi2: FloatArray
    lines: tuple[PhaseLine, ...]

    def slope_ratio(self, numerator: int = 1, denominator: int = 0) -> float:
        return self.lines[numerator].slope / self.lines[denominator].slope


def phase_scaling(
    params: CircuitParams,
    field_per_ampere: float,
    coeffs: ZeemanCoefficients,
    voltages: Sequence[float],
    taus: Sequence[float],
    window: tuple[float, float] = STEADY_WINDOW,
) -> PhaseScaling:
    """phi2(tau) tables for several supply voltages; phi2 grows as V^2."""
    tau_arr = np.asarray(taus, dtype=np.float64)
    in_window = (tau_arr >= window[0]) & (tau_arr <= window[1])
    if np.count_nonzero(in_window) < 3:
        raise DomainError("need at least three pulse lengths inside the steady-state window")

    table = np.zeros((len(voltages), len(tau_arr)))
    lines: list[PhaseLine] = []
    for row, voltage in enumerate(voltages):
        for col, tau in enumerate(tau_arr):
            pulse = params.with_updates(V=float(voltage), pulse_length=float(tau))
            table[row, col] = phases_from_trace(
                simulate_pulse(pulse), field_per_ampere, coeffs
            ).phi2
        fit = linregress(tau_arr[in_window], table[row, in_window])
        lines.append(
            PhaseLine(
                voltage=float(voltage),
                slope=float(fit.slope),
                intercept=float(fit.intercept),
                r_squared=float(fit.rvalue**2),
            )
        )
        logger.debug("V = %.2f: phi2 slope %.4g rad/s, R^2 %.6f", voltage, fit.slope, fit.rvalue**2)
    return PhaseScaling(
        voltages=tuple(float(v) for v in voltages),
        taus=tuple(float(t) for t in tau_arr),
        phi2=table,
        lines=tuple(lines),
    )


def calibrate_field_per_ampere(
    params: CircuitParams,
    coeffs: ZeemanCoefficients,
    period: float,
    window: tuple[float, float] = STEADY_WINDOW,
    points: int = 13,
) -> float:
    """Field per ampere (T/A) for which phi2 grows by 2 pi every `period` in steady state.

    phi2 scales as the square of the field per ampere, so one sweep at 1 T/A fixes it.
    """
    if period <= 0:
        raise DomainError("calibration period must be positive")
    taus = np.linspace(window[0], window[1], points)
    unit = phase_scaling(params, 1.0, coeffs, [params.V], taus, window)
    slope = unit.lines[0].slope
    if slope <= 0:
        raise DomainError("the circuit accumulates no quadratic phase; cannot calibrate")
    return math.sqrt(2.0 * math.pi / (period * slope))
