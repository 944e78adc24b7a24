"""Synthesis and Levenberg–Marquardt fitting of the rotation signal."""

from __future__ import annotations

import logging
import math
from collections.abc import Collection

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.fft import rfft, rfftfreq
from scipy.optimize import least_squares

from quadzeeman.core.exceptions import DomainError, PreconditionError
from quadzeeman.signal.models import DEFAULT_FROZEN, FID_PARAMETERS, FidModel, FitResult

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]

_POINTS_PER_PARAMETER = 8
_UNIFORM_TOL = 1e-6


def _times(times: ArrayLike) -> FloatArray:
    t = np.asarray(times, dtype=np.float64)
    if t.ndim != 1 or np.any(np.diff(t) < 0):
        raise DomainError("sample times must be a 1-D ascending array")
    return t


def synthesize_fid(
    model: FidModel,
    times: ArrayLike,
    noise_sigma: float = 0.0,
    rng: np.random.Generator | None = None,
) -> FloatArray:
    """Signal of `model` at `times` plus white Gaussian noise of standard deviation noise_sigma."""
    t = _times(times)
    signal = model.evaluate(t)
    if noise_sigma < 0:
        raise DomainError("noise_sigma must not be negative")
    if noise_sigma > 0:
        if rng is None:
            raise DomainError("a seeded generator is required for noisy synthesis")
        signal = signal + rng.normal(0.0, noise_sigma, size=t.shape)
    return signal


def fid_jacobian(model: FidModel, times: ArrayLike, names: tuple[str, ...]) -> FloatArray:
    """Analytic derivatives of the signal by `names`, shape (len(times), len(names))."""
    t = _times(times)
    m = model
    envelope = m.chi * np.exp(-m.gamma * t)
    phase = 2.0 * m.omega_L * t
    s, c = np.sin(phase), np.cos(phase)
    bracket = m.alpha_R * m.V_R * s + m.alpha_I * m.V_R * c - m.beta * m.V_I

    columns = {
        "chi": np.exp(-m.gamma * t) * bracket,
        "gamma": -t * envelope * bracket,
        "omega_L": envelope * 2.0 * t * m.V_R * (m.alpha_R * c - m.alpha_I * s),
        "alpha_R": envelope * m.V_R * s,
        "alpha_I": envelope * m.V_R * c,
        "beta": -envelope * m.V_I,
        "V_R": envelope * (m.alpha_R * s + m.alpha_I * c),
        "V_I": -envelope * m.beta,
    }
    return np.column_stack([columns[name] for name in names])


def spectral_peak(times: ArrayLike, values: ArrayLike) -> float:
    """Frequency (Hz) of the largest non-DC spectral component, parabolically refined.

    The samples must be uniformly spaced.
    """
    t = _times(times)
    y = np.asarray(values, dtype=np.float64)
    if len(t) < 4 or y.shape != t.shape:
        raise DomainError("need at least 4 samples with matching times")
    steps = np.diff(t)
    dt = float(steps[0])
    if np.any(np.abs(steps - dt) > _UNIFORM_TOL * dt):
        raise DomainError("spectral peak needs uniformly spaced samples")

    magnitude = np.abs(rfft(y - np.mean(y)))
    freqs = rfftfreq(len(y), dt)
    k = 1 + int(np.argmax(magnitude[1:]))
    offset = 0.0
    if k < len(magnitude) - 1:
        a, b, c = magnitude[k - 1], magnitude[k], magnitude[k + 1]
        denominator = a - 2.0 * b + c
        if denominator != 0:
            offset = 0.5 * (a - c) / denominator
    return float(freqs[k] + offset * (freqs[1] - freqs[0]))


def fit_fid(
    times: ArrayLike,
    values: ArrayLike,
    initial_guess: FidModel,
    frozen: Collection[str] = DEFAULT_FROZEN,
    max_evaluations: int = 2000,
) -> FitResult:
    """Fit the signal model to a sampled series by damped least squares.

    When omega_L is free its starting value is taken from the spectral peak (2 omega_L =
    2 pi f_peak). Non-convergence is reported in the result, not raised.

    Args:
        times: Ascending sample times (s)
        values: Measured rotation (rad)
        initial_guess: Starting point; frozen parameters keep its values
        frozen: Parameters held fixed
        max_evaluations: Cap on residual evaluations

    Returns:
        FitResult with the fitted model and standard errors of the free parameters
    """
    unknown = set(frozen) - set(FID_PARAMETERS)
    if unknown:
        raise DomainError(f"unknown FID parameters: {', '.join(sorted(unknown))}")
    free = tuple(name for name in FID_PARAMETERS if name not in frozen)
    if not free:
        raise DomainError("every parameter is frozen; nothing to fit")

    t = _times(times)
    y = np.asarray(values, dtype=np.float64)
    if y.shape != t.shape:
        raise DomainError("times and values must have the same length")
    if len(t) < _POINTS_PER_PARAMETER * len(free):
        raise PreconditionError(
            f"{len(t)} samples are too few for {len(free)} free parameters "
            f"(need {_POINTS_PER_PARAMETER} per parameter)"
        )

    guess = initial_guess
    if "omega_L" in free:
        guess = guess.with_vector(("omega_L",), [math.pi * spectral_peak(t, y)])

    def residual(x: FloatArray) -> FloatArray:
        return guess.with_vector(free, x).evaluate(t) - y

    def jacobian(x: FloatArray) -> FloatArray:
        return fid_jacobian(guess.with_vector(free, x), t, free)

    solution = least_squares(
        residual,
        guess.vector(free),
        jac=jacobian,
        method="lm",
        xtol=1e-14,
        ftol=1e-14,
        gtol=1e-14,
        max_nfev=max_evaluations,
    )
    model = guess.with_vector(free, solution.x)
    converged = bool(solution.status > 0)

    dof = max(len(t) - len(free), 1)
    variance = float(2.0 * solution.cost / dof)
    covariance = np.linalg.pinv(solution.jac.T @ solution.jac) * variance
    errors = np.sqrt(np.clip(np.diag(covariance), 0.0, None))
    rms = math.sqrt(float(np.mean(solution.fun**2))) if converged else None
    if not converged:
        logger.warning("FID fit did not converge: %s", solution.message)

    return FitResult(
        model=model,
        free=free,
        residual_rms=rms,
        std_errors={name: float(e) for name, e in zip(free, errors, strict=True)},
        converged=converged,
        iterations=int(solution.nfev),
        message=str(solution.message),
    )
