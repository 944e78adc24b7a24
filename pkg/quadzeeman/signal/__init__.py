"""
Probe-stage rotation signal: synthesis, fitting and the sweeps that feed them.

Components:
    - FidModel, FitResult: signal parameters and fit outcome (models.py)
    - synthesize_fid, fit_fid, spectral_peak: forward model and Levenberg–Marquardt fit (fid.py)
    - amplitude_vs_tau, phase_scaling, calibrate_field_per_ampere: pulse sweeps (sweeps.py)
"""

from quadzeeman.signal.fid import fid_jacobian, fit_fid, spectral_peak, synthesize_fid
from quadzeeman.signal.models import DEFAULT_FROZEN, FID_PARAMETERS, FidModel, FitResult
from quadzeeman.signal.sweeps import (
    AmplitudePoint,
    PhaseLine,
    PhaseScaling,
    amplitude_vs_tau,
    calibrate_field_per_ampere,
    phase_scaling,
)

__all__ = [
    # Models
    "DEFAULT_FROZEN",
    "FID_PARAMETERS",
    "FidModel",
    "FitResult",
    # Fitting
    "fid_jacobian",
    "fit_fid",
    "spectral_peak",
    "synthesize_fid",
    # Sweeps
    "AmplitudePoint",
    "PhaseLine",
    "PhaseScaling",
    "amplitude_vs_tau",
    "calibrate_field_per_ampere",
    "phase_scaling",
]
