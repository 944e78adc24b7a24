"""Data models for the probe-stage rotation signal."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray

from quadzeeman.core.exceptions import DomainError

FloatArray = NDArray[np.float64]

FID_PARAMETERS: tuple[str, ...] = (
    "chi",
    "gamma",
    "omega_L",
    "alpha_R",
    "alpha_I",
    "beta",
    "V_R",
    "V_I",
)

# chi, V_R and V_I only enter through products with the expectation values
DEFAULT_FROZEN: frozenset[str] = frozenset({"chi", "V_R", "V_I"})


@dataclass(frozen=True)
class FidModel:
    """Decaying polarization rotation after the pulse.

    delta_alpha(t) = chi exp(-gamma t) [alpha_R V_R sin(2 omega_L t)
                                        + alpha_I V_R cos(2 omega_L t) - beta V_I]

    The default probe Larmor frequency puts 2 omega_L at 5 kHz.
    """

    chi: float = 1.0
    gamma: float = 50.0
    omega_L: float = 2.0 * math.pi * 2500.0
    alpha_R: float = 0.5
    alpha_I: float = 0.0
    beta: float = 0.0
    V_R: float = 1.0
    V_I: float = 1.0

    def __post_init__(self) -> None:
        for name in FID_PARAMETERS:
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"FID parameter {name} must be finite")
        if self.gamma < 0:
            raise DomainError(f"decay rate gamma must not be negative, got {self.gamma}")

    def evaluate(self, t: ArrayLike) -> FloatArray:
        times = np.asarray(t, dtype=np.float64)
        phase = 2.0 * self.omega_L * times
        bracket = (
            self.alpha_R * self.V_R * np.sin(phase)
            + self.alpha_I * self.V_R * np.cos(phase)
            - self.beta * self.V_I
        )
        result: FloatArray = self.chi * np.exp(-self.gamma * times) * bracket
        return result

    def with_expectations(self, alpha_R: float, alpha_I: float, beta: float) -> FidModel:
        return replace(self, alpha_R=alpha_R, alpha_I=alpha_I, beta=beta)

    def vector(self, names: tuple[str, ...]) -> FloatArray:
        return np.array([getattr(self, name) for name in names], dtype=np.float64)

    def with_vector(self, names: tuple[str, ...], values: ArrayLike) -> FidModel:
        changes = {name: float(v) for name, v in zip(names, np.asarray(values), strict=True)}
        return replace(self, **changes)

    def to_dict(self) -> dict[str, float]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> FidModel:
        unknown = set(data) - set(FID_PARAMETERS)
        if unknown:
            raise DomainError(f"unknown FID parameters: {', '.join(sorted(unknown))}")
        return cls(**{key: float(value) for key, value in data.items()})


@dataclass(frozen=True)
class FitResult:
    """Outcome of a least-squares fit of the rotation signal.

    `residual_rms` is None when the fit did not converge. Standard errors are given for the
    free parameters only.
    """

    model: FidModel
    free: tuple[str, ...]
    residual_rms: float | None
    std_errors: dict[str, float] = field(default_factory=dict)
    converged: bool = True
    iterations: int = 0
    message: str = ""

    def products(self) -> dict[str, float]:
        """The identifiable combinations chi * <.> * V."""
        m = self.model
        return {
            "chi_alpha_R_V_R": m.chi * m.alpha_R * m.V_R,
            "chi_alpha_I_V_R": m.chi * m.alpha_I * m.V_R,
            "chi_beta_V_I": m.chi * m.beta * m.V_I,
        }

    def to_dict(self) -> dict[str, Any]:
        return {
            "parameters": self.model.to_dict(),
            "free": list(self.free),
            "std_errors": dict(self.std_errors),
            "products": self.products(),
            "residual_rms": self.residual_rms,
            "converged": self.converged,
            "iterations": self.iterations,
            "message": self.message,
        }
