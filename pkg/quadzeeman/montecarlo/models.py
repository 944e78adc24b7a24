"""Data models for the thermal-atom Monte Carlo."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Any, Literal

import numpy as np
from numpy.typing import NDArray

from quadzeeman.core.exceptions import DomainError
from quadzeeman.physics.atomdata import RB87, AtomSpecies
from quadzeeman.physics.circuit import CircuitParams
from quadzeeman.physics.coils import CoilGeometry, center_field_per_ampere
from quadzeeman.physics.spin import (
    READOUT_ANGLE,
    X_AXIS,
    ObservableScales,
    observables,
    readout_amplitudes,
    rotation,
)

FloatArray = NDArray[np.float64]
ComplexArray = NDArray[np.complex128]

WallReflection = Literal["uniform", "cosine"]


@dataclass(frozen=True)
class CellGeometry:
    """Spherical vapor cell."""

    radius: float = 0.0185
    center: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self) -> None:
        if self.radius <= 0:
            raise DomainError(f"cell radius must be positive, got {self.radius}")

    @property
    def center_vector(self) -> FloatArray:
        return np.asarray(self.center, dtype=np.float64)


@dataclass(frozen=True, eq=False)
class Particle:
    """One atom in flight: position (m) and velocity (m/s)."""

    position: FloatArray
    velocity: FloatArray

    @property
    def speed(self) -> float:
        return float(np.linalg.norm(self.velocity))


@dataclass(frozen=True)
class EnsembleConfig:
    """Everything that defines one Monte Carlo pulse run.

    Attributes:
        n_particles: Ensemble size
        temperature: Vapor temperature (K)
        species: Atom species; the F = 1 ground manifold is simulated
        cell: Vapor cell
        coils: Coil pair; the field map is b(r) * I(t)
        circuit: Pulser settings; the simulated window is tau + tail_decay_times / decay_rate
        rng_seed: Root seed; particle k draws from the k-th spawned stream
        steps_per_cycle: Time steps per drive period
        field_per_ampere: Center field per ampere (T/A); None uses the coil geometry
        homogeneous: Replace b(r) by b(center) everywhere
        linear_axis_only: Precess about the coil axis only, ignoring transverse field
        interleaved_quadratic: Apply the quadratic phase every step instead of once at the end
        wall_reflection: Post-bounce direction law, uniform or cosine over the inward hemisphere
        tail_decay_times: Decay times simulated after the pulse
        threads: Worker threads; results do not depend on it
        lookup_resolution: Radial cells of the field lookup table
        scales: Observable scale constants
    """

    n_particles: int = 10_000
    temperature: float = 311.15
    species: AtomSpecies = RB87
    cell: CellGeometry = field(default_factory=CellGeometry)
    coils: CoilGeometry = field(default_factory=CoilGeometry)
    circuit: CircuitParams = field(default_factory=CircuitParams)
    rng_seed: int = 0
    steps_per_cycle: int = 200
    field_per_ampere: float | None = None
    homogeneous: bool = False
    linear_axis_only: bool = False
    interleaved_quadratic: bool = False
    wall_reflection: WallReflection = "uniform"
    tail_decay_times: float = 10.0
    threads: int = 1
    lookup_resolution: int = 150
    scales: ObservableScales = field(default_factory=ObservableScales)

    def __post_init__(self) -> None:
        if self.n_particles < 1:
            raise DomainError("n_particles must be at least 1")
        if self.temperature <= 0:
            raise DomainError("temperature must be positive")
        if self.rng_seed < 0 or self.rng_seed >= 2**64:
            raise DomainError("rng_seed must be a 64-bit unsigned integer")
        if self.wall_reflection not in ("uniform", "cosine"):
            raise DomainError(f"unknown wall reflection law {self.wall_reflection!r}")
        if self.tail_decay_times < 0:
            raise DomainError("tail_decay_times must not be negative")
        if self.threads < 1:
            raise DomainError("threads must be at least 1")
        if self.field_per_ampere is not None and self.field_per_ampere <= 0:
            raise DomainError("field_per_ampere must be positive")
        offset = float(np.linalg.norm(self.cell.center_vector - self.coils.center_vector))
        if offset + self.cell.radius >= self.coils.loop_radius:
            raise DomainError("the cell must lie inside the coil radius")

    def center_field(self) -> float:
        """Field per ampere at the cell center (T/A)."""
        if self.field_per_ampere is not None:
            return self.field_per_ampere
        return center_field_per_ampere(self.coils)

    def field_scale(self) -> float:
        """Factor applied to the geometric field map to honor `field_per_ampere`."""
        if self.field_per_ampere is None:
            return 1.0
        return self.field_per_ampere / center_field_per_ampere(self.coils)

    def with_updates(self, **changes: Any) -> EnsembleConfig:
        return replace(self, **changes)


@dataclass(frozen=True)
class EnsembleReadout:
    """Ensemble means of the probe observables; std_err is the standard error of alpha_R."""

    alpha_R: float
    alpha_I: float
    beta: float
    std_err: float


@dataclass(frozen=True, eq=False)
class Ensemble:
    """Final spin states of a Monte Carlo run."""

    states: ComplexArray
    phi2: FloatArray
    scales: ObservableScales = field(default_factory=ObservableScales)

    def __len__(self) -> int:
        return len(self.states)

    def density_matrix(self) -> ComplexArray:
        """Mean of |psi><psi| over particles, summed in particle order."""
        rho: ComplexArray = np.einsum("ni,nj->ij", self.states, self.states.conj()) / len(self)
        return rho

    def readout(self) -> EnsembleReadout:
        """Observables of the averaged state after the pi/4 readout rotation."""
        r = rotation(X_AXIS, READOUT_ANGLE).matrix
        rotated = r @ self.density_matrix() @ r.conj().T
        alpha_r_op, alpha_i_op, beta_op = observables(self.scales)
        std_err = 0.0
        if len(self) > 1:
            per_particle, _, _ = readout_amplitudes(self.states, self.scales)
            std_err = float(np.std(per_particle, ddof=1) / math.sqrt(len(self)))
        return EnsembleReadout(
            alpha_R=float(np.real(np.trace(rotated @ alpha_r_op.matrix))),
            alpha_I=float(np.real(np.trace(rotated @ alpha_i_op.matrix))),
            beta=float(np.real(np.trace(rotated @ beta_op.matrix))),
            std_err=std_err,
        )


@dataclass(frozen=True)
class DephasingRow:
    """One cell of the dephasing table; amplitude is None when the target phase is unreachable."""

    frequency: float
    n_pi: int
    pulse_length: float | None
    amplitude: float | None
    std_err: float | None

    @property
    def missing(self) -> bool:
        return self.amplitude is None
