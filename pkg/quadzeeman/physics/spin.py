"""Spin-1 states, rotations, the pulse propagator and the probe observables.

Basis order is m = +1, 0, -1 along z. All operators are plain 3 x 3 complex arrays wrapped in
`Operator3`; states are length-3 arrays wrapped in `SpinState`.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.integrate import cumulative_trapezoid

from quadzeeman.core.exceptions import DomainError, PreconditionError
from quadzeeman.physics.atomdata import ZeemanCoefficients
from quadzeeman.physics.circuit import (
    CurrentTrace,
    check_decayed_tail,
    integrate_square,
    net_charge,
)

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]
ComplexArray = NDArray[np.complex128]

_S = 1.0 / math.sqrt(2.0)

FX: ComplexArray = _S * np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=np.complex128)
FY: ComplexArray = _S * np.array([[0, -1j, 0], [1j, 0, -1j], [0, 1j, 0]], dtype=np.complex128)
FZ: ComplexArray = np.diag([1.0, 0.0, -1.0]).astype(np.complex128)
# written out so that [FY, FY_SQUARED] vanishes exactly
FY_SQUARED: ComplexArray = np.array(
    [[0.5, 0.0, -0.5], [0.0, 1.0, 0.0], [-0.5, 0.0, 0.5]], dtype=np.complex128
)
IDENTITY: ComplexArray = np.eye(3, dtype=np.complex128)

X_AXIS = (1.0, 0.0, 0.0)
Y_AXIS = (0.0, 1.0, 0.0)
Z_AXIS = (0.0, 0.0, 1.0)

# +pi/4 about x gives <alpha_R> = (A/2)(1 - sin phi2); -pi/4 would give 1 + sin
READOUT_ANGLE = math.pi / 4

_UNIT_TOL = 1e-9
_NORM_TOL = 1e-10
_MIN_STEPS_PER_CYCLE = 100
_REDUCE_BLOCK = 65536
_GAUSS_NODES, _GAUSS_WEIGHTS = np.polynomial.legendre.leggauss(4)


def _pairs(values: ArrayLike) -> list[list[float]]:
    flat = np.asarray(values, dtype=np.complex128)
    return [[float(v.real), float(v.imag)] for v in flat]


def _from_pairs(data: Any) -> ComplexArray:
    arr = np.asarray(data, dtype=np.float64)
    if arr.shape[-1] != 2:
        raise DomainError("complex values must be [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


@dataclass(frozen=True, eq=False)
class SpinState:
    """Normalised spin-1 state, amplitudes ordered m = +1, 0, -1."""

    amplitudes: ComplexArray

    def __post_init__(self) -> None:
        if self.amplitudes.shape != (3,):
            raise DomainError(f"spin-1 state needs 3 amplitudes, got shape {self.amplitudes.shape}")
        norm = float(np.linalg.norm(self.amplitudes))
        if abs(norm - 1.0) > _NORM_TOL:
            raise DomainError(f"state is not normalised (norm {norm:.12g})")

    @classmethod
    def basis(cls, m: int) -> SpinState:
        """The z-basis state |m>."""
        if m not in (1, 0, -1):
            raise DomainError(f"m must be +1, 0 or -1, got {m}")
        amplitudes = np.zeros(3, dtype=np.complex128)
        amplitudes[1 - m] = 1.0
        return cls(amplitudes)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def expectation(self, op: Operator3) -> complex:
        return complex(np.vdot(self.amplitudes, op.matrix @ self.amplitudes))

    def to_json(self) -> list[list[float]]:
        return _pairs(self.amplitudes)

    @classmethod
    def from_json(cls, data: Any) -> SpinState:
        return cls(_from_pairs(data))


@dataclass(frozen=True, eq=False)
class Operator3:
    """3 x 3 operator in the z basis."""

    matrix: ComplexArray

    def __post_init__(self) -> None:
        if self.matrix.shape != (3, 3):
            raise DomainError(f"operator must be 3 x 3, got shape {self.matrix.shape}")

    def __matmul__(self, other: Operator3) -> Operator3:
        return Operator3(self.matrix @ other.matrix)

    def apply(self, state: SpinState) -> SpinState:
        return SpinState(self.matrix @ state.amplitudes)

    def dagger(self) -> Operator3:
        return Operator3(self.matrix.conj().T)

    def unitarity_error(self) -> float:
        """max |U^dagger U - 1|."""
        return float(np.max(np.abs(self.matrix.conj().T @ self.matrix - IDENTITY)))

    def hermiticity_error(self) -> float:
        """max |A - A^dagger|."""
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))

    def to_json(self) -> list[list[list[float]]]:
        return [_pairs(row) for row in self.matrix]

    @classmethod
    def from_json(cls, data: Any) -> Operator3:
        return cls(_from_pairs(data))


@dataclass(frozen=True)
class ObservableScales:
    """Scale constants of the probe observables, set by the excited-state F'."""

    A: float = 1.0
    B: float = 1.0


@dataclass(frozen=True)
class PhasePair:
    """Linear and quadratic Larmor phases accumulated over a pulse (rad)."""

    phi1: float
    phi2: float

    def __post_init__(self) -> None:
        if self.phi2 < 0:
            raise DomainError(f"quadratic phase cannot be negative, got {self.phi2}")


def _unit(axis: ArrayLike) -> FloatArray:
    n = np.asarray(axis, dtype=np.float64)
    if n.shape != (3,) or abs(float(np.linalg.norm(n)) - 1.0) > _UNIT_TOL:
        raise DomainError(f"rotation axis must be a unit 3-vector, got {axis}")
    return n


def rotation(axis: ArrayLike, angle: float) -> Operator3:
    """exp(-i angle n.F), using (n.F)^3 = n.F for spin 1."""
    n = _unit(axis)
    generator = n[0] * FX + n[1] * FY + n[2] * FZ
    square = generator @ generator
    matrix = IDENTITY - 1j * math.sin(angle) * generator + (math.cos(angle) - 1.0) * square
    return Operator3(matrix)


def initial_state() -> SpinState:
    """|1>_x: |m=+1> rotated by +pi/2 about y, amplitudes (1/2, 1/sqrt(2), 1/2)."""
    return rotation(Y_AXIS, math.pi / 2).apply(SpinState.basis(1))


def operator_distance(a: Operator3, b: Operator3) -> float:
    """Max-norm distance between operators after removing the relative global phase."""
    flat_a = a.matrix.ravel()
    flat_b = b.matrix.ravel()
    idx = int(np.argmax(np.abs(flat_a)))
    phase = flat_b[idx] / flat_a[idx] if flat_a[idx] != 0 else 1.0 + 0j
    magnitude = abs(phase)
    phase = phase / magnitude if magnitude > 0 else 1.0 + 0j
    return float(np.max(np.abs(flat_a * phase - flat_b)))


def observables(scales: ObservableScales | None = None) -> tuple[Operator3, Operator3, Operator3]:
    """(alpha_R, alpha_I, beta): the +1/-1 coherence as real and imaginary part, then the
    population imbalance."""
    s = scales or ObservableScales()
    alpha_r = np.zeros((3, 3), dtype=np.complex128)
    alpha_r[0, 2] = alpha_r[2, 0] = s.A
    alpha_i = np.zeros((3, 3), dtype=np.complex128)
    alpha_i[2, 0] = 1j * s.A
    alpha_i[0, 2] = -1j * s.A
    beta = np.diag([s.B, 0.0, -s.B]).astype(np.complex128)
    return Operator3(alpha_r), Operator3(alpha_i), Operator3(beta)


def pulse_unitary(phi2: float) -> Operator3:
    """Quadratic-phase propagator exp(-i phi2 F_y^2).

    Built diagonal in the y basis, phases exp(-i phi2 m^2), and rotated back to z.
    """
    to_y = rotation(X_AXIS, -math.pi / 2)
    diagonal = Operator3(np.diag(np.exp(-1j * phi2 * np.array([1.0, 0.0, 1.0]))))
    return to_y @ diagonal @ to_y.dagger()


def readout_amplitudes(
    states: ComplexArray, scales: ObservableScales | None = None
) -> tuple[FloatArray, FloatArray, FloatArray]:
    """Observables after the pi/4 readout rotation for an (N, 3) stack of states."""
    rotated = states @ rotation(X_AXIS, READOUT_ANGLE).matrix.T
    values = []
    for op in observables(scales):
        values.append(np.real(np.einsum("ni,ij,nj->n", rotated.conj(), op.matrix, rotated)))
    return values[0], values[1], values[2]


def readout(state: SpinState, scales: ObservableScales | None = None) -> tuple[float, float, float]:
    """(<alpha_R>, <alpha_I>, <beta>) of `state` after the pi/4 readout rotation."""
    alpha_r, alpha_i, beta = readout_amplitudes(state.amplitudes[None, :], scales)
    return float(alpha_r[0]), float(alpha_i[0]), float(beta[0])


def appendix_pipeline(
    phi2: float, scales: ObservableScales | None = None
) -> tuple[float, float, float]:
    """Prepare |1>_x, apply the pulse and read out: <alpha_R> = (A/2)(1 - sin phi2)."""
    return readout(pulse_unitary(phi2).apply(initial_state()), scales)


def phases_from_trace(
    trace: CurrentTrace,
    field_per_ampere: float,
    coeffs: ZeemanCoefficients,
    require_tail: bool = True,
) -> PhasePair:
    """Integrate the linear and quadratic Larmor frequencies over the trace.

    With B(t) = field_per_ampere * I(t), phi1 is proportional to the net charge and phi2 to the
    integral of I^2. `require_tail=False` admits truncated traces.
    """
    if require_tail:
        check_decayed_tail(trace)
    phi1 = coeffs.omega1_per_B * field_per_ampere * net_charge(trace)
    phi2 = coeffs.omega2_per_B2 * field_per_ampere**2 * integrate_square(trace)
    return PhasePair(phi1=phi1, phi2=max(phi2, 0.0))


@dataclass(frozen=True, eq=False)
class PhaseTrace:
    """Instantaneous Larmor frequencies (rad/s) and running phases (rad) at the trace samples."""

    times: FloatArray
    omega1: FloatArray
    omega2: FloatArray
    phi1: FloatArray
    phi2: FloatArray


def cumulative_phases(
    trace: CurrentTrace, field_per_ampere: float, coeffs: ZeemanCoefficients
) -> PhaseTrace:
    """Running phi1(t), phi2(t); exact Gauss–Legendre per sample interval on simulated traces."""
    b = field_per_ampere
    k1 = coeffs.omega1_per_B * b
    k2 = coeffs.omega2_per_B2 * b * b
    times = trace.times

    if trace.is_piecewise:
        mid = 0.5 * (times[1:] + times[:-1])
        half = 0.5 * (times[1:] - times[:-1])
        nodes = mid[:, None] + half[:, None] * _GAUSS_NODES[None, :]
        current = trace.current_at(nodes.ravel()).reshape(nodes.shape)
        step1 = half * (current @ _GAUSS_WEIGHTS)
        step2 = half * (current**2 @ _GAUSS_WEIGHTS)
        charge = np.concatenate(([0.0], np.cumsum(step1)))
        square = np.concatenate(([0.0], np.cumsum(step2)))
    else:
        charge = cumulative_trapezoid(trace.currents, times, initial=0.0)
        square = cumulative_trapezoid(trace.currents**2, times, initial=0.0)

    return PhaseTrace(
        times=times,
        omega1=k1 * trace.currents,
        omega2=k2 * trace.currents**2,
        phi1=k1 * charge,
        phi2=k2 * square,
    )


def _step_operators(a: FloatArray, b: FloatArray) -> ComplexArray:
    """exp(-i (a F_y + b F_y^2)) for each pair, exact because F_y^3 = F_y."""
    phase = np.exp(-1j * b)
    ops = np.broadcast_to(IDENTITY - FY_SQUARED, (len(a), 3, 3)).copy()
    ops += (phase * np.cos(a))[:, None, None] * FY_SQUARED
    ops += (-1j * phase * np.sin(a))[:, None, None] * FY
    return ops


def _ordered_product(ops: ComplexArray) -> ComplexArray:
    """U_n ... U_2 U_1 of a time-ordered stack, by pairwise reduction."""
    while len(ops) > 1:
        odd = len(ops) % 2
        paired = ops[1 : len(ops) - odd : 2] @ ops[0 : len(ops) - odd : 2]
        ops = np.concatenate((paired, ops[-1:])) if odd else paired
    return ops[0]


def step_grid(trace: CurrentTrace, max_step: float) -> tuple[FloatArray, FloatArray]:
    """Midpoints and widths of equal steps filling each smooth interval of the trace."""
    if trace.is_piecewise:
        edges = np.array([seg.start for seg in trace.segments] + [trace.duration])
    else:
        edges = trace.times
    widths = np.diff(edges)
    counts = np.maximum(1, np.ceil(widths / max_step).astype(np.int64))
    step = np.repeat(widths / counts, counts)
    start = np.repeat(edges[:-1], counts)
    index = np.arange(len(step)) - np.repeat(np.cumsum(counts) - counts, counts)
    return start + (index + 0.5) * step, step


def brute_force_evolution(
    trace: CurrentTrace,
    field_per_ampere: float,
    coeffs: ZeemanCoefficients,
    steps_per_cycle: int = 4000,
) -> Operator3:
    """Time-ordered product of midpoint step propagators over the whole trace.

    Each step applies exp(-i [Omega1(t) F_y + Omega2(t) F_y^2] dt) for a motionless atom in a
    field along y. Steps never straddle a switch instant.
    """
    if steps_per_cycle < _MIN_STEPS_PER_CYCLE:
        raise PreconditionError(
            f"{steps_per_cycle} steps per drive cycle cannot resolve the drive; "
            f"at least {_MIN_STEPS_PER_CYCLE} are required"
        )
    max_step = 1.0 / (trace.params.drive_frequency * steps_per_cycle)
    mids, widths = step_grid(trace, max_step)
    logger.debug("brute-force evolution over %d steps", len(mids))

    k1 = coeffs.omega1_per_B * field_per_ampere
    k2 = coeffs.omega2_per_B2 * field_per_ampere**2
    blocks: list[ComplexArray] = []
    for start in range(0, len(mids), _REDUCE_BLOCK):
        current = trace.current_at(mids[start : start + _REDUCE_BLOCK])
        dt = widths[start : start + _REDUCE_BLOCK]
        blocks.append(_ordered_product(_step_operators(k1 * current * dt, k2 * current**2 * dt)))
    return Operator3(_ordered_product(np.stack(blocks)))


def su2_to_spin1(u: ComplexArray) -> ComplexArray:
    """Spin-1 representation of SU(2) matrices; accepts (..., 2, 2), returns (..., 3, 3).

    exp(-i theta n.sigma/2) maps to exp(-i theta n.F).
    """
    r = math.sqrt(2.0)
    u00, u01 = u[..., 0, 0], u[..., 0, 1]
    u10, u11 = u[..., 1, 0], u[..., 1, 1]
    rows = [
        [u00 * u00, r * u00 * u01, u01 * u01],
        [r * u00 * u10, u00 * u11 + u01 * u10, r * u01 * u11],
        [u10 * u10, r * u10 * u11, u11 * u11],
    ]
    return np.stack([np.stack(row, axis=-1) for row in rows], axis=-2)
