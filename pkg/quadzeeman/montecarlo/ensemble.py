"""Pulse evolution of a thermal ensemble and the dephasing-versus-frequency sweep."""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from quadzeeman.core.exceptions import DomainError, PreconditionError
from quadzeeman.montecarlo.models import DephasingRow, Ensemble, EnsembleConfig
from quadzeeman.montecarlo.walls import advance, sample_initial
from quadzeeman.physics.atomdata import ZeemanCoefficients, hyperfine_branch, zeeman_coefficients
from quadzeeman.physics.circuit import CircuitParams, resonant_capacitance, simulate_pulse
from quadzeeman.physics.coils import FieldLookup, pair_field
from quadzeeman.physics.spin import (
    FX,
    FY,
    FZ,
    initial_state,
    phases_from_trace,
    step_grid,
    su2_to_spin1,
)

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]
ComplexArray = NDArray[np.complex128]

ProgressCallback = Callable[[int, int], None]

_MIN_STEPS_PER_CYCLE = 50
_CHUNK = 1024
_CONTAINMENT_TOL = 1e-9


def particle_streams(seed: int, n: int) -> list[np.random.Generator]:
    """One Philox stream per particle, spawned from the root seed."""
    children = np.random.SeedSequence(seed).spawn(n)
    return [np.random.Generator(np.random.Philox(child)) for child in children]


def pulse_window(config: EnsembleConfig) -> CircuitParams:
    """Circuit settings with the tail cut at `tail_decay_times` decay times."""
    circuit = config.circuit
    return circuit.with_updates(tail_length=config.tail_decay_times / circuit.decay_rate)


def build_lookup(config: EnsembleConfig) -> FieldLookup:
    """Field lookup covering the whole cell."""
    offset = float(np.linalg.norm(config.cell.center_vector - config.coils.center_vector))
    return FieldLookup(config.coils, config.cell.radius + offset, config.lookup_resolution)


def f1_coefficients(config: EnsembleConfig) -> ZeemanCoefficients:
    """Larmor coefficients of the F = 1 ground manifold."""
    return zeeman_coefficients(config.species, hyperfine_branch(config.species, 1.0))


@dataclass(frozen=True, eq=False)
class _PulsePlan:
    """Read-only inputs shared by every chunk."""

    widths: FloatArray
    currents: FloatArray
    k1: float
    k2: float
    axis: FloatArray
    axis_square: ComplexArray
    scale: float
    lookup: FieldLookup | None
    uniform_field: FloatArray
    config: EnsembleConfig


def _field(plan: _PulsePlan, positions: FloatArray) -> FloatArray:
    if plan.lookup is None:
        return np.broadcast_to(plan.uniform_field, positions.shape)
    return plan.scale * plan.lookup.field(positions)


def _apply_quadratic(states: ComplexArray, phase: FloatArray, plan: _PulsePlan) -> ComplexArray:
    """exp(-i phase (n.F)^2) per state; (n.F)^2 is a projector for spin 1."""
    projected = states @ plan.axis_square.T
    result: ComplexArray = states + (np.exp(-1j * phase) - 1.0)[:, None] * projected
    return result


def _evolve_chunk(
    plan: _PulsePlan,
    positions: FloatArray,
    velocities: FloatArray,
    rngs: Sequence[np.random.Generator],
) -> tuple[ComplexArray, FloatArray]:
    config = plan.config
    cell = config.cell
    n = len(positions)
    u00 = np.ones(n, dtype=np.complex128)
    u01 = np.zeros(n, dtype=np.complex128)
    u10 = np.zeros(n, dtype=np.complex128)
    u11 = np.ones(n, dtype=np.complex128)
    phi2 = np.zeros(n)
    states = np.broadcast_to(initial_state().amplitudes, (n, 3)).copy()

    for dt, current in zip(plan.widths, plan.currents, strict=True):
        field = current * _field(plan, positions)
        axial = field @ plan.axis
        vec = axial[:, None] * plan.axis if config.linear_axis_only else field
        magnitude = np.linalg.norm(vec, axis=1)
        direction = vec / np.where(magnitude > 0, magnitude, 1.0)[:, None]
        half = 0.5 * plan.k1 * magnitude * dt
        c, s = np.cos(half), np.sin(half)
        nx, ny, nz = direction[:, 0], direction[:, 1], direction[:, 2]
        s00 = c - 1j * s * nz
        s01 = -s * ny - 1j * s * nx
        s10 = s * ny - 1j * s * nx
        s11 = c + 1j * s * nz
        step_phase = plan.k2 * axial * axial * dt
        phi2 += step_phase

        if config.interleaved_quadratic:
            step = np.stack((np.stack((s00, s01), -1), np.stack((s10, s11), -1)), -2)
            states = np.einsum("nij,nj->ni", su2_to_spin1(step), states)
            states = _apply_quadratic(states, step_phase, plan)
        else:
            u00, u01, u10, u11 = (
                s00 * u00 + s01 * u10,
                s00 * u01 + s01 * u11,
                s10 * u00 + s11 * u10,
                s10 * u01 + s11 * u11,
            )

        advance(positions, velocities, float(dt), cell, rngs, config.wall_reflection)
        radius = np.linalg.norm(positions - cell.center_vector, axis=1)
        if np.any(radius > cell.radius * (1.0 + _CONTAINMENT_TOL)):
            raise PreconditionError("a particle left the cell")

    if not config.interleaved_quadratic:
        total = np.stack((np.stack((u00, u01), -1), np.stack((u10, u11), -1)), -2)
        states = np.einsum("nij,nj->ni", su2_to_spin1(total), states)
        states = _apply_quadratic(states, phi2, plan)
    return states, phi2


def evolve_pulse(
    config: EnsembleConfig,
    lookup: FieldLookup | None = None,
    on_progress: ProgressCallback | None = None,
) -> Ensemble:
    """Evolve every particle through the pulse and its tail.

    Linear precession is an SU(2) rotation about the local field at each step; the quadratic
    phase accumulates from the axial field component and is applied as exp(-i phi2 (n.F)^2)
    after the pulse, or every step with `interleaved_quadratic`.

    Args:
        config: Ensemble and pulse definition
        lookup: Prebuilt field lookup to share between runs
        on_progress: Optional callback (particles done, total)

    Returns:
        Ensemble of final states, ordered by particle index
    """
    if config.steps_per_cycle < _MIN_STEPS_PER_CYCLE:
        raise PreconditionError(
            f"{config.steps_per_cycle} steps per drive cycle is too coarse; "
            f"at least {_MIN_STEPS_PER_CYCLE} are required"
        )
    params = pulse_window(config)
    trace = simulate_pulse(params)
    mids, widths = step_grid(trace, 1.0 / (params.drive_frequency * config.steps_per_cycle))

    coeffs = f1_coefficients(config)
    axis = config.coils.axis_vector
    generator = axis[0] * FX + axis[1] * FY + axis[2] * FZ
    scale = config.field_scale()
    if config.homogeneous:
        lookup = None
        uniform = scale * pair_field(config.coils, 1.0, config.cell.center_vector)
    else:
        lookup = lookup or build_lookup(config)
        uniform = np.zeros(3)

    plan = _PulsePlan(
        widths=widths,
        currents=trace.current_at(mids),
        k1=coeffs.omega1_per_B,
        k2=coeffs.omega2_per_B2,
        axis=axis,
        axis_square=generator @ generator,
        scale=scale,
        lookup=lookup,
        uniform_field=uniform,
        config=config,
    )

    rngs = particle_streams(config.rng_seed, config.n_particles)
    particles = [sample_initial(config, rng) for rng in rngs]
    positions = np.array([p.position for p in particles])
    velocities = np.array([p.velocity for p in particles])

    n = config.n_particles
    states = np.zeros((n, 3), dtype=np.complex128)
    phi2 = np.zeros(n)
    bounds = [(a, min(a + _CHUNK, n)) for a in range(0, n, _CHUNK)]
    logger.debug(
        "evolving %d particles over %d steps in %d chunks on %d threads",
        n,
        len(widths),
        len(bounds),
        config.threads,
    )

    done = 0
    with ThreadPoolExecutor(max_workers=config.threads) as pool:
        futures = {
            pool.submit(
                _evolve_chunk, plan, positions[a:b].copy(), velocities[a:b].copy(), rngs[a:b]
            ): (a, b)
            for a, b in bounds
        }
        for future in as_completed(futures):
            a, b = futures[future]
            states[a:b], phi2[a:b] = future.result()
            done += b - a
            if on_progress:
                on_progress(done, n)

    return Ensemble(states=states, phi2=phi2, scales=config.scales)


def solve_pulse_length(
    params: CircuitParams,
    field_per_ampere: float,
    coeffs: ZeemanCoefficients,
    target_phi2: float,
    max_pulse_length: float,
    tolerance: float = 1e-10,
    scan_points: int = 64,
) -> float | None:
    """Shortest pulse length whose center-of-cell phi2 reaches `target_phi2`.

    phi2(tau) is scanned on a coarse grid, then the first bracketing interval is bisected.
    Returns None when the target is not reached within `max_pulse_length`.
    """
    if target_phi2 < 0:
        raise DomainError("target phase must not be negative")
    if target_phi2 == 0:
        return 0.0

    def phi2_at(tau: float) -> float:
        trace = simulate_pulse(params.with_updates(pulse_length=tau))
        return phases_from_trace(trace, field_per_ampere, coeffs).phi2

    grid = np.linspace(0.0, max_pulse_length, scan_points + 1)
    hi_index = None
    for i in range(1, len(grid)):
        if phi2_at(float(grid[i])) >= target_phi2:
            hi_index = i
            break
    if hi_index is None:
        return None

    lo, hi = float(grid[hi_index - 1]), float(grid[hi_index])
    while hi - lo > tolerance:
        mid = 0.5 * (lo + hi)
        if phi2_at(mid) >= target_phi2:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def dephasing_curve(
    config: EnsembleConfig,
    frequencies: Sequence[float],
    n_max: int,
    max_pulse_length: float = 500e-6,
    retune_capacitor: bool = True,
    on_progress: ProgressCallback | None = None,
) -> list[DephasingRow]:
    """Ensemble amplitude <alpha_R> after pulses with center-of-cell phi2 = n pi, n = 0..n_max.

    Every cell reuses the same particle streams, so rows differ only through the pulse. With
    `retune_capacitor` each frequency is driven at the LC resonance.
    """
    if n_max < 0:
        raise DomainError("n_max must not be negative")
    lookup = None if config.homogeneous else build_lookup(config)
    coeffs = f1_coefficients(config)
    center = config.center_field()

    rows: list[DephasingRow] = []
    total = len(frequencies) * (n_max + 1)
    for frequency in frequencies:
        circuit = config.circuit.with_updates(drive_frequency=frequency, tail_length=None)
        if retune_capacitor:
            circuit = circuit.with_updates(C=resonant_capacitance(circuit.L, frequency))
        for n_pi in range(n_max + 1):
            tau = solve_pulse_length(circuit, center, coeffs, n_pi * math.pi, max_pulse_length)
            if tau is None:
                logger.info("phi2 = %d pi unreachable at %.0f Hz", n_pi, frequency)
                rows.append(DephasingRow(frequency, n_pi, None, None, None))
            else:
                run = config.with_updates(circuit=circuit.with_updates(pulse_length=tau))
                readout = evolve_pulse(run, lookup).readout()
                rows.append(DephasingRow(frequency, n_pi, tau, readout.alpha_R, readout.std_err))
            if on_progress:
                on_progress(len(rows), total)
    return rows
