"""Transient simulation of the H-bridge driven series RLC pulser.

The bridge applies +V, -V, +V, ... at the drive frequency for the pulse length, then shorts the
coil through the lower switches. Between switch instants the supply is constant, so the state
(I, Q) is propagated with the closed-form damped-oscillator solution instead of an ODE stepper.
This keeps the net charge of a full pulse at machine precision.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.integrate import cumulative_trapezoid, trapezoid
from scipy.signal import find_peaks

from quadzeeman.core.exceptions import DomainError, PreconditionError

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]

_MIN_SAMPLES_PER_CYCLE = 50
_TAIL_DECAY_TIMES = 20.0
_NEUTRAL_TAIL_DECAY_TIMES = 10.0
_CRITICAL_TOL = 1e-12
_GAUSS_NODES, _GAUSS_WEIGHTS = np.polynomial.legendre.leggauss(12)


@dataclass(frozen=True)
class CircuitParams:
    """Component values and drive settings of the pulser (SI units).

    `R` is the coil and wiring resistance; `extra_resistance` adds switch losses on top.
    `tail_length=None` selects 20 decay times (20 * 2L / R_total).
    """

    R: float = 3.3
    L: float = 25e-6
    C: float = 10e-9
    V: float = 23.0
    drive_frequency: float = 326e3
    pulse_length: float = 100e-6
    tail_length: float | None = None
    sample_rate: float = 100e6
    extra_resistance: float = 0.0

    def __post_init__(self) -> None:
        for name in ("R", "L", "C", "drive_frequency", "sample_rate"):
            if not getattr(self, name) > 0:
                raise DomainError(f"circuit parameter {name} must be positive")
        if self.V < 0:
            raise DomainError("supply voltage V must not be negative")
        if self.pulse_length < 0:
            raise DomainError("pulse_length must not be negative")
        if self.tail_length is not None and self.tail_length < 0:
            raise DomainError("tail_length must not be negative")
        if self.extra_resistance < 0:
            raise DomainError("extra_resistance must not be negative")
        if self.sample_rate < _MIN_SAMPLES_PER_CYCLE * self.drive_frequency:
            raise DomainError(
                f"sample_rate {self.sample_rate:g} Hz is below {_MIN_SAMPLES_PER_CYCLE} x "
                f"drive_frequency ({self.drive_frequency:g} Hz)"
            )

    @property
    def total_resistance(self) -> float:
        return self.R + self.extra_resistance

    @property
    def decay_rate(self) -> float:
        """Envelope decay rate R_total / 2L (1/s)."""
        return self.total_resistance / (2.0 * self.L)

    @property
    def natural_frequency(self) -> float:
        """Undamped LC angular frequency (rad/s)."""
        return 1.0 / math.sqrt(self.L * self.C)

    @property
    def damped_frequency(self) -> float:
        """Damped angular frequency, 0 when not underdamped."""
        disc = self.natural_frequency**2 - self.decay_rate**2
        return math.sqrt(disc) if disc > 0 else 0.0

    @property
    def resolved_tail_length(self) -> float:
        if self.tail_length is None:
            return _TAIL_DECAY_TIMES / self.decay_rate
        return self.tail_length

    @property
    def end_time(self) -> float:
        return self.pulse_length + self.resolved_tail_length

    def with_updates(self, **changes: Any) -> CircuitParams:
        """Copy with some fields replaced (validated again)."""
        return replace(self, **changes)


def reference_params() -> CircuitParams:
    """The pulser of the reference measurement: 3.3 ohm, 25 uH, 10 nF, 23 V, 326 kHz, 100 us."""
    return CircuitParams()


def resonant_capacitance(L: float, frequency: float) -> float:
    """Capacitance placing the undamped LC resonance at `frequency` (Hz)."""
    if L <= 0 or frequency <= 0:
        raise DomainError("inductance and frequency must be positive")
    return 1.0 / ((2.0 * math.pi * frequency) ** 2 * L)


def drive_voltage(params: CircuitParams, t: float) -> float:
    """H-bridge output at time t: +/-V square wave during the pulse, 0 outside it."""
    if t < 0 or t >= params.pulse_length:
        return 0.0
    phase = t * params.drive_frequency
    return params.V if phase - math.floor(phase) < 0.5 else -params.V


def switch_instants(params: CircuitParams) -> FloatArray:
    """Interior switch instants of the bridge (half-period marks before the pulse end)."""
    half_period = 0.5 / params.drive_frequency
    count = math.ceil(params.pulse_length / half_period)
    instants = np.arange(1, max(count, 1)) * half_period
    return instants[instants < params.pulse_length * (1.0 - 1e-12)]


def _propagate(
    params: CircuitParams, voltage: float, current0: float, charge0: float, dt: FloatArray
) -> tuple[FloatArray, FloatArray]:
    """Exact (I, Q) a time dt after (current0, charge0) under a constant supply."""
    alpha = params.decay_rate
    w0_sq = params.natural_frequency**2
    disc = w0_sq - alpha * alpha

    q0 = charge0 - params.C * voltage
    drive = current0 + alpha * q0
    restore = w0_sq * q0 + alpha * current0

    if disc > _CRITICAL_TOL * w0_sq:
        wd = math.sqrt(disc)
        envelope = np.exp(-alpha * dt)
        cos_t = np.cos(wd * dt)
        sin_t = np.sin(wd * dt)
        q = envelope * (q0 * cos_t + drive / wd * sin_t)
        current = envelope * (current0 * cos_t - restore / wd * sin_t)
    elif disc < -_CRITICAL_TOL * w0_sq:
        beta = math.sqrt(-disc)
        slow = np.exp((beta - alpha) * dt)
        fast = np.exp(-(alpha + beta) * dt)
        cosh_t = 0.5 * (slow + fast)
        sinh_t = 0.5 * (slow - fast)
        q = q0 * cosh_t + drive / beta * sinh_t
        current = current0 * cosh_t - restore / beta * sinh_t
    else:
        envelope = np.exp(-alpha * dt)
        q = envelope * (q0 + drive * dt)
        current = envelope * (current0 - restore * dt)

    return current, q + params.C * voltage


@dataclass(frozen=True)
class CircuitSegment:
    """Constant-supply interval with its initial state."""

    start: float
    end: float
    voltage: float
    current0: float
    charge0: float

    def state_at(self, params: CircuitParams, t: FloatArray) -> tuple[FloatArray, FloatArray]:
        """(I, Q) at times t inside this segment."""
        return _propagate(params, self.voltage, self.current0, self.charge0, t - self.start)

    def end_state(self, params: CircuitParams) -> tuple[float, float]:
        current, charge = self.state_at(params, np.array([self.end]))
        return float(current[0]), float(charge[0])


@dataclass(frozen=True, eq=False)
class CurrentTrace:
    """Sampled coil current.

    Traces from `simulate_pulse` also carry their piecewise-analytic segments, so the current
    and charge can be evaluated exactly between samples. Hand-built traces only have samples.
    """

    times: FloatArray
    currents: FloatArray
    params: CircuitParams
    charges: FloatArray | None = None
    segments: tuple[CircuitSegment, ...] = ()

    def __post_init__(self) -> None:
        if self.times.ndim != 1 or self.times.shape != self.currents.shape:
            raise DomainError("times and currents must be 1-D arrays of equal length")
        if len(self.times) < 2:
            raise DomainError("a trace needs at least two samples")
        if self.times[0] != 0.0 or np.any(np.diff(self.times) <= 0):
            raise DomainError("trace times must start at 0 and increase strictly")
        scale = max(1.0, float(np.max(np.abs(self.currents))))
        if abs(self.currents[0]) > 1e-12 * scale:
            raise DomainError("trace current must be 0 at t = 0")

    @property
    def duration(self) -> float:
        return float(self.times[-1])

    @property
    def is_piecewise(self) -> bool:
        return bool(self.segments)

    def _segment_index(self, t: FloatArray) -> NDArray[np.intp]:
        starts = np.array([seg.start for seg in self.segments])
        index = np.searchsorted(starts, t, side="right") - 1
        return np.clip(index, 0, len(self.segments) - 1)

    def _evaluate(self, t: ArrayLike) -> tuple[FloatArray, FloatArray]:
        t_arr = np.atleast_1d(np.asarray(t, dtype=np.float64))
        current = np.zeros_like(t_arr)
        charge = np.zeros_like(t_arr)
        index = self._segment_index(t_arr)
        for i in np.unique(index):
            mask = index == i
            current[mask], charge[mask] = self.segments[i].state_at(self.params, t_arr[mask])
        return current, charge

    def current_at(self, t: ArrayLike) -> FloatArray:
        """Current at arbitrary times (exact for simulated traces, linear otherwise)."""
        if self.is_piecewise:
            return self._evaluate(t)[0]
        return np.interp(np.atleast_1d(np.asarray(t, dtype=np.float64)), self.times, self.currents)

    def charge_at(self, t: ArrayLike) -> FloatArray:
        """Charge transported since t = 0."""
        if self.is_piecewise:
            return self._evaluate(t)[1]
        running = cumulative_trapezoid(self.currents, self.times, initial=0.0)
        return np.interp(np.atleast_1d(np.asarray(t, dtype=np.float64)), self.times, running)


def _build_segments(params: CircuitParams) -> list[CircuitSegment]:
    boundaries = [0.0, *switch_instants(params).tolist()]
    segments: list[CircuitSegment] = []
    current, charge = 0.0, 0.0

    if params.pulse_length > 0:
        edges = [*boundaries, params.pulse_length]
        for k in range(len(edges) - 1):
            voltage = params.V if k % 2 == 0 else -params.V
            seg = CircuitSegment(edges[k], edges[k + 1], voltage, current, charge)
            segments.append(seg)
            current, charge = seg.end_state(params)

    tail = params.resolved_tail_length
    if tail > 0 or not segments:
        start = params.pulse_length
        segments.append(CircuitSegment(start, start + tail, 0.0, current, charge))
    return segments


def simulate_pulse(params: CircuitParams) -> CurrentTrace:
    """Simulate the pulse and its decay tail over [0, tau + tail_length].

    The uniform sample grid at `sample_rate` is merged with the switch instants so every
    discontinuity of dI/dt is a sample.
    """
    segments = _build_segments(params)
    end = params.end_time

    n_uniform = int(math.floor(end * params.sample_rate)) + 1
    grid = np.arange(n_uniform, dtype=np.float64) / params.sample_rate
    breakpoints = np.array([seg.start for seg in segments] + [end])
    times = np.union1d(grid[grid <= end], breakpoints)
    if len(times) < 2:
        times = np.array([0.0, 1.0 / params.sample_rate])

    trace = CurrentTrace(
        times=times,
        currents=np.zeros_like(times),
        params=params,
        segments=tuple(segments),
    )
    currents, charges = trace._evaluate(times)
    # drop the float noise of the first sample so the t = 0 invariant holds exactly
    currents[0] = 0.0
    charges[0] = 0.0
    logger.debug(
        "simulated %d segments, %d samples, peak %.3f A",
        len(segments),
        len(times),
        float(np.max(np.abs(currents))),
    )
    return CurrentTrace(
        times=times, currents=currents, params=params, charges=charges, segments=tuple(segments)
    )


def check_decayed_tail(trace: CurrentTrace) -> None:
    """Raise PreconditionError unless the trace runs 10 decay times past the pulse end."""
    params = trace.params
    needed = _NEUTRAL_TAIL_DECAY_TIMES / params.decay_rate
    have = trace.duration - params.pulse_length
    if have < needed * (1.0 - 1e-9):
        raise PreconditionError(
            f"trace extends {have:.3e} s past the pulse; at least {needed:.3e} s "
            f"(10 x 2L/R) is required for the current to decay"
        )


def net_charge(trace: CurrentTrace) -> float:
    """Charge transported over the trace (C), without the decayed-tail check."""
    if trace.is_piecewise:
        return float(trace.charge_at(trace.duration)[0])
    return float(trapezoid(trace.currents, trace.times))


def total_charge(trace: CurrentTrace) -> float:
    """Net charge through the coils over the whole trace (C)."""
    check_decayed_tail(trace)
    return net_charge(trace)


def _gauss_pieces(trace: CurrentTrace, start: float, end: float) -> tuple[FloatArray, FloatArray]:
    """Quadrature nodes and weights covering [start, end] on smooth sub-intervals."""
    params = trace.params
    piece = 0.25 * min(2.0 * math.pi / params.natural_frequency, 1.0 / params.decay_rate)
    nodes: list[FloatArray] = []
    weights: list[FloatArray] = []
    for seg in trace.segments:
        a, b = max(seg.start, start), min(seg.end, end)
        if b <= a:
            continue
        count = max(1, math.ceil((b - a) / piece))
        edges = np.linspace(a, b, count + 1)
        mid = 0.5 * (edges[1:] + edges[:-1])
        half = 0.5 * (edges[1:] - edges[:-1])
        nodes.append((mid[:, None] + half[:, None] * _GAUSS_NODES[None, :]).ravel())
        weights.append((half[:, None] * _GAUSS_WEIGHTS[None, :]).ravel())
    if not nodes:
        return np.zeros(0), np.zeros(0)
    return np.concatenate(nodes), np.concatenate(weights)


def integrate_square(
    trace: CurrentTrace, start: float | None = None, end: float | None = None
) -> float:
    """Integral of I^2 over [start, end] (A^2 s), Gauss–Legendre per smooth piece."""
    a = 0.0 if start is None else start
    b = trace.duration if end is None else end
    if trace.is_piecewise:
        nodes, weights = _gauss_pieces(trace, a, b)
        if len(nodes) == 0:
            return 0.0
        return float(np.sum(weights * trace.current_at(nodes) ** 2))
    mask = (trace.times >= a) & (trace.times <= b)
    return float(trapezoid(trace.currents[mask] ** 2, trace.times[mask]))


@dataclass(frozen=True)
class EnergyBalance:
    """Energy audit at one instant (J): supplied = stored + dissipated."""

    supplied: float
    stored: float
    dissipated: float

    @property
    def residual(self) -> float:
        return self.supplied - self.stored - self.dissipated


def energy_balance(trace: CurrentTrace, at: float | None = None) -> EnergyBalance:
    """Work done by the bridge, energy held in L and C, and ohmic loss up to time `at`."""
    if not trace.is_piecewise:
        raise PreconditionError("energy audit needs a simulated (piecewise) trace")
    params = trace.params
    t_end = trace.duration if at is None else at

    supplied = 0.0
    for seg in trace.segments:
        if seg.start >= t_end or seg.voltage == 0.0:
            continue
        stop = min(seg.end, t_end)
        _, q_stop = seg.state_at(params, np.array([stop]))
        supplied += seg.voltage * (float(q_stop[0]) - seg.charge0)

    current = float(trace.current_at(t_end)[0])
    charge = float(trace.charge_at(t_end)[0])
    stored = 0.5 * params.L * current**2 + charge**2 / (2.0 * params.C)
    dissipated = params.total_resistance * integrate_square(trace, 0.0, t_end)
    return EnergyBalance(supplied=supplied, stored=stored, dissipated=dissipated)


def peak_current(trace: CurrentTrace) -> float:
    return float(np.max(np.abs(trace.currents)))


def buildup_time(trace: CurrentTrace, fraction: float = 0.9) -> float:
    """First time |I| reaches `fraction` of the peak current."""
    threshold = fraction * peak_current(trace)
    index = int(np.argmax(np.abs(trace.currents) >= threshold))
    return float(trace.times[index])


def envelope_decay_rate(trace: CurrentTrace) -> float:
    """Decay rate of the post-pulse envelope from a log-linear fit of the |I| maxima (1/s)."""
    tail = trace.times > trace.params.pulse_length
    magnitude = np.abs(trace.currents[tail])
    peaks, _ = find_peaks(magnitude)
    peaks = peaks[magnitude[peaks] > 0]
    if len(peaks) < 3:
        raise PreconditionError("not enough post-pulse oscillation peaks to fit a decay rate")
    slope, _ = np.polyfit(trace.times[tail][peaks], np.log(magnitude[peaks]), 1)
    return float(-slope)


def ringdown_rate(trace: CurrentTrace) -> float | None:
    """Envelope decay rate, or None when the current does not ring after the pulse."""
    try:
        return envelope_decay_rate(trace)
    except PreconditionError:
        return None
