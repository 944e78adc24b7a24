"""Tests for spin-1 algebra, the pulse propagator and the readout."""

import math

import numpy as np
import pytest
from scipy.linalg import expm

from quadzeeman.core.exceptions import DomainError, PreconditionError
from quadzeeman.physics.atomdata import RB87, zeeman_coefficients
from quadzeeman.physics.circuit import CurrentTrace, reference_params, simulate_pulse
from quadzeeman.physics.spin import (
    FX,
    FY,
    FY_SQUARED,
    FZ,
    IDENTITY,
    X_AXIS,
    Y_AXIS,
    Z_AXIS,
    ObservableScales,
    Operator3,
    PhasePair,
    SpinState,
    appendix_pipeline,
    brute_force_evolution,
    cumulative_phases,
    initial_state,
    observables,
    operator_distance,
    phases_from_trace,
    pulse_unitary,
    readout,
    rotation,
    su2_to_spin1,
)

FIELD_PER_AMPERE = 3.6e-4
COEFFS = zeeman_coefficients(RB87, -1)


@pytest.fixture(scope="module")
def reference_trace() -> CurrentTrace:
    """Simulated trace of the reference pulser."""
    return simulate_pulse(reference_params())


class TestSpinAlgebra:
    """Tests for the spin-1 matrices and rotations."""

    def test_commutator(self) -> None:
        """Test [F_x, F_y] = i F_z."""
        assert np.allclose(FX @ FY - FY @ FX, 1j * FZ, atol=1e-15)

    def test_fy_squared(self) -> None:
        """Test that the tabulated F_y^2 is the square of F_y."""
        assert np.allclose(FY @ FY, FY_SQUARED, atol=1e-15)

    def test_rotation_matches_matrix_exponential(self) -> None:
        """Test the closed-form rotation against scipy's expm."""
        rng = np.random.default_rng(1)
        for _ in range(100):
            axis = rng.standard_normal(3)
            axis /= np.linalg.norm(axis)
            angle = float(rng.uniform(-2 * math.pi, 2 * math.pi))
            generator = axis[0] * FX + axis[1] * FY + axis[2] * FZ
            expected = expm(-1j * angle * generator)
            assert np.max(np.abs(rotation(axis, angle).matrix - expected)) < 1e-12

    def test_rotation_is_unitary(self) -> None:
        """Test that rotations about random axes are unitary to machine precision."""
        for axis in (X_AXIS, Y_AXIS, Z_AXIS):
            assert rotation(axis, 1.234).unitarity_error() < 1e-12
        rng = np.random.default_rng(3)
        for _ in range(100):
            axis = rng.standard_normal(3)
            axis /= np.linalg.norm(axis)
            angle = float(rng.uniform(-4 * math.pi, 4 * math.pi))
            assert rotation(axis, angle).unitarity_error() < 1e-12

    def test_full_turn(self) -> None:
        """Test that a 2 pi rotation is the identity for integer spin."""
        assert np.allclose(rotation(Y_AXIS, 2 * math.pi).matrix, IDENTITY, atol=1e-12)

    def test_non_unit_axis(self) -> None:
        """Test that a non-unit axis raises DomainError."""
        with pytest.raises(DomainError) as exc_info:
            rotation((1.0, 1.0, 0.0), 0.3)

        assert "unit" in str(exc_info.value)

    def test_operator_distance_ignores_global_phase(self) -> None:
        """Test that a global phase does not count as distance."""
        op = rotation(X_AXIS, 0.7)
        shifted = Operator3(np.exp(0.4j) * op.matrix)
        assert operator_distance(op, shifted) < 1e-14
        assert operator_distance(op, rotation(X_AXIS, 0.8)) > 0.01

    def test_su2_to_spin1(self) -> None:
        """Test that the spin-1 image of exp(-i theta n.sigma/2) is exp(-i theta n.F)."""
        sigma = [
            np.array([[0, 1], [1, 0]], dtype=np.complex128),
            np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
            np.array([[1, 0], [0, -1]], dtype=np.complex128),
        ]
        rng = np.random.default_rng(2)
        for _ in range(100):
            axis = rng.standard_normal(3)
            axis /= np.linalg.norm(axis)
            angle = float(rng.uniform(0, 2 * math.pi))
            u = expm(-0.5j * angle * sum(n * s for n, s in zip(axis, sigma, strict=True)))
            assert np.max(np.abs(su2_to_spin1(u) - rotation(axis, angle).matrix)) < 1e-12

    def test_su2_to_spin1_batched(self) -> None:
        """Test that a stack of SU(2) matrices maps to a stack of 3 x 3 matrices."""
        stack = np.broadcast_to(np.eye(2, dtype=np.complex128), (4, 2, 2))
        result = su2_to_spin1(stack)
        assert result.shape == (4, 3, 3)
        assert np.allclose(result, IDENTITY)


class TestStates:
    """Tests for SpinState."""

    def test_initial_state(self) -> None:
        """Test |1>_x = (1/2, 1/sqrt(2), 1/2)."""
        expected = np.array([0.5, 1.0 / math.sqrt(2.0), 0.5])
        assert np.allclose(initial_state().amplitudes, expected, atol=1e-15)

    def test_initial_state_is_fx_eigenstate(self) -> None:
        """Test <F_x> = 1 for the start state."""
        assert initial_state().expectation(Operator3(FX)) == pytest.approx(1.0, abs=1e-14)

    def test_not_normalised(self) -> None:
        """Test that an unnormalised state raises DomainError."""
        with pytest.raises(DomainError) as exc_info:
            SpinState(np.array([1.0, 1.0, 0.0], dtype=np.complex128))

        assert "normalised" in str(exc_info.value)

    def test_basis(self) -> None:
        """Test the z-basis constructor and its m range."""
        assert SpinState.basis(-1).amplitudes[2] == 1.0
        with pytest.raises(DomainError):
            SpinState.basis(2)

    def test_json_round_trip(self) -> None:
        """Test that a state survives its [re, im] JSON form."""
        state = rotation((0.0, 0.6, 0.8), 0.9).apply(initial_state())
        again = SpinState.from_json(state.to_json())
        assert np.array_equal(again.amplitudes, state.amplitudes)

    def test_operator_json_round_trip(self) -> None:
        """Test that an operator survives its JSON form."""
        op = pulse_unitary(1.1)
        assert np.array_equal(Operator3.from_json(op.to_json()).matrix, op.matrix)


class TestReadout:
    """Tests for the pulse propagator and the probe observables."""

    def test_observables_are_hermitian(self) -> None:
        """Test that all three observables are Hermitian for any scale constants."""
        rng = np.random.default_rng(4)
        for a, b in rng.uniform(0.1, 3.0, size=(100, 2)):
            for op in observables(ObservableScales(A=float(a), B=float(b))):
                assert op.hermiticity_error() < 1e-15

    def test_pulse_unitary_identity_cases(self) -> None:
        """Test that phi2 = 0 and phi2 = 2 pi give the identity."""
        assert np.allclose(pulse_unitary(0.0).matrix, IDENTITY, atol=1e-14)
        assert np.allclose(pulse_unitary(2 * math.pi).matrix, IDENTITY, atol=1e-12)

    def test_pulse_unitary_matches_expm(self) -> None:
        """Test exp(-i phi2 F_y^2) against scipy's expm."""
        for phi2 in (0.3, 1.7, 4.0):
            expected = expm(-1j * phi2 * FY_SQUARED)
            assert np.max(np.abs(pulse_unitary(phi2).matrix - expected)) < 1e-12
            assert pulse_unitary(phi2).unitarity_error() < 1e-12

    def test_pipeline_closed_form(self) -> None:
        """Test <alpha_R> = (A/2)(1 - sin phi2) over many phases, with alpha_I and beta at 0."""
        scales = ObservableScales(A=0.8, B=1.2)
        for phi2 in np.linspace(0.0, 4 * math.pi, 1000):
            alpha_r, alpha_i, beta = appendix_pipeline(float(phi2), scales)
            assert abs(alpha_r - 0.4 * (1.0 - math.sin(phi2))) < 1e-12
            assert abs(alpha_i) < 1e-12
            assert abs(beta) < 1e-12

    def test_pipeline_is_periodic(self) -> None:
        """Test that phi2 and phi2 + 2 pi read out the same."""
        for phi2 in (0.2, 1.9, 3.3):
            first = appendix_pipeline(phi2)
            second = appendix_pipeline(phi2 + 2 * math.pi)
            assert np.allclose(first, second, atol=1e-12)

    def test_pipeline_at_zero_phase(self) -> None:
        """Test that an untouched start state reads A/2."""
        assert appendix_pipeline(0.0)[0] == pytest.approx(0.5, abs=1e-14)

    def test_readout_of_basis_state(self) -> None:
        """Test that |m=+1> keeps cos(pi/4) of its population imbalance through the readout."""
        _, _, beta = readout(SpinState.basis(1))
        assert beta == pytest.approx(math.cos(math.pi / 4), abs=1e-12)


class TestPulsePhases:
    """Tests for phases accumulated over a simulated pulse."""

    def test_phases_of_full_pulse(self, reference_trace: CurrentTrace) -> None:
        """Test that phi1 cancels while phi2 builds up."""
        phases = phases_from_trace(reference_trace, FIELD_PER_AMPERE, COEFFS)
        assert abs(phases.phi1) < 1e-6
        assert phases.phi2 > 1.0

    def test_phi2_scales_with_field_squared(self, reference_trace: CurrentTrace) -> None:
        """Test that doubling the field quadruples phi2."""
        single = phases_from_trace(reference_trace, FIELD_PER_AMPERE, COEFFS).phi2
        double = phases_from_trace(reference_trace, 2 * FIELD_PER_AMPERE, COEFFS).phi2
        assert double == pytest.approx(4.0 * single, rel=1e-12)

    def test_truncated_trace_needs_opt_in(self) -> None:
        """Test that a trace without a decayed tail raises PreconditionError by default."""
        trace = simulate_pulse(reference_params().with_updates(tail_length=0.0))
        with pytest.raises(PreconditionError):
            phases_from_trace(trace, FIELD_PER_AMPERE, COEFFS)

    def test_negative_phi2_rejected(self) -> None:
        """Test that PhasePair refuses a negative quadratic phase."""
        with pytest.raises(DomainError):
            PhasePair(phi1=0.0, phi2=-0.1)

    def test_cumulative_phases(self, reference_trace: CurrentTrace) -> None:
        """Test that the running phi2 never decreases and ends at the pulse total."""
        running = cumulative_phases(reference_trace, FIELD_PER_AMPERE, COEFFS)
        total = phases_from_trace(reference_trace, FIELD_PER_AMPERE, COEFFS)
        assert running.phi2[0] == 0.0
        assert np.all(np.diff(running.phi2) >= 0.0)
        assert running.phi2[-1] == pytest.approx(total.phi2, rel=1e-6)
        assert np.all(running.omega2 >= 0.0)
        assert abs(running.phi1[-1]) < 1e-3 * np.max(np.abs(running.phi1))


class TestBruteForce:
    """Tests for the time-ordered step propagator."""

    def test_matches_phase_product(self, reference_trace: CurrentTrace) -> None:
        """Test the step product against rotation(y, phi1) times the quadratic propagator."""
        phases = phases_from_trace(reference_trace, FIELD_PER_AMPERE, COEFFS)
        expected = rotation(Y_AXIS, phases.phi1) @ pulse_unitary(phases.phi2)
        evolved = brute_force_evolution(
            reference_trace, FIELD_PER_AMPERE, COEFFS, steps_per_cycle=4000
        )
        assert evolved.unitarity_error() < 1e-10
        assert operator_distance(expected, evolved) < 1e-6

    def test_truncated_half_cycle(self) -> None:
        """Test that a half-cycle pulse leaves a linear phase the product still tracks."""
        params = reference_params().with_updates(
            pulse_length=0.5 / reference_params().drive_frequency, tail_length=0.0
        )
        trace = simulate_pulse(params)
        phases = phases_from_trace(trace, FIELD_PER_AMPERE, COEFFS, require_tail=False)
        evolved = brute_force_evolution(trace, FIELD_PER_AMPERE, COEFFS, steps_per_cycle=4000)
        assert abs(phases.phi1) > 0.1
        assert operator_distance(pulse_unitary(phases.phi2), evolved) > 0.1
        expected = rotation(Y_AXIS, phases.phi1) @ pulse_unitary(phases.phi2)
        assert operator_distance(expected, evolved) < 1e-4

    def test_too_few_steps(self, reference_trace: CurrentTrace) -> None:
        """Test that fewer than 100 steps per drive cycle raise PreconditionError."""
        with pytest.raises(PreconditionError) as exc_info:
            brute_force_evolution(reference_trace, FIELD_PER_AMPERE, COEFFS, steps_per_cycle=50)

        assert "steps per drive cycle" in str(exc_info.value)
