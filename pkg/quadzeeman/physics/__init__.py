"""
Physics layer: atoms, the pulser circuit, coil fields and spin-1 dynamics.

Components:
    - atomdata: AtomSpecies presets, Breit–Rabi energies, Larmor-frequency coefficients
    - circuit: Piecewise-exact transient of the H-bridge driven series RLC pulser
    - coils: Elliptic-integral field of a coaxial coil pair and a tabulated lookup
    - spin: Spin-1 states, rotations, the quadratic-phase propagator and probe observables

The chain from drive voltage to probe observable is:
    simulate_pulse -> phases_from_trace -> pulse_unitary -> readout
"""

from quadzeeman.physics.atomdata import (
    RB87,
    AtomSpecies,
    ZeemanCoefficients,
    breit_rabi_energy,
    hyperfine_branch,
    larmor_frequencies,
    zeeman_coefficients,
)
from quadzeeman.physics.circuit import (
    CircuitParams,
    CurrentTrace,
    drive_voltage,
    reference_params,
    simulate_pulse,
    total_charge,
)
from quadzeeman.physics.coils import (
    CoilGeometry,
    FieldLookup,
    FieldSample,
    field_scale_map,
    loop_field,
    pair_field,
)
from quadzeeman.physics.spin import (
    ObservableScales,
    Operator3,
    PhasePair,
    SpinState,
    appendix_pipeline,
    brute_force_evolution,
    observables,
    phases_from_trace,
    pulse_unitary,
    rotation,
)

__all__ = [
    # Atoms
    "RB87",
    "AtomSpecies",
    "ZeemanCoefficients",
    "breit_rabi_energy",
    "hyperfine_branch",
    "larmor_frequencies",
    "zeeman_coefficients",
    # Circuit
    "CircuitParams",
    "CurrentTrace",
    "drive_voltage",
    "reference_params",
    "simulate_pulse",
    "total_charge",
    # Coils
    "CoilGeometry",
    "FieldLookup",
    "FieldSample",
    "field_scale_map",
    "loop_field",
    "pair_field",
    # Spin
    "ObservableScales",
    "Operator3",
    "PhasePair",
    "SpinState",
    "appendix_pipeline",
    "brute_force_evolution",
    "observables",
    "phases_from_trace",
    "pulse_unitary",
    "rotation",
]
