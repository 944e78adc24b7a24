"""
quadzeeman: Pure quadratic Zeeman phase accumulation with an oscillating field pulser.

A series RLC circuit driven by a switched bridge produces a radio-frequency coil current. The
linear Zeeman phase of an F = 1 atom averages out over the pulse while the quadratic phase builds
up; quadzeeman simulates the circuit, the coil field, the spin evolution, atomic motion in the
vapor cell and the optical rotation readout, and fits the resulting signal.

Usage:
    from quadzeeman.physics import (
        RB87, hyperfine_branch, reference_params, phases_from_trace, simulate_pulse,
        zeeman_coefficients,
    )

    coeffs = zeeman_coefficients(RB87, hyperfine_branch(RB87, 1.0))
    trace = simulate_pulse(reference_params())
    phases = phases_from_trace(trace, 2.8e-4, coeffs)
"""

__version__ = "0.1.0"
