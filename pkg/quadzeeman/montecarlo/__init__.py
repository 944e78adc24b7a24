"""
Monte Carlo dephasing of thermal atoms in the inhomogeneous pulser field.

Components:
    - CellGeometry, Particle, EnsembleConfig: run definition (models.py)
    - sample_initial, propagate: Maxwell sampling and ballistic flight with wall bounces (walls.py)
    - evolve_pulse: Per-particle spin evolution through one pulse (ensemble.py)
    - dephasing_curve: Amplitude versus pi-phase cycles for several drive frequencies

Each particle draws from its own Philox stream spawned from the run seed, so results are
identical for any thread count.
"""

from quadzeeman.montecarlo.ensemble import dephasing_curve, evolve_pulse, solve_pulse_length
from quadzeeman.montecarlo.models import (
    CellGeometry,
    DephasingRow,
    Ensemble,
    EnsembleConfig,
    EnsembleReadout,
    Particle,
)
from quadzeeman.montecarlo.walls import propagate, sample_initial

__all__ = [
    "CellGeometry",
    "DephasingRow",
    "Ensemble",
    "EnsembleConfig",
    "EnsembleReadout",
    "Particle",
    "dephasing_curve",
    "evolve_pulse",
    "propagate",
    "sample_initial",
    "solve_pulse_length",
]
