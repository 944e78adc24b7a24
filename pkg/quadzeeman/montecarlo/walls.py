"""Initial sampling and ballistic flight of atoms inside the spherical cell."""

from __future__ import annotations

import math
from collections.abc import Sequence

import numpy as np
from numpy.typing import NDArray
from scipy.stats import maxwell

from quadzeeman.core.exceptions import DomainError
from quadzeeman.montecarlo.models import CellGeometry, EnsembleConfig, Particle, WallReflection
from quadzeeman.physics.constants import BOLTZMANN

FloatArray = NDArray[np.float64]

_MIN_INWARD = 1e-12


def _isotropic(rng: np.random.Generator) -> FloatArray:
    while True:
        v = rng.standard_normal(3)
        norm = float(np.linalg.norm(v))
        if norm > 0:
            return v / norm


def speed_scale(config: EnsembleConfig) -> float:
    """Maxwell scale sqrt(k_B T / m) (m/s)."""
    return math.sqrt(BOLTZMANN * config.temperature / config.species.atomic_mass)


def mean_speed(config: EnsembleConfig) -> float:
    """Analytic Maxwell–Boltzmann mean speed sqrt(8 k_B T / (pi m))."""
    return speed_scale(config) * math.sqrt(8.0 / math.pi)


def sample_initial(config: EnsembleConfig, rng: np.random.Generator) -> Particle:
    """Uniform position in the cell, Maxwell speed, isotropic direction."""
    cell = config.cell
    r = cell.radius * float(rng.random()) ** (1.0 / 3.0)
    position = cell.center_vector + r * _isotropic(rng)
    speed = float(maxwell.rvs(scale=speed_scale(config), random_state=rng))
    return Particle(position=position, velocity=speed * _isotropic(rng))


def _inward_direction(
    normal: FloatArray, rng: np.random.Generator, reflection: WallReflection
) -> FloatArray:
    """New direction off the wall; `normal` is the unit inward normal."""
    while True:
        d = _isotropic(rng)
        if reflection == "cosine":
            d = normal + d
            norm = float(np.linalg.norm(d))
            if norm == 0:
                continue
            d = d / norm
        elif d @ normal < 0:
            d = -d
        if d @ normal > _MIN_INWARD:
            return d


def _wall_distance(p: FloatArray, v: FloatArray, radius: float) -> float:
    """Flight time from p (relative to the center) along v until the sphere is hit."""
    vv = float(v @ v)
    pv = float(p @ v)
    disc = max(pv * pv - vv * (float(p @ p) - radius * radius), 0.0)
    return (-pv + math.sqrt(disc)) / vv


def fly(
    position: FloatArray,
    velocity: FloatArray,
    dt: float,
    cell: CellGeometry,
    rng: np.random.Generator,
    reflection: WallReflection = "uniform",
) -> tuple[FloatArray, FloatArray, int]:
    """Straight flight for dt with exact ray-sphere bounces.

    Returns (position, velocity, bounces).
    """
    center = cell.center_vector
    radius = cell.radius
    p = position - center
    v = velocity.copy()
    speed = float(np.linalg.norm(v))
    remaining = dt
    bounces = 0
    if speed == 0:
        return position.copy(), v, 0

    while True:
        hit = _wall_distance(p, v, radius)
        if hit >= remaining:
            p = p + v * remaining
            break
        p = p + v * hit
        p *= radius / float(np.linalg.norm(p))
        v = speed * _inward_direction(-p / radius, rng, reflection)
        remaining -= hit
        bounces += 1

    distance = float(np.linalg.norm(p))
    if distance > radius:
        p *= radius / distance
    return p + center, v, bounces


def propagate(
    particle: Particle,
    dt: float,
    cell: CellGeometry,
    rng: np.random.Generator,
    reflection: WallReflection = "uniform",
) -> Particle:
    """Move one particle for dt, bouncing off the wall with its speed unchanged."""
    if dt <= 0:
        raise DomainError(f"time step must be positive, got {dt}")
    position, velocity, _ = fly(particle.position, particle.velocity, dt, cell, rng, reflection)
    return Particle(position=position, velocity=velocity)


def advance(
    positions: FloatArray,
    velocities: FloatArray,
    dt: float,
    cell: CellGeometry,
    rngs: Sequence[np.random.Generator],
    reflection: WallReflection = "uniform",
) -> int:
    """Move a stack of particles in place; only particles reaching the wall touch their RNG.

    Returns the number of wall bounces.
    """
    moved = positions + velocities * dt
    outside = np.linalg.norm(moved - cell.center_vector, axis=1) > cell.radius
    positions[~outside] = moved[~outside]
    bounces = 0
    for k in np.flatnonzero(outside):
        positions[k], velocities[k], hits = fly(
            positions[k], velocities[k], dt, cell, rngs[k], reflection
        )
        bounces += hits
    return bounces
