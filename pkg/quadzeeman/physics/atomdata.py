"""Atomic species data, Breit–Rabi energies and Larmor-frequency coefficients."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from quadzeeman.core.exceptions import ConfigError, DomainError
from quadzeeman.physics.constants import ATOMIC_MASS_UNIT, BOHR_MAGNETON, HBAR, PLANCK

logger = logging.getLogger(__name__)

_HALF_INTEGER_TOL = 1e-9


def _is_integer(value: float) -> bool:
    return abs(value - round(value)) < _HALF_INTEGER_TOL


@dataclass(frozen=True)
class AtomSpecies:
    """Ground-state data of an alkali atom.

    Attributes:
        name: Display name, also the preset key
        nuclear_spin: I, a positive half-integer
        g_I: Nuclear g-factor, sign convention where the nuclear Zeeman term is +g_I mu_B m B
        g_J: Electronic g-factor
        hyperfine_splitting: Zero-field splitting between F = I + 1/2 and F = I - 1/2 (J)
        atomic_mass: Mass (kg)
    """

    name: str
    nuclear_spin: float
    g_I: float
    g_J: float
    hyperfine_splitting: float
    atomic_mass: float

    def __post_init__(self) -> None:
        if self.nuclear_spin <= 0 or not _is_integer(2 * self.nuclear_spin):
            raise DomainError(f"nuclear spin must be a half-integer > 0, got {self.nuclear_spin}")
        if self.hyperfine_splitting <= 0:
            raise DomainError(f"hyperfine splitting must be > 0, got {self.hyperfine_splitting}")
        if self.atomic_mass <= 0:
            raise DomainError(f"atomic mass must be positive, got {self.atomic_mass}")

    @property
    def multiplicity(self) -> float:
        """2I + 1."""
        return 2 * self.nuclear_spin + 1

    @classmethod
    def from_preset_dict(cls, data: dict[str, Any]) -> AtomSpecies:
        """Create a species from a preset record (keys name, I, gI, gJ, dE_hfs_Hz, mass_u)."""
        missing = {"name", "I", "gI", "gJ", "dE_hfs_Hz", "mass_u"} - data.keys()
        if missing:
            raise DomainError(f"species preset missing keys: {', '.join(sorted(missing))}")
        return cls(
            name=str(data["name"]),
            nuclear_spin=float(data["I"]),
            g_I=float(data["gI"]),
            g_J=float(data["gJ"]),
            hyperfine_splitting=PLANCK * float(data["dE_hfs_Hz"]),
            atomic_mass=ATOMIC_MASS_UNIT * float(data["mass_u"]),
        )

    def to_preset_dict(self) -> dict[str, Any]:
        """Inverse of from_preset_dict."""
        return {
            "name": self.name,
            "I": self.nuclear_spin,
            "gI": self.g_I,
            "gJ": self.g_J,
            "dE_hfs_Hz": self.hyperfine_splitting / PLANCK,
            "mass_u": self.atomic_mass / ATOMIC_MASS_UNIT,
        }


# Steck, "Rubidium 87 D Line Data" (rev. 2.2.2)
RB87 = AtomSpecies.from_preset_dict(
    {
        "name": "87Rb",
        "I": 1.5,
        "gI": -0.0009951414,
        "gJ": 2.00233113,
        "dE_hfs_Hz": 6.834682610904e9,
        "mass_u": 86.909180531,
    }
)

PRESETS: dict[str, AtomSpecies] = {RB87.name: RB87}


def load_species(path: Path) -> dict[str, AtomSpecies]:
    """Load species presets from a JSON file holding one record or a list of records."""
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise ConfigError(f"cannot read species file: {e}", path=path) from e
    except json.JSONDecodeError as e:
        raise ConfigError(e.msg, path=path, line=e.lineno) from e

    records = data if isinstance(data, list) else [data]
    species: dict[str, AtomSpecies] = {}
    for record in records:
        if not isinstance(record, dict):
            raise ConfigError("species record must be an object", path=path)
        try:
            item = AtomSpecies.from_preset_dict(record)
        except DomainError as e:
            raise ConfigError(str(e), path=path) from e
        species[item.name] = item
    logger.debug("loaded %d species from %s", len(species), path)
    return species


@dataclass(frozen=True)
class ZeemanCoefficients:
    """Coefficients of the linear and quadratic Larmor frequencies.

    Omega1 = omega1_per_B * B and Omega2 = omega2_per_B2 * B**2; `sign` is the hyperfine branch,
    +1 for F = I + 1/2 and -1 for F = I - 1/2.
    """

    omega1_per_B: float
    omega2_per_B2: float
    sign: int

    def __post_init__(self) -> None:
        if self.omega1_per_B <= 0 or self.omega2_per_B2 <= 0:
            raise DomainError("Zeeman coefficients must be positive")
        if self.sign not in (1, -1):
            raise DomainError(f"branch sign must be +1 or -1, got {self.sign}")


def hyperfine_branch(species: AtomSpecies, F: float) -> int:
    """Return +1 for F = I + 1/2 and -1 for F = I - 1/2."""
    if math.isclose(F, species.nuclear_spin + 0.5):
        return 1
    if math.isclose(F, species.nuclear_spin - 0.5) and F >= 0:
        return -1
    raise DomainError(
        f"F = {F} is not a ground hyperfine level of {species.name} (I = {species.nuclear_spin})"
    )


def _check_sublevel(F: float, m_F: float) -> None:
    if abs(m_F) > F + _HALF_INTEGER_TOL or not _is_integer(F - m_F):
        raise DomainError(f"m_F = {m_F} is not a sublevel of F = {F}")


def breit_rabi_energy(species: AtomSpecies, F: float, m_F: float, B: float) -> float:
    """Exact ground-state energy of |F, m_F> in a field B (T), in joules.

    Negative B is a reversed field. The stretched states use the signed root 1 +/- x, which
    keeps them affine in B through x = 1.
    """
    sign = hyperfine_branch(species, F)
    _check_sublevel(F, m_F)

    dE = species.hyperfine_splitting
    mult = species.multiplicity
    x = (species.g_J - species.g_I) * BOHR_MAGNETON * B / dE

    stretched = sign == 1 and math.isclose(abs(m_F), species.nuclear_spin + 0.5)
    if stretched:
        root = 1.0 + math.copysign(1.0, m_F) * x
    else:
        root = math.sqrt(1.0 + 4.0 * m_F * x / mult + x * x)

    return -dE / (2.0 * mult) + species.g_I * BOHR_MAGNETON * m_F * B + sign * 0.5 * dE * root


def zeeman_coefficients(species: AtomSpecies, branch: int) -> ZeemanCoefficients:
    """Linear and quadratic Larmor-frequency coefficients, nuclear term neglected."""
    mult = species.multiplicity
    g_mu = species.g_J * BOHR_MAGNETON
    return ZeemanCoefficients(
        omega1_per_B=g_mu / (mult * HBAR),
        omega2_per_B2=g_mu * g_mu / (species.hyperfine_splitting * mult * mult * HBAR),
        sign=branch,
    )


def larmor_frequencies(coeffs: ZeemanCoefficients, B: float) -> tuple[float, float]:
    """(Omega1, Omega2) in rad/s; Omega1 keeps the sign of B, Omega2 is never negative."""
    return coeffs.omega1_per_B * B, coeffs.omega2_per_B2 * B * B


def scalar_energy(species: AtomSpecies, F: float, B: float) -> float:
    """m_F-independent part of the level energy to second order in the field."""
    sign = hyperfine_branch(species, F)
    dE = species.hyperfine_splitting
    x = species.g_J * BOHR_MAGNETON * B / dE
    return -dE / (2.0 * species.multiplicity) + sign * 0.5 * dE + sign * 0.25 * dE * x * x


def expanded_energy(species: AtomSpecies, F: float, m_F: float, B: float) -> float:
    """Second-order expansion: scalar part plus sign * hbar * (Omega1 m_F - Omega2 m_F^2)."""
    sign = hyperfine_branch(species, F)
    _check_sublevel(F, m_F)
    omega1, omega2 = larmor_frequencies(zeeman_coefficients(species, sign), B)
    return scalar_energy(species, F, B) + sign * HBAR * (omega1 * m_F - omega2 * m_F * m_F)
