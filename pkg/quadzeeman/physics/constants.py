"""Physical constants and unit helpers.

Values are CODATA 2018 (NIST SP 961, May 2019), fixed here so results do not drift with the
installed scipy release.
"""

from __future__ import annotations

import math

# CODATA 2018, exact since the 2019 SI redefinition
PLANCK = 6.62607015e-34  # J s
HBAR = PLANCK / (2.0 * math.pi)  # J s
BOLTZMANN = 1.380649e-23  # J / K

# CODATA 2018, measured
BOHR_MAGNETON = 9.2740100783e-24  # J / T
VACUUM_PERMEABILITY = 1.25663706212e-6  # N / A^2
ATOMIC_MASS_UNIT = 1.66053906660e-27  # kg

GAUSS = 1e-4  # T
ZERO_CELSIUS = 273.15  # K


def gauss_to_tesla(value: float) -> float:
    """Convert a field in gauss to tesla."""
    return value * GAUSS


def tesla_to_gauss(value: float) -> float:
    """Convert a field in tesla to gauss."""
    return value / GAUSS
