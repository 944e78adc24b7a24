"""Magnetic field of the pulser coils.

Each coil is a set of coincident thin circular loops. The single-loop field uses the complete
elliptic integral closed form; the pair field is the superposition of both coils.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.interpolate import RegularGridInterpolator
from scipy.special import ellipe, ellipkm1

from quadzeeman.core.exceptions import DomainError, FieldSingularityError
from quadzeeman.physics.constants import VACUUM_PERMEABILITY

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]

_RING_CLEARANCE = 1e-6
_AXIS_SERIES_RADIUS = 1e-5
_UNIT_TOL = 1e-9


def _as_points(point: ArrayLike) -> tuple[FloatArray, bool]:
    arr = np.asarray(point, dtype=np.float64)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.shape[-1] != 3:
        raise DomainError(f"points must be 3-vectors, got shape {arr.shape}")
    return arr, single


def _unit(axis: ArrayLike) -> FloatArray:
    n = np.asarray(axis, dtype=np.float64)
    if n.shape != (3,) or abs(float(np.linalg.norm(n)) - 1.0) > _UNIT_TOL:
        raise DomainError(f"axis must be a unit 3-vector, got {axis}")
    return n


def _loop_field_cylindrical(
    a: float, rho: FloatArray, z: FloatArray, current: float
) -> tuple[FloatArray, FloatArray]:
    """(B_rho, B_z) of a loop of radius a in its own cylindrical frame."""
    alpha_sq = (a - rho) ** 2 + z**2
    if np.any(alpha_sq <= (_RING_CLEARANCE * a) ** 2):
        raise FieldSingularityError("field point lies on the current ring")

    beta_sq = (a + rho) ** 2 + z**2
    beta = np.sqrt(beta_sq)
    m = 4.0 * a * rho / beta_sq
    K = ellipkm1(alpha_sq / beta_sq)
    E = ellipe(m)

    c = VACUUM_PERMEABILITY * current / math.pi
    r_sq = a * a + rho**2 + z**2
    b_z = c / (2.0 * alpha_sq * beta) * ((a * a - rho**2 - z**2) * E + alpha_sq * K)

    near_axis = rho < _AXIS_SERIES_RADIUS * a
    safe_rho = np.where(near_axis, 1.0, rho)
    b_rho = c * z / (2.0 * alpha_sq * beta * safe_rho) * (r_sq * E - alpha_sq * K)
    # first order off-axis expansion: B_rho = -(rho / 2) dB_axis/dz
    axis_sq = a * a + z**2
    series = 0.75 * VACUUM_PERMEABILITY * current * a * a * z * rho / axis_sq**2.5
    b_rho = np.where(near_axis, series, b_rho)
    return b_rho, b_z


def _loop_field_many(
    a: float, center: FloatArray, axis: FloatArray, current: float, points: FloatArray
) -> FloatArray:
    rel = points - center
    z = rel @ axis
    radial = rel - z[:, None] * axis
    rho = np.linalg.norm(radial, axis=1)
    b_rho, b_z = _loop_field_cylindrical(a, rho, z, current)
    safe = np.where(rho > 0, rho, 1.0)
    rho_hat = np.where((rho > 0)[:, None], radial / safe[:, None], 0.0)
    return b_rho[:, None] * rho_hat + b_z[:, None] * axis


def loop_field(
    a: float, loop_center: ArrayLike, axis: ArrayLike, I: float, point: ArrayLike
) -> FloatArray:
    """Field (T) of one thin loop of radius a (m) carrying I (A).

    `point` is a 3-vector or an (N, 3) array; the result has the same shape. Current flows
    counter-clockwise about `axis`, so the field at the center points along +axis for I > 0.
    """
    if a <= 0:
        raise DomainError(f"loop radius must be positive, got {a}")
    points, single = _as_points(point)
    center = np.asarray(loop_center, dtype=np.float64)
    field = _loop_field_many(a, center, _unit(axis), I, points)
    return field[0] if single else field


@dataclass(frozen=True)
class CoilGeometry:
    """Coaxial coil pair: two coils of `turns_per_coil` coincident loops."""

    loop_radius: float = 0.025
    turns_per_coil: int = 10
    separation: float = 0.025
    axis: tuple[float, float, float] = (0.0, 1.0, 0.0)
    center: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self) -> None:
        if self.loop_radius <= 0:
            raise DomainError("loop_radius must be positive")
        if self.turns_per_coil < 1:
            raise DomainError("turns_per_coil must be at least 1")
        if self.separation <= 0:
            raise DomainError("separation must be positive")
        _unit(self.axis)

    @property
    def axis_vector(self) -> FloatArray:
        return np.asarray(self.axis, dtype=np.float64)

    @property
    def center_vector(self) -> FloatArray:
        return np.asarray(self.center, dtype=np.float64)

    def coil_centers(self) -> tuple[FloatArray, FloatArray]:
        offset = 0.5 * self.separation * self.axis_vector
        return self.center_vector - offset, self.center_vector + offset


def helmholtz_preset() -> CoilGeometry:
    """25 mm radius, 10 turns per coil, separation equal to the radius, axis along y."""
    return CoilGeometry()


@dataclass(frozen=True)
class FieldSample:
    """Field vector at a point."""

    point: tuple[float, float, float]
    B: tuple[float, float, float]


def pair_field(geom: CoilGeometry, I: float, point: ArrayLike) -> FloatArray:
    """Field (T) of the coil pair carrying I (A) at a 3-vector or (N, 3) points."""
    points, single = _as_points(point)
    axis = geom.axis_vector
    lower, upper = geom.coil_centers()
    field = _loop_field_many(geom.loop_radius, lower, axis, I, points)
    field += _loop_field_many(geom.loop_radius, upper, axis, I, points)
    field *= geom.turns_per_coil
    return field[0] if single else field


def field_scale_map(geom: CoilGeometry, grid: ArrayLike) -> list[FieldSample]:
    """Per-ampere field b(r) at every grid point; B(r, t) = b(r) I(t)."""
    points, _ = _as_points(grid)
    field = pair_field(geom, 1.0, points)
    return [
        FieldSample(point=(p[0], p[1], p[2]), B=(b[0], b[1], b[2]))
        for p, b in zip(points.tolist(), field.tolist(), strict=True)
    ]


def center_field_per_ampere(geom: CoilGeometry) -> float:
    """Axial field per ampere at the pair center (T/A)."""
    return float(pair_field(geom, 1.0, geom.center_vector) @ geom.axis_vector)


def helmholtz_center_field(geom: CoilGeometry, I: float) -> float:
    """Textbook center field (4/5)^(3/2) mu0 n I / a of an ideal Helmholtz pair (T)."""
    return (0.8**1.5) * VACUUM_PERMEABILITY * geom.turns_per_coil * I / geom.loop_radius


class FieldLookup:
    """Tabulated per-ampere pair field over a cylinder around the pair center.

    The pair is axisymmetric, so (b_rho, b_z) is tabulated on a (rho, z) grid and interpolated
    bilinearly. Built once and shared read-only.
    """

    __slots__ = ("_geom", "_rho_max", "_z_max", "_rho_interp", "_z_interp")

    def __init__(self, geom: CoilGeometry, extent: float, resolution: int = 150) -> None:
        if extent <= 0:
            raise DomainError("lookup extent must be positive")
        self._geom = geom
        self._rho_max = extent * 1.01
        self._z_max = extent * 1.01
        rho = np.linspace(0.0, self._rho_max, resolution + 1)
        z = np.linspace(-self._z_max, self._z_max, 2 * resolution + 1)
        rho_grid, z_grid = np.meshgrid(rho, z, indexing="ij")

        b_rho = np.zeros_like(rho_grid)
        b_z = np.zeros_like(rho_grid)
        half = 0.5 * geom.separation
        for offset in (-half, half):
            br, bz = _loop_field_cylindrical(
                geom.loop_radius, rho_grid.ravel(), (z_grid - offset).ravel(), 1.0
            )
            b_rho += br.reshape(rho_grid.shape)
            b_z += bz.reshape(rho_grid.shape)
        b_rho *= geom.turns_per_coil
        b_z *= geom.turns_per_coil

        self._rho_interp = RegularGridInterpolator(
            (rho, z), b_rho, method="linear", bounds_error=False, fill_value=None
        )
        self._z_interp = RegularGridInterpolator(
            (rho, z), b_z, method="linear", bounds_error=False, fill_value=None
        )
        logger.debug("built %dx%d field lookup, extent %.4f m", len(rho), len(z), extent)

    @property
    def geometry(self) -> CoilGeometry:
        return self._geom

    def field(self, points: FloatArray) -> FloatArray:
        """Per-ampere field (T/A) at (N, 3) points."""
        axis = self._geom.axis_vector
        rel = points - self._geom.center_vector
        z = rel @ axis
        radial = rel - z[:, None] * axis
        rho = np.linalg.norm(radial, axis=1)
        query = np.column_stack((rho, z))
        b_rho = self._rho_interp(query)
        b_z = self._z_interp(query)
        safe = np.where(rho > 0, rho, 1.0)
        rho_hat = np.where((rho > 0)[:, None], radial / safe[:, None], 0.0)
        result: FloatArray = b_rho[:, None] * rho_hat + b_z[:, None] * axis
        return result

    def max_relative_error(self, points: FloatArray) -> float:
        """Largest |lookup - direct| / |direct| over the points."""
        direct = pair_field(self._geom, 1.0, points)
        diff = np.linalg.norm(self.field(points) - direct, axis=1)
        return float(np.max(diff / np.linalg.norm(direct, axis=1)))


@dataclass(frozen=True)
class Homogeneity:
    """Relative deviation |b(r) - b(0)| / |b(0)| over a spherical region."""

    max_deviation: float
    rms_deviation: float
    samples: int


def sphere_grid(radius: float, center: ArrayLike, n: int) -> FloatArray:
    """Points of an n x n x n cubic grid that fall inside the sphere."""
    axis = np.linspace(-radius, radius, n)
    cube = np.stack(np.meshgrid(axis, axis, axis, indexing="ij"), axis=-1).reshape(-1, 3)
    inside = cube[np.linalg.norm(cube, axis=1) <= radius]
    return inside + np.asarray(center, dtype=np.float64)


def homogeneity_map(
    geom: CoilGeometry, radius: float, n: int = 21, center: ArrayLike | None = None
) -> Homogeneity:
    """Field homogeneity over a sphere of `radius` about `center` (the pair center by default),
    relative to the field at that center."""
    origin = geom.center_vector if center is None else np.asarray(center, dtype=np.float64)
    points = sphere_grid(radius, origin, n)
    field = pair_field(geom, 1.0, points)
    reference = pair_field(geom, 1.0, origin)
    deviation = np.linalg.norm(field - reference, axis=1) / np.linalg.norm(reference)
    return Homogeneity(
        max_deviation=float(np.max(deviation)),
        rms_deviation=float(np.sqrt(np.mean(deviation**2))),
        samples=len(points),
    )
