"""Tests for the coil field."""

import math

import numpy as np
import pytest

from quadzeeman.core.exceptions import DomainError, FieldSingularityError
from quadzeeman.physics.coils import (
    CoilGeometry,
    FieldLookup,
    center_field_per_ampere,
    field_scale_map,
    helmholtz_center_field,
    helmholtz_preset,
    homogeneity_map,
    loop_field,
    pair_field,
    sphere_grid,
)
from quadzeeman.physics.constants import VACUUM_PERMEABILITY, tesla_to_gauss

Z = (0.0, 0.0, 1.0)
ORIGIN = (0.0, 0.0, 0.0)


def biot_savart_loop(a: float, current: float, point: np.ndarray, segments: int) -> np.ndarray:
    """Segmented Biot–Savart sum for a loop in the xy-plane centered at the origin."""
    phi = (np.arange(segments) + 0.5) * 2.0 * math.pi / segments
    source = a * np.column_stack((np.cos(phi), np.sin(phi), np.zeros(segments)))
    dl = (2.0 * math.pi * a / segments) * np.column_stack(
        (-np.sin(phi), np.cos(phi), np.zeros(segments))
    )
    r = point - source
    dist = np.linalg.norm(r, axis=1)
    contributions = np.cross(dl, r) / dist[:, None] ** 3
    result: np.ndarray = VACUUM_PERMEABILITY * current / (4.0 * math.pi) * contributions.sum(axis=0)
    return result


class TestLoopField:
    """Tests for the single-loop closed form."""

    def test_center(self) -> None:
        """Test mu0 I / 2a along the axis at the loop center."""
        a = 0.03
        field = loop_field(a, ORIGIN, Z, 2.0, ORIGIN)
        assert field[2] == pytest.approx(VACUUM_PERMEABILITY * 2.0 / (2.0 * a), rel=1e-12)
        assert abs(field[0]) < 1e-18 and abs(field[1]) < 1e-18

    def test_on_axis(self) -> None:
        """Test the on-axis closed form mu0 I a^2 / 2 (a^2 + z^2)^(3/2)."""
        a = 0.025
        for z in (-0.04, 0.005, 0.02):
            field = loop_field(a, ORIGIN, Z, 1.0, (0.0, 0.0, z))
            expected = VACUUM_PERMEABILITY * a * a / (2.0 * (a * a + z * z) ** 1.5)
            assert field[2] == pytest.approx(expected, rel=1e-12)
            assert np.hypot(field[0], field[1]) <= 1e-12 * abs(field[2])

    def test_off_axis_matches_biot_savart(self) -> None:
        """Test the closed form against a 10^4-segment line integral."""
        a = 0.025
        point = np.array([0.3 * a, 0.4 * a, 0.2 * a])
        closed = loop_field(a, ORIGIN, Z, 1.0, point)
        brute = biot_savart_loop(a, 1.0, point, 10_000)
        assert np.linalg.norm(closed - brute) / np.linalg.norm(brute) < 1e-6

    def test_random_points_match_biot_savart(self) -> None:
        """Test the closed form on a random point cloud away from the wire."""
        rng = np.random.default_rng(7)
        a = 0.025
        points = rng.uniform(-1.5 * a, 1.5 * a, size=(100, 3))
        rho = np.hypot(points[:, 0], points[:, 1])
        points = points[np.hypot(rho - a, points[:, 2]) > 0.1 * a]
        closed = loop_field(a, ORIGIN, Z, 1.0, points)
        for p, b in zip(points, closed, strict=True):
            brute = biot_savart_loop(a, 1.0, p, 10_000)
            assert np.linalg.norm(b - brute) / np.linalg.norm(brute) < 1e-6

    def test_on_the_ring(self) -> None:
        """Test that a point on the winding raises FieldSingularityError."""
        with pytest.raises(FieldSingularityError) as exc_info:
            loop_field(0.025, ORIGIN, Z, 1.0, (0.025, 0.0, 0.0))

        assert "ring" in str(exc_info.value)

    def test_axis_must_be_unit(self) -> None:
        """Test that a non-unit axis raises DomainError."""
        with pytest.raises(DomainError):
            loop_field(0.025, ORIGIN, (0.0, 0.0, 2.0), 1.0, ORIGIN)


class TestPairField:
    """Tests for the Helmholtz pair."""

    def test_preset(self) -> None:
        """Test the preset geometry."""
        geom = helmholtz_preset()
        assert geom.loop_radius == 0.025
        assert geom.turns_per_coil == 10
        assert geom.separation == geom.loop_radius
        assert geom.axis == (0.0, 1.0, 0.0)

    def test_center_field(self) -> None:
        """Test the center field of about 25 G at 7 A."""
        geom = helmholtz_preset()
        center = pair_field(geom, 7.0, ORIGIN)
        assert center[1] == pytest.approx(helmholtz_center_field(geom, 7.0), rel=1e-12)
        assert tesla_to_gauss(float(center[1])) == pytest.approx(25.0, rel=0.02)

    def test_zero_current(self) -> None:
        """Test that no current means no field."""
        assert np.all(pair_field(helmholtz_preset(), 0.0, (0.01, 0.002, -0.003)) == 0.0)

    def test_linear_in_current(self) -> None:
        """Test pair_field(I) = I b(r)."""
        geom = helmholtz_preset()
        point = np.array([0.004, -0.007, 0.011])
        assert np.allclose(pair_field(geom, 3.5, point), 3.5 * pair_field(geom, 1.0, point))

    def test_mirror_symmetry(self) -> None:
        """Test that the axial field is even in the transverse offset and axial position."""
        geom = helmholtz_preset()
        rng = np.random.default_rng(3)
        for x, y, z in rng.uniform(-0.015, 0.015, size=(8, 3)):
            base = pair_field(geom, 1.0, (x, y, z))
            assert pair_field(geom, 1.0, (-x, y, -z))[1] == pytest.approx(base[1], rel=1e-12)
            assert pair_field(geom, 1.0, (x, -y, z))[1] == pytest.approx(base[1], rel=1e-12)
            assert pair_field(geom, 1.0, (x, -y, z))[0] == pytest.approx(-base[0], rel=1e-9)

    def test_divergence_free(self) -> None:
        """Test that the central-difference divergence vanishes inside the pair."""
        geom = helmholtz_preset()
        a = geom.loop_radius
        h = 1e-4 * a
        rng = np.random.default_rng(11)
        points = sphere_grid(0.6 * a, ORIGIN, 9)
        points = points[rng.permutation(len(points))[:100]]
        for p in points:
            div = 0.0
            for k in range(3):
                step = np.zeros(3)
                step[k] = h
                diff = pair_field(geom, 1.0, p + step) - pair_field(geom, 1.0, p - step)
                div += diff[k] / (2.0 * h)
            magnitude = float(np.linalg.norm(pair_field(geom, 1.0, p)))
            assert abs(div) < 1e-6 * magnitude / a

    def test_helmholtz_flatness(self) -> None:
        """Test that the second axial derivative vanishes at the center when d = a."""
        geom = helmholtz_preset()
        a = geom.loop_radius
        h = 1e-3 * a
        up = pair_field(geom, 1.0, (0.0, h, 0.0))[1]
        mid = pair_field(geom, 1.0, ORIGIN)[1]
        down = pair_field(geom, 1.0, (0.0, -h, 0.0))[1]
        assert abs((up - 2.0 * mid + down) / h**2) < 1e-4 * mid / a**2

    def test_center_field_per_ampere(self) -> None:
        """Test the per-ampere value at the center."""
        geom = helmholtz_preset()
        expected = 0.8**1.5 * VACUUM_PERMEABILITY * 10 / 0.025
        assert center_field_per_ampere(geom) == pytest.approx(expected, rel=1e-12)

    def test_field_scale_map(self) -> None:
        """Test that the field map samples b(r) at each grid point."""
        geom = helmholtz_preset()
        grid = [(0.0, 0.0, 0.0), (0.001, 0.002, 0.003)]
        samples = field_scale_map(geom, grid)
        assert [s.point for s in samples] == [tuple(p) for p in grid]
        assert samples[1].B == pytest.approx(tuple(pair_field(geom, 1.0, grid[1])))

    def test_homogeneity(self) -> None:
        """Test that the field is flat near the center and degrades toward the cell wall."""
        geom = helmholtz_preset()
        core = homogeneity_map(geom, 0.1 * geom.loop_radius, n=11)
        cell = homogeneity_map(geom, 0.0185, n=11)
        assert core.max_deviation < 1e-3
        assert 0.05 < cell.max_deviation < 0.5
        assert cell.rms_deviation <= cell.max_deviation

    def test_homogeneity_about_offset_center(self) -> None:
        """Test that the region and its reference field follow the given center."""
        geom = helmholtz_preset()
        default = homogeneity_map(geom, 0.005, n=11)
        explicit = homogeneity_map(geom, 0.005, n=11, center=geom.center_vector)
        assert explicit == default
        offset = geom.center_vector + 0.4 * geom.loop_radius * geom.axis_vector
        shifted = homogeneity_map(geom, 0.005, n=11, center=offset)
        assert shifted.samples == default.samples
        assert shifted.max_deviation > 2 * default.max_deviation

    def test_invalid_geometry(self) -> None:
        """Test that zero turns raise DomainError."""
        with pytest.raises(DomainError):
            CoilGeometry(turns_per_coil=0)


class TestFieldLookup:
    """Tests for the tabulated field."""

    def test_lookup_accuracy_in_cell(self) -> None:
        """Test the interpolated field against direct evaluation inside the cell."""
        geom = helmholtz_preset()
        lookup = FieldLookup(geom, 0.0185)
        rng = np.random.default_rng(5)
        directions = rng.standard_normal((200, 3))
        directions /= np.linalg.norm(directions, axis=1)[:, None]
        points = directions * (0.0185 * rng.random(200) ** (1.0 / 3.0))[:, None]
        assert lookup.max_relative_error(points) < 1e-3

    def test_lookup_on_axis(self) -> None:
        """Test that the lookup keeps transverse components at zero on the axis."""
        lookup = FieldLookup(helmholtz_preset(), 0.0185, resolution=50)
        field = lookup.field(np.array([[0.0, 0.01, 0.0], [0.0, -0.005, 0.0]]))
        assert np.all(np.abs(field[:, [0, 2]]) < 1e-15)

    def test_extent_must_be_positive(self) -> None:
        """Test that an empty lookup raises DomainError."""
        with pytest.raises(DomainError):
            FieldLookup(helmholtz_preset(), 0.0)
