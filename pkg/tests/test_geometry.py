"""Confidence ellipses, centroid distances, and areas.

Oracles:
- the chi-square(2) quantile: 50% mass radius = sqrt(-2 ln 0.5) = 1.1774
- Monte Carlo containment at m = 10,000
- invariance under rigid motions / uniform scaling, derived from the
  covariance transformation law
"""
import numpy as np
import pytest

from ulca.errors import EmptyGroupError
from ulca.geometry import ConfidenceEllipse, confidence_ellipse, group_geometry


def rotation(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


class TestChiSquareScaling:
    def test_standard_normal_semi_axes(self):
        rng = np.random.default_rng(0)
        pts = rng.standard_normal((200_000, 2))
        ell = confidence_ellipse(pts, confidence=0.5)
        expected = np.sqrt(-2.0 * np.log(0.5))  # 1.17741...
        semi = np.linalg.norm(ell.axes, axis=1)
        np.testing.assert_allclose(semi, expected, rtol=0.02)
        np.testing.assert_allclose(ell.center, [0.0, 0.0], atol=0.02)

    def test_containment_calibration(self):
        rng = np.random.default_rng(1)
        pts = rng.standard_normal((10_000, 2)) @ np.array(
            [[2.0, 0.3], [0.0, 0.7]]
        )
        for conf in (0.25, 0.5, 0.75):
            ell = confidence_ellipse(pts, confidence=conf)
            frac = ell.contains(pts).mean()
            assert abs(frac - conf) <= 0.05

    def test_area_formula(self):
        rng = np.random.default_rng(2)
        pts = rng.standard_normal((5_000, 2))
        ell = confidence_ellipse(pts, confidence=0.5)
        a, b = np.linalg.norm(ell.axes, axis=1)
        assert ell.area == pytest.approx(np.pi * a * b, rel=1e-12)
        assert ell.area > 0

    def test_axes_orthogonal(self):
        rng = np.random.default_rng(3)
        pts = rng.standard_normal((500, 2)) @ np.array([[3.0, 1.0], [0.0, 0.4]])
        ell = confidence_ellipse(pts, confidence=0.5)
        assert abs(ell.axes[0] @ ell.axes[1]) < 1e-8 * ell.area


class TestDegenerateClouds:
    def test_identical_points(self):
        pts = np.tile([2.0, -1.0], (7, 1))
        ell = confidence_ellipse(pts, confidence=0.5)
        np.testing.assert_allclose(ell.center, [2.0, -1.0])
        semi = np.linalg.norm(ell.axes, axis=1)
        assert np.all(semi > 0)
        assert ell.area > 0

    def test_collinear_points(self):
        t = np.linspace(0.0, 1.0, 50)
        pts = np.column_stack([t, 2.0 * t])
        ell = confidence_ellipse(pts, confidence=0.5)
        semi = np.sort(np.linalg.norm(ell.axes, axis=1))
        assert semi[0] > 0  # floored
        assert semi[1] > 100 * semi[0]  # true spread direction dominates

    def test_single_point(self):
        ell = confidence_ellipse(np.array([[1.0, 1.0]]), confidence=0.5)
        assert ell.area > 0


class TestGroupGeometry:
    def test_mirrored_groups_distance(self):
        rng = np.random.default_rng(4)
        blob = rng.standard_normal((100, 2)) * 0.1
        Z = np.vstack([blob + [1.0, 0.0], blob + [-1.0, 0.0]])
        y = np.array([1] * 100 + [2] * 100)
        geom = group_geometry(Z, y, confidence=0.5)
        assert geom.distances[0, 1] == pytest.approx(2.0, abs=1e-12)
        assert geom.distances[1, 0] == geom.distances[0, 1]
        np.testing.assert_allclose(np.diag(geom.distances), 0.0)

    def test_translated_clouds_equal_areas(self):
        rng = np.random.default_rng(5)
        blob = rng.standard_normal((200, 2))
        offset = np.array([3.0, 4.0])
        Z = np.vstack([blob, blob + offset])
        y = np.array([1] * 200 + [2] * 200)
        geom = group_geometry(Z, y, confidence=0.5)
        assert geom.areas[0] == pytest.approx(geom.areas[1], rel=1e-12)
        assert geom.distances[0, 1] == pytest.approx(5.0, abs=1e-9)

    def test_empty_group_rejected(self):
        Z = np.zeros((3, 2))
        with pytest.raises(EmptyGroupError):
            group_geometry(Z, np.array([1, 1, 1]), confidence=0.5, n_groups=2)

    def test_shared_floor_across_groups(self):
        # one degenerate group must borrow scale from the whole embedding
        rng = np.random.default_rng(6)
        spread = rng.standard_normal((50, 2)) * 10.0
        point = np.tile([0.0, 0.0], (5, 1))
        Z = np.vstack([spread, point])
        y = np.array([1] * 50 + [2] * 5)
        geom = group_geometry(Z, y, confidence=0.5)
        assert geom.areas[1] > 0
        assert geom.areas[1] < geom.areas[0]


class TestInvariance:
    @staticmethod
    def _geom(Z):
        y = np.array([1] * 60 + [2] * 60)
        return group_geometry(Z, y, confidence=0.5)

    def test_rigid_motion(self):
        rng = np.random.default_rng(7)
        Z = np.vstack(
            [rng.standard_normal((60, 2)), rng.standard_normal((60, 2)) + 4.0]
        )
        R = rotation(1.1)
        moved = Z @ R.T + np.array([5.0, -2.0])
        a, b = self._geom(Z), self._geom(moved)
        np.testing.assert_allclose(a.distances, b.distances, rtol=1e-9)
        np.testing.assert_allclose(a.areas, b.areas, rtol=1e-9)

    def test_uniform_scaling(self):
        rng = np.random.default_rng(8)
        Z = np.vstack(
            [rng.standard_normal((60, 2)), rng.standard_normal((60, 2)) + 4.0]
        )
        s = 2.5
        a, b = self._geom(Z), self._geom(Z * s)
        np.testing.assert_allclose(b.distances, a.distances * s, rtol=1e-9)
        np.testing.assert_allclose(b.areas, a.areas * s * s, rtol=1e-9)


class TestEllipseType:
    def test_contains_membership(self):
        ell = ConfidenceEllipse(
            center=np.zeros(2),
            axes=np.array([[2.0, 0.0], [0.0, 1.0]]),
            confidence=0.5,
            area=np.pi * 2.0,
        )
        pts = np.array([[0.0, 0.0], [1.9, 0.0], [0.0, 0.99], [2.1, 0.0], [0.0, 1.01]])
        np.testing.assert_array_equal(
            ell.contains(pts), [True, True, True, False, False]
        )

    def test_confidence_bounds_checked(self):
        with pytest.raises(ValueError):
            confidence_ellipse(np.zeros((3, 2)), confidence=0.0)
        with pytest.raises(ValueError):
            confidence_ellipse(np.zeros((3, 2)), confidence=1.0)
