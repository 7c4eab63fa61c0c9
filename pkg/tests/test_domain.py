"""
Unit tests for domain.py - ambient domains and sphere quadrature.
"""

import math
import unittest

import numpy as np

from okdroplet.domain import (
    Domain,
    DomainKind,
    directions_to_angles,
    inner_region_test,
    radial_quadrature,
    sphere_quadrature,
    unit_ball_volume,
    unit_sphere_area,
)
from okdroplet.errors import ConfigurationError, DomainValueError


class TestUnitBall(unittest.TestCase):
    """Test omega_n and the sphere area."""

    def test_volumes(self):
        self.assertAlmostEqual(unit_ball_volume(2), math.pi, places=14)
        self.assertAlmostEqual(unit_ball_volume(3), 4.0 * math.pi / 3.0, places=14)

    def test_sphere_area(self):
        self.assertAlmostEqual(unit_sphere_area(2), 2.0 * math.pi, places=14)
        self.assertAlmostEqual(unit_sphere_area(3), 4.0 * math.pi, places=14)


class TestDomain(unittest.TestCase):
    """Test Domain construction and geometry."""

    def test_torus_ignores_radius(self):
        domain = Domain("torus", 2, 5.0)
        self.assertIs(domain.kind, DomainKind.TORUS)
        self.assertEqual(domain.radius, 1.0)
        self.assertEqual(domain.volume, 1.0)
        self.assertTrue(domain.is_torus)

    def test_ball_volume(self):
        domain = Domain.ball(3, 2.0)
        self.assertAlmostEqual(domain.volume, 4.0 * math.pi / 3.0 * 8.0, places=12)
        self.assertFalse(domain.is_torus)

    def test_unsupported_dimension(self):
        with self.assertRaises(DomainValueError):
            Domain.torus(4)

    def test_nonpositive_radius(self):
        with self.assertRaises(ConfigurationError):
            Domain.ball(2, -1.0)

    def test_unknown_kind(self):
        with self.assertRaises(ValueError):
            Domain("cube", 2)

    def test_wrap(self):
        wrapped = Domain.torus(2).wrap([0.7, -0.6])
        np.testing.assert_allclose(wrapped, [-0.3, 0.4], atol=1e-14)

    def test_wrap_is_identity_on_ball(self):
        np.testing.assert_array_equal(Domain.ball(2).wrap([0.7, -0.6]), [0.7, -0.6])

    def test_distance_to_boundary(self):
        self.assertEqual(Domain.torus(3).distance_to_boundary([0.1, 0.2, 0.3]), math.inf)
        self.assertAlmostEqual(Domain.ball(2, 1.0).distance_to_boundary([0.3, 0.4]), 0.5)

    def test_inner_region(self):
        ball = Domain.ball(2)
        self.assertTrue(inner_region_test(ball, [0.5, 0.0], 0.4))
        self.assertFalse(inner_region_test(ball, [0.5, 0.0], 0.5))
        self.assertTrue(inner_region_test(Domain.torus(2), [0.5, 0.0], 0.45))

    def test_describe(self):
        self.assertEqual(Domain.ball(2, 2.0).describe(), {"kind": "ball", "dim": 2, "radius": 2.0})


class TestSphereQuadrature(unittest.TestCase):
    """Test the product quadrature on S^1 and S^2."""

    def test_total_weight(self):
        self.assertAlmostEqual(sphere_quadrature(2, 8).weights.sum(), 2.0 * math.pi, places=12)
        self.assertAlmostEqual(sphere_quadrature(3, 8).weights.sum(), 4.0 * math.pi, places=12)

    def test_nodes_on_sphere(self):
        grid = sphere_quadrature(3, 6)
        np.testing.assert_allclose(np.linalg.norm(grid.nodes, axis=1), 1.0, atol=1e-14)

    def test_polynomial_exactness(self):
        grid = sphere_quadrature(3, 6)
        z = grid.nodes[:, 2]
        self.assertAlmostEqual(grid.integrate(z**2), 4.0 * math.pi / 3.0, places=12)
        self.assertAlmostEqual(grid.integrate(z**4), 4.0 * math.pi / 5.0, places=12)
        circle = sphere_quadrature(2, 6)
        self.assertAlmostEqual(circle.integrate(np.cos(circle.theta) ** 2), math.pi, places=12)

    def test_frame_is_tangent(self):
        for dim in (2, 3):
            grid = sphere_quadrature(dim, 5)
            for tangent in grid.frame():
                np.testing.assert_allclose(np.sum(tangent * grid.nodes, axis=1), 0.0, atol=1e-14)
                np.testing.assert_allclose(np.linalg.norm(tangent, axis=1), 1.0, atol=1e-14)

    def test_low_order_rejected(self):
        with self.assertRaises(ConfigurationError):
            sphere_quadrature(2, 3)

    def test_nodes_read_only(self):
        grid = sphere_quadrature(2, 4)
        with self.assertRaises(ValueError):
            grid.nodes[0, 0] = 1.0


class TestRadialQuadrature(unittest.TestCase):
    """Test Gauss nodes for the weight s^(n-1) on [0, 1]."""

    def test_moments(self):
        for dim in (2, 3):
            nodes, weights = radial_quadrature(6, dim)
            self.assertAlmostEqual(weights.sum(), 1.0 / dim, places=13)
            self.assertAlmostEqual(weights @ nodes**2, 1.0 / (dim + 2), places=13)
            self.assertTrue(np.all((nodes > 0) & (nodes < 1)))


class TestDirectionsToAngles(unittest.TestCase):
    """Test conversion of unit vectors to polar angles."""

    def test_circle(self):
        theta, phi = directions_to_angles(np.array([[0.0, 1.0]]))
        self.assertAlmostEqual(theta[0], math.pi / 2.0)
        self.assertIsNone(phi)

    def test_sphere_round_trip(self):
        grid = sphere_quadrature(3, 5)
        theta, phi = directions_to_angles(grid.nodes)
        np.testing.assert_allclose(theta, grid.theta, atol=1e-12)
        np.testing.assert_allclose(np.cos(phi), np.cos(grid.phi), atol=1e-12)


if __name__ == "__main__":
    unittest.main()
