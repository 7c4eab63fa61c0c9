"""
Unit tests for coulomb.py - direct quadrature of the nonlocal term and the droplet potential.
"""

import math
import unittest

import numpy as np

from okdroplet.coulomb import DirectNonlocal, gamma_self_energy, gamma_self_energy_gradient
from okdroplet.domain import Domain, unit_ball_volume
from okdroplet.errors import ConfigurationError
from okdroplet.field import explicit_ball_potential, nl_energy
from okdroplet.greens import GreenEvaluator
from okdroplet.models import Resolution
from okdroplet.shape import DropletShape, random_near_ball


def direct_resolution(dim: int, **update) -> Resolution:
    settings = {"boundary_order": 24, "volume_order": 12, "volume_radial": 6}
    settings.update(update)
    return Resolution.for_dim(dim).model_copy(update=settings)


class TestGammaSelfEnergy(unittest.TestCase):
    """Test the closed-form double integral of Gamma over a ball."""

    def test_unit_ball(self):
        self.assertAlmostEqual(gamma_self_energy(1.0, 2), -math.pi / 8.0, places=14)
        self.assertAlmostEqual(gamma_self_energy(1.0, 3), -8.0 * math.pi / 15.0, places=14)

    def test_gradient(self):
        for dim in (2, 3):
            r, h = 0.3, 1e-6
            fd = (gamma_self_energy(r + h, dim) - gamma_self_energy(r - h, dim)) / (2 * h)
            self.assertAlmostEqual(gamma_self_energy_gradient(r, dim), fd, places=8)


class TestBallValue(unittest.TestCase):
    """Test NL of balls against (omega r^n)^2 g_r minus the Gamma self energy."""

    def test_ball_in_ball(self):
        cases = ((2, 0.2, [0.0, 0.0]), (2, 0.15, [0.3, 0.1]), (3, 0.2, [0.1, 0.0, 0.0]))
        for dim, r, center in cases:
            evaluator = GreenEvaluator(Domain.ball(dim))
            direct = DirectNonlocal(evaluator, direct_resolution(dim))
            value = direct.value(DropletShape.ball(dim, r, center, degree=2))
            omega = unit_ball_volume(dim)
            expected = (omega * r**dim) ** 2 * evaluator.g_r(center, r) - gamma_self_energy(r, dim)
            self.assertAlmostEqual(value.value, expected, delta=1e-6 * abs(expected))
            self.assertAlmostEqual(value.gamma, gamma_self_energy(r, dim), places=14)

    def test_ball_on_torus(self):
        evaluator = GreenEvaluator(Domain.torus(2))
        direct = DirectNonlocal(evaluator, direct_resolution(2))
        first = direct.value(DropletShape.ball(2, 0.1, [0.0, 0.0], degree=2)).value
        second = direct.value(DropletShape.ball(2, 0.1, [0.4, -0.3], degree=2)).value
        self.assertAlmostEqual(first, second, places=11)


class TestGradient(unittest.TestCase):
    """Test the exact gradient of the discrete NL against finite differences."""

    def check_gradient(self, domain: Domain, shape: DropletShape):
        direct = DirectNonlocal(GreenEvaluator(domain), direct_resolution(domain.dim))
        result = direct.value_and_gradient(shape)
        self.assertAlmostEqual(result.value, direct.value(shape).value, places=13)
        step = 1e-6
        for k in range(shape.basis.size):
            bump = np.zeros_like(shape.coeffs)
            bump[k] = step
            fd = (
                direct.value(shape.with_coeffs(shape.coeffs + bump)).value
                - direct.value(shape.with_coeffs(shape.coeffs - bump)).value
            ) / (2 * step)
            np.testing.assert_allclose(result.coeff_gradient[k], fd, rtol=1e-5, atol=1e-8)
        for i in range(domain.dim):
            shift = np.eye(domain.dim)[i] * step
            fd = (
                direct.value(shape.with_center(shape.center + shift)).value
                - direct.value(shape.with_center(shape.center - shift)).value
            ) / (2 * step)
            np.testing.assert_allclose(result.center_gradient[i], fd, rtol=1e-5, atol=1e-8)

    def test_ball_domain(self):
        shape = random_near_ball(2, 0.15, 6, 0.05, np.random.default_rng(11), center=[0.1, 0.0])
        self.check_gradient(Domain.ball(2), shape)

    def test_torus(self):
        shape = random_near_ball(2, 0.12, 5, 0.05, np.random.default_rng(12), center=[0.2, 0.1])
        self.check_gradient(Domain.torus(2), shape)


class TestPotential(unittest.TestCase):
    """Test v of the centered ball and its normal derivative."""

    def test_matches_explicit_potential(self):
        for dim in (2, 3):
            domain = Domain.ball(dim)
            r = 0.2
            direct = DirectNonlocal(GreenEvaluator(domain), direct_resolution(dim))
            radii = np.array([0.05, 0.15, 0.5, 0.8])
            points = radii[:, None] * np.ones(dim)[None, :] / math.sqrt(dim)
            values = direct.potential(DropletShape.ball(dim, r, degree=2), points)
            np.testing.assert_allclose(values, explicit_ball_potential(domain, r)(radii), atol=1e-7)

    def test_normal_derivative(self):
        for dim in (2, 3):
            domain = Domain.ball(dim)
            r = 0.2
            m = (r / domain.radius) ** dim
            direct = DirectNonlocal(GreenEvaluator(domain), direct_resolution(dim))
            derivative = direct.potential_normal_derivative(DropletShape.ball(dim, r, degree=2))
            np.testing.assert_allclose(derivative, -(1.0 - m) * r / dim, atol=1e-8)

    def test_normal_derivative_requires_ball(self):
        direct = DirectNonlocal(GreenEvaluator(Domain.ball(2)), direct_resolution(2))
        shape = random_near_ball(2, 0.1, 4, 0.05, np.random.default_rng(0))
        with self.assertRaises(ConfigurationError):
            direct.potential_normal_derivative(shape)


class TestDirichletAgreement(unittest.TestCase):
    """Test the direct path against the Dirichlet-energy path on the torus."""

    def test_torus_shape(self):
        domain = Domain.torus(2)
        resolution = direct_resolution(2, torus_grid=128, supersample=4)
        shape = random_near_ball(2, 0.12, 4, 0.05, np.random.default_rng(3))
        direct = DirectNonlocal(GreenEvaluator.from_resolution(domain, resolution), resolution)
        self.assertAlmostEqual(
            nl_energy(domain, shape, resolution),
            direct.value(shape).value,
            delta=2e-2 * abs(direct.value(shape).value),
        )


if __name__ == "__main__":
    unittest.main()
