"""
Unit tests for energy.py - model parameters, the droplet functional and ball energies.
"""

import math
import unittest

import numpy as np

from okdroplet.domain import Domain
from okdroplet.energy import (
    DropletFunctional,
    ModelParams,
    ball_energy,
    ball_energy_expansion,
    multiplier_bound,
    nl_difference_identity,
    nl_lipschitz_gap,
    penalized_energy,
    printed_ball_energy_expansion,
    total_energy,
)
from okdroplet.errors import ConfigurationError
from okdroplet.models import NonlocalMethod, Resolution
from okdroplet.shape import DropletShape, random_near_ball, volume


def small_resolution(dim: int, **update) -> Resolution:
    settings = {"boundary_order": 24, "volume_order": 12, "volume_radial": 6, "torus_grid": 128}
    settings.update(update)
    return Resolution.for_dim(dim).model_copy(update=settings)


class TestModelParams(unittest.TestCase):
    """Test construction of gamma, m and the penalty."""

    def test_from_radius(self):
        domain = Domain.ball(2)
        params = ModelParams.from_radius(domain, 2.0, 0.2)
        self.assertAlmostEqual(params.mass, 0.04, places=14)
        self.assertAlmostEqual(params.radius, 0.2, places=14)
        self.assertAlmostEqual(params.target_volume, math.pi * 0.04, places=14)
        self.assertAlmostEqual(params.penalty, 10.0 * multiplier_bound(2, 2.0, 0.2), places=12)

    def test_from_mass(self):
        domain = Domain.torus(3)
        params = ModelParams.from_mass(domain, 1.0, 0.01, penalty=5.0)
        self.assertAlmostEqual(4.0 * math.pi / 3.0 * params.radius**3, 0.01, places=14)
        self.assertEqual(params.penalty, 5.0)

    def test_invalid_mass(self):
        with self.assertRaises(ConfigurationError):
            ModelParams.from_mass(Domain.torus(2), 1.0, 1.5)
        with self.assertRaises(ConfigurationError):
            ModelParams.from_radius(Domain.ball(2), 1.0, 1.2)
        with self.assertRaises(ConfigurationError):
            ModelParams(2, 1.0, -1.0, 0.1, 1.0)

    def test_regime(self):
        params = ModelParams.from_radius(Domain.torus(2), 1.0, 0.1)
        self.assertAlmostEqual(params.regime_parameter, 1e-3 * math.log(10.0), places=14)
        self.assertTrue(params.in_regime)
        self.assertFalse(params.with_gamma(1e4).in_regime)
        self.assertIn("regime_parameter", params.to_dict())


class TestBallEnergies(unittest.TestCase):
    """Test the closed-form energy of balls."""

    def test_no_interaction(self):
        self.assertAlmostEqual(ball_energy(2, 0.3, 0.0, 5.0), 2.0 * math.pi * 0.3, places=14)
        self.assertAlmostEqual(ball_energy(3, 0.3, 0.0, 5.0), 4.0 * math.pi * 0.09, places=14)

    def test_two_dimensional_form(self):
        r, gamma, g = 0.1, 3.0, 0.2
        expected = 2.0 * math.pi * r + gamma * (
            -0.5 * math.pi * r**4 * math.log(r) + math.pi * r**4 / 8.0 + math.pi**2 * r**4 * g
        )
        self.assertAlmostEqual(ball_energy(2, r, gamma, g), expected, places=14)

    def test_three_dimensional_form(self):
        r, gamma, g = 0.1, 3.0, -0.2
        expected = 4.0 * math.pi * r**2 + gamma * (
            8.0 * math.pi / 15.0 * r**5 + (4.0 * math.pi / 3.0) ** 2 * r**6 * g
        )
        self.assertAlmostEqual(ball_energy(3, r, gamma, g), expected, places=14)

    def test_printed_expansion(self):
        r, gamma, g = 0.1, 3.0, 0.2
        printed = printed_ball_energy_expansion(2, r, gamma, g)
        derived = ball_energy(2, r, gamma, g)
        self.assertAlmostEqual(
            printed - derived, gamma * math.pi * r**4 * (math.log(r) - 0.5), places=14
        )

    def test_expansion_matches_functional(self):
        domain = Domain.ball(2)
        params = ModelParams.from_radius(domain, 5.0, 0.15)
        functional = DropletFunctional(domain, params, small_resolution(2))
        p = np.array([0.2, -0.1])
        shape = DropletShape.ball(2, 0.15, p, degree=2)
        expected = ball_energy_expansion(domain, params, p, evaluator=functional.evaluator)
        self.assertAlmostEqual(functional.value(shape), expected, delta=1e-8 * expected)


class TestDropletFunctional(unittest.TestCase):
    """Test values, gradients and breakdowns of F."""

    def setUp(self):
        self.domain = Domain.ball(2)
        self.params = ModelParams.from_radius(self.domain, 4.0, 0.15)
        self.resolution = small_resolution(2)
        self.functional = DropletFunctional(self.domain, self.params, self.resolution)
        self.shape = random_near_ball(2, 0.15, 6, 0.05, np.random.default_rng(21))

    def test_breakdown(self):
        breakdown = self.functional.breakdown(self.shape, include_penalty=True)
        self.assertAlmostEqual(
            breakdown.total, breakdown.perimeter + 4.0 * breakdown.nonlocal_energy, places=14
        )
        self.assertAlmostEqual(breakdown.total, self.functional.value(self.shape), places=13)
        self.assertAlmostEqual(
            breakdown.penalty_term,
            self.params.penalty * abs(breakdown.volume - self.params.target_volume),
            places=13,
        )
        self.assertIn("nonlocal", breakdown.to_dict())

    def test_penalized_energy(self):
        value = penalized_energy(
            self.domain, self.params, self.shape, self.resolution, functional=self.functional
        )
        breakdown = self.functional.breakdown(self.shape, include_penalty=True)
        self.assertAlmostEqual(value, breakdown.penalized, places=14)

    def test_penalized_energy_needs_positive_penalty(self):
        params = ModelParams.from_radius(self.domain, 4.0, 0.15, penalty=0.0)
        with self.assertRaises(ConfigurationError):
            penalized_energy(self.domain, params, self.shape, self.resolution)

    def test_gradient(self):
        value, grad, center_grad = self.functional.value_and_gradient(self.shape)
        self.assertAlmostEqual(value, self.functional.value(self.shape), places=12)
        step = 1e-6
        for k in range(0, self.shape.basis.size, 2):
            bump = np.zeros_like(self.shape.coeffs)
            bump[k] = step
            fd = (
                self.functional.value(self.shape.with_coeffs(self.shape.coeffs + bump))
                - self.functional.value(self.shape.with_coeffs(self.shape.coeffs - bump))
            ) / (2 * step)
            np.testing.assert_allclose(grad[k], fd, rtol=1e-5, atol=1e-8)
        self.assertEqual(center_grad.shape, (2,))

    def test_zero_gamma_is_perimeter(self):
        functional = DropletFunctional(self.domain, self.params.with_gamma(0.0), self.resolution)
        value, _, center_grad = functional.value_and_gradient(self.shape)
        self.assertAlmostEqual(value, functional.breakdown(self.shape).perimeter, places=14)
        np.testing.assert_array_equal(center_grad, 0.0)

    def test_dirichlet_method(self):
        domain = Domain.torus(2)
        params = ModelParams.from_radius(domain, 4.0, 0.12)
        shape = random_near_ball(2, 0.12, 4, 0.05, np.random.default_rng(3))
        direct = total_energy(domain, params, shape, self.resolution)
        dirichlet = total_energy(
            domain, params, shape, self.resolution, method=NonlocalMethod.DIRICHLET
        )
        self.assertAlmostEqual(direct.perimeter, dirichlet.perimeter, places=14)
        self.assertAlmostEqual(
            direct.nonlocal_energy, dirichlet.nonlocal_energy, delta=2e-2 * direct.nonlocal_energy
        )


class TestNonlocalDiagnostics(unittest.TestCase):
    """Test the Lipschitz gap and the difference identity of NL."""

    def setUp(self):
        self.domain = Domain.ball(2)
        self.params = ModelParams.from_radius(self.domain, 1.0, 0.12)

    def test_lipschitz_gap(self):
        resolution = small_resolution(2)
        functional = DropletFunctional(self.domain, self.params, resolution)
        first = DropletShape.ball(2, 0.12, degree=4)
        raw = random_near_ball(2, 0.12, 4, 0.1, np.random.default_rng(5))
        factor = math.sqrt(volume(first, functional.grid) / volume(raw, functional.grid))
        second = raw.dilated(factor)
        lhs, rhs = nl_lipschitz_gap(
            self.domain, self.params, first, second, resolution, functional=functional
        )
        self.assertGreater(rhs, 0.0)
        self.assertLessEqual(abs(lhs), rhs)

    def test_lipschitz_gap_on_random_pairs(self):
        resolution = small_resolution(2)
        functional = DropletFunctional(self.domain, self.params, resolution)
        rng = np.random.default_rng(11)
        for _ in range(100):
            first = random_near_ball(2, 0.12, 6, rng.uniform(0.0, 0.2), rng)
            raw = random_near_ball(2, 0.12, 6, rng.uniform(0.02, 0.2), rng)
            factor = math.sqrt(volume(first, functional.grid) / volume(raw, functional.grid))
            lhs, rhs = nl_lipschitz_gap(
                self.domain, self.params, first, raw.dilated(factor), resolution, functional
            )
            self.assertLessEqual(abs(lhs), rhs)

    def test_lipschitz_gap_requires_equal_volume(self):
        resolution = small_resolution(2)
        with self.assertRaises(ConfigurationError):
            nl_lipschitz_gap(
                self.domain,
                self.params,
                DropletShape.ball(2, 0.1, degree=2),
                DropletShape.ball(2, 0.12, degree=2),
                resolution,
            )

    def test_difference_identity(self):
        resolution = small_resolution(2, volume_radial=16)
        lhs, rhs = nl_difference_identity(
            self.domain,
            self.params,
            DropletShape.ball(2, 0.1, degree=2),
            DropletShape.ball(2, 0.12, degree=2),
            resolution,
        )
        self.assertAlmostEqual(lhs, rhs, delta=5e-3 * abs(lhs))


if __name__ == "__main__":
    unittest.main()
