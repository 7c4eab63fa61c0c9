"""
Unit tests for greens.py - fundamental solution, Green functions, Robin function and g_r.
"""

import math
import unittest

import numpy as np

from okdroplet.domain import Domain, unit_ball_volume
from okdroplet.errors import (
    ConfigurationError,
    ContainmentError,
    ConvergenceError,
    DomainValueError,
    ProjectionError,
    ResolutionError,
    SingularityError,
)
from okdroplet.greens import (
    BallNeumannGreen,
    EwaldSum,
    GreenEvaluator,
    TorusRegularPart,
    ball_quadrature,
    biharmonic_kernel,
    gamma,
    green_samples,
    green_torus,
    harmonic_centers,
    regular_part_ball,
    robin_hessian_at_center,
)


def gamma_slope(t: float, dim: int) -> float:
    return 1.0 / (dim * unit_ball_volume(dim) * t ** (dim - 1))


class TestFundamentalSolution(unittest.TestCase):
    """Test Gamma and the biharmonic kernel."""

    def test_values(self):
        self.assertEqual(gamma(1.0, 2), 0.0)
        self.assertAlmostEqual(gamma(math.e, 2), 1.0 / (2.0 * math.pi), places=14)
        self.assertAlmostEqual(gamma(1.0, 3), -1.0 / (4.0 * math.pi), places=14)
        self.assertAlmostEqual(gamma(2.0, 3), -1.0 / (8.0 * math.pi), places=14)

    def test_nonpositive_distance(self):
        with self.assertRaises(DomainValueError):
            gamma(0.0, 2)
        with self.assertRaises(DomainValueError):
            gamma(np.array([0.5, -1.0]), 3)

    def test_array_input(self):
        values = gamma(np.array([1.0, 2.0]), 3)
        self.assertEqual(values.shape, (2,))

    def test_biharmonic_kernel_laplacian(self):
        # Radial Laplacian of Phi equals Gamma.
        for dim in (2, 3):
            t, h = 0.7, 1e-4
            phi = lambda s: float(biharmonic_kernel(np.array(s), dim))  # noqa: E731
            second = (phi(t + h) - 2 * phi(t) + phi(t - h)) / h**2
            first = (phi(t + h) - phi(t - h)) / (2 * h)
            self.assertAlmostEqual(second + (dim - 1) * first / t, gamma(t, dim), places=6)


class TestBallGreen(unittest.TestCase):
    """Test the closed-form Neumann regular part of the ball."""

    def setUp(self):
        self.points = [
            (np.array([0.1, 0.2]), np.array([-0.3, 0.15])),
            (np.array([0.1, -0.2, 0.3]), np.array([0.25, 0.1, -0.05])),
        ]

    def test_symmetry(self):
        for x, y in self.points:
            model = BallNeumannGreen(len(x), 1.0)
            self.assertAlmostEqual(float(model.value(x, y)), float(model.value(y, x)), places=14)

    def test_series_matches_closed_form(self):
        for x, y in self.points:
            model = BallNeumannGreen(len(x), 1.0)
            self.assertAlmostEqual(
                float(model.series(x, y, 40)[0]), float(model.value(x, y)), places=12
            )

    def test_series_tail_check(self):
        model = BallNeumannGreen(2, 1.0)
        x = np.array([0.95, 0.0])
        with self.assertRaises(ConvergenceError):
            model.series(x, x, 4)

    def test_laplacian(self):
        # Delta_x R = 1/|Omega|.
        for x, y in self.points:
            dim = len(x)
            model = BallNeumannGreen(dim, 1.0)
            h = 1e-3
            lap = 0.0
            for i in range(dim):
                e = np.eye(dim)[i] * h
                lap += float(model.value(x + e, y) - 2 * model.value(x, y) + model.value(x - e, y))
            self.assertAlmostEqual(lap / h**2, 1.0 / model.volume, delta=1e-5)

    def test_neumann_condition(self):
        # Normal derivative of G(x, .) vanishes on the boundary.
        for x, _ in self.points:
            dim = len(x)
            model = BallNeumannGreen(dim, 1.0)
            y = np.ones(dim) / math.sqrt(dim)
            t = float(np.linalg.norm(y - x))
            d_regular = float(model.gradient_x(y, x) @ y)
            d_gamma = gamma_slope(t, dim) * float((y - x) @ y) / t
            self.assertAlmostEqual(d_regular - d_gamma, 0.0, places=9)

    def test_gradient(self):
        for x, y in self.points:
            dim = len(x)
            model = BallNeumannGreen(dim, 1.0)
            h = 1e-6
            fd = [
                float(model.value(x + h * e, y) - model.value(x - h * e, y)) / (2 * h)
                for e in np.eye(dim)
            ]
            np.testing.assert_allclose(model.gradient_x(x, y), fd, atol=1e-8)

    def test_regular_part_ball_containment(self):
        with self.assertRaises(ContainmentError):
            regular_part_ball([1.0, 0.0], [0.0, 0.0])
        self.assertAlmostEqual(
            regular_part_ball([0.1, 0.0], [0.0, 0.2], degree=30),
            regular_part_ball([0.1, 0.0], [0.0, 0.2]),
            places=12,
        )


class TestTorusGreen(unittest.TestCase):
    """Test the Ewald sum of the periodic Green function."""

    def test_independent_of_splitting(self):
        for dim in (2, 3):
            z = np.array([[0.13, -0.21, 0.05][:dim]])
            first = EwaldSum(dim, 0.03).green(z)[0]
            second = EwaldSum(dim, 0.05).green(z)[0]
            self.assertAlmostEqual(first, second, places=8)
            self.assertAlmostEqual(
                EwaldSum(dim, 0.03).robin_constant(), EwaldSum(dim, 0.05).robin_constant(), places=8
            )

    def test_periodic_and_even(self):
        ewald = EwaldSum(2)
        z = np.array([0.2, -0.35])
        value = ewald.green(z)[0]
        self.assertAlmostEqual(ewald.green(z + np.array([1.0, 0.0]))[0], value, places=12)
        self.assertAlmostEqual(ewald.green(-z)[0], value, places=12)

    def test_laplacian(self):
        # -Delta G = -1 away from the lattice.
        for dim in (2, 3):
            ewald = EwaldSum(dim)
            z = np.array([0.3, 0.2, 0.25][:dim])
            h = 1e-3
            lap = sum(
                ewald.green(z + h * e)[0] - 2 * ewald.green(z)[0] + ewald.green(z - h * e)[0]
                for e in np.eye(dim)
            ) / h**2
            self.assertAlmostEqual(lap, 1.0, delta=1e-4)

    def test_regular_part_continuous_at_origin(self):
        for dim in (2, 3):
            ewald = EwaldSum(dim)
            near = ewald.regular(np.array([[1e-5] + [0.0] * (dim - 1)]))[0]
            self.assertAlmostEqual(near, ewald.robin_constant(), places=7)

    def test_coincident_points(self):
        with self.assertRaises(SingularityError):
            green_torus([0.1, 0.1], [1.1, 0.1])

    def test_invalid_tau(self):
        with self.assertRaises(ConfigurationError):
            EwaldSum(2, -1.0)

    def test_fit_matches_ewald(self):
        ewald = EwaldSum(2)
        model = TorusRegularPart(ewald, 20)
        rng = np.random.default_rng(0)
        z = rng.uniform(-0.3, 0.3, size=(20, 2))
        np.testing.assert_allclose(model.value(z), ewald.regular(z), atol=1e-7)
        self.assertLess(model.fit_error, 1e-7)

    def test_fit_range(self):
        model = TorusRegularPart(EwaldSum(2), 8, fit_radius=0.2)
        with self.assertRaises(ResolutionError):
            model.value(np.array([[0.25, 0.0]]))


class TestGreenEvaluator(unittest.TestCase):
    """Test the domain-level evaluator."""

    def test_ball_robin_hessian(self):
        for dim in (2, 3):
            evaluator = GreenEvaluator(Domain.ball(dim))
            hessian = evaluator.robin_hessian(np.zeros(dim))
            expected = robin_hessian_at_center(dim, 1.0)
            np.testing.assert_allclose(
                hessian, expected * np.eye(dim), rtol=1e-3, atol=1e-3 * expected
            )

    def test_robin_refuses_boundary(self):
        evaluator = GreenEvaluator(Domain.ball(2))
        with self.assertRaises(ResolutionError):
            evaluator.robin([0.999, 0.0])

    def test_points_outside_ball(self):
        evaluator = GreenEvaluator(Domain.ball(2))
        with self.assertRaises(ContainmentError):
            evaluator.regular_part([1.2, 0.0], [0.0, 0.0])

    def test_green_singular(self):
        evaluator = GreenEvaluator(Domain.ball(3))
        with self.assertRaises(SingularityError):
            evaluator.green([0.1, 0.0, 0.0], [0.1, 0.0, 0.0])

    def test_image_remainder(self):
        evaluator = GreenEvaluator(Domain.ball(2))
        with self.assertRaises(ProjectionError):
            evaluator.image_remainder([0.0, 0.0], [0.1, 0.0])
        with self.assertRaises(ConfigurationError):
            GreenEvaluator(Domain.torus(2)).image_remainder([0.1, 0.0], [0.0, 0.0])

    def test_image_remainder_bounded_near_boundary(self):
        evaluator = GreenEvaluator(Domain.ball(2))
        values = []
        for d in (0.02, 0.05, 0.1, 0.2):
            x = np.array([1.0 - d, 0.0])
            y = np.array([1.0 - 2.0 * d, 0.5 * d])
            values.append(abs(evaluator.image_remainder(x, y)))
        self.assertLess(max(values), 2.0 * np.median(values) + 1.0)

    def test_torus_robin_is_constant(self):
        evaluator = GreenEvaluator(Domain.torus(2), fit_degree=16)
        self.assertAlmostEqual(
            evaluator.robin([0.1, 0.2]), EwaldSum(2).robin_constant(), places=7
        )

    def test_g_r_translation_invariant_on_torus(self):
        evaluator = GreenEvaluator(Domain.torus(2), fit_degree=16)
        first = evaluator.g_r([0.0, 0.0], 0.1)
        second = evaluator.g_r([0.37, -0.21], 0.1)
        self.assertAlmostEqual(first, second, places=11)

    def test_g_r_tends_to_robin(self):
        evaluator = GreenEvaluator(Domain.ball(2))
        self.assertAlmostEqual(
            evaluator.g_r([0.0, 0.0], 0.01), evaluator.robin([0.0, 0.0]), delta=1e-3
        )

    def test_g_r_containment(self):
        with self.assertRaises(ContainmentError):
            GreenEvaluator(Domain.ball(2)).g_r([0.5, 0.0], 0.6)

    def test_ball_quadrature_volume(self):
        _, weights = ball_quadrature(np.zeros(3), 0.3, 3)
        self.assertAlmostEqual(weights.sum(), 4.0 * math.pi / 3.0 * 0.027, places=12)

    def test_harmonic_center_of_ball(self):
        report = harmonic_centers(Domain.ball(2))
        self.assertEqual(len(report.centers), 1)
        np.testing.assert_allclose(report.centers[0], [0.0, 0.0], atol=1e-5)
        self.assertGreater(report.hessian_min_eig[0], 0.0)

    def test_green_samples_in_ball(self):
        evaluator = GreenEvaluator(Domain.ball(2))
        rows = green_samples(evaluator, [0.0, 0.0], 4)
        self.assertEqual(len(rows), 16)
        self.assertEqual(list(rows[0]), ["x", "y", "G", "R", "h"])
        for row in rows:
            distance = math.hypot(row["x"], row["y"])
            self.assertLess(distance, 0.6 * math.sqrt(2.0) + 1e-12)
            self.assertAlmostEqual(row["G"], row["R"] - gamma(distance, 2), places=12)

    def test_green_samples_skip_the_source(self):
        evaluator = GreenEvaluator(Domain.torus(2), fit_degree=16)
        rows = green_samples(evaluator, [0.0, 0.0], 3)
        self.assertEqual(len(rows), 8)
        h_values = {round(row["h"], 12) for row in rows}
        self.assertEqual(len(h_values), 1)

    def test_matrix_shapes(self):
        evaluator = GreenEvaluator(Domain.ball(2))
        first = np.array([[0.1, 0.0], [0.0, 0.2], [-0.1, 0.1]])
        second = np.array([[0.05, 0.05], [0.2, -0.1]])
        self.assertEqual(evaluator.regular_matrix(first, second).shape, (3, 2))
        self.assertEqual(evaluator.regular_gradient_matrix(first, second).shape, (3, 2, 2))
        self.assertAlmostEqual(
            evaluator.regular_matrix(first, second)[1, 0],
            evaluator.regular_part(first[1], second[0]),
            places=13,
        )


if __name__ == "__main__":
    unittest.main()
