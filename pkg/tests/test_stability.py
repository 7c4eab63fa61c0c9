"""
Unit tests for stability.py - second variation at round droplets and instability thresholds.
"""

import math
import unittest

import numpy as np

from okdroplet.domain import Domain
from okdroplet.energy import ModelParams
from okdroplet.errors import ConfigurationError
from okdroplet.greens import GreenEvaluator
from okdroplet.models import Resolution
from okdroplet.stability import (
    SecondVariation,
    degree_two_estimate,
    group_multiplets,
    instability_threshold,
    perimeter_hessian_diag,
    second_variation_matrix,
    single_layer_eigenvalue,
    strict_stability_check,
    translation_estimate,
)


def small_resolution(dim: int = 2) -> Resolution:
    return Resolution.for_dim(dim).model_copy(
        update={"boundary_order": 24, "volume_order": 12, "volume_radial": 6}
    )


class TestClosedForms(unittest.TestCase):
    """Test the perimeter and single-layer eigenvalues."""

    def test_perimeter_hessian_diag(self):
        self.assertEqual(perimeter_hessian_diag(1.0, 3, 2), [-2.0, 0.0, 4.0])
        self.assertEqual(perimeter_hessian_diag(0.5, 2, 2), [-4.0, 0.0, 12.0])
        with self.assertRaises(ConfigurationError):
            perimeter_hessian_diag(1.0, 2, 0)

    def test_single_layer_eigenvalue(self):
        self.assertAlmostEqual(single_layer_eigenvalue(0.2, 2, 4), 0.025, places=15)
        self.assertAlmostEqual(single_layer_eigenvalue(0.2, 3, 2), 0.04, places=15)
        with self.assertRaises(ConfigurationError):
            single_layer_eigenvalue(0.2, 2, 0)

    def test_degree_two_estimate(self):
        self.assertAlmostEqual(degree_two_estimate(0.1, 0.0), 6000.0, places=8)
        self.assertEqual(degree_two_estimate(0.1, 0.6), math.inf)

    def test_group_multiplets(self):
        groups = group_multiplets(np.array([1.0, 1.0 + 1e-9, 2.0]))
        self.assertEqual([k for _, k in groups], [2, 1])
        self.assertAlmostEqual(groups[0][0], 1.0, places=8)


class TestSecondVariation(unittest.TestCase):
    """Test the assembled blocks."""

    def setUp(self):
        self.resolution = small_resolution()

    def test_validation(self):
        with self.assertRaises(ConfigurationError):
            SecondVariation(Domain.ball(2), 0.1, None, 1, self.resolution)
        coarse = self.resolution.model_copy(update={"boundary_order": 4})
        with self.assertRaises(ConfigurationError):
            SecondVariation(Domain.ball(2), 0.1, None, 6, coarse)

    def test_zero_gamma_is_perimeter(self):
        r = 0.2
        variation = SecondVariation(Domain.ball(2), r, None, 6, self.resolution)
        degrees = variation.mode_degrees
        np.testing.assert_allclose(np.diag(variation.matrix(0.0)), (degrees**2 - 1) / r**2)
        spectrum = variation.spectrum(0.0)
        self.assertAlmostEqual(spectrum.min_eigenvalue, 0.0, places=10)
        self.assertAlmostEqual(spectrum.min_nontrivial, 3.0 / r**2, places=8)
        self.assertEqual(len(spectrum.translation_modes()), 2)

    def test_potential_block_of_centered_ball(self):
        for dim in (2, 3):
            r = 0.2
            m = r**dim
            variation = SecondVariation(Domain.ball(dim), r, None, 4, small_resolution(dim))
            expected = -2.0 * (1.0 - m) * r / dim * np.eye(len(variation.mode_degrees))
            np.testing.assert_allclose(variation.potential, expected, atol=1e-7)

    def test_nonlocal_block_is_positive(self):
        variation = SecondVariation(Domain.ball(2), 0.15, [0.1, 0.0], 6, self.resolution)
        self.assertGreater(np.linalg.eigvalsh(variation.nonlocal_block(1.0))[0], 0.0)

    def test_torus_translations_are_marginal(self):
        r, gamma = 0.1, 100.0
        variation = SecondVariation(Domain.torus(2), r, None, 6, self.resolution)
        spectrum = variation.spectrum(gamma)
        np.testing.assert_allclose(spectrum.translation_block, 0.0, atol=1e-4 * gamma * r)

    def test_ball_translations_match_g_r_hessian(self):
        domain = Domain.ball(2)
        r = 0.1
        params = ModelParams.from_radius(domain, 100.0, r)
        evaluator = GreenEvaluator.from_resolution(domain, self.resolution)
        spectrum = second_variation_matrix(domain, params, r, None, 6, self.resolution, evaluator)
        estimate = translation_estimate(domain, params, r, evaluator)
        np.testing.assert_allclose(spectrum.translation_block, estimate, rtol=0.1)
        self.assertTrue(np.all(spectrum.translation_block > 0))

    def test_quadratic_form(self):
        r = 0.2
        variation = SecondVariation(Domain.ball(2), r, None, 4, self.resolution)
        coefficients = np.zeros(len(variation.mode_degrees))
        coefficients[np.flatnonzero(variation.mode_degrees == 2)[0]] = 1.0
        self.assertAlmostEqual(variation.quadratic_form(0.0, coefficients), 3.0 / r, places=10)

    def test_spectrum_record(self):
        variation = SecondVariation(Domain.ball(3), 0.2, None, 3, small_resolution(3))
        record = variation.spectrum(1.0).to_dict()
        self.assertEqual(len(record["eigenvalues"]), 15)
        self.assertEqual(record["normalization"], "per unit L2(dB_r) norm")


class TestStabilityExperiments(unittest.TestCase):
    """Test the strict check and the bisection on gamma."""

    def setUp(self):
        self.resolution = small_resolution()

    def test_small_gamma_is_strictly_stable(self):
        domain = Domain.ball(2)
        params = ModelParams.from_radius(domain, 10.0, 0.1)
        verdict = strict_stability_check(domain, params, 0.1, 6, self.resolution)
        self.assertTrue(verdict.stable)
        self.assertGreater(verdict.c0, 0.0)
        self.assertIn("translation_min", verdict.to_dict())

    def test_strict_check_refuses_torus(self):
        domain = Domain.torus(2)
        params = ModelParams.from_radius(domain, 10.0, 0.1)
        with self.assertRaises(ConfigurationError):
            strict_stability_check(domain, params, 0.1, 6, self.resolution)

    def test_threshold_matches_degree_two_estimate(self):
        domain = Domain.torus(2)
        r = 0.05
        threshold = instability_threshold(domain, r, 6, self.resolution)
        expected = degree_two_estimate(r, math.pi * r**2)
        self.assertAlmostEqual(threshold, expected, delta=1e-2 * expected)


if __name__ == "__main__":
    unittest.main()
