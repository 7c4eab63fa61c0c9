"""
Unit tests for harmonics.py - real harmonic bases on S^1 and S^2.
"""

import unittest

import numpy as np

from okdroplet.domain import sphere_quadrature
from okdroplet.harmonics import HarmonicBasis, basis_size, harmonic_basis


class TestHarmonicBasis(unittest.TestCase):
    """Test orthonormality, ordering and derivatives."""

    def test_sizes(self):
        for dim, degree in ((2, 0), (2, 7), (3, 0), (3, 5)):
            self.assertEqual(HarmonicBasis(dim, degree).size, basis_size(dim, degree))

    def test_negative_degree(self):
        with self.assertRaises(ValueError):
            HarmonicBasis(2, -1)

    def test_orthonormal_on_grid(self):
        for dim, degree in ((2, 6), (3, 4)):
            basis = HarmonicBasis(dim, degree)
            grid = sphere_quadrature(dim, 8)
            values = basis.on_grid(grid, derivatives=False).values
            gram = values.T @ (grid.weights[:, None] * values)
            np.testing.assert_allclose(gram, np.eye(basis.size), atol=1e-12)

    def test_index_matches_degrees(self):
        for dim in (2, 3):
            basis = HarmonicBasis(dim, 4)
            for column, (l, m) in enumerate(zip(basis.degrees, basis.orders)):
                self.assertEqual(basis.index(int(l), int(m)), column)

    def test_modes_of_degree(self):
        self.assertEqual(len(HarmonicBasis(2, 3).modes_of_degree(2)), 2)
        self.assertEqual(len(HarmonicBasis(3, 3).modes_of_degree(2)), 5)

    def test_circle_second_derivative(self):
        basis = HarmonicBasis(2, 5)
        table = basis.evaluate(np.linspace(0.0, 6.0, 13))
        np.testing.assert_allclose(table.d_tt, -(basis.degrees**2) * table.values, atol=1e-12)

    def test_sphere_theta_derivative(self):
        basis = HarmonicBasis(3, 4)
        theta = np.array([0.4, 1.1, 2.3])
        phi = np.array([0.2, 2.5, -1.0])
        h = 1e-6
        table = basis.evaluate(theta, phi)
        plus = basis.evaluate(theta + h, phi, derivatives=False).values
        minus = basis.evaluate(theta - h, phi, derivatives=False).values
        np.testing.assert_allclose(table.d_theta, (plus - minus) / (2 * h), atol=1e-7)

    def test_sphere_laplace_beltrami(self):
        basis = HarmonicBasis(3, 5)
        theta = np.array([0.3, 0.9, 1.7, 2.6])
        phi = np.array([0.1, -2.0, 1.3, 3.0])
        t = basis.evaluate(theta, phi)
        sin_t = np.sin(theta)[:, None]
        cot_t = (np.cos(theta) / np.sin(theta))[:, None]
        laplacian = t.d_tt + cot_t * t.d_theta + t.d_pp / sin_t**2
        np.testing.assert_allclose(
            laplacian, basis.laplacian_eigenvalues * t.values, atol=1e-9
        )

    def test_project_recovers_coefficients(self):
        basis = HarmonicBasis(3, 4)
        grid = sphere_quadrature(3, 8)
        rng = np.random.default_rng(3)
        coeffs = rng.normal(size=basis.size)
        nodal = basis.on_grid(grid, derivatives=False).values @ coeffs
        np.testing.assert_allclose(basis.project(nodal, grid), coeffs, atol=1e-11)

    def test_shared_instance(self):
        self.assertIs(harmonic_basis(2, 6), harmonic_basis(2, 6))


if __name__ == "__main__":
    unittest.main()
