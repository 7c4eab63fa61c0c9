"""Direct quadrature of the nonlocal term NL(E) = I_R(E) - I_Gamma(E) for star-shaped droplets.

I_R is the double integral of the regular part R over E x E, taken with a
product volume quadrature in (radius fraction, direction). I_Gamma is the
double integral of Gamma, rewritten on the boundary as
-(double surface integral of Phi(|x - y|) nu_x . nu_y) with Delta Phi = Gamma,
and corrected to first order against the base ball B_r(p), whose value and
gradient are known in closed form. Every gradient is the exact derivative of
the discrete value.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .domain import QuadratureGrid, radial_quadrature, sphere_quadrature, unit_sphere_area
from .errors import ConfigurationError
from .field import radial_convolution, radial_convolution_derivative
from .greens import GreenEvaluator, biharmonic_kernel, biharmonic_slope
from .shape import DropletShape, check_star_shaped, surface_geometry

logger = logging.getLogger(__name__)


def gamma_self_energy(r: float, dim: int) -> float:
    """Double integral of Gamma(|x - y|) over B_r x B_r."""
    if dim == 2:
        return 0.5 * math.pi * r**4 * math.log(r) - math.pi * r**4 / 8.0
    omega = math.pi ** (dim / 2.0) / math.gamma(dim / 2.0 + 1.0)
    return 2.0 * omega * r ** (dim + 2) / (4 - dim**2)


def gamma_self_energy_gradient(r: float, dim: int) -> float:
    """d/dr of gamma_self_energy: 2 (Gamma * chi_{B_r})(r) |dB_r|."""
    return 2.0 * radial_convolution(r, r, dim) * unit_sphere_area(dim) * r ** (dim - 1)


@dataclass(frozen=True, eq=False)
class VolumeNodes:
    """Points x = p + s rho(w) w and weights of the volume quadrature of E."""

    points: np.ndarray
    relative: np.ndarray
    weights: np.ndarray
    radial_fraction: np.ndarray
    direction_index: np.ndarray
    rho: np.ndarray
    table_values: np.ndarray


@dataclass(frozen=True)
class NonlocalValue:
    value: float
    regular: float
    gamma: float
    coeff_gradient: Optional[np.ndarray] = None
    center_gradient: Optional[np.ndarray] = None


class DirectNonlocal:
    """NL(E), its gradient in (coefficients, center) and the potential v of E."""

    def __init__(self, evaluator: GreenEvaluator, resolution):
        self.evaluator = evaluator
        self.domain = evaluator.domain
        self.dim = evaluator.dim
        self.boundary_grid: QuadratureGrid = sphere_quadrature(self.dim, resolution.boundary_order)
        self.volume_grid: QuadratureGrid = sphere_quadrature(self.dim, resolution.volume_order)
        self.radial_nodes, self.radial_weights = radial_quadrature(
            resolution.volume_radial, self.dim
        )

    # ------------------------------------------------------------------
    # regular part
    # ------------------------------------------------------------------

    def volume_nodes(self, shape: DropletShape) -> VolumeNodes:
        grid = self.volume_grid
        values = shape.basis.on_grid(grid, derivatives=False).values
        rho = shape.base_radius + values @ shape.coeffs
        check_star_shaped(shape, rho)
        s, ws = self.radial_nodes, self.radial_weights
        relative = s[:, None, None] * (rho[:, None] * grid.nodes)[None, :, :]
        relative = relative.reshape(-1, self.dim)
        weights = (ws[:, None] * (grid.weights * rho**self.dim)[None, :]).reshape(-1)
        fraction = np.repeat(s, grid.size)
        direction = np.tile(np.arange(grid.size), len(s))
        return VolumeNodes(
            shape.center + relative, relative, weights, fraction, direction, rho, values
        )

    def _regular(self, shape: DropletShape, gradient: bool):
        nodes = self.volume_nodes(shape)
        self.evaluator.check_ball_inside(shape.center, float(np.max(nodes.rho)))
        matrix = self.evaluator.regular_matrix(nodes.points, nodes.points)
        averaged = matrix @ nodes.weights
        value = float(nodes.weights @ averaged)
        if not gradient:
            return value, None, None, nodes, averaged
        grad_matrix = self.evaluator.regular_gradient_matrix(nodes.points, nodes.points)
        grad_avg = np.einsum("abk,b->ak", grad_matrix, nodes.weights)
        directions = self.volume_grid.nodes[nodes.direction_index]
        motion = nodes.weights * nodes.radial_fraction * np.einsum("ak,ak->a", grad_avg, directions)
        dilation = self.dim * nodes.weights * averaged / nodes.rho[nodes.direction_index]
        per_direction = np.bincount(
            nodes.direction_index, weights=motion + dilation, minlength=self.volume_grid.size
        )
        coeff_grad = 2.0 * nodes.table_values.T @ per_direction
        center_grad = 2.0 * nodes.weights @ grad_avg
        return value, coeff_grad, center_grad, nodes, averaged

    # ------------------------------------------------------------------
    # Gamma part
    # ------------------------------------------------------------------

    def _boundary_double_layer(
        self, shape: DropletShape, gradient: bool
    ) -> Tuple[float, Optional[np.ndarray]]:
        """D(E) = -sum_ij Phi(|X_i - X_j|) A_i . A_j and its coefficient gradient."""
        n = self.dim
        grid = self.boundary_grid
        geometry = surface_geometry(shape, grid)
        table = geometry.table
        positions = geometry.rho[:, None] * grid.nodes
        areas = geometry.vector_area()
        diff = positions[:, None, :] - positions[None, :, :]
        distance = np.linalg.norm(diff, axis=-1)
        kernel = biharmonic_kernel(distance, n)
        area_products = areas @ areas.T
        value = -float(np.sum(kernel * area_products))
        if not gradient:
            return value, None

        slope = biharmonic_slope(distance, n) * area_products
        force = slope.sum(axis=1)[:, None] * positions - slope @ positions
        term_motion = -2.0 * table.values.T @ np.einsum("ik,ik->i", force, grid.nodes)
        pulled = kernel @ areas
        weights = grid.weights
        if n == 2:
            (tangent,) = grid.frame()
            normal_part = weights * np.einsum("ik,ik->i", pulled, grid.nodes)
            tangent_part = weights * np.einsum("ik,ik->i", pulled, tangent)
            term_area = -2.0 * (table.values.T @ normal_part - table.d_theta.T @ tangent_part)
        else:
            e_theta, e_phi = grid.frame()
            rho = geometry.rho
            base = 2.0 * rho[:, None] * grid.nodes - geometry.tangential_gradient()
            scalar_part = weights * np.einsum("ik,ik->i", base, pulled)
            theta_part = weights * rho * np.einsum("ik,ik->i", e_theta, pulled)
            phi_part = weights * rho * np.einsum("ik,ik->i", e_phi, pulled) / np.sin(table.theta)
            term_area = -2.0 * (
                table.values.T @ scalar_part
                - table.d_theta.T @ theta_part
                - table.d_phi.T @ phi_part
            )
        return value, term_motion + term_area

    def _gamma(self, shape: DropletShape, gradient: bool) -> Tuple[float, Optional[np.ndarray]]:
        r = shape.base_radius
        base = DropletShape.ball(self.dim, r, shape.center, shape.degree)
        exact = gamma_self_energy(r, self.dim)
        exact_grad = np.zeros(shape.basis.size)
        exact_grad[0] = gamma_self_energy_gradient(r, self.dim) / math.sqrt(
            unit_sphere_area(self.dim)
        )
        d_shape, g_shape = self._boundary_double_layer(shape, gradient)
        d_ball, g_ball = self._boundary_double_layer(base, True)
        c = shape.coeffs
        value = exact + d_shape - d_ball - float(g_ball @ c) + float(exact_grad @ c)
        if not gradient:
            return value, None
        return value, g_shape - g_ball + exact_grad

    # ------------------------------------------------------------------
    # public API
    # ------------------------------------------------------------------

    def value(self, shape: DropletShape) -> NonlocalValue:
        regular, *_ = self._regular(shape, gradient=False)
        gamma_part, _ = self._gamma(shape, gradient=False)
        return NonlocalValue(regular - gamma_part, regular, gamma_part)

    def value_and_gradient(self, shape: DropletShape) -> NonlocalValue:
        regular, reg_grad, center_grad, _, _ = self._regular(shape, gradient=True)
        gamma_part, gamma_grad = self._gamma(shape, gradient=True)
        return NonlocalValue(
            regular - gamma_part, regular, gamma_part, reg_grad - gamma_grad, center_grad
        )

    def _boundary_nodes(self, shape: DropletShape) -> Tuple[np.ndarray, np.ndarray]:
        geometry = surface_geometry(shape, self.boundary_grid)
        return geometry.rho[:, None] * self.boundary_grid.nodes, geometry.vector_area()

    def _gamma_convolution(self, shape: DropletShape, relative: np.ndarray) -> np.ndarray:
        """(Gamma * chi_E) at points given relative to the center."""
        n = self.dim
        r = shape.base_radius
        result = radial_convolution(np.linalg.norm(relative, axis=1), r, n)
        if shape.is_ball:
            return np.atleast_1d(result)
        base = DropletShape.ball(n, r, shape.center, shape.degree)
        for sign, source in ((1.0, shape), (-1.0, base)):
            positions, areas = self._boundary_nodes(source)
            offset = positions[None, :, :] - relative[:, None, :]
            distance = np.linalg.norm(offset, axis=-1)
            flux = biharmonic_slope(distance, n) * np.einsum("pjk,jk->pj", offset, areas)
            result = result + sign * flux.sum(axis=1)
        return result

    def potential(self, shape: DropletShape, points: np.ndarray) -> np.ndarray:
        """v(x) = integral over E of G(x, y) dy."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        nodes = self.volume_nodes(shape)
        regular = self.evaluator.regular_matrix(points, nodes.points) @ nodes.weights
        relative = self.domain.wrap(points - shape.center)
        return regular - self._gamma_convolution(shape, relative)

    def potential_normal_derivative(self, shape: DropletShape) -> np.ndarray:
        """d v / d nu at the boundary nodes of a ball-shaped droplet."""
        if not shape.is_ball:
            raise ConfigurationError(
                "Normal derivative of v is implemented for ball-shaped droplets"
            )
        nodes = self.volume_nodes(shape)
        r = shape.base_radius
        surface = shape.center + r * self.boundary_grid.nodes
        regular = self.evaluator.regular_gradient_matrix(surface, nodes.points)
        grad = np.einsum("abk,b->ak", regular, nodes.weights)
        normal = np.einsum("ak,ak->a", grad, self.boundary_grid.nodes)
        return normal - radial_convolution_derivative(r, r, self.dim)
