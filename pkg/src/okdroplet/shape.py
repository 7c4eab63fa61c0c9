"""Star-shaped droplets {p + (r + phi(x)) x : x in S^{n-1}} and their geometry."""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np
from scipy.optimize import minimize as scipy_minimize

from .domain import QuadratureGrid, sphere_quadrature, unit_ball_volume
from .errors import ConfigurationError, InvalidShapeError
from .harmonics import HarmonicBasis, HarmonicTable, basis_size, harmonic_basis
from .validators import require_dimension, require_positive

logger = logging.getLogger(__name__)

STAR_SHAPED_FLOOR = 1e-6
DEFAULT_FINE_ORDER = {2: 2048, 3: 96}
DEFAULT_RASTER = {2: 1024, 3: 128}


# ============================================================================
# SHAPE TYPE
# ============================================================================


@dataclass(frozen=True, eq=False)
class DropletShape:
    """Center p, base radius r and coefficients of phi in the real harmonic basis."""

    dim: int
    center: np.ndarray
    base_radius: float
    coeffs: np.ndarray
    degree: int = field(init=False)

    def __post_init__(self):
        dim = require_dimension(self.dim)
        center = np.array(self.center, dtype=float).reshape(-1)
        if center.shape != (dim,):
            raise ConfigurationError(f"Center must have {dim} coordinates, got {center.shape}")
        coeffs = np.array(self.coeffs, dtype=float).reshape(-1)
        degree = _degree_for_size(dim, len(coeffs))
        center.setflags(write=False)
        coeffs.setflags(write=False)
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "base_radius", require_positive(self.base_radius, "base_radius"))
        object.__setattr__(self, "degree", degree)

    @classmethod
    def ball(cls, dim: int, radius: float, center=None, degree: int = 0) -> "DropletShape":
        center = np.zeros(dim) if center is None else center
        return cls(dim, center, radius, np.zeros(basis_size(dim, degree)))

    @classmethod
    def from_record(cls, record: Any) -> "DropletShape":
        data = record.model_dump() if hasattr(record, "model_dump") else dict(record)
        shape = cls(data["dim"], data["center"], data["base_radius"], data["coeffs"])
        if shape.degree != int(data.get("degree", shape.degree)):
            raise ConfigurationError("Shape record degree does not match its coefficient count")
        return shape

    def to_record(self) -> Dict[str, Any]:
        return {
            "dim": self.dim,
            "center": self.center.tolist(),
            "base_radius": self.base_radius,
            "degree": self.degree,
            "coeffs": self.coeffs.tolist(),
        }

    @property
    def basis(self) -> HarmonicBasis:
        return harmonic_basis(self.dim, self.degree)

    @property
    def is_ball(self) -> bool:
        return not np.any(self.coeffs)

    def radial(self, table: HarmonicTable) -> np.ndarray:
        """rho = r + phi at the directions of the table."""
        return self.base_radius + table.values @ self.coeffs

    def radial_at(self, directions: np.ndarray) -> np.ndarray:
        return self.radial(self.basis.at_directions(directions))

    def with_coeffs(self, coeffs) -> "DropletShape":
        return DropletShape(self.dim, self.center, self.base_radius, coeffs)

    def with_center(self, center) -> "DropletShape":
        return DropletShape(self.dim, center, self.base_radius, self.coeffs)

    def with_degree(self, degree: int) -> "DropletShape":
        """Same set, coefficients padded or truncated to the given degree."""
        size = basis_size(self.dim, degree)
        coeffs = np.zeros(size)
        keep = min(size, len(self.coeffs))
        coeffs[:keep] = self.coeffs[:keep]
        return DropletShape(self.dim, self.center, self.base_radius, coeffs)

    def translated(self, offset) -> "DropletShape":
        return self.with_center(self.center + np.asarray(offset, dtype=float))

    def dilated(self, factor: float) -> "DropletShape":
        """Homothety of ratio factor about the center."""
        return DropletShape(self.dim, self.center, self.base_radius * factor, self.coeffs * factor)


def _degree_for_size(dim: int, size: int) -> int:
    if dim == 2:
        if size % 2 == 0:
            raise ConfigurationError(f"2D coefficient vector must have odd length, got {size}")
        return (size - 1) // 2
    degree = int(round(math.sqrt(size))) - 1
    if (degree + 1) ** 2 != size:
        raise ConfigurationError(f"3D coefficient vector must have square length, got {size}")
    return degree


def random_near_ball(
    dim: int,
    radius: float,
    degree: int,
    amplitude: float,
    rng: np.random.Generator,
    center=None,
    skip_translations: bool = True,
) -> DropletShape:
    """Ball plus a random perturbation whose degree-l modes decay like 1/l^2."""
    basis = harmonic_basis(dim, degree)
    coeffs = rng.standard_normal(basis.size) * amplitude * radius
    coeffs /= np.maximum(basis.degrees, 1) ** 2
    coeffs[basis.degrees == 0] = 0.0
    if skip_translations:
        coeffs[basis.degrees == 1] = 0.0
    center = np.zeros(dim) if center is None else center
    return DropletShape(dim, center, radius, coeffs)


# ============================================================================
# SURFACE GEOMETRY
# ============================================================================


@dataclass(frozen=True, eq=False)
class SurfaceGeometry:
    """Radial function, its angular derivatives and derived surface quantities at grid nodes.

    q = |grad_S rho|^2 on the unit sphere and W = sqrt(rho^2 + q); the outer
    normal is (rho x - grad_S rho)/W and the area element rho^{n-2} W dsigma.
    """

    shape: DropletShape
    grid: QuadratureGrid
    table: HarmonicTable
    rho: np.ndarray
    rho_t: np.ndarray
    rho_tt: np.ndarray
    rho_p: Optional[np.ndarray]
    rho_tp: Optional[np.ndarray]
    rho_pp: Optional[np.ndarray]

    @property
    def dim(self) -> int:
        return self.grid.dim

    @property
    def sin_theta(self) -> np.ndarray:
        return np.sin(self.table.theta)

    @property
    def q(self) -> np.ndarray:
        if self.dim == 2:
            return self.rho_t**2
        return self.rho_t**2 + (self.rho_p / self.sin_theta) ** 2

    @property
    def stretch(self) -> np.ndarray:
        return np.sqrt(self.rho**2 + self.q)

    @property
    def laplacian(self) -> np.ndarray:
        eig = self.shape.basis.laplacian_eigenvalues
        return self.table.values @ (eig * self.shape.coeffs)

    def tangential_gradient(self) -> np.ndarray:
        """grad_S rho as ambient vectors (unit-sphere metric)."""
        frame = self.grid.frame()
        if self.dim == 2:
            return self.rho_t[:, None] * frame[0]
        return self.rho_t[:, None] * frame[0] + (self.rho_p / self.sin_theta)[:, None] * frame[1]

    def points(self) -> np.ndarray:
        return self.shape.center + self.rho[:, None] * self.grid.nodes

    def normals(self) -> np.ndarray:
        raw = self.rho[:, None] * self.grid.nodes - self.tangential_gradient()
        return raw / self.stretch[:, None]

    def area_weights(self) -> np.ndarray:
        return self.grid.weights * self.rho ** (self.dim - 2) * self.stretch

    def vector_area(self) -> np.ndarray:
        """nu dA at the nodes, quadrature weights included."""
        raw = self.rho[:, None] * self.grid.nodes - self.tangential_gradient()
        return (self.grid.weights * self.rho ** (self.dim - 2))[:, None] * raw

    def grad_dot_grad_q(self) -> np.ndarray:
        if self.dim == 2:
            return 2.0 * self.rho_t**2 * self.rho_tt
        sin_t = self.sin_theta
        cos_t = np.cos(self.table.theta)
        q_t = (
            2.0 * self.rho_t * self.rho_tt
            + 2.0 * self.rho_p * self.rho_tp / sin_t**2
            - 2.0 * self.rho_p**2 * cos_t / sin_t**3
        )
        q_p = 2.0 * self.rho_t * self.rho_tp + 2.0 * self.rho_p * self.rho_pp / sin_t**2
        return self.rho_t * q_t + self.rho_p * q_p / sin_t**2

    def mean_curvature(self) -> np.ndarray:
        """Scalar mean curvature (sum of principal curvatures)."""
        n = self.dim
        w = self.stretch
        q = self.q
        return (
            (n - 1) / w
            + q / w**3
            - self.laplacian / (self.rho * w)
            + self.grad_dot_grad_q() / (2.0 * self.rho * w**3)
        )

    def grad_dot(self, d_theta: np.ndarray, d_phi: Optional[np.ndarray]) -> np.ndarray:
        """grad_S rho . grad_S Y for every basis column (rows: nodes)."""
        if self.dim == 2:
            return self.rho_t[:, None] * d_theta
        sin2 = self.sin_theta**2
        return self.rho_t[:, None] * d_theta + (self.rho_p / sin2)[:, None] * d_phi


def surface_geometry(shape: DropletShape, grid: QuadratureGrid) -> SurfaceGeometry:
    """Evaluate the radial function and its derivatives on the grid."""
    if grid.dim != shape.dim:
        raise ConfigurationError(f"Grid dimension {grid.dim} != shape dimension {shape.dim}")
    table = shape.basis.on_grid(grid, derivatives=True)
    c = shape.coeffs
    rho = shape.base_radius + table.values @ c
    check_star_shaped(shape, rho)
    if shape.dim == 2:
        return SurfaceGeometry(
            shape, grid, table, rho, table.d_theta @ c, table.d_tt @ c, None, None, None
        )
    return SurfaceGeometry(
        shape,
        grid,
        table,
        rho,
        table.d_theta @ c,
        table.d_tt @ c,
        table.d_phi @ c,
        table.d_tp @ c,
        table.d_pp @ c,
    )


def check_star_shaped(shape: DropletShape, rho: np.ndarray) -> None:
    floor = STAR_SHAPED_FLOOR * shape.base_radius
    worst = float(np.min(rho))
    if worst < floor:
        raise InvalidShapeError(
            f"Radial function drops to {worst:.3e} < {floor:.3e}; shape is not star-shaped"
        )


# ============================================================================
# INTEGRAL QUANTITIES
# ============================================================================


def volume(shape: DropletShape, grid: QuadratureGrid) -> float:
    """|E| = integral over S^{n-1} of rho^n / n."""
    rho = shape.radial(shape.basis.on_grid(grid, derivatives=False))
    check_star_shaped(shape, rho)
    return float(grid.weights @ rho**shape.dim) / shape.dim


def perimeter(shape: DropletShape, grid: QuadratureGrid) -> float:
    """Per(E) = integral over S^{n-1} of rho^{n-2} sqrt(rho^2 + |grad rho|^2)."""
    return float(np.sum(surface_geometry(shape, grid).area_weights()))


def volume_gradient(shape: DropletShape, grid: QuadratureGrid) -> np.ndarray:
    """d|E|/dc_k of the discrete volume."""
    table = shape.basis.on_grid(grid, derivatives=False)
    rho = shape.radial(table)
    return table.values.T @ (grid.weights * rho ** (shape.dim - 1))


def perimeter_gradient(geometry: SurfaceGeometry) -> np.ndarray:
    """dPer/dc_k of the discrete perimeter."""
    n = geometry.dim
    rho, w, table = geometry.rho, geometry.stretch, geometry.table
    weights = geometry.grid.weights
    cross = geometry.grad_dot(table.d_theta, table.d_phi)
    integrand = ((n - 2) * rho ** (n - 3) * w)[:, None] * table.values + (rho ** (n - 2) / w)[
        :, None
    ] * (rho[:, None] * table.values + cross)
    return integrand.T @ weights


def mean_curvature(shape: DropletShape, node) -> float:
    """Mean curvature at the surface point over the unit direction node."""
    node = np.asarray(node, dtype=float).reshape(1, -1)
    node = node / np.linalg.norm(node)
    table = shape.basis.at_directions(node, derivatives=True)
    geometry = _geometry_from_table(shape, table, node)
    return float(geometry.mean_curvature()[0])


def mean_curvature_at_nodes(shape: DropletShape, grid: QuadratureGrid) -> np.ndarray:
    return surface_geometry(shape, grid).mean_curvature()


def _geometry_from_table(
    shape: DropletShape, table: HarmonicTable, nodes: np.ndarray
) -> SurfaceGeometry:
    if shape.dim == 2:
        grid = QuadratureGrid(2, 4, np.array(table.theta), np.ones(len(nodes)))
    else:
        grid = QuadratureGrid(3, 4, np.array(table.theta), np.ones(len(nodes)), np.array(table.phi))
    c = shape.coeffs
    rho = shape.base_radius + table.values @ c
    check_star_shaped(shape, rho)
    if shape.dim == 2:
        return SurfaceGeometry(
            shape, grid, table, rho, table.d_theta @ c, table.d_tt @ c, None, None, None
        )
    return SurfaceGeometry(
        shape, grid, table, rho, table.d_theta @ c, table.d_tt @ c,
        table.d_phi @ c, table.d_tp @ c, table.d_pp @ c,
    )


def barycenter(shape: DropletShape, grid: QuadratureGrid) -> np.ndarray:
    """Volume centroid p + (integral of rho^{n+1}/(n+1) x dsigma) / |E|."""
    rho = shape.radial(shape.basis.on_grid(grid, derivatives=False))
    check_star_shaped(shape, rho)
    n = shape.dim
    vol = float(grid.weights @ rho**n) / n
    moment = (grid.weights * rho ** (n + 1) / (n + 1)) @ grid.nodes
    return shape.center + moment / vol


def principal_curvatures(shape: DropletShape, grid: QuadratureGrid) -> np.ndarray:
    """Principal curvatures at the nodes, shape (N, n-1); positive on convex parts."""
    geometry = surface_geometry(shape, grid)
    if shape.dim == 2:
        return geometry.mean_curvature()[:, None]

    omega = grid.nodes
    e_t, e_p = grid.frame()
    theta = geometry.table.theta
    sin_t, cos_t = np.sin(theta)[:, None], np.cos(theta)[:, None]
    rho = geometry.rho[:, None]
    r_t, r_p = geometry.rho_t[:, None], geometry.rho_p[:, None]
    r_tt, r_tp, r_pp = geometry.rho_tt[:, None], geometry.rho_tp[:, None], geometry.rho_pp[:, None]

    x_t = r_t * omega + rho * e_t
    x_p = r_p * omega + rho * sin_t * e_p
    x_tt = r_tt * omega + 2.0 * r_t * e_t - rho * omega
    x_tp = r_tp * omega + r_p * e_t + (r_t * sin_t + rho * cos_t) * e_p
    x_pp = r_pp * omega + 2.0 * r_p * sin_t * e_p - rho * sin_t * (sin_t * omega + cos_t * e_t)
    normal = geometry.normals()

    def dot(a, b):
        return np.einsum("ij,ij->i", a, b)

    first = np.stack([[dot(x_t, x_t), dot(x_t, x_p)], [dot(x_t, x_p), dot(x_p, x_p)]])
    second = -np.stack(
        [[dot(x_tt, normal), dot(x_tp, normal)], [dot(x_tp, normal), dot(x_pp, normal)]]
    )
    first = np.moveaxis(first, -1, 0)
    second = np.moveaxis(second, -1, 0)
    # Symmetric form L^-1 II L^-T of the shape operator, I = L L^T.
    lower_inv = np.linalg.inv(np.linalg.cholesky(first))
    operator = lower_inv @ second @ np.swapaxes(lower_inv, -1, -2)
    operator = 0.5 * (operator + np.swapaxes(operator, -1, -2))
    return np.linalg.eigvalsh(operator)


def is_convex(shape: DropletShape, grid: QuadratureGrid, tolerance: float = 1e-10) -> bool:
    """Nonnegativity of all principal curvatures at the nodes."""
    return bool(np.min(principal_curvatures(shape, grid)) >= -tolerance)


def c1_norm(shape: DropletShape, grid: QuadratureGrid, rescaled: bool = False) -> float:
    """max |phi| + max |grad_S phi| over the nodes; divided by r when rescaled."""
    geometry = surface_geometry(shape, grid)
    phi = geometry.rho - shape.base_radius
    value = float(np.max(np.abs(phi)) + np.max(np.sqrt(geometry.q)))
    return value / shape.base_radius if rescaled else value


def isoperimetric_deficit(shape: DropletShape, grid: QuadratureGrid) -> float:
    """(Per(E) - Per(B_E)) / Per(B_E), B_E the ball with the volume of E."""
    n = shape.dim
    radius = (volume(shape, grid) / unit_ball_volume(n)) ** (1.0 / n)
    ball_perimeter = n * unit_ball_volume(n) * radius ** (n - 1)
    return (perimeter(shape, grid) - ball_perimeter) / ball_perimeter


# ============================================================================
# SYMMETRIC DIFFERENCE AND ASYMMETRY
# ============================================================================


def _fine_grid(dim: int, grid: Optional[QuadratureGrid]) -> QuadratureGrid:
    return grid if grid is not None else sphere_quadrature(dim, DEFAULT_FINE_ORDER[dim])


def _ball_exit_distance(directions: np.ndarray, offset: np.ndarray, radius: float) -> np.ndarray:
    """Distance from the origin to the sphere |y - offset| = radius along each direction."""
    projection = directions @ offset
    return projection + np.sqrt(projection**2 - offset @ offset + radius**2)


def symmetric_difference(
    shape: DropletShape,
    ball_center,
    ball_radius: float,
    grid: Optional[QuadratureGrid] = None,
) -> float:
    """|E symmetric-difference B_radius(ball_center)|.

    Angular integration about the shape's center when that center lies inside
    the ball, rasterized overlap otherwise.
    """
    ball_center = np.asarray(ball_center, dtype=float)
    offset = ball_center - shape.center
    n = shape.dim
    ball_volume = unit_ball_volume(n) * ball_radius**n
    if np.linalg.norm(offset) >= ball_radius * (1.0 - 1e-9):
        def inside(pts):
            return np.linalg.norm(pts - ball_center, axis=1) < ball_radius

        return _rasterized_symmetric_difference(shape, inside, ball_center, ball_radius)
    grid = _fine_grid(n, grid)
    rho = shape.radial(shape.basis.on_grid(grid, derivatives=False))
    check_star_shaped(shape, rho)
    rho_ball = _ball_exit_distance(grid.nodes, offset, ball_radius)
    shape_volume = float(grid.weights @ rho**n) / n
    overlap = float(grid.weights @ np.minimum(rho, rho_ball) ** n) / n
    return max(shape_volume + ball_volume - 2.0 * overlap, 0.0)


def shape_symmetric_difference(
    first: DropletShape, second: DropletShape, grid: Optional[QuadratureGrid] = None
) -> float:
    """|A symmetric-difference B| for two shapes; exact angular form for a common center."""
    n = first.dim
    if np.allclose(first.center, second.center, atol=1e-14):
        grid = _fine_grid(n, grid)
        rho_a = first.radial(first.basis.on_grid(grid, derivatives=False))
        rho_b = second.radial(second.basis.on_grid(grid, derivatives=False))
        return float(grid.weights @ np.abs(rho_a**n - rho_b**n)) / n
    return _rasterized_symmetric_difference(
        first, lambda pts: _inside(second, pts), second.center, _max_radius(second)
    )


def _max_radius(shape: DropletShape) -> float:
    grid = sphere_quadrature(shape.dim, max(8, 2 * shape.degree))
    return float(np.max(shape.radial(shape.basis.on_grid(grid, derivatives=False))))


def _inside(shape: DropletShape, points: np.ndarray) -> np.ndarray:
    relative = points - shape.center
    distance = np.linalg.norm(relative, axis=1)
    result = np.zeros(len(points), dtype=bool)
    nonzero = distance > 0
    result[~nonzero] = True
    if np.any(nonzero):
        directions = relative[nonzero] / distance[nonzero, None]
        result[nonzero] = distance[nonzero] < shape.radial_at(directions)
    return result


def _rasterized_symmetric_difference(
    shape: DropletShape,
    other_inside,
    other_center,
    other_radius: float,
    cells: Optional[int] = None,
) -> float:
    n = shape.dim
    cells = cells or DEFAULT_RASTER[n]
    own = _max_radius(shape)
    pad = 1e-9 * max(own, other_radius)
    low = np.minimum(shape.center - own, np.asarray(other_center) - other_radius) - pad
    high = np.maximum(shape.center + own, np.asarray(other_center) + other_radius) + pad
    axes = [
        np.linspace(lo, hi, cells, endpoint=False) + (hi - lo) / (2 * cells)
        for lo, hi in zip(low, high)
    ]
    cell_volume = float(np.prod((high - low) / cells))
    total = 0
    mesh = np.meshgrid(*axes, indexing="ij")
    points = np.column_stack([m.ravel() for m in mesh])
    for chunk in np.array_split(points, max(1, len(points) // 200_000)):
        total += int(np.count_nonzero(_inside(shape, chunk) != other_inside(chunk)))
    return total * cell_volume


def rasterized_volume(shape: DropletShape, cells: Optional[int] = None) -> float:
    """Cell-count volume on a regular grid over the bounding box (test oracle)."""
    n = shape.dim
    cells = cells or DEFAULT_RASTER[n]
    extent = _max_radius(shape)
    axes = [
        np.linspace(c - extent, c + extent, cells, endpoint=False) + extent / cells
        for c in shape.center
    ]
    mesh = np.meshgrid(*axes, indexing="ij")
    points = np.column_stack([m.ravel() for m in mesh])
    inside = sum(
        int(np.count_nonzero(_inside(shape, chunk)))
        for chunk in np.array_split(points, max(1, len(points) // 200_000))
    )
    return inside * (2.0 * extent / cells) ** n


@dataclass(frozen=True)
class AsymmetryResult:
    """Frankel asymmetry and the center of the best-fitting ball."""

    alpha: float
    optimal_center: Tuple[float, ...]

    def to_dict(self) -> Dict[str, Any]:
        return {"alpha": self.alpha, "optimal_center": list(self.optimal_center)}


def frankel_asymmetry(
    shape: DropletShape,
    grid: Optional[QuadratureGrid] = None,
    coarse_grid: Optional[QuadratureGrid] = None,
) -> AsymmetryResult:
    """alpha(E) = min over x of |E sdiff (x + B_E)| / |B_E| by multi-start Nelder-Mead."""
    n = shape.dim
    coarse_grid = coarse_grid or sphere_quadrature(n, max(16, 4 * shape.degree))
    vol = volume(shape, coarse_grid)
    radius = (vol / unit_ball_volume(n)) ** (1.0 / n)
    ball_volume = unit_ball_volume(n) * radius**n
    grid = _fine_grid(n, grid)

    def objective(x):
        return symmetric_difference(shape, x, radius, grid) / ball_volume

    start = barycenter(shape, coarse_grid)
    seeds = [start] + [
        start + sign * 0.05 * radius * np.eye(n)[i] for i in range(n) for sign in (1, -1)
    ]
    best_value, best_center = objective(start), start
    if best_value == 0.0:
        return AsymmetryResult(0.0, tuple(float(v) for v in start))
    for seed in seeds:
        result = scipy_minimize(
            objective,
            seed,
            method="Nelder-Mead",
            options={"xatol": 1e-10 * radius, "fatol": 1e-14, "maxiter": 400 * n},
        )
        if result.fun < best_value:
            best_value, best_center = float(result.fun), np.asarray(result.x)
    logger.debug("Frankel asymmetry %.3e at %s", best_value, best_center)
    return AsymmetryResult(min(max(best_value, 0.0), 2.0), tuple(float(v) for v in best_center))
