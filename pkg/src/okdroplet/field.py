"""Poisson solvers on the torus and the ball, the indicator source and the Dirichlet form of NL."""

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Union

import numpy as np
from scipy import integrate, ndimage
from scipy.interpolate import CubicSpline
from scipy.linalg import solve_banded
from scipy.sparse import bmat, csr_matrix, diags
from scipy.sparse.linalg import spsolve

from .domain import Domain, sphere_quadrature, unit_ball_volume
from .errors import CompatibilityError, ConfigurationError, ContainmentError
from .harmonics import HarmonicBasis, harmonic_basis
from .shape import DropletShape, _inside, _max_radius, check_star_shaped

logger = logging.getLogger(__name__)

COMPATIBILITY_TOLERANCE = 1e-8

Source = Union[np.ndarray, Callable[[np.ndarray], np.ndarray]]


# ============================================================================
# RADIAL CONVOLUTION
# ============================================================================


def radial_convolution(x_norm, r: float, dim: int):
    """(Gamma * chi_{B_r})(x) as a function of |x|; C^1 across |x| = r."""
    s = np.asarray(x_norm, dtype=float)
    if dim == 2:
        safe = np.where(s > 0, s, 1.0)
        inside = (s**2 - r**2) / 4.0 + 0.5 * r**2 * math.log(r)
        outside = 0.5 * r**2 * np.log(safe)
    else:
        safe = np.where(s > 0, s, 1.0)
        inside = s**2 / (2.0 * dim) + r**2 / (2.0 * (2 - dim))
        outside = r**dim / (dim * (2 - dim) * safe ** (dim - 2))
    value = np.where(s <= r, inside, outside)
    return float(value) if value.ndim == 0 else value


def radial_convolution_derivative(x_norm, r: float, dim: int):
    """d/ds of radial_convolution: s/n inside, r^n/(n s^{n-1}) outside."""
    s = np.asarray(x_norm, dtype=float)
    safe = np.where(s > 0, s, 1.0)
    value = np.where(s <= r, s / dim, r**dim / (dim * safe ** (dim - 1)))
    return float(value) if value.ndim == 0 else value


# ============================================================================
# FIELDS
# ============================================================================


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Discrete potential.

    Torus: nodal values on the regular grid x_j = j/N. Ball: harmonic
    coefficients per radial cell, values[i, k] at radius radii[i].
    """

    domain: Domain
    values: np.ndarray
    mean: float
    radii: Optional[np.ndarray] = None
    degree: Optional[int] = None
    source: Optional[np.ndarray] = None

    @property
    def spacing(self) -> float:
        if self.domain.is_torus:
            return 1.0 / self.values.shape[0]
        return self.domain.radius / len(self.radii)

    @property
    def basis(self) -> HarmonicBasis:
        return harmonic_basis(self.domain.dim, self.degree)

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if self.domain.is_torus:
            count = self.values.shape[0]
            coords = (np.mod(points, 1.0) * count).T
            return ndimage.map_coordinates(self.values, coords, order=3, mode="grid-wrap")
        norms = np.linalg.norm(points, axis=1)
        if np.any(norms > self.domain.radius * (1.0 + 1e-12)):
            raise ContainmentError("Field evaluated outside the ball domain")
        directions = points / np.where(norms > 0, norms, 1.0)[:, None]
        directions[norms == 0] = np.eye(self.domain.dim)[0]
        table = self.basis.at_directions(directions)
        spline = CubicSpline(self.radii, self.values, axis=0)
        return np.einsum("ik,ik->i", spline(norms), table.values)

    def dirichlet_energy(self) -> float:
        """Integral of |grad u|^2, through the identity with the integral of u f."""
        if self.source is None:
            raise ConfigurationError("Field was built without its source")
        if self.domain.is_torus:
            return float(np.sum(self.values * self.source)) * self.spacing**self.domain.dim
        shells = _shell_volumes(self.radii, self.spacing, self.domain.dim)
        return float(np.sum(shells[:, None] * self.values * self.source))


def _shell_volumes(radii: np.ndarray, spacing: float, dim: int) -> np.ndarray:
    """Per unit solid angle: (b^n - a^n)/n for cells [a, b]."""
    outer = radii + spacing / 2.0
    inner = np.maximum(radii - spacing / 2.0, 0.0)
    return (outer**dim - inner**dim) / dim


# ============================================================================
# SOLVERS
# ============================================================================


def solve_poisson(domain: Domain, source: Source, resolution) -> ScalarField:
    """Zero-mean solution of -Delta u = source with periodic or zero Neumann data.

    source: nodal grid array (torus), (cells, modes) coefficient array (ball) or
    a callable sampled on the discretization.
    """
    if domain.is_torus:
        return _solve_torus(domain, _torus_samples(domain, source, resolution.torus_grid))
    coefficients = _ball_samples(domain, source, resolution)
    return _solve_ball(domain, coefficients, resolution.ball_degree)


def _torus_axes(count: int, dim: int) -> np.ndarray:
    axes = [np.arange(count) / count] * dim
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack(mesh, axis=-1)


def _torus_samples(domain: Domain, source: Source, count: int) -> np.ndarray:
    if callable(source):
        nodes = _torus_axes(count, domain.dim)
        values = np.asarray(source(nodes.reshape(-1, domain.dim)), dtype=float)
        return values.reshape(nodes.shape[:-1])
    return np.asarray(source, dtype=float)


def _check_compatible(mean: float, scale: float) -> None:
    if abs(mean) > COMPATIBILITY_TOLERANCE * max(1.0, scale):
        raise CompatibilityError(mean, COMPATIBILITY_TOLERANCE)


def _solve_torus(domain: Domain, samples: np.ndarray) -> ScalarField:
    count = samples.shape[0]
    _check_compatible(float(np.mean(samples)), float(np.max(np.abs(samples))))
    freqs = np.fft.fftfreq(count, d=1.0 / count)
    grids = np.meshgrid(*([freqs] * domain.dim), indexing="ij")
    squared = sum(g**2 for g in grids)
    transform = np.fft.fftn(samples)
    with np.errstate(divide="ignore", invalid="ignore"):
        solution_hat = np.where(squared > 0, transform / (4.0 * math.pi**2 * squared), 0.0)
    values = np.real(np.fft.ifftn(solution_hat))
    logger.debug("Periodic Poisson solve on %d^%d grid", count, domain.dim)
    return ScalarField(domain, values, float(np.mean(values)), source=samples)


def _ball_grid(domain: Domain, resolution):
    cells = resolution.ball_radial_cells
    spacing = domain.radius / cells
    radii = (np.arange(cells) + 0.5) * spacing
    grid = sphere_quadrature(domain.dim, max(4, resolution.ball_degree + 2))
    return radii, spacing, grid


def _ball_samples(domain: Domain, source: Source, resolution) -> np.ndarray:
    basis = harmonic_basis(domain.dim, resolution.ball_degree)
    if not callable(source):
        coefficients = np.asarray(source, dtype=float)
        if coefficients.shape[1] != basis.size:
            raise ConfigurationError("Ball source has the wrong number of harmonic modes")
        return coefficients
    radii, _, grid = _ball_grid(domain, resolution)
    points = radii[:, None, None] * grid.nodes[None, :, :]
    values = np.asarray(source(points.reshape(-1, domain.dim)), dtype=float)
    values = values.reshape(len(radii), grid.size)
    table = basis.on_grid(grid, derivatives=False)
    return (values * grid.weights) @ table.values


def _solve_ball(domain: Domain, coefficients: np.ndarray, degree: int) -> ScalarField:
    n = domain.dim
    cells = coefficients.shape[0]
    spacing = domain.radius / cells
    radii = (np.arange(cells) + 0.5) * spacing
    shells = _shell_volumes(radii, spacing, n)
    basis = harmonic_basis(n, degree)
    mean_mode = float(shells @ coefficients[:, 0])
    _check_compatible(mean_mode, float(shells @ np.abs(coefficients[:, 0])))

    faces = (np.arange(cells + 1)) * spacing
    flux = faces ** (n - 1) / spacing
    flux[0] = 0.0
    flux[-1] = 0.0
    main = flux[:-1] + flux[1:]
    off = -flux[1:-1]
    solution = np.empty_like(coefficients)
    for l in range(degree + 1):
        kappa = l * (l + n - 2)
        diagonal = main + kappa * shells / radii**2
        rhs = shells[:, None] * coefficients[:, basis.modes_of_degree(l)]
        if l == 0:
            operator = diags([off, diagonal, off], [-1, 0, 1], format="csr")
            border = csr_matrix(shells[:, None])
            system = bmat([[operator, border], [border.T, None]], format="csc")
            padded = np.vstack([rhs, np.zeros((1, rhs.shape[1]))])
            solution[:, basis.modes_of_degree(0)] = np.asarray(spsolve(system, padded)).reshape(
                cells + 1, -1
            )[:cells]
            continue
        banded = np.zeros((3, cells))
        banded[0, 1:] = off
        banded[1] = diagonal
        banded[2, :-1] = off
        solution[:, basis.modes_of_degree(l)] = solve_banded((1, 1), banded, rhs)
    logger.debug("Ball Poisson solve: %d cells, degree %d", cells, degree)
    mean = float(shells @ solution[:, 0]) * math.sqrt(n * unit_ball_volume(n)) / domain.volume
    return ScalarField(domain, solution, mean, radii=radii, degree=degree, source=coefficients)


# ============================================================================
# INDICATOR AND NL
# ============================================================================


def check_contained(domain: Domain, shape: DropletShape) -> None:
    if domain.is_torus:
        if _max_radius(shape) >= 0.5:
            raise ContainmentError("Droplet does not fit in the fundamental cell of the torus")
        return
    reach = float(np.linalg.norm(shape.center)) + _max_radius(shape)
    if reach >= domain.radius:
        raise ContainmentError(
            f"Droplet reaches {reach:.4f} >= domain radius {domain.radius}",
            "Move the droplet inward or reduce its size.",
        )


def indicator(domain: Domain, shape: DropletShape, resolution) -> np.ndarray:
    """Cell-volume fractions of the shape.

    A grid array on the torus, per-cell harmonic coefficients in the ball.
    """
    check_contained(domain, shape)
    if domain.is_torus:
        return _torus_indicator(domain, shape, resolution.torus_grid, resolution.supersample)
    return _ball_indicator(domain, shape, resolution)


def _torus_indicator(
    domain: Domain, shape: DropletShape, count: int, supersample: int
) -> np.ndarray:
    n = domain.dim
    spacing = 1.0 / count
    nodes = _torus_axes(count, n).reshape(-1, n)
    relative = domain.wrap(nodes - shape.center)
    distance = np.linalg.norm(relative, axis=1)
    grid = sphere_quadrature(n, max(8, 2 * shape.degree))
    rho_nodes = shape.radial(shape.basis.on_grid(grid, derivatives=False))
    check_star_shaped(shape, rho_nodes)
    low, high = float(np.min(rho_nodes)), float(np.max(rho_nodes))
    band = 2.0 * math.sqrt(n) * spacing * max(1.0, high / low)
    fractions = np.zeros(len(nodes))
    fractions[distance < low - band] = 1.0
    candidates = np.flatnonzero((distance >= low - band) & (distance <= high + band))
    if len(candidates):
        offsets = (np.arange(supersample) + 0.5) / supersample - 0.5
        sub = np.stack(np.meshgrid(*([offsets] * n), indexing="ij"), axis=-1)
        sub = sub.reshape(-1, n) * spacing
        for chunk in np.array_split(candidates, max(1, len(candidates) * len(sub) // 200_000)):
            points = relative[chunk][:, None, :] + sub[None, :, :]
            inside = _inside_centered(shape, points.reshape(-1, n)).reshape(len(chunk), len(sub))
            fractions[chunk] = inside.mean(axis=1)
    return fractions.reshape((count,) * n)


def _inside_centered(shape: DropletShape, relative: np.ndarray) -> np.ndarray:
    return _inside(shape.with_center(np.zeros(shape.dim)), relative)


def _ball_indicator(domain: Domain, shape: DropletShape, resolution) -> np.ndarray:
    n = domain.dim
    radii, spacing, grid = _ball_grid(domain, resolution)
    basis = harmonic_basis(n, resolution.ball_degree)
    inner = np.maximum(radii - spacing / 2.0, 0.0)
    outer = radii + spacing / 2.0
    if np.allclose(shape.center, 0.0, atol=1e-15):
        rho = shape.radial(shape.basis.on_grid(grid, derivatives=False))
        check_star_shaped(shape, rho)
        clipped = np.clip(rho[None, :], inner[:, None], outer[:, None])
        fractions = (clipped**n - inner[:, None] ** n) / (outer[:, None] ** n - inner[:, None] ** n)
    else:
        sub = (np.arange(resolution.supersample) + 0.5) / resolution.supersample
        fractions = np.zeros((len(radii), grid.size))
        reach = np.linalg.norm(shape.center) + _max_radius(shape)
        active = np.flatnonzero(inner < reach)
        for i in active:
            levels = inner[i] + sub * (outer[i] - inner[i])
            weights = levels ** (n - 1)
            points = (levels[:, None, None] * grid.nodes[None, :, :]).reshape(-1, n)
            inside = _inside(shape, points).reshape(len(levels), grid.size)
            fractions[i] = weights @ inside / weights.sum()
    table = basis.on_grid(grid, derivatives=False)
    return (fractions * grid.weights) @ table.values


def indicator_source(domain: Domain, shape: DropletShape, resolution) -> np.ndarray:
    """chi_E - |E_h|/|Omega| with |E_h| the discrete volume, so the source is compatible."""
    chi = indicator(domain, shape, resolution)
    if domain.is_torus:
        return chi - float(np.mean(chi))
    n = domain.dim
    radii, spacing, _ = _ball_grid(domain, resolution)
    shells = _shell_volumes(radii, spacing, n)
    constant_mode = math.sqrt(n * unit_ball_volume(n))
    volume = float(shells @ chi[:, 0]) * constant_mode
    source = chi.copy()
    source[:, 0] -= volume / domain.volume * constant_mode
    return source


def nl_energy(domain: Domain, shape: DropletShape, resolution) -> float:
    """NL(E) as the Dirichlet energy of u_E, -Delta u_E = chi_E - |E|/|Omega|."""
    source = indicator_source(domain, shape, resolution)
    field = solve_poisson(domain, source, resolution)
    return field.dirichlet_energy()


def potential_field(domain: Domain, shape: DropletShape, resolution) -> ScalarField:
    """u_E; the potential v of the droplet equals u_E up to an additive constant."""
    return solve_poisson(domain, indicator_source(domain, shape, resolution), resolution)


# ============================================================================
# EXPLICIT BALL POTENTIAL AND EXPORT
# ============================================================================


@dataclass(frozen=True)
class RadialProfile:
    """Zero-mean radial solution of -Delta v = chi_{B_r} - m in B_R with zero Neumann data."""

    dim: int
    r: float
    domain_radius: float
    offset: float

    @property
    def mass(self) -> float:
        return (self.r / self.domain_radius) ** self.dim

    def _raw(self, s: np.ndarray) -> np.ndarray:
        n, r, big_r, m = self.dim, self.r, self.domain_radius, self.mass
        inside = -(1.0 - m) * s**2 / (2.0 * n)
        safe = np.where(s > 0, s, 1.0)
        def tail(t):
            if n == 2:
                return (m / 2.0) * (t**2 / 2.0 - big_r**2 * np.log(t))
            return (m / 3.0) * (t**2 / 2.0 + big_r**3 / t)

        shift = -(1.0 - m) * r**2 / (2.0 * n) - tail(r)
        return np.where(s <= r, inside, tail(safe) + shift)

    def __call__(self, s) -> np.ndarray:
        return self._raw(np.asarray(s, dtype=float)) + self.offset

    def derivative(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        n, r, big_r, m = self.dim, self.r, self.domain_radius, self.mass
        safe = np.where(s > 0, s, 1.0)
        return np.where(s <= r, -(1.0 - m) * s / n, (m / n) * (s - big_r**n / safe ** (n - 1)))


def explicit_ball_potential(domain: Domain, r: float) -> RadialProfile:
    """Potential of the centered ball B_r in the ball domain, normalized to zero mean."""
    if domain.is_torus:
        raise ConfigurationError("explicit_ball_potential requires the ball domain")
    if r >= domain.radius:
        raise ContainmentError(
            f"Ball radius {r} does not fit in the domain of radius {domain.radius}"
        )
    n = domain.dim
    raw = RadialProfile(n, r, domain.radius, 0.0)
    def weight(s):
        return float(raw(s)) * s ** (n - 1)

    total = integrate.quad(weight, 0.0, r, epsabs=1e-14)[0] + integrate.quad(
        weight, r, domain.radius, epsabs=1e-14
    )[0]
    mean = total * n / domain.radius**n
    return RadialProfile(n, r, domain.radius, -mean)


def export_field(field: ScalarField, path: Union[str, Path]) -> Path:
    """Write values as flat float64 binary plus a JSON header next to it."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data_path = path.with_suffix(".bin")
    np.ascontiguousarray(field.values, dtype="<f8").tofile(data_path)
    header = {
        "domain": field.domain.describe(),
        "shape": list(field.values.shape),
        "dtype": "float64-le",
        "spacing": field.spacing,
        "layout": "grid" if field.domain.is_torus else "radial_cells_by_harmonic_mode",
        "mean": field.mean,
        "degree": field.degree,
        "data": data_path.name,
    }
    header_path = path.with_suffix(".json")
    header_path.write_text(json.dumps(header, indent=2), encoding="utf-8")
    logger.info("Exported field to %s", data_path)
    return header_path
