"""Real orthonormal harmonic bases on S^1 and S^2 with angular derivatives.

n=2: 1/sqrt(2 pi), cos(k t)/sqrt(pi), sin(k t)/sqrt(pi) for k = 1..L.
n=3: real spherical harmonics Y_{l,m}, l <= L, ordered by l then m = -l..l;
m > 0 is sqrt(2) Re Y_l^m, m < 0 is sqrt(2) Im Y_l^|m|, built on
scipy.special.sph_harm_y (Condon-Shortley phase).
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

try:
    from scipy.special import sph_harm_y
except ImportError:  # scipy < 1.15
    from scipy.special import sph_harm as _sph_harm

    def sph_harm_y(n, m, theta, phi):
        return _sph_harm(m, n, phi, theta)


from .domain import QuadratureGrid, directions_to_angles
from .validators import require_dimension

logger = logging.getLogger(__name__)

_POLE_GUARD = 1e-7


@dataclass(frozen=True, eq=False)
class HarmonicTable:
    """Basis values and angular derivatives at a set of directions (rows) per mode (columns)."""

    values: np.ndarray
    d_theta: Optional[np.ndarray] = None
    d_phi: Optional[np.ndarray] = None
    d_tt: Optional[np.ndarray] = None
    d_tp: Optional[np.ndarray] = None
    d_pp: Optional[np.ndarray] = None
    theta: Optional[np.ndarray] = None
    phi: Optional[np.ndarray] = None

    @property
    def sin_theta(self) -> np.ndarray:
        return np.sin(self.theta)

    @property
    def cos_theta(self) -> np.ndarray:
        return np.cos(self.theta)


class HarmonicBasis:
    """Real harmonic basis of degree <= L on the unit circle or sphere."""

    def __init__(self, dim: int, degree: int):
        self.dim = require_dimension(dim)
        self.degree = int(degree)
        if self.degree < 0:
            raise ValueError(f"Harmonic degree must be >= 0, got {degree}")
        if self.dim == 2:
            degrees = [0]
            orders = [0]
            for k in range(1, self.degree + 1):
                degrees += [k, k]
                orders += [k, -k]
        else:
            degrees, orders = [], []
            for l in range(self.degree + 1):
                for m in range(-l, l + 1):
                    degrees.append(l)
                    orders.append(m)
        self.degrees = np.array(degrees, dtype=int)
        self.orders = np.array(orders, dtype=int)
        self.degrees.setflags(write=False)
        self.orders.setflags(write=False)
        self._grid_cache = {}

    @property
    def size(self) -> int:
        return len(self.degrees)

    @property
    def laplacian_eigenvalues(self) -> np.ndarray:
        """Eigenvalues of the Laplace-Beltrami operator on the unit sphere: -l(l+n-2)."""
        return -(self.degrees * (self.degrees + self.dim - 2)).astype(float)

    def index(self, degree: int, order: int) -> int:
        """Column of the mode (degree, order)."""
        if self.dim == 2:
            if degree == 0:
                return 0
            return 2 * degree - 1 if order > 0 else 2 * degree
        return degree * degree + degree + order

    def modes_of_degree(self, degree: int) -> np.ndarray:
        return np.flatnonzero(self.degrees == degree)

    # ------------------------------------------------------------------
    # evaluation
    # ------------------------------------------------------------------

    def on_grid(self, grid: QuadratureGrid, derivatives: bool = True) -> HarmonicTable:
        """Table at the quadrature nodes, cached per grid."""
        key = (id(grid), derivatives)
        cached = self._grid_cache.get(key)
        if cached is not None and cached[0] is grid:
            return cached[1]
        table = self.evaluate(grid.theta, grid.phi, derivatives)
        self._grid_cache[key] = (grid, table)
        return table

    def at_directions(self, directions: np.ndarray, derivatives: bool = False) -> HarmonicTable:
        theta, phi = directions_to_angles(directions)
        return self.evaluate(theta, phi, derivatives)

    def evaluate(self, theta, phi=None, derivatives: bool = True) -> HarmonicTable:
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        if self.dim == 2:
            return self._evaluate_circle(theta, derivatives)
        phi = np.atleast_1d(np.asarray(phi, dtype=float))
        return self._evaluate_sphere(theta, phi, derivatives)

    def _evaluate_circle(self, theta: np.ndarray, derivatives: bool) -> HarmonicTable:
        count = len(theta)
        values = np.empty((count, self.size))
        d_theta = np.empty_like(values)
        values[:, 0] = 1.0 / math.sqrt(2.0 * math.pi)
        d_theta[:, 0] = 0.0
        scale = 1.0 / math.sqrt(math.pi)
        for k in range(1, self.degree + 1):
            cos_k, sin_k = np.cos(k * theta), np.sin(k * theta)
            values[:, 2 * k - 1] = scale * cos_k
            values[:, 2 * k] = scale * sin_k
            d_theta[:, 2 * k - 1] = -k * scale * sin_k
            d_theta[:, 2 * k] = k * scale * cos_k
        if not derivatives:
            return HarmonicTable(values, theta=theta)
        d_tt = -(self.degrees**2)[None, :] * values
        return HarmonicTable(values, d_theta=d_theta, d_tt=d_tt, theta=theta)

    def _evaluate_sphere(
        self, theta: np.ndarray, phi: np.ndarray, derivatives: bool
    ) -> HarmonicTable:
        if derivatives:
            theta = np.clip(theta, _POLE_GUARD, math.pi - _POLE_GUARD)
        count = len(theta)
        shape = (count, self.size)
        values = np.empty(shape)
        if derivatives:
            d_theta, d_phi = np.empty(shape), np.empty(shape)
            d_tt, d_tp, d_pp = np.empty(shape), np.empty(shape), np.empty(shape)
            sin_t = np.sin(theta)
            cot_t = np.cos(theta) / sin_t
            lowering = np.exp(-1j * phi)
        root2 = math.sqrt(2.0)

        for l in range(self.degree + 1):
            complex_y = [sph_harm_y(l, m, theta, phi) for m in range(l + 1)]
            for m in range(l + 1):
                y = complex_y[m]
                columns = [(self.index(l, m), np.real)]
                factor = 1.0
                if m > 0:
                    columns = [(self.index(l, m), np.real), (self.index(l, -m), np.imag)]
                    factor = root2
                if derivatives:
                    ladder = math.sqrt((l - m) * (l + m + 1))
                    dy_t = m * cot_t * y
                    if m < l:
                        dy_t = dy_t + ladder * lowering * complex_y[m + 1]
                    dy_p = 1j * m * y
                    dy_tt = -cot_t * dy_t + (m * m / sin_t**2 - l * (l + 1)) * y
                    dy_tp = 1j * m * dy_t
                    dy_pp = -(m * m) * y
                for column, part in columns:
                    values[:, column] = factor * part(y)
                    if derivatives:
                        d_theta[:, column] = factor * part(dy_t)
                        d_phi[:, column] = factor * part(dy_p)
                        d_tt[:, column] = factor * part(dy_tt)
                        d_tp[:, column] = factor * part(dy_tp)
                        d_pp[:, column] = factor * part(dy_pp)

        if not derivatives:
            return HarmonicTable(values, theta=theta, phi=phi)
        return HarmonicTable(values, d_theta, d_phi, d_tt, d_tp, d_pp, theta=theta, phi=phi)

    # ------------------------------------------------------------------
    # projections
    # ------------------------------------------------------------------

    def project(self, values_at_nodes: np.ndarray, grid: QuadratureGrid) -> np.ndarray:
        """L2 projection of nodal values onto the basis (exact for band-limited data)."""
        table = self.on_grid(grid, derivatives=False)
        return table.values.T @ (grid.weights * np.asarray(values_at_nodes, dtype=float))


@lru_cache(maxsize=32)
def harmonic_basis(dim: int, degree: int) -> HarmonicBasis:
    """Shared basis instance per (dim, degree)."""
    return HarmonicBasis(dim, degree)


def basis_size(dim: int, degree: int) -> int:
    return 2 * degree + 1 if dim == 2 else (degree + 1) ** 2
