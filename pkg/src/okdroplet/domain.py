"""Ambient domains (flat torus, ball), sphere quadrature and geometric helpers."""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

from .errors import ConfigurationError
from .validators import require_dimension, require_positive

logger = logging.getLogger(__name__)


def unit_ball_volume(dim: int) -> float:
    """omega_n, the volume of the unit ball in R^n."""
    return math.pi ** (dim / 2.0) / math.gamma(dim / 2.0 + 1.0)


def unit_sphere_area(dim: int) -> float:
    """Surface measure of S^{n-1}, equal to n * omega_n."""
    return dim * unit_ball_volume(dim)


class DomainKind(str, Enum):
    """Supported ambient domains."""

    TORUS = "torus"
    BALL = "ball"


@dataclass(frozen=True)
class Domain:
    """Flat unit torus T^n = R^n / Z^n or the ball B_R centered at the origin."""

    kind: DomainKind
    dim: int
    radius: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", DomainKind(self.kind))
        object.__setattr__(self, "dim", require_dimension(self.dim))
        if self.kind is DomainKind.BALL:
            object.__setattr__(self, "radius", require_positive(self.radius, "radius"))
        else:
            object.__setattr__(self, "radius", 1.0)

    @classmethod
    def torus(cls, dim: int) -> "Domain":
        return cls(DomainKind.TORUS, dim)

    @classmethod
    def ball(cls, dim: int, radius: float = 1.0) -> "Domain":
        return cls(DomainKind.BALL, dim, radius)

    @property
    def is_torus(self) -> bool:
        return self.kind is DomainKind.TORUS

    @property
    def volume(self) -> float:
        """|Omega|: 1 for the torus, omega_n R^n for the ball."""
        if self.is_torus:
            return 1.0
        return unit_ball_volume(self.dim) * self.radius**self.dim

    def distance_to_boundary(self, x) -> float:
        """dist(x, boundary); infinite on the torus."""
        if self.is_torus:
            return math.inf
        return self.radius - float(np.linalg.norm(np.asarray(x, dtype=float)))

    def wrap(self, x) -> np.ndarray:
        """Representative of x in [-1/2, 1/2)^n (torus); identity for the ball."""
        x = np.asarray(x, dtype=float)
        if not self.is_torus:
            return x
        return x - np.floor(x + 0.5)

    def describe(self) -> dict:
        return {"kind": self.kind.value, "dim": self.dim, "radius": self.radius}


def inner_region_test(domain: Domain, x, r: float) -> bool:
    """True iff dist(x, boundary) > r; always true on the torus."""
    if domain.is_torus:
        return True
    return domain.distance_to_boundary(x) > r


# ============================================================================
# SPHERE QUADRATURE
# ============================================================================


@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    """Product quadrature on S^{n-1}.

    n=2: N = 2*order + 2 equispaced angles. n=3: order+1 Gauss-Legendre nodes in
    cos(theta) times 2*order+2 equispaced azimuths. Both integrate harmonics of
    degree <= 2*order exactly.
    """

    dim: int
    order: int
    theta: np.ndarray
    weights: np.ndarray
    phi: Optional[np.ndarray] = None
    nodes: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.dim == 2:
            nodes = np.column_stack([np.cos(self.theta), np.sin(self.theta)])
        else:
            sin_t = np.sin(self.theta)
            nodes = np.column_stack(
                [sin_t * np.cos(self.phi), sin_t * np.sin(self.phi), np.cos(self.theta)]
            )
        for array in (self.theta, self.weights, self.phi, nodes):
            if array is not None:
                array.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

    @property
    def size(self) -> int:
        return len(self.weights)

    def frame(self) -> Tuple[np.ndarray, ...]:
        """Orthonormal tangent frame at the nodes: (tau,) for n=2, (e_theta, e_phi) for n=3."""
        if self.dim == 2:
            return (np.column_stack([-np.sin(self.theta), np.cos(self.theta)]),)
        cos_t, sin_t = np.cos(self.theta), np.sin(self.theta)
        cos_p, sin_p = np.cos(self.phi), np.sin(self.phi)
        e_theta = np.column_stack([cos_t * cos_p, cos_t * sin_p, -sin_t])
        e_phi = np.column_stack([-sin_p, cos_p, np.zeros_like(cos_p)])
        return e_theta, e_phi

    def integrate(self, values: np.ndarray) -> float:
        return float(self.weights @ values)


@lru_cache(maxsize=64)
def sphere_quadrature(dim: int, order: int) -> QuadratureGrid:
    """Build the product quadrature of the given order on S^{dim-1}."""
    dim = require_dimension(dim)
    if int(order) < 4:
        raise ConfigurationError(
            f"Quadrature order must be >= 4, got {order}", details={"order": 4}
        )
    order = int(order)
    if dim == 2:
        count = 2 * order + 2
        theta = 2.0 * np.pi * np.arange(count) / count
        weights = np.full(count, 2.0 * np.pi / count)
        return QuadratureGrid(dim, order, theta, weights)

    x, w = roots_legendre(order + 1)
    n_phi = 2 * order + 2
    polar = np.arccos(x)
    azimuth = 2.0 * np.pi * np.arange(n_phi) / n_phi
    theta = np.repeat(polar, n_phi)
    phi = np.tile(azimuth, order + 1)
    weights = np.repeat(w, n_phi) * (2.0 * np.pi / n_phi)
    return QuadratureGrid(dim, order, theta, weights, phi)


@lru_cache(maxsize=64)
def radial_quadrature(count: int, dim: int) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss nodes on [0, 1] for the weight s^(dim-1); weights sum to 1/dim."""
    x, w = roots_jacobi(int(count), 0.0, float(dim - 1))
    nodes = 0.5 * (1.0 + x)
    weights = w / 2.0**dim
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def directions_to_angles(directions: np.ndarray) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """Polar angle(s) of unit vectors: theta for n=2; (theta, phi) for n=3."""
    directions = np.atleast_2d(np.asarray(directions, dtype=float))
    if directions.shape[1] == 2:
        return np.arctan2(directions[:, 1], directions[:, 0]), None
    norms = np.linalg.norm(directions, axis=1)
    theta = np.arccos(np.clip(directions[:, 2] / norms, -1.0, 1.0))
    phi = np.arctan2(directions[:, 1], directions[:, 0])
    return theta, phi
