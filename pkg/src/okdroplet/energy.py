"""F = Per + gamma NL, the volume-penalized functional and closed-form ball energies."""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .coulomb import DirectNonlocal, gamma_self_energy
from .domain import Domain, sphere_quadrature, unit_ball_volume
from .errors import ConfigurationError
from .field import check_contained, nl_energy, radial_convolution
from .greens import GreenEvaluator
from .models import EnergyBreakdown, NonlocalMethod
from .shape import (
    DropletShape,
    perimeter,
    perimeter_gradient,
    shape_symmetric_difference,
    surface_geometry,
    volume,
    volume_gradient,
)

logger = logging.getLogger(__name__)

__all__ = [
    "ModelParams",
    "DropletFunctional",
    "total_energy",
    "penalized_energy",
    "ball_energy",
    "ball_energy_expansion",
    "printed_ball_energy_expansion",
    "gamma_self_energy",
    "multiplier_bound",
    "nl_lipschitz_gap",
    "nl_difference_identity",
]


# ============================================================================
# PARAMETERS
# ============================================================================


@dataclass(frozen=True)
class ModelParams:
    """gamma, the mass m (with r_m, omega_n r_m^n = m |Omega|), penalty Lambda and delta_0."""

    dim: int
    domain_volume: float
    gamma: float
    mass: float
    penalty: float
    smallness: float = 0.1

    def __post_init__(self):
        if not 0.0 < self.mass < 1.0:
            raise ConfigurationError(f"mass must lie in (0, 1), got {self.mass}")
        if self.gamma < 0 or self.penalty < 0:
            raise ConfigurationError("gamma and penalty must be nonnegative")

    @classmethod
    def from_radius(
        cls,
        domain: Domain,
        gamma: float,
        r: float,
        penalty: Optional[float] = None,
        smallness: float = 0.1,
    ) -> "ModelParams":
        mass = unit_ball_volume(domain.dim) * r**domain.dim / domain.volume
        if not 0.0 < mass < 1.0:
            raise ConfigurationError(f"Droplet radius {r} gives mass {mass:.4f} outside (0, 1)")
        if penalty is None:
            penalty = 10.0 * multiplier_bound(domain.dim, gamma, r)
        return cls(domain.dim, domain.volume, float(gamma), mass, float(penalty), smallness)

    @classmethod
    def from_mass(
        cls,
        domain: Domain,
        gamma: float,
        mass: float,
        penalty: Optional[float] = None,
        smallness: float = 0.1,
    ) -> "ModelParams":
        if not 0.0 < mass < 1.0:
            raise ConfigurationError(f"mass must lie in (0, 1), got {mass}")
        r = (mass * domain.volume / unit_ball_volume(domain.dim)) ** (1.0 / domain.dim)
        return cls.from_radius(domain, gamma, r, penalty, smallness)

    @classmethod
    def from_config(cls, domain: Domain, config) -> "ModelParams":
        if config.r is not None:
            return cls.from_radius(domain, config.gamma, config.r, config.penalty, config.smallness)
        return cls.from_mass(domain, config.gamma, config.mass, config.penalty, config.smallness)

    @property
    def radius(self) -> float:
        """r_m, the canonical size parameter."""
        return (self.mass * self.domain_volume / unit_ball_volume(self.dim)) ** (1.0 / self.dim)

    @property
    def target_volume(self) -> float:
        return self.mass * self.domain_volume

    @property
    def regime_parameter(self) -> float:
        r = self.radius
        if self.dim == 2:
            return self.gamma * r**3 * abs(math.log(r))
        return self.gamma * r**3

    @property
    def in_regime(self) -> bool:
        return self.regime_parameter < self.smallness

    def with_gamma(self, gamma: float) -> "ModelParams":
        return ModelParams(
            self.dim, self.domain_volume, gamma, self.mass, self.penalty, self.smallness
        )

    def to_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "mass": self.mass,
            "r": self.radius,
            "penalty": self.penalty,
            "smallness": self.smallness,
            "regime_parameter": self.regime_parameter,
            "in_regime": self.in_regime,
        }


def multiplier_bound(dim: int, gamma: float, r: float) -> float:
    """Estimate of |lambda| <= (n-1)/r + 2 gamma sup|v| at the ball B_r."""
    sup_v = abs(radial_convolution(0.0, r, dim)) + unit_ball_volume(dim) * r**dim
    return (dim - 1) / r + 2.0 * gamma * sup_v


# ============================================================================
# FUNCTIONAL
# ============================================================================


class DropletFunctional:
    """Discrete F on star-shaped droplets with its exact gradient (direct method)."""

    def __init__(
        self,
        domain: Domain,
        params: ModelParams,
        resolution,
        evaluator: Optional[GreenEvaluator] = None,
        method: NonlocalMethod = NonlocalMethod.DIRECT,
    ):
        self.domain = domain
        self.params = params
        self.resolution = resolution
        self.method = NonlocalMethod(method)
        self.evaluator = evaluator or GreenEvaluator.from_resolution(domain, resolution)
        self.nonlocal_ = DirectNonlocal(self.evaluator, resolution)
        self.grid = sphere_quadrature(domain.dim, resolution.boundary_order)

    def nonlocal_value(self, shape: DropletShape) -> float:
        if self.method is NonlocalMethod.DIRICHLET:
            return nl_energy(self.domain, shape, self.resolution)
        return self.nonlocal_.value(shape).value

    def breakdown(self, shape: DropletShape, include_penalty: bool = False) -> EnergyBreakdown:
        check_contained(self.domain, shape)
        per = perimeter(shape, self.grid)
        nl = self.nonlocal_value(shape)
        vol = volume(shape, self.grid)
        penalty = 0.0
        if include_penalty:
            penalty = self.params.penalty * abs(vol - self.params.target_volume)
        return EnergyBreakdown(
            perimeter=per,
            nonlocal_=nl,
            gamma=self.params.gamma,
            total=per + self.params.gamma * nl,
            penalty_term=penalty,
            volume=vol,
            regime_small=self.params.in_regime,
            regime_parameter=self.params.regime_parameter,
        )

    def value(self, shape: DropletShape) -> float:
        per = perimeter(shape, self.grid)
        if self.params.gamma == 0:
            return per
        return per + self.params.gamma * self.nonlocal_value(shape)

    def value_and_gradient(self, shape: DropletShape) -> Tuple[float, np.ndarray, np.ndarray]:
        """F, dF/dcoeffs and dF/dcenter of the discrete functional."""
        geometry = surface_geometry(shape, self.grid)
        per = float(np.sum(geometry.area_weights()))
        grad = perimeter_gradient(geometry)
        center_grad = np.zeros(self.domain.dim)
        if self.params.gamma == 0:
            return per, grad, center_grad
        nl = self.nonlocal_.value_and_gradient(shape)
        gamma = self.params.gamma
        return per + gamma * nl.value, grad + gamma * nl.coeff_gradient, gamma * nl.center_gradient

    def volume_and_gradient(self, shape: DropletShape) -> Tuple[float, np.ndarray]:
        return volume(shape, self.grid), volume_gradient(shape, self.grid)

    def potential(self, shape: DropletShape, points: np.ndarray) -> np.ndarray:
        return self.nonlocal_.potential(shape, points)


def total_energy(
    domain: Domain,
    params: ModelParams,
    shape: DropletShape,
    resolution,
    method: NonlocalMethod = NonlocalMethod.DIRECT,
    include_penalty: bool = False,
    functional: Optional[DropletFunctional] = None,
) -> EnergyBreakdown:
    functional = functional or DropletFunctional(domain, params, resolution, method=method)
    return functional.breakdown(shape, include_penalty=include_penalty)


def penalized_energy(
    domain: Domain,
    params: ModelParams,
    shape: DropletShape,
    resolution,
    functional: Optional[DropletFunctional] = None,
) -> float:
    """F + Lambda | |E| - m |Omega| |; Lambda must be positive."""
    if params.penalty <= 0:
        raise ConfigurationError(
            f"The penalized functional needs Lambda > 0, got {params.penalty}",
            "Set params.penalty to a positive value or leave it unset for the default.",
        )
    breakdown = total_energy(
        domain, params, shape, resolution, include_penalty=True, functional=functional
    )
    return breakdown.penalized


# ============================================================================
# BALL ENERGIES
# ============================================================================


def ball_energy(dim: int, r: float, gamma: float, g_r: float) -> float:
    """F(B_r) = n omega_n r^{n-1} + gamma(-(double integral of Gamma) + (omega_n r^n)^2 g_r)."""
    omega = unit_ball_volume(dim)
    interaction = -gamma_self_energy(r, dim) + (omega * r**dim) ** 2 * g_r
    return dim * omega * r ** (dim - 1) + gamma * interaction


def ball_energy_expansion(
    domain: Domain,
    params: ModelParams,
    p,
    evaluator: Optional[GreenEvaluator] = None,
    resolution=None,
) -> float:
    """Energy of B_{r_m}(p) from the closed-form Gamma part and the numerically computed g_r."""
    evaluator = evaluator or (
        GreenEvaluator.from_resolution(domain, resolution) if resolution else GreenEvaluator(domain)
    )
    r = params.radius
    g_r = evaluator.g_r(np.asarray(p, dtype=float), r)
    return ball_energy(domain.dim, r, params.gamma, g_r)


def printed_ball_energy_expansion(dim: int, r: float, gamma: float, g_r: float) -> float:
    """The same expansion with the printed Gamma-part constants, kept for comparison reports."""
    omega = unit_ball_volume(dim)
    if dim == 2:
        return 2.0 * math.pi * r + gamma * (
            0.5 * math.pi * r**4 * math.log(r) + (math.pi**2 * g_r - 3.0 * math.pi / 8.0) * r**4
        )
    return dim * omega * r ** (dim - 1) + gamma * (
        2.0 * omega * r ** (dim + 2) / (4 - dim**2) + omega**2 * r ** (2 * dim) * g_r
    )


# ============================================================================
# LIPSCHITZ DIAGNOSTICS
# ============================================================================


def nl_lipschitz_gap(
    domain: Domain,
    params: ModelParams,
    first: DropletShape,
    second: DropletShape,
    resolution,
    functional: Optional[DropletFunctional] = None,
) -> Tuple[float, float]:
    """(NL(B) - NL(A), (sup|Gamma * chi_B| + |B|) |A sdiff B|).

    The sup is bounded by its value for the equal-volume ball.
    """
    functional = functional or DropletFunctional(domain, params, resolution)
    vol_a = volume(first, functional.grid)
    vol_b = volume(second, functional.grid)
    if abs(vol_a - vol_b) > 1e-6 * max(vol_a, vol_b):
        raise ConfigurationError(
            f"Shapes must have equal volume, got {vol_a:.8f} and {vol_b:.8f}",
            "Rescale one shape before comparing.",
        )
    n = domain.dim
    equal_radius = (vol_b / unit_ball_volume(n)) ** (1.0 / n)
    sup_bound = abs(radial_convolution(0.0, equal_radius, n))
    sdiff = shape_symmetric_difference(first, second)
    if sdiff == 0.0:
        return 0.0, 0.0
    lhs = functional.nonlocal_value(second) - functional.nonlocal_value(first)
    return lhs, (sup_bound + vol_b) * sdiff


def nl_difference_identity(
    domain: Domain,
    params: ModelParams,
    first: DropletShape,
    second: DropletShape,
    resolution,
    functional: Optional[DropletFunctional] = None,
) -> Tuple[float, float]:
    """(NL(B) - NL(A), integral of (chi_B - chi_A)(v_A + v_B))."""
    functional = functional or DropletFunctional(domain, params, resolution)
    direct = functional.nonlocal_
    lhs = direct.value(second).value - direct.value(first).value
    rhs = 0.0
    for sign, shape in ((1.0, second), (-1.0, first)):
        nodes = direct.volume_nodes(shape)
        total = direct.potential(first, nodes.points) + direct.potential(second, nodes.points)
        rhs += sign * float(nodes.weights @ total)
    return lhs, rhs
