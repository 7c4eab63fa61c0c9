"""Euler-Lagrange residual and volume-constrained minimization of F over star-shaped droplets.

The descent variables are the harmonic coefficients of phi (degree-1 modes
held fixed, they duplicate translations) and the center p. Each step is a
preconditioned gradient step projected onto volume-preserving directions,
followed by a backtracking line search on F + Lambda | |E| - m|Omega| |.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from .domain import Domain, unit_ball_volume
from .energy import DropletFunctional, ModelParams
from .errors import (
    ConfigurationError,
    ContainmentError,
    InvalidShapeError,
    LineSearchError,
    ResolutionError,
)
from .field import potential_field
from .models import EnergyBreakdown, ELReport, NonlocalMethod
from .shape import DropletShape, barycenter, is_convex, random_near_ball, surface_geometry

logger = logging.getLogger(__name__)

# Trial steps that leave the admissible set are rejected, not fatal.
_REJECTED_STEP_ERRORS = (InvalidShapeError, ContainmentError, ResolutionError)

# EL residual below which a shape counts as critical.
CRITICAL_RESIDUAL = 1e-5


# ============================================================================
# EULER-LAGRANGE RESIDUAL
# ============================================================================


def surface_potential(
    functional: DropletFunctional, shape: DropletShape, points: np.ndarray
) -> np.ndarray:
    if functional.method is NonlocalMethod.DIRICHLET:
        return potential_field(functional.domain, shape, functional.resolution).evaluate(points)
    return functional.potential(shape, points)


def el_residual(
    domain: Domain,
    params: ModelParams,
    shape: DropletShape,
    resolution,
    functional: Optional[DropletFunctional] = None,
) -> ELReport:
    """Multiplier and residual of H + 2 gamma v - lambda on the boundary.

    lambda is the area mean of H + 2 gamma v.
    """
    functional = functional or DropletFunctional(domain, params, resolution)
    geometry = surface_geometry(shape, functional.grid)
    curvature = geometry.mean_curvature()
    if params.gamma > 0:
        potential = surface_potential(functional, shape, geometry.points())
    else:
        potential = np.zeros_like(curvature)
    weights = geometry.area_weights()
    total = curvature + 2.0 * params.gamma * potential
    multiplier = float(weights @ total / np.sum(weights))
    residual = total - multiplier
    return ELReport(
        multiplier=multiplier,
        residual_linf=float(np.max(np.abs(residual))),
        residual_l2=float(np.sqrt(weights @ residual**2 / np.sum(weights))),
    )


def multiplier_bound_check(
    domain: Domain,
    params: ModelParams,
    shape: DropletShape,
    resolution,
    functional: Optional[DropletFunctional] = None,
    tolerance: float = CRITICAL_RESIDUAL,
) -> Tuple[float, float]:
    """(lambda, Lambda); logs a warning when |lambda| exceeds the penalty constant."""
    report = el_residual(domain, params, shape, resolution, functional)
    if report.residual_linf >= 10.0 * tolerance:
        logger.warning(
            "Multiplier read off a non-critical shape (residual %.2e)", report.residual_linf
        )
    if abs(report.multiplier) > params.penalty:
        logger.warning(
            "Multiplier %.6g exceeds the volume penalty %.6g", report.multiplier, params.penalty
        )
    return report.multiplier, params.penalty


# ============================================================================
# OPTIONS AND RESULT
# ============================================================================


@dataclass(frozen=True)
class MinimizeOptions:
    """Descent settings.

    A run is settled when it converged, or when it stopped at the discretization
    floor with a residual below stall_factor * tolerance.
    """

    tolerance: float = CRITICAL_RESIDUAL
    max_iterations: int = 400
    rescale_every: int = 10
    armijo: float = 1e-4
    backtrack: float = 0.5
    min_step: float = 1e-12
    volume_tolerance: float = 0.1
    stall_factor: float = 10.0

    @classmethod
    def from_config(cls, solver) -> "MinimizeOptions":
        return cls(
            tolerance=solver.tolerance,
            max_iterations=solver.max_iterations,
            rescale_every=solver.rescale_every,
            armijo=solver.armijo,
            backtrack=solver.backtrack,
            stall_factor=solver.stall_factor,
        )


@dataclass
class MinimizeResult:
    shape: DropletShape
    energy: EnergyBreakdown
    el: ELReport
    iterations: int
    converged: bool
    history: List[float] = field(default_factory=list)
    center_trace: List[List[float]] = field(default_factory=list)
    floor_limited: bool = False
    settled: bool = False
    convex: Optional[bool] = None
    local_only: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {
            "shape": self.shape.to_record(),
            "energy": self.energy.to_dict(),
            "el": self.el.to_dict(),
            "iterations": self.iterations,
            "converged": self.converged,
            "floor_limited": self.floor_limited,
            "settled": self.settled,
            "convex": self.convex,
            "local_only": self.local_only,
            "history": list(self.history),
            "center_trace": [list(c) for c in self.center_trace],
        }


# ============================================================================
# DESCENT
# ============================================================================


def shape_preconditioner(shape: DropletShape) -> np.ndarray:
    """Diagonal of the perimeter Hessian in the harmonic basis, floored at degree one."""
    n = shape.dim
    degrees = shape.basis.degrees.astype(float)
    stiffness = np.maximum(degrees * (degrees + n - 2) + (n - 1) * (n - 2), n - 1)
    return shape.base_radius ** (n - 3) * stiffness


def center_preconditioner(functional: DropletFunctional, shape: DropletShape) -> Optional[float]:
    """gamma (omega_n r^n)^2 times the mean Hessian eigenvalue of g_r.

    None when the center is fixed.
    """
    domain, params = functional.domain, functional.params
    if domain.is_torus or params.gamma == 0:
        return None
    r = shape.base_radius
    hessian = functional.evaluator.g_r_hessian(shape.center, r)
    curvature = float(np.trace(hessian)) / domain.dim
    if curvature <= 0:
        logger.warning("g_r is not convex at %s; center held fixed", shape.center.tolist())
        return None
    return params.gamma * (unit_ball_volume(domain.dim) * r**domain.dim) ** 2 * curvature


class _Descent:
    """State of one minimization run."""

    def __init__(self, functional: DropletFunctional, options: MinimizeOptions):
        self.functional = functional
        self.options = options
        self.params = functional.params
        self.target = self.params.target_volume

    def penalized(self, shape: DropletShape) -> float:
        volume, _ = self.functional.volume_and_gradient(shape)
        return self.functional.value(shape) + self.params.penalty * abs(volume - self.target)

    def direction(self, shape: DropletShape, free: np.ndarray, metric: np.ndarray, center_metric):
        energy, grad, center_grad = self.functional.value_and_gradient(shape)
        volume, vol_grad = self.functional.volume_and_gradient(shape)
        g = np.where(free, grad, 0.0)
        dv = np.where(free, vol_grad, 0.0)
        mu = float(dv @ (g / metric)) / float(dv @ (dv / metric))
        step = -(g - mu * dv) / metric
        if center_metric is None:
            center_step = np.zeros_like(center_grad)
        else:
            center_step = -center_grad / center_metric
        slope = float(g @ step + center_grad @ center_step)
        value = energy + self.params.penalty * abs(volume - self.target)
        return value, step, center_step, slope, volume

    def trial(self, shape: DropletShape, step: np.ndarray, center_step: np.ndarray, t: float):
        candidate = DropletShape(
            shape.dim, shape.center + t * center_step, shape.base_radius, shape.coeffs + t * step
        )
        return candidate, self.penalized(candidate)

    def rescale(self, shape: DropletShape, value: float) -> Tuple[DropletShape, float]:
        volume, _ = self.functional.volume_and_gradient(shape)
        factor = (self.target / volume) ** (1.0 / shape.dim)
        try:
            dilated = shape.dilated(factor)
            new_value = self.penalized(dilated)
        except _REJECTED_STEP_ERRORS:
            return shape, value
        if new_value <= value:
            logger.debug("Volume rescale by %.3e accepted", factor - 1.0)
            return dilated, new_value
        return shape, value


def minimize(
    domain: Domain,
    params: ModelParams,
    initial: DropletShape,
    resolution,
    options: Optional[MinimizeOptions] = None,
    functional: Optional[DropletFunctional] = None,
) -> MinimizeResult:
    """Descend F + Lambda | |E| - m|Omega| | from initial; stop at EL residual < tolerance."""
    options = options or MinimizeOptions()
    functional = functional or DropletFunctional(domain, params, resolution)
    descent = _Descent(functional, options)

    volume, _ = functional.volume_and_gradient(initial)
    if abs(volume - params.target_volume) > options.volume_tolerance * params.target_volume:
        raise ConfigurationError(
            f"Initial volume {volume:.6g} is not within {options.volume_tolerance:.0%} of "
            f"the target {params.target_volume:.6g}",
            "Start from a shape with radius close to r_m.",
        )

    shape = initial
    free = shape.basis.degrees != 1
    metric = shape_preconditioner(shape)
    center_metric = center_preconditioner(functional, shape)
    value = descent.penalized(shape)
    history = [value]
    centers = [shape.center.tolist()]
    t = 1.0
    floor_limited = False
    converged = False
    report = None
    iteration = 0

    for iteration in range(1, options.max_iterations + 1):
        value, step, center_step, slope, _ = descent.direction(shape, free, metric, center_metric)
        if slope >= -1e-15 * max(abs(value), 1.0):
            floor_limited = True
            break

        t = min(1.0, 2.0 * t)
        accepted = False
        while t >= options.min_step:
            try:
                candidate, new_value = descent.trial(shape, step, center_step, t)
            except _REJECTED_STEP_ERRORS:
                t *= options.backtrack
                continue
            if new_value <= value + options.armijo * t * slope:
                accepted = True
                break
            t *= options.backtrack

        if not accepted:
            # No decrease above round-off: the discretization floor.
            if abs(slope) * options.min_step < 1e-13 * max(abs(value), 1.0):
                floor_limited = True
                break
            raise LineSearchError(
                f"No acceptable step at iteration {iteration} (slope {slope:.3e})",
                last_shape=shape,
                iteration=iteration,
            )

        shape, value = candidate, new_value
        if iteration % options.rescale_every == 0:
            shape, value = descent.rescale(shape, value)
            report = el_residual(domain, params, shape, resolution, functional)
            logger.debug(
                "iteration %d: F+penalty %.12g, EL residual %.3e",
                iteration,
                value,
                report.residual_linf,
            )
            if report.residual_linf < options.tolerance:
                converged = True
        history.append(value)
        centers.append(shape.center.tolist())
        if converged:
            break

    shape, value = descent.rescale(shape, value)
    if history[-1] != value:
        history.append(value)
        centers.append(shape.center.tolist())
    if domain.is_torus:
        offset = barycenter(shape, functional.grid)
        shape = shape.with_center(domain.wrap(shape.center - offset))

    report = el_residual(domain, params, shape, resolution, functional)
    converged = report.residual_linf < options.tolerance
    floor_limited = floor_limited and not converged
    settled = converged or (
        floor_limited and report.residual_linf < options.stall_factor * options.tolerance
    )
    energy = functional.breakdown(shape, include_penalty=True)
    try:
        convex = is_convex(shape, functional.grid)
    except InvalidShapeError:
        convex = False
    logger.info(
        "Minimization finished after %d iterations: F = %.12g, EL residual %.3e%s",
        iteration,
        energy.total,
        report.residual_linf,
        " (discretization floor)" if floor_limited else "",
    )
    return MinimizeResult(
        shape=shape,
        energy=energy,
        el=report,
        iterations=iteration,
        converged=converged,
        history=history,
        center_trace=centers,
        floor_limited=floor_limited,
        settled=settled,
        convex=convex,
        local_only=not params.in_regime,
    )


def solve(
    domain: Domain,
    params: ModelParams,
    resolution,
    options: Optional[MinimizeOptions] = None,
    seed: int = 0,
    amplitude: float = 0.02,
    center=None,
    functional: Optional[DropletFunctional] = None,
) -> MinimizeResult:
    """Minimize from a seeded random perturbation of B_{r_m}(center)."""
    rng = np.random.default_rng(seed)
    initial = random_near_ball(
        domain.dim, params.radius, resolution.shape_degree, amplitude, rng, center=center
    )
    return minimize(domain, params, initial, resolution, options, functional)
