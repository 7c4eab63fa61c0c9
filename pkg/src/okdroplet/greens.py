"""Fundamental solution, Neumann/periodic Green functions, Robin function and g_r.

Conventions: Gamma(t) = log(t)/(2 pi) for n=2 and t^{2-n}/(n(2-n) omega_n) for
n>=3, so -Delta(-Gamma) = delta. G = R - Gamma solves -Delta G(x, .) = delta_x - 1/|Omega|
with zero normal derivative (ball) or periodicity (torus) and zero mean.
"""

import itertools
import logging
import math
import threading
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import legendre
from scipy.optimize import minimize as scipy_minimize
from scipy.special import erf, erfc, eval_legendre, exp1

from .domain import (
    Domain,
    QuadratureGrid,
    radial_quadrature,
    sphere_quadrature,
    unit_ball_volume,
)
from .errors import (
    ConfigurationError,
    ContainmentError,
    ConvergenceError,
    DomainValueError,
    ProjectionError,
    ResolutionError,
    SingularityError,
)

logger = logging.getLogger(__name__)

DEFAULT_BALL_DEGREE = {2: 48, 3: 24}
DEFAULT_FIT_DEGREE = {2: 20, 3: 16}
DEFAULT_FIT_RADIUS = 0.3
SERIES_TOLERANCE = 1e-10
_FIT_CHUNK = 16384


# ============================================================================
# FUNDAMENTAL SOLUTION
# ============================================================================


def gamma(t, dim: int):
    """Fundamental solution Gamma(t); scalar in, scalar out."""
    t_array = np.asarray(t, dtype=float)
    if np.any(t_array <= 0):
        raise DomainValueError(f"Gamma is defined for t > 0, got {t}", "Pass a positive distance.")
    if dim == 2:
        value = np.log(t_array) / (2.0 * math.pi)
    else:
        value = t_array ** (2 - dim) / (dim * (2 - dim) * unit_ball_volume(dim))
    return float(value) if value.ndim == 0 else value


def gamma_unchecked(t: np.ndarray, dim: int) -> np.ndarray:
    if dim == 2:
        return np.log(t) / (2.0 * math.pi)
    return t ** (2 - dim) / (dim * (2 - dim) * unit_ball_volume(dim))


def biharmonic_kernel(t: np.ndarray, dim: int) -> np.ndarray:
    """Phi with Delta Phi(|x|) = Gamma(|x|); Phi(0) = 0."""
    t = np.asarray(t, dtype=float)
    if dim == 2:
        safe = np.where(t > 0, t, 1.0)
        return np.where(t > 0, safe**2 * (np.log(safe) - 1.0) / (8.0 * math.pi), 0.0)
    return -t / (8.0 * math.pi)


def biharmonic_slope(t: np.ndarray, dim: int) -> np.ndarray:
    """Phi'(t)/t, set to zero at t = 0."""
    t = np.asarray(t, dtype=float)
    safe = np.where(t > 0, t, 1.0)
    if dim == 2:
        value = (2.0 * np.log(safe) - 1.0) / (8.0 * math.pi)
    else:
        value = -1.0 / (8.0 * math.pi * safe)
    return np.where(t > 0, value, 0.0)


def robin_hessian_at_center(dim: int, radius: float) -> float:
    """Eigenvalue of D^2 h(0) for the ball B_R (a multiple of the identity)."""
    if dim == 2:
        return 2.0 / (math.pi * radius**2)
    return 3.0 / (2.0 * math.pi * radius**3)


# ============================================================================
# TORUS: EWALD SUMMATION
# ============================================================================


class EwaldSum:
    """Ewald split of the unit-torus Green function.

    G(x) = sum_L K_tau(|x + L|) - tau
           + sum_{k != 0} cos(2 pi k.x) exp(-4 pi^2 |k|^2 tau)/(4 pi^2 |k|^2)
    with K_tau(rho) = erfc(rho / (2 sqrt(tau)))/(4 pi rho) for n=3 and
    E_1(rho^2/(4 tau))/(4 pi) for n=2. The result does not depend on tau.
    """

    def __init__(self, dim: int, tau: Optional[float] = None, cutoff: Optional[int] = None):
        self.dim = dim
        self.tau = float(tau) if tau is not None else 1.0 / (4.0 * math.pi)
        if self.tau <= 0:
            raise ConfigurationError(f"Ewald splitting parameter must be positive, got {tau}")
        real_cutoff = int(math.ceil(math.sqrt(4.0 * self.tau * 36.0))) + 1
        recip_cutoff = int(math.ceil(math.sqrt(37.0 / (4.0 * math.pi**2 * self.tau)))) + 1
        if cutoff is not None:
            real_cutoff = recip_cutoff = int(cutoff)
        self.real_cutoff = real_cutoff
        self.recip_cutoff = recip_cutoff
        span = range(-real_cutoff, real_cutoff + 1)
        self._images = np.array(list(itertools.product(span, repeat=dim)), dtype=float)
        span = range(-recip_cutoff, recip_cutoff + 1)
        waves = np.array(list(itertools.product(span, repeat=dim)), dtype=float)
        waves = waves[np.any(waves != 0, axis=1)]
        squared = np.sum(waves**2, axis=1)
        self._waves = waves
        self._wave_weights = np.exp(-4.0 * math.pi**2 * squared * self.tau) / (
            4.0 * math.pi**2 * squared
        )

    def _kernel(self, rho: np.ndarray) -> np.ndarray:
        if self.dim == 2:
            return exp1(rho**2 / (4.0 * self.tau)) / (4.0 * math.pi)
        return erfc(rho / (2.0 * math.sqrt(self.tau))) / (4.0 * math.pi * rho)

    def _reciprocal(self, z: np.ndarray) -> np.ndarray:
        total = np.zeros(len(z))
        for start in range(0, len(z), 2048):
            phase = 2.0 * math.pi * z[start : start + 2048] @ self._waves.T
            total[start : start + 2048] = np.cos(phase) @ self._wave_weights
        return total

    def _real_space(self, z: np.ndarray, skip_origin: bool) -> np.ndarray:
        total = np.zeros(len(z))
        for image in self._images:
            is_origin = not np.any(image)
            rho = np.linalg.norm(z + image, axis=1)
            if is_origin and skip_origin:
                continue
            total += self._kernel(rho)
        return total

    def green(self, z: np.ndarray) -> np.ndarray:
        """G at separations z (rows), wrapped to the fundamental cell."""
        z = np.atleast_2d(np.asarray(z, dtype=float))
        z = z - np.floor(z + 0.5)
        if np.any(np.linalg.norm(z, axis=1) < 1e-14):
            raise SingularityError("Torus Green function evaluated at coincident points")
        return self._real_space(z, skip_origin=False) - self.tau + self._reciprocal(z)

    def regular(self, z: np.ndarray) -> np.ndarray:
        """R_T(z) = G(z) + Gamma(|z|) for |z| well inside the fundamental cell."""
        z = np.atleast_2d(np.asarray(z, dtype=float))
        rho = np.linalg.norm(z, axis=1)
        return (
            self._real_space(z, skip_origin=True)
            + self._origin_regular(rho)
            - self.tau
            + self._reciprocal(z)
        )

    def _origin_regular(self, rho: np.ndarray) -> np.ndarray:
        """K_tau(rho) + Gamma(rho), continuous at rho = 0."""
        if self.dim == 3:
            scale = 2.0 * math.sqrt(self.tau)
            safe = np.where(rho > 0, rho, 1.0)
            value = -erf(safe / scale) / (4.0 * math.pi * safe)
            limit = -1.0 / (4.0 * math.pi**1.5 * math.sqrt(self.tau))
            return np.where(rho > 1e-8, value, limit)
        argument = rho**2 / (4.0 * self.tau)
        safe = np.where(argument > 1e-8, argument, 1.0)
        combined = np.where(
            argument > 1e-8, exp1(safe) + np.log(safe), -np.euler_gamma + argument
        )
        return (combined + math.log(4.0 * self.tau)) / (4.0 * math.pi)

    def robin_constant(self) -> float:
        """h_T = R_T(0)."""
        return float(self.regular(np.zeros((1, self.dim)))[0])


class TorusRegularPart:
    """Legendre fit of R_T on the cube |z_i| <= fit_radius in the variables u_i = 2 (z_i/rho)^2 - 1.

    R_T is even in each coordinate and analytic for |z| < 1, so a tensor
    Legendre polynomial in the squared coordinates converges geometrically.
    """

    def __init__(self, ewald: EwaldSum, degree: int, fit_radius: float = DEFAULT_FIT_RADIUS):
        if not 0 < fit_radius <= 0.45:
            raise ConfigurationError(f"fit_radius must lie in (0, 0.45], got {fit_radius}")
        self.dim = ewald.dim
        self.fit_radius = float(fit_radius)
        self.half_degree = max(2, int(degree) // 2)
        samples_per_axis = self.half_degree + 4
        u_nodes = np.cos(math.pi * (np.arange(samples_per_axis) + 0.5) / samples_per_axis)
        x_nodes = self.fit_radius * np.sqrt((u_nodes + 1.0) / 2.0)
        mesh = np.meshgrid(*([x_nodes] * self.dim), indexing="ij")
        points = np.column_stack([m.ravel() for m in mesh])
        values = ewald.regular(points)
        design = self._vander(points)
        coeffs, *_ = np.linalg.lstsq(design, values, rcond=None)
        shape = (self.half_degree + 1,) * self.dim
        self.coeffs = coeffs.reshape(shape)
        self.fit_error = float(np.max(np.abs(design @ coeffs - values)))
        self._grad_coeffs = [legendre.legder(self.coeffs, axis=i) for i in range(self.dim)]
        logger.debug(
            "Fitted torus regular part: dim=%d half_degree=%d max sample error %.2e",
            self.dim,
            self.half_degree,
            self.fit_error,
        )

    def _u(self, z: np.ndarray) -> List[np.ndarray]:
        return [2.0 * (z[..., i] / self.fit_radius) ** 2 - 1.0 for i in range(self.dim)]

    def _vander(self, points: np.ndarray) -> np.ndarray:
        u = self._u(points)
        degrees = [self.half_degree] * self.dim
        if self.dim == 2:
            return legendre.legvander2d(u[0], u[1], degrees)
        return legendre.legvander3d(u[0], u[1], u[2], degrees)

    def _val(self, u: Sequence[np.ndarray], coeffs: np.ndarray) -> np.ndarray:
        if self.dim == 2:
            return legendre.legval2d(u[0], u[1], coeffs)
        return legendre.legval3d(u[0], u[1], u[2], coeffs)

    def check_range(self, z: np.ndarray) -> None:
        if z.size and float(np.max(np.abs(z))) > self.fit_radius * (1.0 + 1e-12):
            raise ResolutionError(
                f"Separation {float(np.max(np.abs(z))):.3f} exceeds the torus fit radius "
                f"{self.fit_radius}",
                "Increase discretization.torus_fit_radius or use a smaller droplet.",
            )

    def value(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        self.check_range(z)
        flat = z.reshape(-1, self.dim)
        out = np.empty(len(flat))
        for start in range(0, len(flat), _FIT_CHUNK):
            chunk = flat[start : start + _FIT_CHUNK]
            out[start : start + _FIT_CHUNK] = self._val(self._u(chunk), self.coeffs)
        return out.reshape(z.shape[:-1])

    def gradient(self, z: np.ndarray) -> np.ndarray:
        """Gradient in z, stacked on a trailing axis."""
        z = np.asarray(z, dtype=float)
        self.check_range(z)
        flat = z.reshape(-1, self.dim)
        out = np.empty_like(flat)
        scale = 4.0 / self.fit_radius**2
        for start in range(0, len(flat), _FIT_CHUNK):
            chunk = flat[start : start + _FIT_CHUNK]
            u = self._u(chunk)
            for i in range(self.dim):
                out[start : start + _FIT_CHUNK, i] = (
                    self._val(u, self._grad_coeffs[i]) * scale * chunk[:, i]
                )
        return out.reshape(z.shape)


# ============================================================================
# BALL: NEUMANN REGULAR PART
# ============================================================================


@dataclass(frozen=True)
class BallNeumannGreen:
    """Regular part of the Neumann Green function of B_R, in resummed closed form.

    R(x, y) = (|x|^2 + |y|^2)/(2n|Omega|) + S(x, y) + C0 with S harmonic in each
    argument and S(x, 0) = 0; n=2: S = -log(D^2)/(4 pi); n=3:
    S = (1/D - 1 + log(2/(1 - a + D)))/(4 pi R), where a = x.y/R^2 and
    D^2 = 1 - 2a + |x|^2|y|^2/R^4.
    """

    dim: int
    radius: float

    @property
    def volume(self) -> float:
        return unit_ball_volume(self.dim) * self.radius**self.dim

    @property
    def constant(self) -> float:
        n, big_r = self.dim, self.radius
        if n == 2:
            k_n = 0.5 * big_r**2 * (math.log(big_r) - 0.5)
        else:
            k_n = big_r**2 / (2.0 * (2 - n))
        return (k_n - big_r**2 / (2.0 * (n + 2))) / self.volume

    def _invariants(self, x: np.ndarray, y: np.ndarray):
        r2 = self.radius**2
        a = np.einsum("...i,...i->...", x, y) / r2
        b = np.einsum("...i,...i->...", x, x) * np.einsum("...i,...i->...", y, y) / r2**2
        d2 = np.maximum(1.0 - 2.0 * a + b, 0.0)
        return a, b, d2

    def value(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Broadcasting evaluation over leading axes."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        a, _, d2 = self._invariants(x, y)
        n = self.dim
        quad = (np.sum(x * x, axis=-1) + np.sum(y * y, axis=-1)) / (2.0 * n * self.volume)
        if n == 2:
            harmonic = -np.log(d2) / (4.0 * math.pi)
        else:
            d = np.sqrt(d2)
            harmonic = (1.0 / d - 1.0 + np.log(2.0 / (1.0 - a + d))) / (4.0 * math.pi * self.radius)
        return quad + harmonic + self.constant

    def gradient_x(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Gradient with respect to the first argument, trailing axis = components."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        x, y = np.broadcast_arrays(x, y)
        a, _, d2 = self._invariants(x, y)
        r2 = self.radius**2
        grad_a = y / r2
        grad_b = 2.0 * x * np.sum(y * y, axis=-1)[..., None] / r2**2
        grad_d2 = -2.0 * grad_a + grad_b
        quad = x / (self.dim * self.volume)
        if self.dim == 2:
            return quad - grad_d2 / (4.0 * math.pi * d2[..., None])
        d = np.sqrt(d2)[..., None]
        grad_d = grad_d2 / (2.0 * d)
        denom = (1.0 - a)[..., None] + d
        harmonic = -grad_d / d**2 - (-grad_a + grad_d) / denom
        return quad + harmonic / (4.0 * math.pi * self.radius)

    def series(
        self, x: np.ndarray, y: np.ndarray, degree: int, tolerance: float = SERIES_TOLERANCE
    ):
        """Truncated harmonic series of R with a geometric tail bound.

        Raises ConvergenceError when the tail bound exceeds the tolerance.
        """
        x = np.atleast_2d(np.asarray(x, dtype=float))
        y = np.atleast_2d(np.asarray(y, dtype=float))
        nx, ny = np.linalg.norm(x, axis=1), np.linalg.norm(y, axis=1)
        t = nx * ny / self.radius**2
        with np.errstate(invalid="ignore", divide="ignore"):
            c = np.where(t > 0, np.sum(x * y, axis=1) / (nx * ny), 1.0)
        c = np.clip(c, -1.0, 1.0)
        n = self.dim
        harmonic = np.zeros(len(t))
        if n == 2:
            angle = np.arccos(c)
            for k in range(1, degree + 1):
                harmonic += t**k * np.cos(k * angle) / (2.0 * math.pi * k)
            tail = t ** (degree + 1) / (2.0 * math.pi * (degree + 1) * (1.0 - t))
        else:
            for l in range(1, degree + 1):
                harmonic += (l + 1) / l * t**l * eval_legendre(l, c)
            harmonic /= 4.0 * math.pi * self.radius
            tail = (degree + 2) / (degree + 1) * t ** (degree + 1) / (1.0 - t)
            tail /= 4.0 * math.pi * self.radius
        worst = float(np.max(tail)) if len(tail) else 0.0
        if worst > tolerance:
            raise ConvergenceError(
                "ball_regular_part_series",
                f"tail bound {worst:.2e} exceeds {tolerance:.1e} at degree {degree}",
                "Increase discretization.ball_degree or evaluate farther from the boundary.",
            )
        quad = (nx**2 + ny**2) / (2.0 * n * self.volume)
        return quad + harmonic + self.constant


def regular_part_ball(x, y, radius: float = 1.0, degree: Optional[int] = None) -> float:
    """R(x, y) on B_radius; truncated series with tail check when degree is given."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    model = BallNeumannGreen(len(x), radius)
    for point in (x, y):
        if np.linalg.norm(point) >= radius:
            raise ContainmentError(
                f"Point {point.tolist()} is not inside the ball of radius {radius}"
            )
    if degree is not None:
        return float(model.series(x, y, degree)[0])
    return float(model.value(x, y))


def green_torus(x, y, cutoff: Optional[int] = None, tau: Optional[float] = None) -> float:
    """Periodic Green function of the unit torus."""
    x = np.asarray(x, dtype=float)
    return float(EwaldSum(len(x), tau, cutoff).green(x - np.asarray(y, dtype=float))[0])


# ============================================================================
# EVALUATOR
# ============================================================================


@dataclass(frozen=True)
class HarmonicCenterReport:
    """Minimizers of the Robin function with their values and Hessian minimal eigenvalues."""

    centers: Tuple[Tuple[float, ...], ...]
    h_values: Tuple[float, ...]
    hessian_min_eig: Tuple[float, ...]

    def to_dict(self) -> dict:
        return {
            "centers": [list(c) for c in self.centers],
            "h_values": list(self.h_values),
            "hessian_min_eig": list(self.hessian_min_eig),
        }


class GreenEvaluator:
    """G, R, h, g_r and S_x for one domain; immutable after construction apart from a lazy fit."""

    def __init__(
        self,
        domain: Domain,
        torus_cutoff: Optional[int] = None,
        ball_degree: Optional[int] = None,
        tau: Optional[float] = None,
        fit_degree: Optional[int] = None,
        fit_radius: float = DEFAULT_FIT_RADIUS,
    ):
        self.domain = domain
        self.dim = domain.dim
        self.torus_cutoff = torus_cutoff
        self.ball_degree = int(ball_degree or DEFAULT_BALL_DEGREE[self.dim])
        self.fit_degree = int(fit_degree or DEFAULT_FIT_DEGREE[self.dim])
        self.fit_radius = float(fit_radius)
        self._lock = threading.Lock()
        self._torus_model: Optional[TorusRegularPart] = None
        if domain.is_torus:
            self.ewald = EwaldSum(self.dim, tau, torus_cutoff)
            self.ball = None
        else:
            self.ewald = None
            self.ball = BallNeumannGreen(self.dim, domain.radius)

    @classmethod
    def from_resolution(cls, domain: Domain, resolution) -> "GreenEvaluator":
        return cls(
            domain,
            torus_cutoff=getattr(resolution, "torus_cutoff", None),
            ball_degree=resolution.ball_degree,
            fit_degree=resolution.torus_fit_degree,
            fit_radius=resolution.torus_fit_radius,
        )

    @property
    def resolution_length(self) -> float:
        """Smallest boundary distance the evaluator resolves (ball only)."""
        return self.domain.radius / (8.0 * self.ball_degree)

    @property
    def torus_model(self) -> TorusRegularPart:
        with self._lock:
            if self._torus_model is None:
                self._torus_model = TorusRegularPart(self.ewald, self.fit_degree, self.fit_radius)
            return self._torus_model

    def gamma(self, t):
        return gamma(t, self.dim)

    def _check_inside(self, points: np.ndarray) -> None:
        if self.domain.is_torus:
            return
        norms = np.linalg.norm(np.atleast_2d(points), axis=1)
        if np.any(norms >= self.domain.radius):
            raise ContainmentError(
                f"Point at distance {float(np.max(norms)):.4f} lies outside the ball of radius "
                f"{self.domain.radius}"
            )

    # ------------------------------------------------------------------
    # pointwise kernels
    # ------------------------------------------------------------------

    def regular_part(self, x, y) -> float:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        self._check_inside(np.vstack([x, y]))
        if self.domain.is_torus:
            z = self.domain.wrap(x - y)
            if np.max(np.abs(z)) <= self.fit_radius:
                return float(self.torus_model.value(z[None, :])[0])
            return float(self.ewald.regular(z[None, :])[0])
        return float(self.ball.value(x, y))

    def regular_part_series(self, x, y, degree: Optional[int] = None) -> float:
        """Ball regular part from the truncated expansion (tail-checked)."""
        if self.domain.is_torus:
            raise ConfigurationError("The harmonic series is defined for the ball domain only")
        self._check_inside(np.vstack([x, y]))
        return float(self.ball.series(x, y, degree or self.ball_degree)[0])

    def green(self, x, y) -> float:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.domain.is_torus:
            return float(self.ewald.green((x - y)[None, :])[0])
        distance = float(np.linalg.norm(x - y))
        if distance < 1e-14:
            raise SingularityError("Green function evaluated at coincident points")
        return self.regular_part(x, y) - gamma(distance, self.dim)

    def robin(self, x) -> float:
        """h(x) = R(x, x); refuses points within two resolution lengths of the boundary."""
        x = np.asarray(x, dtype=float)
        if self.domain.is_torus:
            return float(self.torus_model.value(np.zeros((1, self.dim)))[0])
        distance = self.domain.distance_to_boundary(x)
        if distance <= 2.0 * self.resolution_length:
            raise ResolutionError(
                f"Robin function requested at boundary distance {distance:.2e} "
                f"<= {2.0 * self.resolution_length:.2e}",
                "Increase discretization.ball_degree.",
            )
        return float(self.ball.value(x, x))

    def image_remainder(self, x, y) -> float:
        """S_x(y) = R(x, y) + Gamma(|x* - y|), x* the reflection of x across the boundary."""
        if self.domain.is_torus:
            raise ConfigurationError("image_remainder requires the ball domain")
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        norm = float(np.linalg.norm(x))
        if norm < 1e-12 * self.domain.radius:
            raise ProjectionError("The center has no unique nearest boundary point")
        reflected = (2.0 * self.domain.radius - norm) * x / norm
        return self.regular_part(x, y) + gamma(float(np.linalg.norm(reflected - y)), self.dim)

    # ------------------------------------------------------------------
    # matrices
    # ------------------------------------------------------------------

    def regular_matrix(self, first: np.ndarray, second: np.ndarray) -> np.ndarray:
        """R(first_a, second_b) as an (Na, Nb) array."""
        if self.domain.is_torus:
            z = first[:, None, :] - second[None, :, :]
            z = z - np.floor(z + 0.5)
            return self.torus_model.value(z)
        return self.ball.value(first[:, None, :], second[None, :, :])

    def regular_gradient_matrix(self, first: np.ndarray, second: np.ndarray) -> np.ndarray:
        """grad_x R(first_a, second_b) as an (Na, Nb, n) array."""
        if self.domain.is_torus:
            z = first[:, None, :] - second[None, :, :]
            z = z - np.floor(z + 0.5)
            return self.torus_model.gradient(z)
        return self.ball.gradient_x(first[:, None, :], second[None, :, :])

    # ------------------------------------------------------------------
    # averaged quantities
    # ------------------------------------------------------------------

    def check_ball_inside(self, center, radius: float) -> None:
        if not self.domain.is_torus and self.domain.distance_to_boundary(center) <= radius:
            raise ContainmentError(
                f"Ball of radius {radius} at {np.asarray(center).tolist()} "
                "is not contained in the domain"
            )

    def g_r(
        self,
        center,
        radius: float,
        grid: Optional[QuadratureGrid] = None,
        radial_nodes: int = 8,
    ) -> float:
        """Double average of R over B_radius(center) by product quadrature."""
        center = np.asarray(center, dtype=float)
        self.check_ball_inside(center, radius)
        points, weights = ball_quadrature(center, radius, self.dim, grid, radial_nodes)
        matrix = self.regular_matrix(points, points)
        return float(weights @ matrix @ weights) / float(np.sum(weights)) ** 2

    def g_r_hessian(
        self, center, radius: float, step: Optional[float] = None, **kwargs
    ) -> np.ndarray:
        """Central-difference Hessian of g_r in the center."""
        center = np.asarray(center, dtype=float)
        n = self.dim
        step = step or 1e-3 * max(radius, 1e-3)
        hessian = np.zeros((n, n))
        base = self.g_r(center, radius, **kwargs)
        for i in range(n):
            e_i = np.eye(n)[i] * step
            plus = self.g_r(center + e_i, radius, **kwargs)
            minus = self.g_r(center - e_i, radius, **kwargs)
            hessian[i, i] = (plus - 2.0 * base + minus) / step**2
            for j in range(i + 1, n):
                e_j = np.eye(n)[j] * step
                pp = self.g_r(center + e_i + e_j, radius, **kwargs)
                pm = self.g_r(center + e_i - e_j, radius, **kwargs)
                mp = self.g_r(center - e_i + e_j, radius, **kwargs)
                mm = self.g_r(center - e_i - e_j, radius, **kwargs)
                hessian[i, j] = hessian[j, i] = (pp - pm - mp + mm) / (4.0 * step**2)
        return hessian

    def robin_hessian(self, x, step: Optional[float] = None) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        n = self.dim
        step = step or 1e-3 * self.domain.radius
        hessian = np.zeros((n, n))
        base = self.robin(x)
        for i in range(n):
            e_i = np.eye(n)[i] * step
            hessian[i, i] = (self.robin(x + e_i) - 2.0 * base + self.robin(x - e_i)) / step**2
            for j in range(i + 1, n):
                e_j = np.eye(n)[j] * step
                value = (
                    self.robin(x + e_i + e_j)
                    - self.robin(x + e_i - e_j)
                    - self.robin(x - e_i + e_j)
                    + self.robin(x - e_i - e_j)
                ) / (4.0 * step**2)
                hessian[i, j] = hessian[j, i] = value
        return hessian


def ball_quadrature(
    center: np.ndarray,
    radius: float,
    dim: int,
    grid: Optional[QuadratureGrid] = None,
    radial_nodes: int = 8,
) -> Tuple[np.ndarray, np.ndarray]:
    """Product quadrature on B_radius(center); weights sum to omega_n radius^n."""
    grid = grid or sphere_quadrature(dim, 12)
    s, ws = radial_quadrature(radial_nodes, dim)
    points = center + radius * (s[:, None, None] * grid.nodes[None, :, :]).reshape(-1, dim)
    weights = (ws[:, None] * grid.weights[None, :]).reshape(-1) * radius**dim
    return points, weights


def harmonic_centers(
    domain: Domain, evaluator: Optional[GreenEvaluator] = None
) -> HarmonicCenterReport:
    """Minimizers of the Robin function by multi-start Nelder-Mead from a coarse grid."""
    evaluator = evaluator or GreenEvaluator(domain)
    n = domain.dim
    if domain.is_torus:
        h_t = evaluator.robin(np.zeros(n))
        return HarmonicCenterReport((tuple([0.0] * n),), (h_t,), (0.0,))

    big_r = domain.radius
    limit = big_r - 4.0 * evaluator.resolution_length

    def objective(x):
        if np.linalg.norm(x) >= limit:
            return math.inf
        return evaluator.robin(x)

    offsets = (-0.4 * big_r, 0.0, 0.4 * big_r)
    seeds = [np.array(p) for p in itertools.product(offsets, repeat=n)]
    found: List[np.ndarray] = []
    for seed in seeds:
        result = scipy_minimize(
            objective,
            seed,
            method="Nelder-Mead",
            options={"xatol": 1e-9 * big_r, "fatol": 1e-15, "maxiter": 2000 * n},
        )
        if not result.success and result.status != 2:
            raise ConvergenceError("harmonic_centers", str(result.message))
        candidate = np.asarray(result.x)
        if not any(np.linalg.norm(candidate - c) < 1e-4 * big_r for c in found):
            found.append(candidate)

    values = [evaluator.robin(c) for c in found]
    best = min(values)
    centers, h_values, eigs = [], [], []
    for center, value in zip(found, values):
        if value - best > 1e-8 * max(1.0, abs(best)):
            continue
        centers.append(tuple(float(v) for v in center))
        h_values.append(float(value))
        eigs.append(float(np.min(np.linalg.eigvalsh(evaluator.robin_hessian(center)))))
    logger.info("Found %d harmonic center(s); min h = %.10f", len(centers), best)
    return HarmonicCenterReport(tuple(centers), tuple(h_values), tuple(eigs))


def green_samples(evaluator: GreenEvaluator, source, count: int) -> List[Dict[str, float]]:
    """G(x, source), R(x, source) and h(x) on a count x count cell-centered grid.

    The grid covers the whole torus cell around the source, or the square of
    half-width 0.6 R in the ball, in the plane through the source spanned by the
    first two axes. Points that coincide with the source are skipped.
    """
    domain = evaluator.domain
    source = np.asarray(source, dtype=float)
    if domain.is_torus:
        origin, half_width = source, 0.5
    else:
        origin, half_width = source.copy(), 0.6 * domain.radius
        origin[:2] = 0.0
    axis = (np.arange(count) + 0.5) / count * 2.0 * half_width - half_width
    rows = []
    for a, b in itertools.product(axis, repeat=2):
        x = origin.copy()
        x[0] += a
        x[1] += b
        x = domain.wrap(x)
        if np.linalg.norm(domain.wrap(x - source)) < 1e-12:
            continue
        rows.append(
            {
                "x": float(x[0]),
                "y": float(x[1]),
                "G": evaluator.green(x, source),
                "R": evaluator.regular_part(x, source),
                "h": evaluator.robin(x),
            }
        )
    logger.debug("Sampled G, R and h at %d points", len(rows))
    return rows
