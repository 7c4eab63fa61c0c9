"""Second variation of F at a round droplet, its spectrum and the stability experiments.

All quadratic forms act on normal velocities f on dB_r(p) and are written in
the basis Y_k(x)/r^{(n-1)/2}, orthonormal in L^2(dB_r). The degree-0 mode is
removed by the volume constraint.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from .coulomb import DirectNonlocal
from .domain import Domain, unit_ball_volume
from .energy import ModelParams
from .errors import ConfigurationError, ConvergenceError
from .greens import GreenEvaluator
from .harmonics import harmonic_basis
from .shape import DropletShape

logger = logging.getLogger(__name__)

DEGENERACY_TOLERANCE = 1e-7
SYMMETRY_TOLERANCE = 1e-10
NORMALIZATION = "per unit L2(dB_r) norm"


def perimeter_hessian_diag(r: float, dim: int, degree: int) -> List[float]:
    """Per'' per unit L^2 norm for degrees 0..L: (l(l+n-2) - (n-1)) / r^2."""
    if degree < 1:
        raise ConfigurationError(f"Degree must be >= 1, got {degree}")
    return [(l * (l + dim - 2) - (dim - 1)) / r**2 for l in range(degree + 1)]


def single_layer_eigenvalue(r: float, dim: int, degree: int) -> float:
    """Eigenvalue of f -> integral over dB_r of -Gamma(|x - y|) f(y) on degree-l harmonics."""
    if degree < 1:
        raise ConfigurationError("The single-layer eigenvalue is taken for l >= 1 only")
    if dim == 2:
        return r / (2.0 * degree)
    return r / (2.0 * degree + 1.0)


# ============================================================================
# SPECTRUM
# ============================================================================


@dataclass
class StabilitySpectrum:
    basis_degree: int
    dim: int
    r: float
    gamma: float
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    mode_degrees: np.ndarray
    dominant_degrees: np.ndarray
    min_nontrivial: float
    translation_block: np.ndarray
    blocks: Dict[str, np.ndarray] = field(repr=False, default_factory=dict)
    multiplets: List[Tuple[float, int]] = field(default_factory=list)

    @property
    def matrix(self) -> np.ndarray:
        return sum(self.blocks.values())

    @property
    def min_eigenvalue(self) -> float:
        return float(self.eigenvalues[0])

    def translation_modes(self) -> np.ndarray:
        """Indices of eigenvectors with more than half their weight on degree one."""
        weight = np.sum(self.eigenvectors[self.mode_degrees == 1, :] ** 2, axis=0)
        return np.flatnonzero(weight > 0.5)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "basis_degree": self.basis_degree,
            "dim": self.dim,
            "r": self.r,
            "gamma": self.gamma,
            "normalization": NORMALIZATION,
            "eigenvalues": self.eigenvalues.tolist(),
            "dominant_degrees": self.dominant_degrees.tolist(),
            "min_nontrivial": self.min_nontrivial,
            "translation_block": self.translation_block.tolist(),
            "multiplets": [{"value": v, "multiplicity": k} for v, k in self.multiplets],
        }


def group_multiplets(
    values: np.ndarray, tolerance: float = DEGENERACY_TOLERANCE
) -> List[Tuple[float, int]]:
    """Group ascending eigenvalues that agree within tolerance (relative to the spectral scale)."""
    scale = max(float(np.max(np.abs(values))), 1.0) if len(values) else 1.0
    groups: List[List[float]] = []
    for value in values:
        if groups and abs(value - groups[-1][-1]) <= tolerance * scale:
            groups[-1].append(float(value))
        else:
            groups.append([float(value)])
    return [(float(np.mean(g)), len(g)) for g in groups]


class SecondVariation:
    """Blocks of F''(B_r(p)) for one droplet size and center; linear in gamma."""

    def __init__(
        self,
        domain: Domain,
        r: float,
        center,
        degree: int,
        resolution,
        evaluator: Optional[GreenEvaluator] = None,
    ):
        if degree < 2:
            raise ConfigurationError(f"Stability degree must be >= 2, got {degree}")
        if resolution.boundary_order < degree:
            raise ConfigurationError(
                f"Boundary quadrature order {resolution.boundary_order} "
                f"cannot resolve degree {degree}",
                "Raise discretization.boundary_order.",
            )
        self.domain = domain
        self.dim = domain.dim
        self.r = float(r)
        self.center = np.zeros(self.dim) if center is None else np.asarray(center, dtype=float)
        self.degree = degree
        self.evaluator = evaluator or GreenEvaluator.from_resolution(domain, resolution)
        self.evaluator.check_ball_inside(self.center, self.r)
        self.nonlocal_ = DirectNonlocal(self.evaluator, resolution)
        self.grid = self.nonlocal_.boundary_grid

        basis = harmonic_basis(self.dim, degree)
        keep = basis.degrees >= 1
        self.mode_degrees = basis.degrees[keep]
        self.values = basis.on_grid(self.grid, derivatives=False).values[:, keep]
        self._assemble()

    def _assemble(self) -> None:
        n, r = self.dim, self.r
        degrees = self.mode_degrees
        self.perimeter = np.diag((degrees * (degrees + n - 2) - (n - 1)) / r**2).astype(float)
        self.single_layer = np.diag([2.0 * single_layer_eigenvalue(r, n, int(l)) for l in degrees])

        points = self.center + r * self.grid.nodes
        weighted = self.values * self.grid.weights[:, None]
        kernel = self.evaluator.regular_matrix(points, points)
        self.regular = 2.0 * r ** (n - 1) * weighted.T @ kernel @ weighted

        ball = DropletShape.ball(n, r, self.center)
        self.normal_derivative = self.nonlocal_.potential_normal_derivative(ball)
        self.potential = 2.0 * weighted.T @ (self.normal_derivative[:, None] * self.values)

    def nonlocal_block(self, gamma: float) -> np.ndarray:
        """2 gamma double integral of G f f; positive semidefinite."""
        return gamma * (self.single_layer + self.regular)

    def blocks(self, gamma: float) -> Dict[str, np.ndarray]:
        return {
            "perimeter": self.perimeter,
            "single_layer": gamma * self.single_layer,
            "regular": gamma * self.regular,
            "potential": gamma * self.potential,
        }

    def matrix(self, gamma: float) -> np.ndarray:
        return self.perimeter + gamma * (self.single_layer + self.regular + self.potential)

    def min_eigenvalue(self, gamma: float) -> float:
        matrix = self.matrix(gamma)
        return float(np.linalg.eigvalsh(0.5 * (matrix + matrix.T))[0])

    def spectrum(self, gamma: float) -> StabilitySpectrum:
        matrix = self.matrix(gamma)
        asymmetry = float(np.max(np.abs(matrix - matrix.T)))
        scale = max(float(np.max(np.abs(matrix))), 1.0)
        if asymmetry > SYMMETRY_TOLERANCE * scale:
            logger.warning("Second-variation matrix asymmetric by %.2e; symmetrizing", asymmetry)
        matrix = 0.5 * (matrix + matrix.T)
        eigenvalues, eigenvectors = np.linalg.eigh(matrix)
        dominant = self.mode_degrees[np.argmax(eigenvectors**2, axis=0)].astype(int)
        translations = self.mode_degrees == 1
        translation_block = np.linalg.eigvalsh(matrix[np.ix_(translations, translations)])
        weight = np.sum(eigenvectors[translations, :] ** 2, axis=0)
        nontrivial = eigenvalues[weight <= 0.5]
        return StabilitySpectrum(
            basis_degree=self.degree,
            dim=self.dim,
            r=self.r,
            gamma=gamma,
            eigenvalues=eigenvalues,
            eigenvectors=eigenvectors,
            mode_degrees=self.mode_degrees,
            dominant_degrees=dominant,
            min_nontrivial=float(np.min(nontrivial)) if len(nontrivial) else math.nan,
            translation_block=translation_block,
            blocks=self.blocks(gamma),
            multiplets=group_multiplets(eigenvalues),
        )

    def quadratic_form(self, gamma: float, coefficients: np.ndarray) -> float:
        """Q(f) for f = sum_k a_k Y_k on the unit sphere, degree-0 excluded, mapped to dB_r."""
        scaled = np.asarray(coefficients, dtype=float) * self.r ** ((self.dim - 1) / 2.0)
        return float(scaled @ self.matrix(gamma) @ scaled)


def second_variation_matrix(
    domain: Domain,
    params: ModelParams,
    r: float,
    center,
    degree: int,
    resolution,
    evaluator: Optional[GreenEvaluator] = None,
) -> StabilitySpectrum:
    variation = SecondVariation(domain, r, center, degree, resolution, evaluator)
    spectrum = variation.spectrum(params.gamma)
    logger.info(
        "Second variation at r=%.4g, gamma=%.4g: min eigenvalue %.6g, translation block %s",
        r,
        params.gamma,
        spectrum.min_eigenvalue,
        np.array2string(spectrum.translation_block, precision=4),
    )
    return spectrum


def translation_estimate(
    domain: Domain,
    params: ModelParams,
    r: float,
    evaluator: GreenEvaluator,
    center=None,
) -> np.ndarray:
    """Eigenvalues of gamma (omega_n r^n)^2 D^2 g_r(p), per unit L^2 norm of translations."""
    n = domain.dim
    center = np.zeros(n) if center is None else center
    omega = unit_ball_volume(n)
    hessian = evaluator.g_r_hessian(center, r)
    return params.gamma * (omega * r**n) ** 2 * np.linalg.eigvalsh(hessian) / (omega * r ** (n - 1))


# ============================================================================
# STABILITY EXPERIMENTS
# ============================================================================


@dataclass(frozen=True)
class StabilityVerdict:
    stable: bool
    c0: float
    margin: float
    translation_min: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "stable": self.stable,
            "c0": self.c0,
            "margin": self.margin,
            "translation_min": self.translation_min,
            "normalization": NORMALIZATION,
        }


def strict_stability_check(
    domain: Domain,
    params: ModelParams,
    r: float,
    degree: int,
    resolution,
    margin: float = 0.0,
    evaluator: Optional[GreenEvaluator] = None,
) -> StabilityVerdict:
    """Stable iff the smallest eigenvalue over degree >= 1 exceeds margin.

    Only the centered ball in a ball domain is checked.
    """
    if domain.is_torus:
        raise ConfigurationError(
            "Strict stability is checked for the centered droplet in a ball domain",
            "Translations are exact zero modes on the torus.",
        )
    spectrum = second_variation_matrix(domain, params, r, None, degree, resolution, evaluator)
    c0 = spectrum.min_eigenvalue
    return StabilityVerdict(c0 > margin, c0, margin, float(spectrum.translation_block[0]))


def instability_threshold(
    domain: Domain,
    r: float,
    degree: int,
    resolution,
    center=None,
    relative_tolerance: float = 1e-6,
    gamma_max: float = 1e12,
    evaluator: Optional[GreenEvaluator] = None,
) -> float:
    """Smallest gamma at which a non-translation eigenvalue turns negative, by bisection."""
    variation = SecondVariation(domain, r, center, degree, resolution, evaluator)
    degree_one = variation.mode_degrees == 1
    shape_modes = ~degree_one

    def unstable(gamma: float) -> bool:
        # Translation modes are excluded; they are marginal on the torus.
        matrix = variation.matrix(gamma)[np.ix_(shape_modes, shape_modes)]
        return float(np.linalg.eigvalsh(0.5 * (matrix + matrix.T))[0]) < 0.0

    low, high = 0.0, 1.0
    while not unstable(high):
        low, high = high, 2.0 * high
        if high > gamma_max:
            raise ConvergenceError(
                "instability_threshold", f"no instability below gamma={gamma_max:g}"
            )
    while high - low > relative_tolerance * high:
        middle = 0.5 * (low + high)
        if unstable(middle):
            high = middle
        else:
            low = middle
    threshold = 0.5 * (low + high)
    logger.info("Instability onset at gamma = %.8g for r = %.4g", threshold, r)
    return threshold


def degree_two_estimate(r: float, mass: float) -> float:
    """Closed-form onset of the planar l=2 mode without the regular part: 3 / (r^3 (1/2 - m))."""
    if mass >= 0.5:
        return math.inf
    return 3.0 / (r**3 * (0.5 - mass))
