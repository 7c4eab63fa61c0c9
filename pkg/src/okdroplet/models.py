"""Pydantic models for run configuration and result records."""

import hashlib
import json
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import ConfigurationError

SCHEMA_VERSION = "1.0"


class ExperimentKind(str, Enum):
    """Experiments the sweep subcommand can run."""

    EXPANSION = "expansion"
    RATE = "rate"
    CENTERING = "centering"
    NO_SPHERE = "no_sphere"
    UNIQUENESS = "uniqueness"
    STABILITY = "stability"


class NonlocalMethod(str, Enum):
    """Evaluation path for the nonlocal term."""

    DIRECT = "direct"
    DIRICHLET = "dirichlet"


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


# ============================================================================
# DISCRETIZATION
# ============================================================================

_RESOLUTION_DEFAULTS = {
    2: {
        "boundary_order": 64,
        "volume_order": 24,
        "volume_radial": 12,
        "torus_grid": 256,
        "supersample": 8,
        "ball_radial_cells": 2000,
        "ball_degree": 48,
        "torus_fit_degree": 20,
        "torus_fit_radius": 0.3,
        "fine_order": 2048,
        "shape_degree": 16,
    },
    3: {
        "boundary_order": 20,
        "volume_order": 8,
        "volume_radial": 6,
        "torus_grid": 96,
        "supersample": 4,
        "ball_radial_cells": 1000,
        "ball_degree": 24,
        "torus_fit_degree": 16,
        "torus_fit_radius": 0.3,
        "fine_order": 96,
        "shape_degree": 8,
    },
}


_REFINE_MINIMA = {"volume_radial": 2, "torus_grid": 8, "ball_radial_cells": 16, "ball_degree": 2}


class Resolution(StrictModel):
    """Every discretization knob of one run."""

    boundary_order: int = Field(
        ..., ge=4, description="Sphere quadrature order for surface integrals"
    )
    volume_order: int = Field(..., ge=4, description="Angular order of the volume quadrature")
    volume_radial: int = Field(..., ge=2, description="Radial Gauss nodes of the volume quadrature")
    torus_grid: int = Field(..., ge=8, description="Grid points per axis of the periodic solver")
    supersample: int = Field(
        ..., ge=1, le=64, description="Subcell samples per axis for the indicator"
    )
    ball_radial_cells: int = Field(
        ..., ge=16, description="Radial cells of the ball Poisson solver"
    )
    ball_degree: int = Field(
        ..., ge=2, description="Harmonic degree of the ball solver and Green series"
    )
    torus_fit_degree: int = Field(
        ..., ge=4, le=40, description="Degree of the torus regular-part fit"
    )
    torus_fit_radius: float = Field(
        ..., gt=0.0, le=0.45, description="Half-width of the fitted cube"
    )
    fine_order: int = Field(..., ge=4, description="Quadrature order for symmetric differences")
    shape_degree: int = Field(
        ..., ge=2, description="Harmonic degree of the droplet parametrization"
    )
    torus_cutoff: Optional[int] = Field(None, ge=1, description="Ewald lattice cutoff override")

    @classmethod
    def for_dim(cls, dim: int) -> "Resolution":
        if dim not in _RESOLUTION_DEFAULTS:
            raise ConfigurationError(f"No default resolution for dimension {dim}")
        return cls(**_RESOLUTION_DEFAULTS[dim])

    def refined(self, factor: float) -> "Resolution":
        """Scale every count by factor (fit parameters and cutoffs unchanged)."""
        if factor <= 0:
            raise ConfigurationError(f"Refinement factor must be positive, got {factor}")
        data = self.model_dump()
        for key in (
            "boundary_order",
            "volume_order",
            "volume_radial",
            "torus_grid",
            "ball_radial_cells",
            "ball_degree",
            "fine_order",
        ):
            data[key] = max(int(round(data[key] * factor)), _REFINE_MINIMA.get(key, 4))
        return Resolution(**data)


class DiscretizationConfig(StrictModel):
    """Per-run overrides of the dimension defaults; None keeps the default."""

    boundary_order: Optional[int] = Field(None, ge=4)
    volume_order: Optional[int] = Field(None, ge=4)
    volume_radial: Optional[int] = Field(None, ge=2)
    torus_grid: Optional[int] = Field(None, ge=8)
    supersample: Optional[int] = Field(None, ge=1, le=64)
    ball_radial_cells: Optional[int] = Field(None, ge=16)
    ball_degree: Optional[int] = Field(None, ge=2)
    torus_fit_degree: Optional[int] = Field(None, ge=4, le=40)
    torus_fit_radius: Optional[float] = Field(None, gt=0.0, le=0.45)
    fine_order: Optional[int] = Field(None, ge=4)
    shape_degree: Optional[int] = Field(None, ge=2)
    torus_cutoff: Optional[int] = Field(None, ge=1)

    def resolution(self, dim: int) -> Resolution:
        data = Resolution.for_dim(dim).model_dump()
        data.update({k: v for k, v in self.model_dump().items() if v is not None})
        return Resolution(**data)


# ============================================================================
# RUN CONFIGURATION
# ============================================================================


class DomainConfig(StrictModel):
    kind: str = Field(
        "torus", description="'torus' (unit flat torus) or 'ball' (B_R at the origin)"
    )
    dim: int = Field(2, description="Ambient dimension, 2 or 3")
    radius: float = Field(1.0, gt=0.0, description="Ball radius R (ignored on the torus)")

    @field_validator("kind")
    @classmethod
    def validate_kind(cls, v: str) -> str:
        v = v.lower()
        if v not in ("torus", "ball"):
            raise ValueError("kind must be 'torus' or 'ball'")
        return v

    @field_validator("dim")
    @classmethod
    def validate_dim(cls, v: int) -> int:
        if v not in (2, 3):
            raise ValueError("dim must be 2 or 3")
        return v


class ParamsConfig(StrictModel):
    gamma: float = Field(0.0, ge=0.0, description="Nonlocal strength")
    mass: Optional[float] = Field(None, gt=0.0, lt=1.0, description="Volume fraction m")
    r: Optional[float] = Field(None, gt=0.0, description="Droplet radius r_m (alternative to mass)")
    penalty: Optional[float] = Field(
        None, ge=0.0, description="Volume penalty; default 10x multiplier bound"
    )
    smallness: float = Field(0.1, gt=0.0, description="Regime threshold used for reporting only")

    @model_validator(mode="after")
    def exactly_one_size(self) -> "ParamsConfig":
        if (self.mass is None) == (self.r is None):
            raise ValueError("give exactly one of 'mass' and 'r'")
        return self


class SolverConfig(StrictModel):
    tolerance: float = Field(
        1e-5, gt=0.0, description="Target Euler-Lagrange residual (L-infinity)"
    )
    stall_factor: float = Field(
        10.0, ge=1.0, description="Floor-limited stops within this factor of tolerance settle"
    )
    max_iterations: int = Field(400, ge=1)
    rescale_every: int = Field(10, ge=1, description="Exact dilation rescale period")
    armijo: float = Field(1e-4, gt=0.0, lt=1.0)
    backtrack: float = Field(0.5, gt=0.0, lt=1.0)
    method: NonlocalMethod = Field(NonlocalMethod.DIRECT)
    initial_amplitude: float = Field(
        0.02, ge=0.0, le=0.3, description="Relative random perturbation"
    )
    initial_center: Optional[List[float]] = Field(None, description="Initial droplet center")


class ExperimentConfig(StrictModel):
    kind: Optional[ExperimentKind] = None
    r_values: List[float] = Field(default_factory=list)
    gammas: List[float] = Field(
        default_factory=list, description="Extra gamma values (rate linearity)"
    )
    seed: int = Field(0, ge=0)
    n_starts: int = Field(20, ge=1)
    stability_degree: int = Field(8, ge=2)
    sample_points: int = Field(16, ge=2, le=256, description="Grid points per axis of greens.csv")
    ladder: List[float] = Field(
        default_factory=lambda: [1.0], description="Resolution refinement factors"
    )
    output_dir: Optional[str] = None

    @field_validator("r_values")
    @classmethod
    def sorted_positive(cls, v: List[float]) -> List[float]:
        if any(r <= 0 for r in v):
            raise ValueError("r_values must be positive")
        if v != sorted(v):
            raise ValueError("r_values must be sorted ascending")
        return v

    @field_validator("ladder")
    @classmethod
    def positive_ladder(cls, v: List[float]) -> List[float]:
        if not v or any(f <= 0 for f in v):
            raise ValueError("ladder must be a non-empty list of positive factors")
        return v


class RunConfig(StrictModel):
    """Complete, validated description of a run."""

    domain: DomainConfig = Field(default_factory=DomainConfig)
    params: ParamsConfig = Field(default_factory=lambda: ParamsConfig(r=0.1))
    discretization: DiscretizationConfig = Field(default_factory=DiscretizationConfig)
    solver: SolverConfig = Field(default_factory=SolverConfig)
    experiment: ExperimentConfig = Field(default_factory=ExperimentConfig)

    def config_hash(self) -> str:
        canonical = json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]

    def resolution(self) -> Resolution:
        return self.discretization.resolution(self.domain.dim)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        try:
            return cls.model_validate_json(text)
        except ValidationError as e:
            raise ConfigurationError(
                f"Invalid configuration: {e.error_count()} error(s)",
                "Check key names and value ranges against the documented schema.",
                details={"errors": json.loads(e.json())},
            ) from e

    @classmethod
    def load(cls, path: str) -> "RunConfig":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigurationError(f"Cannot read config file '{path}': {e}") from e
        return cls.from_json(text)


# ============================================================================
# RESULT RECORDS
# ============================================================================


class ShapeRecord(StrictModel):
    dim: int
    center: List[float]
    base_radius: float
    degree: int
    coeffs: List[float]


class EnergyBreakdown(BaseModel):
    """Per + gamma NL (+ penalty) with regime flags."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    perimeter: float
    nonlocal_: float = Field(..., alias="nonlocal")
    gamma: float
    total: float
    penalty_term: float = 0.0
    volume: float
    regime_small: bool
    regime_parameter: float

    @property
    def nonlocal_energy(self) -> float:
        return self.nonlocal_

    @property
    def penalized(self) -> float:
        return self.total + self.penalty_term

    def to_dict(self) -> Dict[str, Any]:
        return self.model_dump(by_alias=True)


class ELReport(BaseModel):
    """Multiplier and residual of H + 2 gamma v = lambda at the boundary nodes."""

    model_config = ConfigDict(frozen=True)

    multiplier: float
    residual_linf: float
    residual_l2: float
    potential_coefficient: float = Field(2.0, description="c in H + c gamma v = lambda")

    def to_dict(self) -> Dict[str, Any]:
        return self.model_dump()


class ExpansionFit(BaseModel):
    """Weighted least-squares fit of minimal energies onto the expansion basis."""

    terms: List[str]
    coefficients: List[float]
    targets: List[Optional[float]]
    relative_errors: List[Optional[float]]
    fit_residual: float
    condition_number: float
    constant_candidates: Dict[str, float] = Field(default_factory=dict)
    converged: List[bool] = Field(default_factory=list)
    ladder: List[Dict[str, Any]] = Field(default_factory=list)
    ladder_consistent: Optional[bool] = None
    rows: List[Dict[str, Any]] = Field(default_factory=list)


class RateFit(BaseModel):
    r_values: List[float]
    c1_norms: List[float]
    noise_floors: List[float] = Field(default_factory=list)
    resolved: List[bool] = Field(default_factory=list)
    slope: Optional[float]
    constant: Optional[float]
    max_ratio: Optional[float]
    floor_limited: bool
    gamma_ratio: Optional[float] = None
    rows: List[Dict[str, Any]] = Field(default_factory=list)


class CenteringReport(BaseModel):
    r_values: List[float]
    distances: List[float]
    noise_floor: float = 0.0
    monotone: bool
    final_distance: float
    traces: List[List[float]] = Field(default_factory=list)
    energy_vs_offset: List[Dict[str, float]] = Field(default_factory=list)


class NoSphereReport(BaseModel):
    cases: List[Dict[str, Any]]


class UniquenessReport(BaseModel):
    """all_converged counts starts that converged or settled at the discretization floor."""

    n_starts: int
    in_regime: bool
    all_converged: bool
    inconclusive: bool
    energy_spread: float
    max_alpha: float
    max_center_offset: float
    stable: bool
    margin: float
    rows: List[Dict[str, Any]] = Field(default_factory=list)
