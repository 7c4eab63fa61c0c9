"""Handlers for the okdroplet subcommands."""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
from pydantic import ValidationError

from .domain import Domain, sphere_quadrature
from .energy import DropletFunctional, ModelParams
from .error_utils import create_success_response, safe_json_parse
from .errors import ConfigurationError, ExperimentFailure
from .greens import (
    EwaldSum,
    GreenEvaluator,
    green_samples,
    harmonic_centers,
    robin_hessian_at_center,
)
from .models import ExperimentKind, RunConfig, ShapeRecord
from .optimize import MinimizeOptions, el_residual, solve
from .plotting import plot_history, plot_outline, plot_sweep
from .shape import (
    DropletShape,
    c1_norm,
    frankel_asymmetry,
    is_convex,
    isoperimetric_deficit,
    perimeter,
    random_near_ball,
    volume,
)
from .stability import instability_threshold, second_variation_matrix, strict_stability_check
from .verify import (
    RunWriter,
    SweepSpec,
    centering_failures,
    expansion_failures,
    map_concurrent,
    provenance,
    rate_failures,
    run_centering,
    run_energy_expansion,
    run_no_sphere,
    run_rate_fit,
    run_uniqueness,
    uniqueness_holds,
)

logger = logging.getLogger(__name__)

DEFAULT_OUTPUT_DIR = "okdroplet-results"


@dataclass
class RunContext:
    """Validated configuration plus command-line overrides of one invocation."""

    config: RunConfig
    output_dir: str = DEFAULT_OUTPUT_DIR
    threads: int = 1
    seed: Optional[int] = None
    ladder: Optional[Sequence[float]] = None
    shape_path: Optional[str] = None
    center: Optional[List[float]] = None

    @property
    def domain(self) -> Domain:
        section = self.config.domain
        return Domain(section.kind, section.dim, section.radius)

    @property
    def resolution(self):
        resolution = self.config.resolution()
        if self.ladder and self.ladder[0] != 1.0:
            resolution = resolution.refined(self.ladder[0])
        return resolution

    @property
    def effective_seed(self) -> int:
        return self.config.experiment.seed if self.seed is None else self.seed

    def params(self) -> ModelParams:
        return ModelParams.from_config(self.domain, self.config.params)

    def writer(self) -> RunWriter:
        return RunWriter(self.output_dir)

    def provenance(self) -> Dict[str, Any]:
        record = provenance(self.config, self.resolution)
        record["seed"] = self.effective_seed
        return record


def _record(context: RunContext, kind: str, data: Dict[str, Any]) -> Dict[str, Any]:
    record = {"kind": kind, **context.provenance(), "data": data}
    return record


def _finish(
    context: RunContext, operation: str, data: Dict[str, Any], failures: List[str]
) -> Dict[str, Any]:
    """Persist the record, then raise ExperimentFailure if any assertion failed."""
    writer = context.writer()
    record = _record(context, operation, data)
    writer.write_json(operation, record)
    writer.append_jsonl("runs", record)
    if failures:
        raise ExperimentFailure(operation, "; ".join(failures), {"output_dir": str(writer.root)})
    return create_success_response(data, operation, {"output_dir": str(writer.root)})


# ============================================================================
# SOLVE
# ============================================================================


def handle_solve(context: RunContext) -> Dict[str, Any]:
    """Minimize F from a seeded near-ball initial shape."""
    domain, params = context.domain, context.params()
    resolution = context.resolution
    solver = context.config.solver
    result = solve(
        domain,
        params,
        resolution,
        MinimizeOptions.from_config(solver),
        seed=context.effective_seed,
        amplitude=solver.initial_amplitude,
        center=solver.initial_center,
    )
    data = {"params": params.to_dict(), "domain": domain.describe(), **result.to_dict()}
    writer = context.writer()
    writer.write_table(
        "history",
        [{"iteration": k, "energy": e} for k, e in enumerate(result.history)],
    )
    plot_history(result.history, writer.root / "history.png")
    if domain.dim == 2:
        plot_outline([result.shape], writer.root / "outline.png", domain, ["minimizer"])
    return _finish(context, "solve", data, [])


# ============================================================================
# STABILITY
# ============================================================================


def handle_stability(context: RunContext) -> Dict[str, Any]:
    """Spectrum of the second variation at the round droplet of radius r_m."""
    domain, params = context.domain, context.params()
    resolution = context.resolution
    degree = context.config.experiment.stability_degree
    center = context.center or [0.0] * domain.dim
    evaluator = GreenEvaluator.from_resolution(domain, resolution)
    spectrum = second_variation_matrix(
        domain, params, params.radius, center, degree, resolution, evaluator
    )
    data: Dict[str, Any] = {"params": params.to_dict(), "spectrum": spectrum.to_dict()}
    failures = []
    if not domain.is_torus and not any(center):
        verdict = strict_stability_check(
            domain, params, params.radius, degree, resolution, evaluator=evaluator
        )
        data["verdict"] = verdict.to_dict()
        if params.in_regime and not verdict.stable:
            failures.append(f"droplet unstable in the small regime (c0 = {verdict.c0:.4g})")
    data["instability_threshold"] = instability_threshold(
        domain, params.radius, degree, resolution, center=center, evaluator=evaluator
    )
    context.writer().write_table(
        "eigenvalues",
        [
            {"index": k, "eigenvalue": float(v), "degree": int(d)}
            for k, (v, d) in enumerate(zip(spectrum.eigenvalues, spectrum.dominant_degrees))
        ],
    )
    return _finish(context, "stability", data, failures)


# ============================================================================
# GREEN FUNCTIONS
# ============================================================================


def handle_greens(context: RunContext) -> Dict[str, Any]:
    """Robin function data: harmonic centers, h and its Hessian, g_r at r_m, and greens.csv."""
    domain = context.domain
    resolution = context.resolution
    evaluator = GreenEvaluator.from_resolution(domain, resolution)
    centers = harmonic_centers(domain, evaluator)
    data: Dict[str, Any] = {"domain": domain.describe(), "harmonic_centers": centers.to_dict()}
    r = context.params().radius
    center = np.asarray(centers.centers[0])
    data["g_r"] = {"r": r, "center": center.tolist(), "value": evaluator.g_r(center, r)}
    if domain.is_torus:
        data["robin_constant"] = {
            f"tau={tau:g}": EwaldSum(domain.dim, tau).robin_constant() for tau in (0.03, 0.05)
        }
        data["fit_error"] = evaluator.torus_model.fit_error
    else:
        hessian = evaluator.robin_hessian(np.zeros(domain.dim))
        data["robin_hessian"] = {
            "computed": hessian.tolist(),
            "closed_form": robin_hessian_at_center(domain.dim, domain.radius),
        }
    samples = green_samples(evaluator, center, context.config.experiment.sample_points)
    data["samples"] = {"file": "greens.csv", "count": len(samples)}
    context.writer().write_table("greens", samples)
    return _finish(context, "greens", data, [])


# ============================================================================
# ASYMMETRY
# ============================================================================


def _load_shape(path: str) -> DropletShape:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigurationError(f"Cannot read shape file '{path}': {e}") from e
    payload, error = safe_json_parse(text, path)
    if error or payload is None:
        message = error["error"] if error else f"Shape file '{path}' is empty"
        raise ConfigurationError(message, details=error and error.get("error_details"))
    for key in ("data", "shape"):
        if isinstance(payload, dict) and key in payload:
            payload = payload[key]
    try:
        record = ShapeRecord.model_validate(payload)
    except ValidationError as e:
        raise ConfigurationError(
            f"Shape file '{path}' is not a shape record", details={"errors": e.errors()}
        ) from e
    return DropletShape.from_record(record)


def handle_asymmetry(context: RunContext) -> Dict[str, Any]:
    """Frankel asymmetry, isoperimetric deficit, C^1 size and convexity of one shape."""
    domain = context.domain
    if context.shape_path:
        shape = _load_shape(context.shape_path)
    else:
        rng = np.random.default_rng(context.effective_seed)
        shape = random_near_ball(
            domain.dim,
            context.params().radius,
            context.resolution.shape_degree,
            max(context.config.solver.initial_amplitude, 0.05),
            rng,
        )
    grid = sphere_quadrature(shape.dim, context.resolution.boundary_order)
    asymmetry = frankel_asymmetry(shape)
    data = {
        "shape": shape.to_record(),
        "volume": volume(shape, grid),
        "perimeter": perimeter(shape, grid),
        "deficit": isoperimetric_deficit(shape, grid),
        "asymmetry": asymmetry.to_dict(),
        "c1_norm": c1_norm(shape, grid),
        "convex": is_convex(shape, grid),
    }
    if shape.dim == 2:
        plot_outline([shape], context.writer().root / "asymmetry.png", None, ["shape"])
    return _finish(context, "asymmetry", data, [])


# ============================================================================
# RESIDUAL
# ============================================================================


def handle_residual(context: RunContext) -> Dict[str, Any]:
    """Euler-Lagrange residual of the exact sphere B_{r_m}(center)."""
    domain, params = context.domain, context.params()
    resolution = context.resolution
    center = np.asarray(context.center or [0.0] * domain.dim, dtype=float)
    shape = DropletShape.ball(domain.dim, params.radius, center, resolution.shape_degree)
    functional = DropletFunctional(domain, params, resolution, method=context.config.solver.method)
    report = el_residual(domain, params, shape, resolution, functional)
    data = {
        "domain": domain.describe(),
        "params": params.to_dict(),
        "center": center.tolist(),
        "el": report.to_dict(),
        "energy": functional.breakdown(shape).to_dict(),
    }
    return _finish(context, "residual", data, [])


# ============================================================================
# SWEEP
# ============================================================================


def _sweep_stability(sweep: SweepSpec) -> Dict[str, Any]:
    def run(r: float):
        params = sweep.params(r)
        spectrum = second_variation_matrix(
            sweep.domain, params, r, None, sweep.stability_degree, sweep.resolution
        )
        return {
            "r": r,
            "gamma": params.gamma,
            "regime_parameter": params.regime_parameter,
            "min_eigenvalue": spectrum.min_eigenvalue,
            "min_nontrivial": spectrum.min_nontrivial,
            "translation_min": float(spectrum.translation_block[0]),
        }

    return {"rows": map_concurrent(run, sweep.r_values, sweep.threads)}


def handle_sweep(context: RunContext) -> Dict[str, Any]:
    """Run the configured experiment over the r values."""
    config = context.config
    kind = config.experiment.kind
    if kind is None:
        raise ConfigurationError(
            "The sweep subcommand needs experiment.kind",
            f"Use one of {[k.value for k in ExperimentKind]}.",
        )
    sweep = SweepSpec.from_config(
        config,
        threads=context.threads,
        seed=context.seed,
        ladder=context.ladder,
        output_dir=context.output_dir,
    )
    writer = context.writer()
    n = sweep.domain.dim
    failures: List[str] = []
    logger.info("Sweep '%s' over r = %s", kind.value, list(sweep.r_values))

    if kind is ExperimentKind.EXPANSION:
        fit = run_energy_expansion(sweep)
        data = fit.model_dump()
        failures = expansion_failures(fit)
        rows = fit.rows
        plot_sweep(rows, "r", "energy", writer.root / "expansion.png", reference_slope=n - 1)
    elif kind is ExperimentKind.RATE:
        rate = run_rate_fit(sweep)
        data = rate.model_dump()
        rows = rate.rows
        failures = rate_failures(rate, n)
        plot_sweep(rows, "r", "c1_norm", writer.root / "rate.png", reference_slope=n + 3)
    elif kind is ExperimentKind.CENTERING:
        report = run_centering(sweep)
        data = report.model_dump()
        rows = [{"r": r, "distance": d} for r, d in zip(report.r_values, report.distances)]
        failures = centering_failures(report)
    elif kind is ExperimentKind.NO_SPHERE:
        report = run_no_sphere(sweep)
        data = report.model_dump()
        rows = report.cases
        failures = [
            f"{case['placement']} sphere at r={case['r']}: residual {case['residual_linf']:.3e}"
            for case in report.cases
            if not case["passed"]
        ]
    elif kind is ExperimentKind.UNIQUENESS:
        report = run_uniqueness(sweep)
        data = report.model_dump()
        rows = report.rows
        if report.in_regime and not report.inconclusive and not uniqueness_holds(report):
            failures.append("randomized minimizations did not all reach the centered ball")
    else:
        data = _sweep_stability(sweep)
        rows = data["rows"]

    writer.write_table(f"sweep_{kind.value}", rows)
    for row in rows:
        writer.append_jsonl(f"sweep_{kind.value}", {"kind": kind.value, **row})
    return _finish(context, f"sweep_{kind.value}", data, failures)


# ============================================================================
# OPERATION MAPPING
# ============================================================================

OPERATION_MAP: Dict[str, Callable[[RunContext], Dict[str, Any]]] = {
    "solve": handle_solve,
    "stability": handle_stability,
    "sweep": handle_sweep,
    "greens": handle_greens,
    "asymmetry": handle_asymmetry,
    "residual": handle_residual,
}


def dispatch_operation(name: str, context: RunContext) -> Dict[str, Any]:
    handler = OPERATION_MAP.get(name)
    if handler is None:
        raise ConfigurationError(
            f"Unknown subcommand '{name}'", f"Use one of {sorted(OPERATION_MAP)}."
        )
    return handler(context)
