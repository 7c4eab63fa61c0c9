"""Error classes carrying a machine-readable type and a remediation hint."""

from typing import Any, Dict, Optional


class OKDropletError(Exception):
    """Base error class for okdroplet operations."""

    def __init__(
        self,
        message: str,
        error_type: str,
        suggestion: Optional[str] = None,
        details: Optional[Dict[str, Any]] = None,
    ):
        self.message = message
        self.error_type = error_type
        self.suggestion = suggestion
        self.details = details
        super().__init__(message)

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary for JSON response."""
        result = {"error": self.message, "error_type": self.error_type}
        if self.suggestion:
            result["suggestion"] = self.suggestion
        if self.details:
            result["details"] = self.details
        return result


class ConfigurationError(OKDropletError):
    """Invalid configuration or input parameters."""

    def __init__(
        self,
        message: str,
        suggestion: Optional[str] = None,
        details: Optional[Dict[str, Any]] = None,
    ):
        super().__init__(message, "VALIDATION_ERROR", suggestion, details)


class DomainValueError(OKDropletError):
    """Argument outside the mathematical domain of a function."""

    def __init__(self, message: str, suggestion: Optional[str] = None):
        super().__init__(message, "DOMAIN_ERROR", suggestion)


class InvalidShapeError(OKDropletError):
    """Droplet shape lost star-shapedness or is otherwise degenerate."""

    def __init__(self, message: str, suggestion: Optional[str] = None):
        super().__init__(
            message,
            "INVALID_SHAPE",
            suggestion or "Reduce the perturbation amplitude so that r + phi stays positive.",
        )


class ContainmentError(OKDropletError):
    """Droplet or ball does not fit strictly inside the domain."""

    def __init__(self, message: str, suggestion: Optional[str] = None):
        super().__init__(
            message,
            "CONTAINMENT_ERROR",
            suggestion or "Use a smaller radius or move the center away from the boundary.",
        )


class SingularityError(OKDropletError):
    """Kernel evaluated at coincident points."""

    def __init__(self, message: str):
        super().__init__(message, "SINGULARITY_ERROR", "Evaluate the regular part instead.")


class ProjectionError(OKDropletError):
    """Point has no unique projection onto the domain boundary."""

    def __init__(self, message: str):
        super().__init__(message, "PROJECTION_ERROR", "Move the point off the center.")


class CompatibilityError(OKDropletError):
    """Poisson source violates the zero-mean compatibility condition."""

    def __init__(self, mean: float, tolerance: float):
        super().__init__(
            f"Source mean {mean:.3e} exceeds compatibility tolerance {tolerance:.1e}",
            "COMPATIBILITY_ERROR",
            "Subtract the domain average from the source.",
            {"mean": mean, "tolerance": tolerance},
        )


class ResolutionError(OKDropletError):
    """Requested evaluation is beyond what the discretization resolves."""

    def __init__(self, message: str, suggestion: Optional[str] = None):
        super().__init__(message, "RESOLUTION_ERROR", suggestion)


class ConvergenceError(OKDropletError):
    """Series or iterative procedure failed to converge."""

    def __init__(self, operation: str, message: str, suggestion: Optional[str] = None):
        full_message = f"Operation '{operation}' failed to converge: {message}"
        super().__init__(full_message, "CONVERGENCE_ERROR", suggestion)


class LineSearchError(OKDropletError):
    """Backtracking line search found no acceptable step."""

    def __init__(self, message: str, last_shape: Any = None, iteration: int = 0):
        self.last_shape = last_shape
        self.iteration = iteration
        super().__init__(
            message,
            "LINE_SEARCH_ERROR",
            "Loosen the tolerance or increase the resolution.",
            {"iteration": iteration},
        )


class ExperimentFailure(OKDropletError):
    """An experiment's quantitative assertion did not hold."""

    def __init__(self, experiment: str, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(
            f"Experiment '{experiment}' failed: {message}", "EXPERIMENT_FAILURE", None, details
        )
