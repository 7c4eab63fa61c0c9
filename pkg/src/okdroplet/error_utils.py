"""Error handling utilities for the okdroplet command line.

Provides standardized response records and the mapping from exceptions to
process exit codes.
"""

import json
import logging
from datetime import datetime, timezone
from enum import Enum
from typing import Any, Dict, Optional, Tuple

import numpy as np

from .errors import (
    CompatibilityError,
    ConfigurationError,
    ContainmentError,
    ConvergenceError,
    DomainValueError,
    ExperimentFailure,
    InvalidShapeError,
    LineSearchError,
    OKDropletError,
    ProjectionError,
    ResolutionError,
    SingularityError,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID_CONFIG = 2
EXIT_NUMERICAL_FAILURE = 3
EXIT_EXPERIMENT_FAILURE = 4


class ErrorType(str, Enum):
    """Categories reported in error records."""

    JSON_PARSE_ERROR = "JSONParseError"
    VALIDATION_ERROR = "ValidationError"
    NUMERICAL_ERROR = "NumericalError"
    EXPERIMENT_ERROR = "ExperimentError"
    IO_ERROR = "IOError"
    UNKNOWN_ERROR = "UnknownError"


_NUMERICAL_ERRORS = (
    CompatibilityError,
    ContainmentError,
    ConvergenceError,
    DomainValueError,
    InvalidShapeError,
    LineSearchError,
    ProjectionError,
    ResolutionError,
    SingularityError,
)


def _timestamp() -> str:
    return datetime.now(timezone.utc).isoformat()


def create_error_response(
    error_type: ErrorType,
    error_message: str,
    operation: Optional[str] = None,
    details: Optional[Dict[str, Any]] = None,
) -> Dict[str, Any]:
    """
    Record printed on stdout when a subcommand fails.

    Args:
        error_type: Category of the failure
        error_message: What went wrong, for humans
        operation: Failing subcommand, if known
        details: Structured context such as the error's own to_dict()

    Returns:
        Dictionary with success=False, error, error_type and a UTC timestamp
    """
    record: Dict[str, Any] = {
        "success": False,
        "error": error_message,
        "error_type": error_type.value,
        "timestamp": _timestamp(),
    }
    if operation:
        record["operation"] = operation
    if details:
        record["error_details"] = details
    return record


def create_success_response(
    data: Any,
    operation: Optional[str] = None,
    metadata: Optional[Dict[str, Any]] = None,
) -> Dict[str, Any]:
    """
    Record printed on stdout when a subcommand completes.

    Args:
        data: The subcommand's result payload
        operation: Subcommand name
        metadata: Side information such as the output directory

    Returns:
        Dictionary with success=True, data and a UTC timestamp
    """
    record: Dict[str, Any] = {"success": True, "data": data, "timestamp": _timestamp()}
    if operation:
        record["operation"] = operation
    if metadata:
        record["metadata"] = metadata
    return record


def safe_json_parse(
    text: Optional[str],
    source: str = "input",
    default: Any = None,
) -> Tuple[Any, Optional[Dict[str, Any]]]:
    """
    Parse JSON text without raising.

    Blank or missing text yields (default, None). Malformed text yields
    (default, error_record) with the parser position and a short excerpt.
    """
    if text is None or not text.strip():
        return default, None
    try:
        return json.loads(text), None
    except json.JSONDecodeError as e:
        message = f"Invalid JSON in {source}: {e.msg} (line {e.lineno}, column {e.colno})"
        logger.warning(message)
        excerpt = text if len(text) <= 100 else text[:100] + "..."
        return default, create_error_response(
            ErrorType.JSON_PARSE_ERROR,
            message,
            details={"field": source, "input": excerpt, "position": e.pos},
        )


def _json_default(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    return str(value)


def format_json_response(payload: Any, indent: Optional[int] = 2) -> str:
    """Serialize a response payload, converting numpy values."""
    return json.dumps(payload, default=_json_default, indent=indent)


def error_type_for(exc: BaseException) -> ErrorType:
    """Classify an exception into an ErrorType."""
    if isinstance(exc, ConfigurationError):
        return ErrorType.VALIDATION_ERROR
    if isinstance(exc, ExperimentFailure):
        return ErrorType.EXPERIMENT_ERROR
    if isinstance(exc, _NUMERICAL_ERRORS):
        return ErrorType.NUMERICAL_ERROR
    if isinstance(exc, OSError):
        return ErrorType.IO_ERROR
    return ErrorType.UNKNOWN_ERROR


def exit_code_for(exc: BaseException) -> int:
    """Map an exception to the process exit code."""
    error_type = error_type_for(exc)
    if error_type is ErrorType.VALIDATION_ERROR:
        return EXIT_INVALID_CONFIG
    if error_type is ErrorType.EXPERIMENT_ERROR:
        return EXIT_EXPERIMENT_FAILURE
    if error_type is ErrorType.NUMERICAL_ERROR:
        return EXIT_NUMERICAL_FAILURE
    return 1


def error_response_from_exception(
    exc: BaseException, operation: Optional[str] = None
) -> Dict[str, Any]:
    """Build an error response from any exception."""
    if isinstance(exc, OKDropletError):
        details = exc.to_dict()
    else:
        details = {"exception": type(exc).__name__}
    return create_error_response(error_type_for(exc), str(exc), operation, details)
