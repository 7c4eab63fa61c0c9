"""Validators for dimensions, points and scalar parameters."""

import logging
import math
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigurationError, DomainValueError

logger = logging.getLogger(__name__)

SUPPORTED_DIMENSIONS = (2, 3)


# ============================================================================
# TUPLE VALIDATORS
# ============================================================================


def validate_dimension(dim: Any) -> Tuple[bool, Optional[str], Optional[Dict[str, Any]]]:
    """
    Validate a spatial dimension.

    Returns:
        (is_valid, error_message, suggestion)
    """
    if isinstance(dim, bool) or not isinstance(dim, (int, np.integer)):
        return False, f"Dimension must be an integer, got {type(dim).__name__}", {"dim": 2}
    if int(dim) not in SUPPORTED_DIMENSIONS:
        return (
            False,
            f"Unsupported dimension {dim}; supported: {SUPPORTED_DIMENSIONS}",
            {"dim": 3 if int(dim) > 3 else 2},
        )
    return True, None, None


def validate_positive(
    value: Any, name: str, allow_zero: bool = False
) -> Tuple[bool, Optional[str], Optional[Dict[str, Any]]]:
    """Validate a finite (strictly) positive real."""
    try:
        number = float(value)
    except (TypeError, ValueError):
        return False, f"{name} must be a real number, got {value!r}", None
    if not math.isfinite(number):
        return False, f"{name} must be finite, got {number}", None
    if number < 0 or (number == 0 and not allow_zero):
        bound = "non-negative" if allow_zero else "positive"
        return False, f"{name} must be {bound}, got {number}", {name: abs(number) or 1.0}
    return True, None, None


def validate_fraction(
    value: Any, name: str
) -> Tuple[bool, Optional[str], Optional[Dict[str, Any]]]:
    """Validate a real strictly between 0 and 1."""
    is_valid, message, suggestion = validate_positive(value, name)
    if not is_valid:
        return is_valid, message, suggestion
    if float(value) >= 1.0:
        return False, f"{name} must lie in (0, 1), got {value}", {name: 0.5}
    return True, None, None


def validate_point(point: Any, dim: int) -> Tuple[bool, Optional[str], Optional[Dict[str, Any]]]:
    """Validate a finite point of the given dimension."""
    try:
        array = np.asarray(point, dtype=float)
    except (TypeError, ValueError):
        return False, f"Point must be numeric, got {point!r}", None
    if array.shape != (dim,):
        return False, f"Point must have shape ({dim},), got {array.shape}", {"point": [0.0] * dim}
    if not np.all(np.isfinite(array)):
        return False, "Point coordinates must be finite", None
    return True, None, None


# ============================================================================
# RAISING HELPERS
# ============================================================================


def require_dimension(dim: Any) -> int:
    """Return dim as int or raise DomainValueError."""
    is_valid, message, _ = validate_dimension(dim)
    if not is_valid:
        raise DomainValueError(message, "Use dim=2 or dim=3.")
    return int(dim)


def require_positive(value: Any, name: str, allow_zero: bool = False) -> float:
    """Return value as float or raise ConfigurationError."""
    is_valid, message, suggestion = validate_positive(value, name, allow_zero)
    if not is_valid:
        raise ConfigurationError(message, details=suggestion)
    return float(value)


def require_point(point: Sequence[float], dim: int) -> np.ndarray:
    """Return the point as a float array or raise ConfigurationError."""
    is_valid, message, suggestion = validate_point(point, dim)
    if not is_valid:
        raise ConfigurationError(message, details=suggestion)
    return np.asarray(point, dtype=float)
