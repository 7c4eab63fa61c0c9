"""
Unit tests for errors.py, error_utils.py and validators.py - error records, exit codes and
input validation.
"""

import json
import unittest

import numpy as np

from okdroplet.error_utils import (
    EXIT_EXPERIMENT_FAILURE,
    EXIT_INVALID_CONFIG,
    EXIT_NUMERICAL_FAILURE,
    ErrorType,
    create_error_response,
    create_success_response,
    error_response_from_exception,
    exit_code_for,
    format_json_response,
    safe_json_parse,
)
from okdroplet.errors import (
    CompatibilityError,
    ConfigurationError,
    ContainmentError,
    ConvergenceError,
    DomainValueError,
    ExperimentFailure,
    LineSearchError,
    OKDropletError,
)
from okdroplet.validators import (
    require_dimension,
    require_point,
    require_positive,
    validate_dimension,
    validate_fraction,
    validate_point,
    validate_positive,
)


class TestErrors(unittest.TestCase):
    """Test error classes and their dictionaries."""

    def test_to_dict(self):
        error = ConfigurationError("bad gamma", "Use gamma >= 0.", {"gamma": -1})
        self.assertEqual(
            error.to_dict(),
            {
                "error": "bad gamma",
                "error_type": "VALIDATION_ERROR",
                "suggestion": "Use gamma >= 0.",
                "details": {"gamma": -1},
            },
        )
        self.assertEqual(str(error), "bad gamma")

    def test_default_suggestions(self):
        self.assertIn("radius", ContainmentError("outside").to_dict()["suggestion"])
        compatibility = CompatibilityError(1e-3, 1e-8)
        self.assertEqual(compatibility.details["mean"], 1e-3)
        self.assertIn("converge", str(ConvergenceError("series", "tail too large")))

    def test_line_search_keeps_state(self):
        error = LineSearchError("no step", last_shape="shape", iteration=7)
        self.assertEqual(error.last_shape, "shape")
        self.assertEqual(error.to_dict()["details"], {"iteration": 7})


class TestExitCodes(unittest.TestCase):
    """Test the mapping from exceptions to exit codes."""

    def test_exit_codes(self):
        self.assertEqual(exit_code_for(ConfigurationError("x")), EXIT_INVALID_CONFIG)
        self.assertEqual(exit_code_for(ContainmentError("x")), EXIT_NUMERICAL_FAILURE)
        self.assertEqual(exit_code_for(ConvergenceError("op", "x")), EXIT_NUMERICAL_FAILURE)
        self.assertEqual(exit_code_for(DomainValueError("x")), EXIT_NUMERICAL_FAILURE)
        self.assertEqual(exit_code_for(ExperimentFailure("rate", "x")), EXIT_EXPERIMENT_FAILURE)
        self.assertEqual(exit_code_for(RuntimeError("x")), 1)
        self.assertEqual(exit_code_for(OKDropletError("x", "OTHER")), 1)

    def test_error_response_from_exception(self):
        response = error_response_from_exception(ExperimentFailure("rate", "slope"), "sweep")
        self.assertFalse(response["success"])
        self.assertEqual(response["error_type"], ErrorType.EXPERIMENT_ERROR.value)
        self.assertEqual(response["operation"], "sweep")
        self.assertEqual(response["error_details"]["error_type"], "EXPERIMENT_FAILURE")
        plain = error_response_from_exception(KeyError("k"))
        self.assertEqual(plain["error_details"], {"exception": "KeyError"})
        self.assertEqual(error_response_from_exception(OSError("disk"))["error_type"], "IOError")


class TestResponses(unittest.TestCase):
    """Test response records and JSON formatting."""

    def test_success_response(self):
        response = create_success_response({"value": 1}, "solve", {"output_dir": "out"})
        self.assertTrue(response["success"])
        self.assertEqual(response["operation"], "solve")
        self.assertEqual(response["metadata"], {"output_dir": "out"})
        self.assertIn("timestamp", response)

    def test_error_response(self):
        response = create_error_response(ErrorType.NUMERICAL_ERROR, "diverged")
        self.assertEqual(response["error_type"], "NumericalError")
        self.assertNotIn("operation", response)
        self.assertNotIn("error_details", response)

    def test_format_numpy(self):
        text = format_json_response({"a": np.arange(3), "b": np.float64(0.5), "c": np.int64(2)})
        self.assertEqual(json.loads(text), {"a": [0, 1, 2], "b": 0.5, "c": 2})

    def test_safe_json_parse(self):
        self.assertEqual(safe_json_parse('{"valid": 1}'), ({"valid": 1}, None))
        self.assertEqual(safe_json_parse("", default={}), ({}, None))
        self.assertEqual(safe_json_parse(None), (None, None))
        value, error = safe_json_parse("{broken", "config")
        self.assertIsNone(value)
        self.assertEqual(error["error_type"], ErrorType.JSON_PARSE_ERROR.value)
        self.assertEqual(error["error_details"]["field"], "config")


class TestValidators(unittest.TestCase):
    """Test tuple validators and their raising counterparts."""

    def test_dimension(self):
        self.assertEqual(validate_dimension(2), (True, None, None))
        self.assertFalse(validate_dimension(True)[0])
        self.assertFalse(validate_dimension(2.0)[0])
        self.assertEqual(validate_dimension(5)[2], {"dim": 3})
        self.assertEqual(require_dimension(np.int64(3)), 3)
        with self.assertRaises(DomainValueError):
            require_dimension(1)

    def test_positive(self):
        self.assertTrue(validate_positive(0.1, "r")[0])
        self.assertFalse(validate_positive(0.0, "r")[0])
        self.assertTrue(validate_positive(0.0, "gamma", allow_zero=True)[0])
        self.assertFalse(validate_positive(float("nan"), "r")[0])
        self.assertFalse(validate_positive("abc", "r")[0])
        self.assertEqual(require_positive("0.5", "r"), 0.5)
        with self.assertRaises(ConfigurationError):
            require_positive(-1.0, "r")

    def test_fraction(self):
        self.assertTrue(validate_fraction(0.3, "m")[0])
        self.assertFalse(validate_fraction(1.0, "m")[0])
        self.assertFalse(validate_fraction(0.0, "m")[0])

    def test_point(self):
        self.assertTrue(validate_point([0.1, 0.2], 2)[0])
        self.assertFalse(validate_point([0.1, 0.2], 3)[0])
        self.assertFalse(validate_point([0.1, float("inf")], 2)[0])
        np.testing.assert_array_equal(require_point((1, 2), 2), [1.0, 2.0])
        with self.assertRaises(ConfigurationError):
            require_point([1.0], 2)


if __name__ == "__main__":
    unittest.main()
