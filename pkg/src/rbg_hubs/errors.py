from __future__ import annotations
"""Exception and warning types shared across the package.

Precondition failures subclass ValueError so library callers can keep
using plain ``except ValueError``; the CLI maps ConfigError to exit code 2
and ExperimentError to exit code 1.
"""
from typing import Any, Dict


class RbgError(Exception):
    """Root of all package errors."""

    def to_payload(self) -> Dict[str, Any]:
        return {"error": type(self).__name__, "message": str(self)}


class ConfigError(RbgError, ValueError):
    pass


class ExperimentError(RbgError, RuntimeError):
    pass


class PointCountOverflowError(ExperimentError, ValueError):
    def __init__(self, expected: float, cap: int):
        super().__init__(f"expected point count {expected:.3g} exceeds the index cap {cap}")
        self.expected = expected
        self.cap = cap

    def to_payload(self) -> Dict[str, Any]:
        return {**super().to_payload(), "cap": self.cap, "expected": self.expected}


class QuadratureError(ExperimentError):
    def __init__(self, quantity: str, abs_error: float, tolerance: float):
        super().__init__(f"{quantity}: quadrature error {abs_error:.3g} above tolerance {tolerance:.3g}")
        self.quantity = quantity
        self.abs_error = abs_error
        self.tolerance = tolerance


class CensoredThresholdError(ExperimentError):
    pass


class WindowBiasWarning(UserWarning):
    """Effective support of the connection function is large against the window."""


__all__ = [
    "RbgError",
    "ConfigError",
    "ExperimentError",
    "PointCountOverflowError",
    "QuadratureError",
    "CensoredThresholdError",
    "WindowBiasWarning",
]
