"""
Exception hierarchy for the solver.
"""
from typing import Optional


class SparseDGError(Exception):
    """Base class for all solver errors."""


class BasisError(SparseDGError, ValueError):
    """Unsupported degree or basis index out of range."""


class SpaceError(SparseDGError, IndexError):
    """Index or evaluation point outside the sparse space / domain."""


class ProjectionError(SparseDGError, ValueError):
    """Projection could not be computed (non-finite samples, quadrature guard)."""


class FluxError(SparseDGError, ValueError):
    """Invalid flux parameters or unsupported field/flux combination."""


class NumericalBlowupError(SparseDGError, ArithmeticError):
    """Non-finite coefficients appeared during time integration."""

    def __init__(self, message: str, stage: Optional[int] = None, last_good_time: Optional[float] = None):
        super().__init__(message)
        self.stage = stage
        self.last_good_time = last_good_time


class ConfigError(SparseDGError, ValueError):
    """Run configuration failed validation."""

    def __init__(self, message: str, field_errors: Optional[dict[str, str]] = None):
        super().__init__(message)
        self.field_errors = field_errors or {}


class DiagnosticsError(SparseDGError, ValueError):
    """Diagnostic quantity undefined for the given data (e.g. non-positive errors)."""
