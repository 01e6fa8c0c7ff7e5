"""Data models for the sparse-grid DG driver."""
from .run_config import (
    BoundaryType,
    FieldMode,
    FluxType,
    Problem,
    RunConfig,
    load_run_config,
    parse_run_config,
    validate_run_config,
)
from .reports import ConservationEntry, ConservationReport, ConvergenceRow, RunMetadata

__all__ = [
    "BoundaryType",
    "FieldMode",
    "FluxType",
    "Problem",
    "RunConfig",
    "load_run_config",
    "parse_run_config",
    "validate_run_config",
    "ConservationEntry",
    "ConservationReport",
    "ConvergenceRow",
    "RunMetadata",
]
