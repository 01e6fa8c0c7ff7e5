"""Numerical services for the sparse-grid DG solver."""
from .sparse_space import Domain, SparseGridFunction, SparseSpace, dof_count, get_space
from .projection import project, project_separable, l2_error
from .transport_operator import FluxSpec, BoundarySpec, TransportOperator, VelocityField, apply_rhs
from .time_stepper import StepControl, cfl_dt, integrate, rk3_step
from .run_controller import RunController, get_run_controller

__all__ = [
    "Domain",
    "SparseGridFunction",
    "SparseSpace",
    "dof_count",
    "get_space",
    "project",
    "project_separable",
    "l2_error",
    "FluxSpec",
    "BoundarySpec",
    "TransportOperator",
    "VelocityField",
    "apply_rhs",
    "StepControl",
    "cfl_dt",
    "integrate",
    "rk3_step",
    "RunController",
    "get_run_controller",
]
