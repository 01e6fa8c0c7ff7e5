"""
API Routes for the sparse-grid DG driver.
"""
from fastapi import APIRouter, HTTPException, Query
from pydantic import BaseModel

from ..errors import ConfigError, NumericalBlowupError, SparseDGError
from ..models.reports import ConvergenceRow, RunMetadata
from ..models.run_config import validate_run_config
from ..services.output_writer import get_output_writer
from ..services.run_controller import get_run_controller
from ..services.sparse_space import dof_count


router = APIRouter(prefix="/api", tags=["sparse-dg"])


# Response Models
class DofResponse(BaseModel):
    N: int
    k: int
    d: int
    dof: int


def _http_error(exc: SparseDGError) -> HTTPException:
    if isinstance(exc, ConfigError):
        return HTTPException(status_code=422, detail={"message": str(exc), "fields": exc.field_errors})
    if isinstance(exc, NumericalBlowupError):
        return HTTPException(
            status_code=500,
            detail={"message": str(exc), "stage": exc.stage, "last_good_time": exc.last_good_time},
        )
    return HTTPException(status_code=400, detail={"message": str(exc)})


# Endpoints

@router.get("/dof", response_model=DofResponse)
def get_dof(
    N: int = Query(..., ge=0, le=20),
    k: int = Query(..., ge=1, le=4),
    d: int = Query(..., ge=1, le=8),
):
    """Degrees of freedom of the sparse space."""
    return DofResponse(N=N, k=k, d=d, dof=dof_count(N, k, d))


@router.post("/runs", response_model=RunMetadata)
def create_run(body: dict):
    """Execute a run; artifacts are written exactly as by the command line."""
    try:
        return get_run_controller().run(validate_run_config(body))
    except SparseDGError as exc:
        raise _http_error(exc)


@router.get("/runs")
def list_runs(limit: int = Query(10, ge=1, le=1000)):
    """Most recent run records and the summary."""
    writer = get_output_writer()
    return {"summary": writer.get_summary(), "runs": writer.get_recent_runs(limit)}


@router.post("/convergence", response_model=list[ConvergenceRow])
def run_convergence(body: dict):
    """Error/order table over the configured levels."""
    try:
        return get_run_controller().convergence(validate_run_config(body))
    except SparseDGError as exc:
        raise _http_error(exc)
