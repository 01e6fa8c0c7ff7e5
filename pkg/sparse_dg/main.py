"""
FastAPI Application Entry Point.
"""
from fastapi import FastAPI

from . import __version__
from .api import router
from .config import configure_logging, settings


configure_logging()

# Create FastAPI app
app = FastAPI(
    title="Sparse-Grid DG Solver",
    description="Sparse-grid discontinuous Galerkin runs for transport and kinetic benchmarks",
    version=__version__
)

# Include API routes
app.include_router(router)


@app.get("/health")
def health_check():
    """Health check endpoint."""
    return {
        "status": "healthy",
        "engine": "sparse-dg",
        "workers": settings.workers
    }


if __name__ == "__main__":
    import uvicorn
    uvicorn.run(
        "sparse_dg.main:app",
        host=settings.host,
        port=settings.port,
        reload=settings.debug
    )
