"""API routes for the sparse-grid DG driver."""
from .routes import router

__all__ = ["router"]
