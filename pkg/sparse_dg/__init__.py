"""Sparse-grid discontinuous Galerkin solver for linear transport and kinetic equations."""

__version__ = "1.0.0"
