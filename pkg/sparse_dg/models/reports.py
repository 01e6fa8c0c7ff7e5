"""
Run reports - metadata records, convergence table rows and conservation time series.
"""
from datetime import datetime
from typing import Any, Optional
import uuid

from pydantic import BaseModel, Field


class RunMetadata(BaseModel):
    """Record of one completed run."""
    run_id: str = Field(
        default_factory=lambda: uuid.uuid4().hex[:12],
        description="Unique run identifier"
    )
    started_at: datetime = Field(
        default_factory=datetime.now,
        description="Run start time"
    )
    problem: str = Field(..., description="Benchmark problem")
    parameters: dict[str, Any] = Field(..., description="Fully resolved RunConfig")

    # Discretization
    dimension: int = Field(..., description="Total dimension of the sparse space")
    dof: int = Field(..., description="Degrees of freedom")
    dt: float = Field(0.0, description="Time step")
    steps: int = Field(0, description="Time steps taken")
    final_time: float = Field(0.0, description="Time reached")

    # Outcome
    wall_time: float = Field(0.0, description="Wall-clock seconds")
    l2_error: Optional[float] = Field(None, description="L2 error against the problem reference")
    artifacts: list[str] = Field(default_factory=list, description="Files written by the run")


class ConvergenceRow(BaseModel):
    """One row of an error/order table."""
    N: int = Field(..., description="Maximum level sum")
    h: float = Field(..., description="Finest mesh size h_N = 2^-N")
    dof: int = Field(..., description="Degrees of freedom")
    error: float = Field(..., description="L2 error")
    order: Optional[float] = Field(None, description="Observed order against the previous row")


class ConservationEntry(BaseModel):
    """Conserved quantities of a kinetic state at one time."""
    time: float
    particle_number: float = 0.0
    momentum: list[float] = Field(default_factory=list)
    kinetic_energy: float = 0.0
    field_energy: float = 0.0
    enstrophy: float = 0.0

    @property
    def energy(self) -> float:
        return self.kinetic_energy + self.field_energy


class ConservationReport(BaseModel):
    """Time series of conserved quantities with drift relative to t = 0."""
    entries: list[ConservationEntry] = Field(default_factory=list)

    def add(self, entry: ConservationEntry) -> None:
        self.entries.append(entry)

    @staticmethod
    def relative(value: float, initial: float) -> float:
        """(Q(t) - Q(0)) / |Q(0)|; the absolute change when Q(0) = 0."""
        if initial == 0.0:
            return value - initial
        return (value - initial) / abs(initial)

    def drift(self, entry: ConservationEntry) -> dict[str, Any]:
        """Errors of one entry against the first: relative, except momentum (absolute)."""
        first = self.entries[0]
        return {
            "mass_rel_err": self.relative(entry.particle_number, first.particle_number),
            "momentum_err": [m - m0 for m, m0 in zip(entry.momentum, first.momentum)],
            "energy_rel_err": self.relative(entry.energy, first.energy),
            "enstrophy_rel_err": self.relative(entry.enstrophy, first.enstrophy),
        }

    def max_drift(self) -> dict[str, float]:
        """Largest absolute drift of each quantity over the series."""
        out = {"mass_rel_err": 0.0, "momentum_err": 0.0, "energy_rel_err": 0.0, "enstrophy_rel_err": 0.0}
        for entry in self.entries:
            drift = self.drift(entry)
            for key, value in drift.items():
                size = max((abs(v) for v in value), default=0.0) if isinstance(value, list) else abs(value)
                out[key] = max(out[key], size)
        return out
