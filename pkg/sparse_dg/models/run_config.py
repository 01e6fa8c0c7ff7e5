"""
Run configuration - benchmark selection, discretization and output settings.

Config files are INI-style (sections of key = value lines). Every key belongs to exactly
one section; unknown sections or keys are rejected.
"""
import configparser
import math
from enum import Enum
from pathlib import Path
from typing import Any, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from ..errors import ConfigError


class Problem(str, Enum):
    """Benchmark problems."""
    ADVECT_CONST = "advect-const"
    SOLID_ROTATION = "solid-rotation"
    DEFORMATIONAL = "deformational"
    VLASOV_LANDAU = "vlasov-landau"
    VLASOV_TWOSTREAM = "vlasov-twostream"
    RELAX_1D1V = "relax-1d1v"
    RELAX_2D2V = "relax-2d2v"
    PROJECTION_STUDY = "projection-study"


class FluxType(str, Enum):
    """Interface flux."""
    UPWIND = "upwind"
    LF = "lf"  # global Lax-Friedrichs


class BoundaryType(str, Enum):
    """Per-dimension boundary treatment."""
    PERIODIC = "periodic"
    ZERO = "zero"  # ghost state u+ = 0


class FieldMode(str, Enum):
    """How variable velocity factors enter the operator."""
    PROJECTED = "projected"
    EXACT = "exact"


KINETIC_PROBLEMS = {
    Problem.VLASOV_LANDAU,
    Problem.VLASOV_TWOSTREAM,
    Problem.RELAX_1D1V,
    Problem.RELAX_2D2V,
}

# allowed (spatial) dimensions per problem
PROBLEM_DIMENSIONS: dict[Problem, tuple[int, ...]] = {
    Problem.ADVECT_CONST: (1, 2, 3, 4),
    Problem.SOLID_ROTATION: (2, 3),
    Problem.DEFORMATIONAL: (2,),
    Problem.PROJECTION_STUDY: (1, 2, 3, 4),
    Problem.VLASOV_LANDAU: (1,),
    Problem.VLASOV_TWOSTREAM: (1,),
    Problem.RELAX_1D1V: (1,),
    Problem.RELAX_2D2V: (2,),
}

PROBLEM_DEFAULTS: dict[Problem, dict[str, Any]] = {
    Problem.ADVECT_CONST: {"d": 2, "flux": FluxType.UPWIND},
    Problem.SOLID_ROTATION: {"d": 2, "flux": FluxType.LF, "T": 2 * math.pi},
    Problem.DEFORMATIONAL: {"d": 2, "flux": FluxType.LF, "T": 1.5},
    Problem.PROJECTION_STUDY: {"d": 2, "T": 0.0},
    Problem.VLASOV_LANDAU: {
        "dx": 1, "dv": 1, "flux": FluxType.UPWIND, "T": 1.0,
        "amplitude": 0.5, "k_wave": 0.5, "length": 4 * math.pi, "v_cut": 2 * math.pi,
    },
    Problem.VLASOV_TWOSTREAM: {
        "dx": 1, "dv": 1, "flux": FluxType.UPWIND, "T": 1.0,
        "amplitude": 0.05, "k_wave": 0.5, "length": 4 * math.pi, "v_cut": 2 * math.pi,
    },
    Problem.RELAX_1D1V: {
        "dx": 1, "dv": 1, "flux": FluxType.UPWIND, "T": 6.0,
        "length": 5.0, "v_cut": 5.0, "tau": 1.0, "theta": 1.0,
    },
    Problem.RELAX_2D2V: {
        "dx": 2, "dv": 2, "flux": FluxType.UPWIND, "T": 6.0,
        "length": 5.0, "v_cut": 5.0, "tau": 1.0, "theta": 1.0,
    },
}


def default_final_time(problem: Problem, d: int) -> float:
    """Final time of a problem; advection runs for two periods (d T = 2)."""
    if problem == Problem.ADVECT_CONST:
        return {1: 2.0, 2: 1.0, 3: 2.0 / 3.0, 4: 0.5}.get(d, 1.0)
    return PROBLEM_DEFAULTS[problem].get("T", 1.0)


# section -> keys; every RunConfig field appears in exactly one section
SECTION_KEYS: dict[str, tuple[str, ...]] = {
    "problem": ("problem", "d", "dx", "dv", "amplitude", "k_wave", "length", "v_cut", "tau", "theta"),
    "discretization": ("N", "k", "flux", "field_mode"),
    "time": ("cfl", "T"),
    "output": ("output_dir", "snapshot_times", "sample_resolution", "series_stride"),
    "convergence": ("N_min", "N_max"),
    "runtime": ("workers",),
}


class RunConfig(BaseModel):
    """A fully described benchmark run."""
    model_config = ConfigDict(extra="forbid")

    # [problem]
    problem: Problem = Field(..., description="Benchmark problem")
    d: Optional[int] = Field(None, ge=1, le=4, description="Dimension (transport problems)")
    dx: Optional[int] = Field(None, ge=1, le=2, description="Spatial dimensions (kinetic problems)")
    dv: Optional[int] = Field(None, ge=1, le=2, description="Velocity dimensions (kinetic problems)")
    amplitude: Optional[float] = Field(None, description="Perturbation amplitude A")
    k_wave: Optional[float] = Field(None, gt=0, description="Perturbation wave number")
    length: Optional[float] = Field(None, gt=0, description="Spatial extent L")
    v_cut: Optional[float] = Field(None, gt=0, description="Velocity cut-off V_c")
    tau: Optional[float] = Field(None, gt=0, description="Relaxation time")
    theta: Optional[float] = Field(None, gt=0, description="Equilibrium temperature")

    # [discretization]
    N: int = Field(5, ge=0, le=12, description="Maximum level sum |l|_1")
    k: int = Field(2, ge=1, le=4, description="Polynomial degree")
    flux: Optional[FluxType] = Field(None, description="Interface flux")
    field_mode: FieldMode = Field(FieldMode.PROJECTED, description="Velocity factor treatment")

    # [time]
    cfl: float = Field(0.1, gt=0, description="CFL number")
    T: Optional[float] = Field(None, ge=0, description="Final time")

    # [output]
    output_dir: Optional[str] = Field(None, description="Artifact directory (overrides settings)")
    snapshot_times: list[float] = Field(default_factory=list, description="Times at which to write snapshots")
    sample_resolution: int = Field(64, ge=2, le=2048, description="Snapshot grid points per axis")
    series_stride: int = Field(1, ge=1, description="Steps between time-series rows")

    # [convergence]
    N_min: Optional[int] = Field(None, ge=0, le=12, description="First level of a convergence sweep")
    N_max: Optional[int] = Field(None, ge=0, le=12, description="Last level of a convergence sweep")

    # [runtime]
    workers: Optional[int] = Field(None, ge=1, le=256, description="Worker threads for operator sweeps")

    @field_validator("snapshot_times", mode="before")
    @classmethod
    def split_times(cls, value):
        if isinstance(value, str):
            return [item.strip() for item in value.split(",") if item.strip()]
        return value

    @model_validator(mode="after")
    def check_problem(self) -> "RunConfig":
        allowed = PROBLEM_DIMENSIONS[self.problem]
        defaults = PROBLEM_DEFAULTS[self.problem]
        if self.problem in KINETIC_PROBLEMS:
            if self.d is not None:
                raise ValueError(f"problem {self.problem.value} takes dx/dv, not d")
            dx = self.dx if self.dx is not None else defaults["dx"]
            dv = self.dv if self.dv is not None else defaults["dv"]
            if dx != dv or dx not in allowed:
                raise ValueError(f"problem {self.problem.value} needs dx = dv in {allowed}, got dx={dx}, dv={dv}")
        else:
            if self.dx is not None or self.dv is not None:
                raise ValueError(f"problem {self.problem.value} takes d, not dx/dv")
            d = self.d if self.d is not None else defaults["d"]
            if d not in allowed:
                raise ValueError(f"problem {self.problem.value} supports d in {allowed}, got {d}")
        if self.N_min is not None and self.N_max is not None and self.N_min > self.N_max:
            raise ValueError(f"N_min={self.N_min} exceeds N_max={self.N_max}")
        return self

    def resolved(self) -> "RunConfig":
        """Copy with every problem default filled in."""
        values = self.model_dump()
        for key, value in PROBLEM_DEFAULTS[self.problem].items():
            if values.get(key) is None:
                values[key] = value
        if self.problem == Problem.ADVECT_CONST and self.T is None:
            values["T"] = default_final_time(self.problem, values["d"])
        return RunConfig(**values)

    @property
    def is_kinetic(self) -> bool:
        return self.problem in KINETIC_PROBLEMS

    @property
    def total_dim(self) -> int:
        cfg = self.resolved()
        return cfg.dx + cfg.dv if cfg.is_kinetic else cfg.d

    def levels(self) -> list[int]:
        """Levels of a convergence sweep (just N when no range is configured)."""
        lo = self.N_min if self.N_min is not None else self.N
        hi = self.N_max if self.N_max is not None else max(lo, self.N)
        return list(range(lo, hi + 1))


_KEY_LOOKUP = {key.lower(): (section, key) for section, keys in SECTION_KEYS.items() for key in keys}


def _field_errors(exc: ValidationError) -> dict[str, str]:
    errors = {}
    for error in exc.errors():
        name = str(error["loc"][0]) if error["loc"] else "config"
        section = _KEY_LOOKUP.get(name.lower(), ("config", name))[0]
        errors[f"{section}.{name}" if section != "config" else name] = error["msg"]
    return errors


def parse_run_config(text: str) -> RunConfig:
    """Parse INI text into a validated RunConfig."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"Malformed config: {exc}", {"config": str(exc)}) from exc

    values: dict[str, Any] = {}
    errors: dict[str, str] = {}
    for section in parser.sections():
        if section not in SECTION_KEYS:
            errors[section] = "unknown section"
            continue
        for raw_key, raw_value in parser.items(section):
            entry = _KEY_LOOKUP.get(raw_key.lower())
            if entry is None or entry[0] != section:
                errors[f"{section}.{raw_key}"] = "unknown key"
                continue
            values[entry[1]] = raw_value.strip()

    if errors:
        raise ConfigError("Invalid config: " + "; ".join(f"{k}: {v}" for k, v in errors.items()), errors)

    try:
        return RunConfig(**values)
    except ValidationError as exc:
        errors = _field_errors(exc)
        raise ConfigError("Invalid config: " + "; ".join(f"{k}: {v}" for k, v in errors.items()), errors) from exc


def load_run_config(path: Union[str, Path]) -> RunConfig:
    """Read and validate a config file."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"Config file not found: {path}", {"config": "file not found"})
    return parse_run_config(path.read_text())


def validate_run_config(data: dict) -> RunConfig:
    """Validate a config mapping (JSON bodies), with the same field-level errors as files."""
    try:
        return RunConfig(**data)
    except ValidationError as exc:
        errors = _field_errors(exc)
        raise ConfigError("Invalid config: " + "; ".join(f"{k}: {v}" for k, v in errors.items()), errors) from exc
