"""
Benchmark catalogue - velocity fields, initial data and exact references of the
transport problems, and the phase-space setups of the kinetic problems.
"""
import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from ..errors import ConfigError
from ..models.run_config import FieldMode, FluxType, Problem, RunConfig
from .kinetic import (
    PhaseSpaceLayout,
    RelaxationSpec,
    cosine_bell,
    landau_datum,
    relaxation_datum,
    sine_sum,
    two_stream_datum,
)
from .projection import SeparableFunction, project, project_separable
from .sparse_space import Domain, SparseGridFunction
from .transport_operator import (
    AnalyticFactor,
    BoundarySpec,
    FluxSpec,
    SeparableTerm,
    VelocityField,
    compute_alpha,
    project_field,
)

logger = logging.getLogger(__name__)

Reference = Union[SeparableFunction, Callable[[np.ndarray], np.ndarray]]

ROTATION_CENTER = 0.5
DEFORMATION_BELL = {"center": (0.65, 0.5), "radius": 0.35}
ROTATION_BELLS = {
    2: {"center": (0.75, 0.5), "radius": 0.23},
    3: {"center": (0.5, 0.55, 0.5), "radius": 0.45},
}
# unit rotation axes of the solid-body fields (angular speed 1)
ROTATION_AXES = {
    2: np.array([0.0, 0.0, 1.0]),
    3: np.array([-1.0, 0.0, 1.0]) / math.sqrt(2.0),
}


def _centered(x: np.ndarray) -> np.ndarray:
    return x - ROTATION_CENTER


def _sin_squared(x: np.ndarray) -> np.ndarray:
    return np.sin(np.pi * x) ** 2


def _sin_two_pi(x: np.ndarray) -> np.ndarray:
    return np.sin(2 * np.pi * x)


CENTERED = AnalyticFactor(_centered)
SIN_SQUARED = AnalyticFactor(_sin_squared)
SIN_TWO_PI = AnalyticFactor(_sin_two_pi)


def advection_field(d: int) -> VelocityField:
    return VelocityField.constant([1.0] * d)


def rotation_field(d: int) -> VelocityField:
    """Solid-body rotation about the centre of the unit square / cube with angular speed 1."""
    if d == 2:
        return VelocityField(
            components=[
                [SeparableTerm(-1.0, [None, CENTERED])],
                [SeparableTerm(1.0, [CENTERED, None])],
            ],
            name="solid-rotation",
        )
    if d == 3:
        s = math.sqrt(2.0) / 2.0
        return VelocityField(
            components=[
                [SeparableTerm(-s, [None, CENTERED, None])],
                [SeparableTerm(s, [CENTERED, None, None]), SeparableTerm(s, [None, None, CENTERED])],
                [SeparableTerm(-s, [None, CENTERED, None])],
            ],
            name="solid-rotation",
        )
    raise ConfigError(f"Solid-body rotation is defined for d in (2, 3), got {d}", {"problem.d": str(d)})


def deformational_field(period: float) -> VelocityField:
    """Swirling flow that reverses at period/2 and returns the data at t = period."""
    return VelocityField(
        components=[
            [SeparableTerm(1.0, [SIN_SQUARED, SIN_TWO_PI])],
            [SeparableTerm(-1.0, [SIN_TWO_PI, SIN_SQUARED])],
        ],
        time_factor=lambda t: math.cos(math.pi * t / period),
        name="deformational",
    )


def rotate(point: np.ndarray, axis: np.ndarray, angle: float) -> np.ndarray:
    """Rodrigues rotation of a point about `axis` through the domain centre."""
    r = np.zeros(3)
    r[:point.size] = point - ROTATION_CENTER
    rotated = (
        r * math.cos(angle)
        + np.cross(axis, r) * math.sin(angle)
        + axis * np.dot(axis, r) * (1 - math.cos(angle))
    )
    return rotated[:point.size] + ROTATION_CENTER


@dataclass
class TransportBenchmark:
    """A linear transport problem on [0, 1]^d: field, data, boundary and exact reference."""
    problem: Problem
    d: int
    field: VelocityField
    initial: Reference
    flux: FluxSpec
    boundary: BoundarySpec
    domain: Domain
    reference: Optional[Callable[[float], Optional[Reference]]] = None

    def project_initial(self, N: int, k: int) -> SparseGridFunction:
        if isinstance(self.initial, SeparableFunction):
            return project_separable(self.initial, N, k, self.domain)
        return project(self.initial, N, k, domain=self.domain)

    def operator_field(self, N: int, k: int, mode: FieldMode) -> VelocityField:
        if mode == FieldMode.PROJECTED:
            return project_field(self.field, N, k, self.domain)
        return self.field

    def speeds(self, N: int, k: int) -> list[float]:
        """Per-dimension bounds of |a_m| over space and time, for the time step."""
        return [float(c) for c in compute_alpha(self.field, 0.0, N, k, self.domain)]

    def exact(self, t: float) -> Optional[Reference]:
        return self.reference(t) if self.reference is not None else None


def _bell_reference(d: int, bell: dict) -> Callable[[float], Reference]:
    axis = ROTATION_AXES[d]
    center = np.asarray(bell["center"], dtype=float)
    return lambda t: cosine_bell(rotate(center, axis, t), bell["radius"])


def transport_benchmark(config: RunConfig) -> TransportBenchmark:
    """Catalogue entry for a (resolved) transport or projection-study config."""
    cfg = config.resolved()
    d = cfg.d
    logger.debug(f"Transport benchmark {cfg.problem.value} in d={d}")
    domain = Domain.unit(d)
    flux = FluxSpec(type=cfg.flux or FluxType.LF)
    boundary = BoundarySpec.periodic(d)

    if cfg.problem in (Problem.ADVECT_CONST, Problem.PROJECTION_STUDY):
        return TransportBenchmark(
            problem=cfg.problem,
            d=d,
            field=advection_field(d),
            initial=sine_sum(d),
            flux=flux,
            boundary=boundary,
            domain=domain,
            reference=lambda t: sine_sum(d, shift=d * t),
        )

    if cfg.problem == Problem.SOLID_ROTATION:
        bell = ROTATION_BELLS[d]
        return TransportBenchmark(
            problem=cfg.problem,
            d=d,
            field=rotation_field(d),
            initial=cosine_bell(bell["center"], bell["radius"]),
            flux=flux,
            boundary=boundary,
            domain=domain,
            reference=_bell_reference(d, bell),
        )

    if cfg.problem == Problem.DEFORMATIONAL:
        period = cfg.T
        initial = cosine_bell(DEFORMATION_BELL["center"], DEFORMATION_BELL["radius"])
        return TransportBenchmark(
            problem=cfg.problem,
            d=d,
            field=deformational_field(period),
            initial=initial,
            flux=flux,
            boundary=boundary,
            domain=domain,
            reference=lambda t: initial if math.isclose(t, period) else None,
        )

    raise ConfigError(f"{cfg.problem.value} is not a transport problem", {"problem.problem": cfg.problem.value})


@dataclass
class KineticBenchmark:
    """Phase-space setup of a Vlasov-Ampere or relaxation problem."""
    problem: Problem
    layout: PhaseSpaceLayout
    datum: SeparableFunction
    flux: FluxSpec
    k_wave: float = 0.5
    relaxation: Optional[RelaxationSpec] = None

    @property
    def is_vlasov(self) -> bool:
        return self.relaxation is None

    def project_initial(self, N: int, k: int) -> SparseGridFunction:
        return project_separable(self.datum, N, k, self.layout.domain)


def kinetic_benchmark(config: RunConfig) -> KineticBenchmark:
    """Catalogue entry for a (resolved) kinetic config."""
    cfg = config.resolved()
    flux = FluxSpec(type=cfg.flux or FluxType.UPWIND)

    if cfg.problem in (Problem.VLASOV_LANDAU, Problem.VLASOV_TWOSTREAM):
        layout = PhaseSpaceLayout.vlasov(cfg.length, cfg.v_cut)
        build = landau_datum if cfg.problem == Problem.VLASOV_LANDAU else two_stream_datum
        return KineticBenchmark(
            problem=cfg.problem,
            layout=layout,
            datum=build(cfg.amplitude, cfg.k_wave),
            flux=flux,
            k_wave=cfg.k_wave,
        )

    if cfg.problem in (Problem.RELAX_1D1V, Problem.RELAX_2D2V):
        layout = PhaseSpaceLayout.relaxation(cfg.dx, cfg.length, cfg.v_cut)
        return KineticBenchmark(
            problem=cfg.problem,
            layout=layout,
            datum=relaxation_datum(cfg.dx, cfg.length, cfg.v_cut),
            flux=flux,
            relaxation=RelaxationSpec(tau=cfg.tau, theta=cfg.theta),
        )

    raise ConfigError(f"{cfg.problem.value} is not a kinetic problem", {"problem.problem": cfg.problem.value})
