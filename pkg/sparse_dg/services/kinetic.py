"""
Kinetic models on phase space (x, v): Vlasov-Ampere and the linear relaxation model.

Phase-space functions use one sparse index set over all dx + dv dimensions, ordered
x dimensions first. Velocity moments are exact: every 1D basis function is integrated
against v^r once, and moments of f are contractions of its blocks with those tables.
"""
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field
from scipy.special import erf

from ..errors import ConfigError, SpaceError
from ..models.run_config import BoundaryType
from .basis1d import composite_gauss, get_basis_table, get_tables, hierarchical_values
from .projection import SeparableFunction, project, project_1d, project_separable
from .sparse_space import Domain, SparseGridFunction, SplitMatrix, apply_tensor_term, get_space
from .transport_operator import (
    AnalyticFactor,
    BoundarySpec,
    FluxSpec,
    ProjectedFactor,
    SeparableTerm,
    TransportOperator,
    VelocityField,
)

logger = logging.getLogger(__name__)


def _identity(x: np.ndarray) -> np.ndarray:
    return x


COORDINATE = AnalyticFactor(_identity)
CUTOFF_LOSS_WARNING = 1e-8


@dataclass(frozen=True)
class PhaseSpaceLayout:
    """x-box [x_lower, x_upper]^dx times v-box [-v_cut, v_cut]^dv; zero-exterior in v."""
    dx: int
    dv: int
    x_lower: float
    x_upper: float
    v_cut: float
    x_boundary: BoundaryType = BoundaryType.PERIODIC

    def __post_init__(self):
        if self.dx != self.dv or self.dx not in (1, 2):
            raise SpaceError(f"Phase space needs dx = dv in (1, 2), got dx={self.dx}, dv={self.dv}")
        if self.v_cut <= 0 or self.x_upper <= self.x_lower:
            raise SpaceError("Phase-space box must have positive extent")

    @classmethod
    def vlasov(cls, length: float = 4 * math.pi, v_cut: float = 2 * math.pi) -> "PhaseSpaceLayout":
        return cls(dx=1, dv=1, x_lower=0.0, x_upper=length, v_cut=v_cut)

    @classmethod
    def relaxation(cls, dx: int, length: float = 5.0, v_cut: float = 5.0) -> "PhaseSpaceLayout":
        return cls(dx=dx, dv=dx, x_lower=-length, x_upper=length, v_cut=v_cut, x_boundary=BoundaryType.ZERO)

    @property
    def d(self) -> int:
        return self.dx + self.dv

    @property
    def x_domain(self) -> Domain:
        return Domain(lower=(self.x_lower,) * self.dx, upper=(self.x_upper,) * self.dx)

    @property
    def v_domain(self) -> Domain:
        return Domain(lower=(-self.v_cut,) * self.dv, upper=(self.v_cut,) * self.dv)

    @property
    def domain(self) -> Domain:
        return Domain.product(self.x_domain, self.v_domain)

    @property
    def boundary(self) -> BoundarySpec:
        return BoundarySpec(kinds=[self.x_boundary] * self.dx + [BoundaryType.ZERO] * self.dv)


class RelaxationSpec(BaseModel):
    """Relaxation time and equilibrium temperature; the potential is |x|^2/2, so E = -x."""
    tau: float = Field(1.0, gt=0, description="Relaxation time")
    theta: float = Field(1.0, gt=0, description="Temperature of the Maxwellian")


@lru_cache(maxsize=64)
def moment_vector(k: int, N: int, lower: float, upper: float, power: int) -> np.ndarray:
    """int_lower^upper v^power phi_q(v) dv for every 1D hierarchical function phi_q up to level N."""
    tables = get_tables(k, N, k + 3)
    width = upper - lower
    v = lower + width * tables.points
    return width * (tables.values.T @ (tables.weights * v ** power))


def velocity_moment(f: SparseGridFunction, layout: PhaseSpaceLayout, powers: Sequence[int]) -> SparseGridFunction:
    """The x-space function int f prod_m v_m^powers[m] dv, exactly."""
    dx, dv = layout.dx, layout.dv
    moments = [moment_vector(f.k, f.N, -layout.v_cut, layout.v_cut, p) for p in powers]
    out = SparseGridFunction.zeros(get_space(f.N, f.k, dx), layout.x_domain)
    for level, block in f.blocks():
        lx = level.levels[:dx]
        acc = block
        for m in reversed(range(dv)):
            level_slice = f.space.hierarchical_slices(level)[dx + m]
            acc = np.tensordot(acc, moments[m][level_slice], axes=([acc.ndim - 1], [0]))
        out.block(lx)[...] += acc
    return out


def density(f: SparseGridFunction, layout: PhaseSpaceLayout) -> SparseGridFunction:
    """rho(x) = int f dv."""
    return velocity_moment(f, layout, [0] * layout.dv)


def current_density(f: SparseGridFunction, layout: PhaseSpaceLayout) -> list[SparseGridFunction]:
    """J_m(x) = int f v_m dv for each velocity dimension."""
    return [
        velocity_moment(f, layout, [1 if n == m else 0 for n in range(layout.dv)])
        for m in range(layout.dv)
    ]


def kinetic_energy_density(f: SparseGridFunction, layout: PhaseSpaceLayout) -> SparseGridFunction:
    """1/2 int f |v|^2 dv."""
    parts = [
        velocity_moment(f, layout, [2 if n == m else 0 for n in range(layout.dv)])
        for m in range(layout.dv)
    ]
    total = parts[0]
    for part in parts[1:]:
        total = total + part
    return 0.5 * total


def integral(u: SparseGridFunction) -> float:
    """int u over its domain: only the constant mode has a nonzero mean."""
    return float(u.domain.volume * u.values[0])


@dataclass
class VlasovAmpereState:
    """Distribution f on phase space and electric field E on the 1D x-space."""
    f: SparseGridFunction
    E: SparseGridFunction

    def __add__(self, other: "VlasovAmpereState") -> "VlasovAmpereState":
        return VlasovAmpereState(self.f + other.f, self.E + other.E)

    def __sub__(self, other: "VlasovAmpereState") -> "VlasovAmpereState":
        return VlasovAmpereState(self.f - other.f, self.E - other.E)

    def __mul__(self, scalar: float) -> "VlasovAmpereState":
        return VlasovAmpereState(scalar * self.f, scalar * self.E)

    __rmul__ = __mul__

    def is_finite(self) -> bool:
        return self.f.is_finite() and self.E.is_finite()


def poisson_field(rho: SparseGridFunction) -> SparseGridFunction:
    """
    Projection of the zero-mean E with dE/dx = rho - mean(rho) on a 1D x-interval.

    rho is piecewise polynomial on the finest cells, so the antiderivative is exact at
    every quadrature point: whole-cell integrals plus a Gauss rule on the partial cell.
    """
    if rho.d != 1:
        raise SpaceError("poisson_field is one-dimensional")
    N, k = rho.N, rho.k
    interval = rho.domain
    lower, width = interval.lower[0], float(interval.widths[0])
    cells = 2 ** N
    h = width / cells
    mean = rho.values[0]

    nodes, weights = composite_gauss(0, k + 1)

    def rho_at(x: np.ndarray) -> np.ndarray:
        return rho.evaluate(x.reshape(-1, 1), side="right").reshape(x.shape) - mean

    starts = lower + h * np.arange(cells)
    cell_integrals = h * (rho_at(starts[:, None] + h * nodes[None, :]) @ weights)
    offsets = np.concatenate([[0.0], np.cumsum(cell_integrals)[:-1]])

    def antiderivative(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        cell = np.clip(np.floor((x - lower) / h).astype(int), 0, cells - 1)
        span = x - starts[cell]
        inner = rho_at(starts[cell][:, None] + span[:, None] * nodes[None, :]) @ weights
        return offsets[cell] + span * inner

    coeffs = project_1d(antiderivative, N, k, interval, k + 2)
    coeffs[0] = 0.0
    return SparseGridFunction(get_space(N, k, 1), interval, coeffs)


@lru_cache(maxsize=16)
def reflection_matrix(k: int, N: int) -> np.ndarray:
    """Coefficients of phi(1 - xi) in the hierarchical basis; level preserving."""
    tables = get_tables(k, N)
    table = get_basis_table(k)
    reflected = hierarchical_values(table, N, 1.0 - tables.points)
    return (tables.values.T @ (tables.weights[:, None] * reflected))


def reverse_velocity(f: SparseGridFunction, layout: PhaseSpaceLayout) -> SparseGridFunction:
    """f(x, v) -> f(x, -v) on the symmetric velocity box."""
    tables = get_tables(f.k, f.N)
    split = SplitMatrix.from_matrix(reflection_matrix(f.k, f.N), tables.levels)
    matrices = [None] * layout.dx + [split] * layout.dv
    return f.with_values(apply_tensor_term(f.space, matrices, f.values))


class VlasovAmpereSolver:
    """Right-hand side of the 1D1V Vlasov-Ampere system f_t + v f_x + E f_v = 0, E_t = -J."""

    def __init__(self, layout: PhaseSpaceLayout, N: int, k: int, flux: Optional[FluxSpec] = None):
        if layout.dx != 1:
            raise SpaceError("Vlasov-Ampere runs are one-dimensional in x and v")
        self.layout = layout
        self.N = N
        self.k = k
        self.flux = flux or FluxSpec()
        self.space = get_space(N, k, layout.d)
        self.x_interval = layout.x_domain

    def field(self, E: SparseGridFunction) -> VelocityField:
        e_factor = ProjectedFactor(E.values, self.N, self.k, self.x_interval)
        return VelocityField(
            components=[
                [SeparableTerm(1.0, [None, COORDINATE])],
                [SeparableTerm(1.0, [e_factor, None])],
            ],
            name="vlasov-ampere",
        )

    def rhs(self, state: VlasovAmpereState, t: float = 0.0) -> VlasovAmpereState:
        operator = TransportOperator(self.space, self.layout.domain, self.field(state.E), self.flux, self.layout.boundary)
        df = operator(state.f, t)
        dE = -current_density(state.f, self.layout)[0]
        return VlasovAmpereState(df, dE)

    def initial_state(self, f0: SparseGridFunction) -> VlasovAmpereState:
        """Pair f0 with the field given by Gauss's law."""
        return VlasovAmpereState(f0, poisson_field(density(f0, self.layout)))

    def max_field(self, E: SparseGridFunction) -> float:
        ref = np.linspace(0.0, 1.0, 4 * (self.k + 1) * 2 ** self.N + 1)
        values = hierarchical_values(get_basis_table(self.k), self.N, ref) @ E.values
        return float(np.max(np.abs(values)))


def vlasov_rhs(
    state: VlasovAmpereState,
    t: float,
    layout: PhaseSpaceLayout,
    flux: Optional[FluxSpec] = None,
) -> VlasovAmpereState:
    """(df/dt, dE/dt) of the Vlasov-Ampere system."""
    return VlasovAmpereSolver(layout, state.f.N, state.f.k, flux).rhs(state, t)


def maxwellian_1d(theta: float) -> Callable[[np.ndarray], np.ndarray]:
    return lambda v: np.exp(-v ** 2 / (2 * theta)) / np.sqrt(2 * np.pi * theta)


def spatial_maxwellian_1d(theta: float, length: float) -> Callable[[np.ndarray], np.ndarray]:
    """exp(-x^2/(2 theta)) normalized over [-length, length]."""
    norm = np.sqrt(2 * np.pi * theta) * erf(length / np.sqrt(2 * theta))
    return lambda x: np.exp(-x ** 2 / (2 * theta)) / norm


def equilibrium(layout: PhaseSpaceLayout, spec: RelaxationSpec) -> SeparableFunction:
    """M(x, v) = rho_inf(x) mu_inf(v)."""
    rho_inf = spatial_maxwellian_1d(spec.theta, layout.x_upper)
    mu = maxwellian_1d(spec.theta)
    return SeparableFunction.product([rho_inf] * layout.dx + [mu] * layout.dv)


def equilibrium_density(layout: PhaseSpaceLayout, spec: RelaxationSpec) -> SeparableFunction:
    return SeparableFunction.product([spatial_maxwellian_1d(spec.theta, layout.x_upper)] * layout.dx)


class RelaxationSolver:
    """
    f_t + v . grad_x f - x . grad_v f = (mu_inf rho - f) / tau on the cut-off box.

    The transport part has the static field a = (v, -x). The source re-tensorizes the
    projected Maxwellian with the current density at every call.
    """

    def __init__(self, layout: PhaseSpaceLayout, N: int, k: int, spec: Optional[RelaxationSpec] = None,
                 flux: Optional[FluxSpec] = None):
        self.layout = layout
        self.N = N
        self.k = k
        self.spec = spec or RelaxationSpec()
        self.space = get_space(N, k, layout.d)
        self.operator = TransportOperator(self.space, layout.domain, self.field(), flux, layout.boundary)
        mu = maxwellian_1d(self.spec.theta)
        self.mu_coeffs = [project_1d(mu, N, k, layout.v_domain.axis(m)) for m in range(layout.dv)]
        lost = 1.0 - erf(layout.v_cut / np.sqrt(2 * self.spec.theta)) ** layout.dv
        if lost > CUTOFF_LOSS_WARNING:
            logger.warning(f"Maxwellian mass outside the velocity cut-off: {lost:.3e}")

    def field(self) -> VelocityField:
        dx, d = self.layout.dx, self.layout.d
        components = []
        for m in range(dx):
            factors = [None] * d
            factors[dx + m] = COORDINATE
            components.append([SeparableTerm(1.0, factors)])
        for m in range(dx):
            factors = [None] * d
            factors[m] = COORDINATE
            components.append([SeparableTerm(-1.0, factors)])
        return VelocityField(components=components, name="relaxation")

    def source(self, f: SparseGridFunction) -> SparseGridFunction:
        """(P mu_inf x rho_h - f) / tau, restricted to the sparse set."""
        rho = density(f, self.layout)
        dx = self.layout.dx
        values = np.empty(self.space.size)
        for b, level in enumerate(self.space.levels):
            slices = self.space.hierarchical_slices(level)
            block = rho.block(level.levels[:dx])
            for m in range(self.layout.dv):
                block = np.multiply.outer(block, self.mu_coeffs[m][slices[dx + m]])
            values[self.space.block_slice(b)] = block.ravel()
        return (f.with_values(values) - f) / self.spec.tau

    def rhs(self, f: SparseGridFunction, t: float = 0.0) -> SparseGridFunction:
        return self.operator(f, t) + self.source(f)


def relaxation_rhs(
    f: SparseGridFunction,
    spec: RelaxationSpec,
    t: float,
    layout: PhaseSpaceLayout,
    flux: Optional[FluxSpec] = None,
) -> SparseGridFunction:
    """df/dt of the relaxation model."""
    return RelaxationSolver(layout, f.N, f.k, spec, flux).rhs(f, t)


def _fine_integral(func: Callable[[np.ndarray], np.ndarray], lower: float, upper: float) -> float:
    points, weights = composite_gauss(10, 8)
    width = upper - lower
    return float(width * np.sum(weights * func(lower + width * points)))


def landau_datum(amplitude: float = 0.5, k_wave: float = 0.5) -> SeparableFunction:
    """f_M(v) (1 + A cos(k x))."""
    f_m = maxwellian_1d(1.0)
    return SeparableFunction([(1.0, [None, f_m]), (amplitude, [lambda x: np.cos(k_wave * x), f_m])])


def two_stream_datum(amplitude: float = 0.05, k_wave: float = 0.5) -> SeparableFunction:
    """v^2 f_M(v) (1 + A cos(k x))."""
    f_ts = lambda v: v ** 2 * np.exp(-v ** 2 / 2) / np.sqrt(2 * np.pi)
    return SeparableFunction([(1.0, [None, f_ts]), (amplitude, [lambda x: np.cos(k_wave * x), f_ts])])


def relaxation_normalization(dx: int, length: float, v_cut: float) -> float:
    """s_1 (dx = 1) or s_2 (dx = 2): the mass of the unnormalized initial datum on the box."""
    x_parts = [lambda x: np.sin(x ** 2 / 2) ** 2 * np.exp(-x ** 2 / 2),
               lambda x: np.cos(x ** 2 / 2) ** 2 * np.exp(-x ** 2 / 2)]
    v_part = np.sqrt(2 * np.pi) * erf(v_cut / np.sqrt(2))
    total = v_part ** dx
    for m in range(dx):
        total *= _fine_integral(x_parts[m], -length, length)
    return total


def relaxation_datum(dx: int, length: float = 5.0, v_cut: float = 5.0) -> SeparableFunction:
    """sin(x1^2/2)^2 [cos(x2^2/2)^2] exp(-(|x|^2 + |v|^2)/2) / s, unit mass on the box."""
    scale = 1.0 / relaxation_normalization(dx, length, v_cut)
    x_factors = [lambda x: np.sin(x ** 2 / 2) ** 2 * np.exp(-x ** 2 / 2),
                 lambda x: np.cos(x ** 2 / 2) ** 2 * np.exp(-x ** 2 / 2)][:dx]
    v_factor = lambda v: np.exp(-v ** 2 / 2)
    return SeparableFunction([(scale, x_factors + [v_factor] * dx)])


def cosine_bell(center: Sequence[float], radius: float) -> Callable[[np.ndarray], np.ndarray]:
    """b^(d-1) cos^6(pi r / (2b)) for r <= b, zero outside."""
    center = np.asarray(center, dtype=float)
    d = center.size

    def bell(points: np.ndarray) -> np.ndarray:
        r = np.linalg.norm(np.atleast_2d(points) - center, axis=-1)
        return np.where(r <= radius, radius ** (d - 1) * np.cos(np.pi * r / (2 * radius)) ** 6, 0.0)

    return bell


def sine_sum(d: int, shift: float = 0.0) -> SeparableFunction:
    """sin(2 pi (sum_m x_m - shift)) as the imaginary part of a product of exponentials."""
    factors = [lambda x: np.exp(2j * np.pi * x)] * d
    return SeparableFunction([(np.exp(-2j * np.pi * shift), factors)], component="imag")


BELL_DEFAULTS = {
    2: {"center": (0.75, 0.5), "radius": 0.23},
    3: {"center": (0.5, 0.55, 0.5), "radius": 0.45},
}


def initial_condition(name: str, N: int, k: int, **params) -> SparseGridFunction:
    """
    Projected initial datum by name.

    landau / two-stream: params amplitude, k_wave, length, v_cut.
    relax-1d / relax-2d: params length, v_cut.
    cosine-bell: params d, center, radius. sine-sum: params d.
    """
    if name in ("landau", "two-stream"):
        defaults = {"amplitude": 0.5 if name == "landau" else 0.05, "k_wave": 0.5}
        datum_params = {key: params.get(key, value) for key, value in defaults.items()}
        layout = PhaseSpaceLayout.vlasov(params.get("length", 4 * math.pi), params.get("v_cut", 2 * math.pi))
        datum = landau_datum(**datum_params) if name == "landau" else two_stream_datum(**datum_params)
        return project_separable(datum, N, k, layout.domain)

    if name in ("relax-1d", "relax-2d"):
        dx = 1 if name == "relax-1d" else 2
        layout = PhaseSpaceLayout.relaxation(dx, params.get("length", 5.0), params.get("v_cut", 5.0))
        return project_separable(relaxation_datum(dx, layout.x_upper, layout.v_cut), N, k, layout.domain)

    if name == "cosine-bell":
        d = params.get("d", 2)
        bell = {**BELL_DEFAULTS.get(d, {}), **{key: params[key] for key in ("center", "radius") if key in params}}
        if set(bell) != {"center", "radius"}:
            raise ConfigError(f"cosine-bell needs center and radius for d={d}", {"d": str(d)})
        return project(cosine_bell(bell["center"], bell["radius"]), N, k, d=d)

    if name == "sine-sum":
        d = params.get("d", 2)
        return project_separable(sine_sum(d), N, k, Domain.unit(d))

    raise ConfigError(f"Unknown initial condition '{name}'", {"name": name})
