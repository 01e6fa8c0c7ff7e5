"""
Semi-discrete DG operator for linear transport u_t + div(a u) = 0 on the sparse space.

For a separable velocity field every volume and face integral of the weak form factors
into 1D integrals, so the operator is a short sum of tensor-product terms, each applied
with dimension-by-dimension sweeps that never leave the sparse index set.

Sign conventions: the normal of a face points from the minus (low-coordinate) cell to the
plus cell, and [v] = v- - v+.
"""
import logging
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Callable, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, Field, field_validator
from scipy import sparse

from ..errors import FluxError
from ..models.run_config import BoundaryType, FluxType
from .basis1d import get_basis_table, get_tables, hierarchical_values
from .projection import project_1d
from .sparse_space import (
    Domain,
    SparseGridFunction,
    SparseSpace,
    SplitMatrix,
    apply_tensor_term,
)

logger = logging.getLogger(__name__)


class FluxSpec(BaseModel):
    """Interface flux selection; `alpha` fixes the Lax-Friedrichs speeds per dimension."""
    type: FluxType = Field(FluxType.UPWIND, description="Flux type")
    alpha: Optional[list[float]] = Field(None, description="Fixed LF speeds (default: recomputed each stage)")

    @field_validator("alpha")
    @classmethod
    def non_negative(cls, value):
        if value is not None and any(a < 0 for a in value):
            raise ValueError("alpha must be non-negative")
        return value


class BoundarySpec(BaseModel):
    """Boundary type per dimension."""
    kinds: list[BoundaryType] = Field(..., description="Per-dimension boundary type")

    @classmethod
    def periodic(cls, d: int) -> "BoundarySpec":
        return cls(kinds=[BoundaryType.PERIODIC] * d)

    @classmethod
    def zero(cls, d: int) -> "BoundarySpec":
        return cls(kinds=[BoundaryType.ZERO] * d)

    def is_periodic(self, m: int) -> bool:
        return self.kinds[m] == BoundaryType.PERIODIC


@dataclass(frozen=True)
class AnalyticFactor:
    """1D factor g(x) given as a vectorized function of the physical coordinate."""
    func: Callable[[np.ndarray], np.ndarray]

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.func(x), dtype=float), np.shape(x))


@dataclass(frozen=True, eq=False)
class ProjectedFactor:
    """1D factor given by hierarchical DG coefficients on levels 0..N of an interval."""
    coeffs: np.ndarray
    N: int
    k: int
    interval: Domain

    def __call__(self, x: np.ndarray, side: str = "right") -> np.ndarray:
        ref = self.interval.to_reference(np.reshape(x, (-1, 1)))[:, 0]
        values = hierarchical_values(get_basis_table(self.k), self.N, ref, side) @ self.coeffs
        return values.reshape(np.shape(x))


Factor = Union[AnalyticFactor, ProjectedFactor, None]


@dataclass
class SeparableTerm:
    """coef * prod_n factors[n](x_n); a None factor is the constant 1."""
    coef: float
    factors: list[Factor]


class FieldKind(str, Enum):
    """Representation of a velocity field."""
    CONSTANT = "constant"
    ANALYTIC = "analytic"
    PROJECTED = "projected"


@dataclass
class VelocityField:
    """a_m(t, x) = time_factor(t) * sum of separable terms, for each dimension m."""
    components: list[list[SeparableTerm]]
    time_factor: Optional[Callable[[float], float]] = None
    kind: FieldKind = FieldKind.ANALYTIC
    name: str = "field"

    @classmethod
    def constant(cls, a: Sequence[float]) -> "VelocityField":
        d = len(a)
        components = [[SeparableTerm(float(am), [None] * d)] if am != 0 else [] for am in a]
        return cls(components=components, kind=FieldKind.CONSTANT, name="constant")

    @property
    def d(self) -> int:
        return len(self.components)

    def time_scale(self, t: float) -> float:
        return 1.0 if self.time_factor is None else float(self.time_factor(t))

    def evaluate(self, points: np.ndarray, t: float = 0.0) -> np.ndarray:
        """Velocity at physical points, shape (npoints, d)."""
        points = np.atleast_2d(points)
        out = np.zeros(points.shape)
        for m, terms in enumerate(self.components):
            for term in terms:
                value = np.full(points.shape[0], term.coef)
                for n, factor in enumerate(term.factors):
                    if factor is not None:
                        value = value * factor(points[:, n])
                out[:, m] += value
        return out * self.time_scale(t)


def scalar_flux(
    a_dot_n: float,
    u_minus: float,
    u_plus: float,
    spec: FluxSpec,
    alpha_n: Optional[float] = None,
) -> float:
    """
    Numerical flux of a u across one face point, normal from minus to plus.

    upwind: a {u} + |a|/2 (u- - u+); Lax-Friedrichs: {a u} + alpha/2 (u- - u+).
    """
    average = 0.5 * (u_minus + u_plus)
    jump = u_minus - u_plus
    if spec.type == FluxType.UPWIND:
        return a_dot_n * average + 0.5 * abs(a_dot_n) * jump
    alpha = abs(a_dot_n) if alpha_n is None else alpha_n
    if alpha < 0:
        raise FluxError(f"Lax-Friedrichs speed must be non-negative, got {alpha}")
    return a_dot_n * average + 0.5 * alpha * jump


class Operator1dBuilder:
    """
    1D Galerkin matrices (rows: test functions, columns: trial functions) for one dimension.

    Weighted integrals use 2k+2 Gauss points per finest cell; face terms use the one-sided
    traces of the periodic or zero-exterior face layout.
    """

    def __init__(self, k: int, N: int, interval: Domain, periodic: bool):
        self.k = k
        self.N = N
        self.interval = interval
        self.periodic = periodic
        self.tables = get_tables(k, N)
        self.layout = self.tables.faces(periodic)
        lower, width = interval.lower[0], float(interval.widths[0])
        self.x = lower + width * self.tables.points
        self.face_minus_x = lower + width * self.layout.minus_x
        self.face_plus_x = lower + width * self.layout.plus_x
        self.jump_traces = self.layout.minus - self.layout.plus
        self._cache: dict = {}
        self._sample = None

    @property
    def levels(self) -> np.ndarray:
        return self.tables.levels

    def values(self, factor: Factor) -> np.ndarray:
        if factor is None:
            return np.ones_like(self.x)
        if isinstance(factor, ProjectedFactor):
            if (factor.N, factor.k) != (self.N, self.k):
                raise FluxError(f"Projected factor on (N={factor.N}, k={factor.k}) used with (N={self.N}, k={self.k})")
            return self.tables.values @ factor.coeffs
        return factor(self.x)

    def traces(self, factor: Factor) -> tuple[np.ndarray, np.ndarray]:
        if factor is None:
            ones = np.ones(self.layout.minus.shape[0])
            return ones, ones
        if isinstance(factor, ProjectedFactor):
            return self.layout.minus @ factor.coeffs, self.layout.plus @ factor.coeffs
        return factor(self.face_minus_x), factor(self.face_plus_x)

    def _weighted(self, left: sparse.csr_matrix, weights: np.ndarray) -> np.ndarray:
        return (left.T @ sparse.diags(self.tables.weights * weights) @ self.tables.values).toarray()

    def _cached(self, key, factor: Factor, build: Callable[[], np.ndarray]) -> SplitMatrix:
        if isinstance(factor, ProjectedFactor):
            return SplitMatrix.from_matrix(build(), self.levels)
        cache_key = (key, factor)
        if cache_key not in self._cache:
            self._cache[cache_key] = SplitMatrix.from_matrix(build(), self.levels)
        return self._cache[cache_key]

    def mass(self, factor: Factor, absolute: bool = False) -> Optional[SplitMatrix]:
        """int |g|^a v_i v_j; None (the identity) for a constant factor."""
        if factor is None:
            return None
        def build():
            g = self.values(factor)
            return self._weighted(self.tables.values, np.abs(g) if absolute else g)
        return self._cached(("mass", absolute), factor, build)

    def transport(self, factor: Factor) -> SplitMatrix:
        """Volume term int g v_j v_i' plus the central face term -sum {g u}[v]."""
        def build():
            volume = self._weighted(self.tables.derivatives, self.values(factor))
            g_minus, g_plus = self.traces(factor)
            weighted = g_minus[:, None] * self.layout.minus + g_plus[:, None] * self.layout.plus
            return volume - 0.5 * self.jump_traces.T @ weighted
        return self._cached("transport", factor, build)

    def jump(self) -> SplitMatrix:
        """-1/2 sum [u][v] over faces."""
        return self._cached("jump", None, lambda: -0.5 * self.jump_traces.T @ self.jump_traces)

    def sample_points(self) -> np.ndarray:
        """Dense sample: 4(k+1) uniform points per finest cell plus both interval ends."""
        cells = 2 ** self.N
        per_cell = 4 * (self.k + 1)
        local = (np.arange(per_cell) + 0.5) / per_cell
        ref = np.concatenate([[0.0], ((np.arange(cells)[:, None] + local[None, :]) / cells).ravel(), [1.0]])
        return ref

    def max_abs(self, factor: Factor) -> float:
        """Sampled max |g| over the interval."""
        if factor is None:
            return 1.0
        ref = self.sample_points()
        if isinstance(factor, ProjectedFactor):
            if self._sample is None:
                table = get_basis_table(self.k)
                self._sample = (
                    hierarchical_values(table, self.N, ref, "left"),
                    hierarchical_values(table, self.N, ref, "right"),
                )
            return float(max(np.max(np.abs(s @ factor.coeffs)) for s in self._sample))
        x = self.interval.lower[0] + float(self.interval.widths[0]) * ref
        return float(np.max(np.abs(factor(x))))


@lru_cache(maxsize=128)
def get_builder(k: int, N: int, lower: float, upper: float, periodic: bool) -> Operator1dBuilder:
    return Operator1dBuilder(k, N, Domain(lower=(lower,), upper=(upper,)), periodic)


def _builders(space: SparseSpace, domain: Domain, boundary: BoundarySpec) -> list[Operator1dBuilder]:
    return [
        get_builder(space.k, space.N, domain.lower[m], domain.upper[m], boundary.is_periodic(m))
        for m in range(space.d)
    ]


def compute_alpha(field: VelocityField, t: float, N: int, k: int, domain: Domain) -> np.ndarray:
    """
    Per-dimension Lax-Friedrichs speeds alpha_m >= max |a_m(t, .)|.

    Each separable term contributes |coef| * prod of sampled factor maxima, scaled by the
    time factor at t.
    """
    alphas = np.zeros(field.d)
    for m, terms in enumerate(field.components):
        total = 0.0
        for term in terms:
            bound = abs(term.coef)
            for n, factor in enumerate(term.factors):
                if factor is not None:
                    bound *= get_builder(k, N, domain.lower[n], domain.upper[n], True).max_abs(factor)
            total += bound
        alphas[m] = total
    return alphas * abs(field.time_scale(t))


def project_field(field: VelocityField, N: int, k: int, domain: Domain) -> VelocityField:
    """Replace every analytic factor by its 1D L2 projection on levels 0..N."""
    components = []
    for terms in field.components:
        projected_terms = []
        for term in terms:
            factors = []
            for n, factor in enumerate(term.factors):
                if isinstance(factor, AnalyticFactor):
                    axis = domain.axis(n)
                    factor = ProjectedFactor(project_1d(factor.func, N, k, axis, 2 * k + 2), N, k, axis)
                factors.append(factor)
            projected_terms.append(SeparableTerm(term.coef, factors))
        components.append(projected_terms)
    kind = FieldKind.CONSTANT if field.kind == FieldKind.CONSTANT else FieldKind.PROJECTED
    return VelocityField(components, field.time_factor, kind, field.name)


@dataclass
class OperatorTerm:
    """scale(t) * (A_1 x ... x A_d); None entries are identities."""
    scale: Callable[[float], float]
    matrices: list[Optional[SplitMatrix]]


class TransportOperator:
    """
    R(u) for a fixed velocity field, flux and boundary treatment, as a sum of tensor terms.

    Call with (u, t). The flux-direction factor of each term carries the volume and
    central face integrals; dissipation enters as separate jump terms.
    """

    def __init__(
        self,
        space: SparseSpace,
        domain: Domain,
        field: VelocityField,
        flux: Optional[FluxSpec] = None,
        boundary: Optional[BoundarySpec] = None,
    ):
        if field.d != space.d or domain.d != space.d:
            raise FluxError(f"Field dimension {field.d} does not match space dimension {space.d}")
        self.space = space
        self.domain = domain
        self.field = field
        self.flux = flux or FluxSpec()
        self.boundary = boundary or BoundarySpec.periodic(space.d)
        self.builders = _builders(space, domain, self.boundary)
        self.terms = self._assemble()

    def _time(self, coef: float, width: float) -> Callable[[float], float]:
        field = self.field
        return lambda t: coef * field.time_scale(t) / width

    def _assemble(self) -> list[OperatorTerm]:
        d = self.space.d
        widths = self.domain.widths
        terms = []
        for m, components in enumerate(self.field.components):
            builder = self.builders[m]
            for term in components:
                matrices = [self.builders[n].mass(term.factors[n]) if n != m else None for n in range(d)]
                matrices[m] = builder.transport(term.factors[m])
                terms.append(OperatorTerm(self._time(term.coef, widths[m]), matrices))

        if self.flux.type == FluxType.UPWIND:
            terms.extend(self._upwind_terms())
        else:
            terms.extend(self._lax_friedrichs_terms())
        return terms

    def _upwind_terms(self) -> list[OperatorTerm]:
        d = self.space.d
        terms = []
        field = self.field
        for m, components in enumerate(field.components):
            if not components:
                continue
            if len(components) != 1 or components[0].factors[m] is not None:
                raise FluxError(
                    f"Upwind flux needs a_{m + 1} to be a single term constant along x_{m + 1}; use the lf flux"
                )
            term = components[0]
            matrices = [self.builders[n].mass(term.factors[n], absolute=True) if n != m else None for n in range(d)]
            matrices[m] = self.builders[m].jump()
            coef, width = abs(term.coef), float(self.domain.widths[m])
            terms.append(OperatorTerm(lambda t, c=coef, w=width: c * abs(field.time_scale(t)) / w, matrices))
        return terms

    def _lax_friedrichs_terms(self) -> list[OperatorTerm]:
        d = self.space.d
        terms = []
        fixed = self.flux.alpha
        if fixed is not None and len(fixed) != d:
            raise FluxError(f"Expected {d} Lax-Friedrichs speeds, got {len(fixed)}")
        field = self.field
        # spatial maxima are static; only the time factor changes per stage
        spatial = None if fixed is not None else compute_alpha(
            VelocityField(field.components), 0.0, self.space.N, self.space.k, self.domain
        )
        for m in range(d):
            matrices: list[Optional[SplitMatrix]] = [None] * d
            matrices[m] = self.builders[m].jump()
            width = float(self.domain.widths[m])
            if fixed is not None:
                terms.append(OperatorTerm(lambda t, a=fixed[m], w=width: a / w, matrices))
            else:
                terms.append(
                    OperatorTerm(lambda t, a=spatial[m], w=width: a * abs(field.time_scale(t)) / w, matrices)
                )
        return terms

    def alpha(self, t: float) -> np.ndarray:
        return compute_alpha(self.field, t, self.space.N, self.space.k, self.domain)

    def __call__(self, u: SparseGridFunction, t: float = 0.0) -> SparseGridFunction:
        out = np.zeros(self.space.size)
        for term in self.terms:
            scale = term.scale(t)
            if scale == 0.0:
                continue
            out += scale * apply_tensor_term(self.space, term.matrices, u.values)
        return u.with_values(out)


def apply_rhs(
    u: SparseGridFunction,
    field: VelocityField,
    spec: Optional[FluxSpec] = None,
    bc: Optional[BoundarySpec] = None,
    t: float = 0.0,
) -> SparseGridFunction:
    """Coefficients of R(u) at time t (builds the operator for this call)."""
    return TransportOperator(u.space, u.domain, field, spec, bc)(u, t)

