"""
L2 projection onto the sparse DG space.

The basis is orthonormal, so projecting means taking inner products with every basis
function. General fields are sampled on the full tensor grid of composite Gauss points
and reduced dimension by dimension; separable fields (sums of products of 1D factors)
are projected factor by factor and tensorized block by block.
"""
import logging
from dataclasses import dataclass
from functools import reduce
from typing import Callable, Literal, Optional, Sequence, Union

import numpy as np
from scipy import sparse

from ..config import settings
from ..errors import ProjectionError
from .basis1d import composite_gauss, get_tables, hierarchical_size
from .sparse_space import (
    Domain,
    SparseGridFunction,
    evaluate_on_grid,
    get_space,
    norm_l2,
)

logger = logging.getLogger(__name__)

ScalarField = Callable[[np.ndarray], np.ndarray]
Factor1d = Optional[Callable[[np.ndarray], np.ndarray]]


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Composite Gauss rule on the 2^N finest cells of [0, 1], applied per dimension."""
    N: int
    order: int
    points: np.ndarray
    weights: np.ndarray

    @classmethod
    def for_space(cls, N: int, k: int, order: Optional[int] = None) -> "QuadratureRule":
        order = order or k + 2
        points, weights = composite_gauss(N, order)
        return cls(N=N, order=order, points=points, weights=weights)


def _factor_values(factor: Factor1d, x: np.ndarray) -> np.ndarray:
    if factor is None:
        return np.ones_like(x)
    values = np.asarray(factor(x))
    return np.broadcast_to(values, x.shape).astype(np.result_type(values, float))


@dataclass
class SeparableFunction:
    """
    f(x) = sum_r coef_r * prod_m g_rm(x_m), optionally reduced to its real or imaginary part.

    Factors may be complex (None means the constant 1), e.g.
    sin(2 pi sum x_m) = Im prod_m exp(2 pi i x_m).
    """
    terms: list[tuple[complex, list[Factor1d]]]
    component: Optional[Literal["real", "imag"]] = None

    @classmethod
    def product(cls, factors: Sequence[Factor1d]) -> "SeparableFunction":
        return cls(terms=[(1.0, list(factors))])

    @property
    def d(self) -> int:
        return len(self.terms[0][1])

    def _reduce(self, values: np.ndarray) -> np.ndarray:
        if self.component == "imag":
            return np.imag(values)
        return np.real(values)

    def __call__(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        total = np.zeros(points.shape[0], dtype=complex)
        for coef, factors in self.terms:
            term = np.full(points.shape[0], coef, dtype=complex)
            for m, factor in enumerate(factors):
                term = term * _factor_values(factor, points[:, m])
            total += term
        return self._reduce(total)

    def real_terms(self) -> list[tuple[complex, list[Factor1d]]]:
        """Terms whose plain sum is the real function, using Re z = (z + conj z)/2."""
        if self.component is None:
            return list(self.terms)
        scale = 0.5 if self.component == "real" else -0.5j
        out = []
        for coef, factors in self.terms:
            out.append((scale * coef, factors))
            conj = [None if g is None else (lambda x, g=g: np.conj(g(x))) for g in factors]
            out.append((np.conj(scale) * np.conj(coef), conj))
        return out


def project_1d(
    factor: Factor1d,
    N: int,
    k: int,
    interval: Optional[Domain] = None,
    order: Optional[int] = None,
) -> np.ndarray:
    """Hierarchical coefficients (levels 0..N) of the projection of a 1D function."""
    n = hierarchical_size(N, k)
    if factor is None:
        coeffs = np.zeros(n)
        coeffs[0] = 1.0
        return coeffs
    interval = interval or Domain.unit(1)
    tables = get_tables(k, N, order or k + 2)
    x = interval.lower[0] + interval.widths[0] * tables.points
    samples = _factor_values(factor, x)
    if not np.all(np.isfinite(samples)):
        raise ProjectionError("Non-finite samples of the projected function")
    return tables.values.T @ (tables.weights * samples)


def _tensor_points(domain: Domain, rule: QuadratureRule) -> np.ndarray:
    d = domain.d
    grid_size = rule.points.size ** d
    if grid_size > settings.max_grid_points:
        raise ProjectionError(
            f"Full quadrature grid of {grid_size} points exceeds max_grid_points={settings.max_grid_points}"
        )
    axes = [domain.lower[m] + domain.widths[m] * rule.points for m in range(d)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([coords.ravel() for coords in mesh], axis=-1)


def project(
    f: ScalarField,
    N: int,
    k: int,
    d: Optional[int] = None,
    domain: Optional[Domain] = None,
    rule: Optional[QuadratureRule] = None,
) -> SparseGridFunction:
    """
    L2 projection of a general field f(points) -> values, points of shape (n, d).

    Coefficients are quadrature inner products on the finest grid at resolution N.
    """
    if domain is None:
        if d is None:
            raise ProjectionError("project needs either d or a domain")
        domain = Domain.unit(d)
    d = domain.d
    rule = rule or QuadratureRule.for_space(N, k)
    points = _tensor_points(domain, rule)
    samples = np.asarray(f(points), dtype=float)
    if not np.all(np.isfinite(samples)):
        raise ProjectionError("Non-finite samples of the projected function")
    samples = samples.reshape((rule.points.size,) * d)

    tables = get_tables(k, N, rule.order)
    projector = (tables.values.T @ sparse.diags(rule.weights)).toarray()
    coeffs = samples
    for m in range(d):
        coeffs = np.moveaxis(np.tensordot(projector, coeffs, axes=([1], [m])), 0, m)

    space = get_space(N, k, d)
    return SparseGridFunction(space, domain, space.restrict(coeffs))


def project_separable(
    factors: Union[SeparableFunction, Sequence[Factor1d]],
    N: int,
    k: int,
    domain: Optional[Domain] = None,
    order: Optional[int] = None,
) -> SparseGridFunction:
    """Projection of a separable field, computed from 1D projections per dimension."""
    fn = factors if isinstance(factors, SeparableFunction) else SeparableFunction.product(factors)
    d = fn.d
    domain = domain or Domain.unit(d)
    space = get_space(N, k, d)
    values = np.zeros(space.size, dtype=complex)

    for coef, term_factors in fn.terms:
        vectors = [project_1d(g, N, k, domain.axis(m), order) for m, g in enumerate(term_factors)]
        values += coef * _tensor_blocks(space, vectors)

    return SparseGridFunction(space, domain, fn._reduce(values))


def _tensor_blocks(space, vectors: Sequence[np.ndarray]) -> np.ndarray:
    values = np.empty(space.size, dtype=np.result_type(*vectors))
    for b, level in enumerate(space.levels):
        slices = space.hierarchical_slices(level)
        block = reduce(np.multiply.outer, [vectors[m][slices[m]] for m in range(space.d)])
        values[space.block_slice(b)] = np.ravel(block)
    return values


def tensorize(N: int, k: int, vectors: Sequence[np.ndarray], domain: Domain) -> SparseGridFunction:
    """Sparse function whose blocks are outer products of 1D hierarchical coefficient vectors."""
    space = get_space(N, k, len(vectors))
    return SparseGridFunction(space, domain, _tensor_blocks(space, vectors))


def separable_norm_sq(fn: SeparableFunction, domain: Domain, N: int, k: int, order: Optional[int] = None) -> float:
    """||f||^2 of a separable field from 1D quadrature of factor products."""
    rule = QuadratureRule.for_space(N, k, order)
    terms = fn.real_terms()
    total = 0.0 + 0.0j
    for coef_r, factors_r in terms:
        for coef_s, factors_s in terms:
            value = coef_r * coef_s
            for m in range(fn.d):
                x = domain.lower[m] + domain.widths[m] * rule.points
                value *= domain.widths[m] * np.sum(
                    rule.weights * _factor_values(factors_r[m], x) * _factor_values(factors_s[m], x)
                )
            total += value
    return float(np.real(total))


def l2_error(
    u: SparseGridFunction,
    f_exact: Union[ScalarField, SeparableFunction, SparseGridFunction],
    rule: Optional[QuadratureRule] = None,
) -> float:
    """
    ||u_h - f|| over the domain of u_h.

    Sparse-grid references are compared by Parseval. General fields use tensor-grid
    quadrature; separable fields too large for the grid use the orthogonal split
    ||u - f||^2 = ||u - Pf||^2 + ||f||^2 - ||Pf||^2.
    """
    if isinstance(f_exact, SparseGridFunction):
        return norm_l2(u - f_exact)

    rule = rule or QuadratureRule.for_space(u.N, u.k)
    if rule.N < u.N:
        raise ProjectionError(f"Quadrature resolution {rule.N} below space level {u.N}")

    grid_size = rule.points.size ** u.d
    if isinstance(f_exact, SeparableFunction) and grid_size > settings.max_grid_points:
        logger.warning(f"Error grid of {grid_size} points exceeds max_grid_points; using the orthogonal split")
        projected = project_separable(f_exact, u.N, u.k, u.domain, rule.order)
        defect = separable_norm_sq(f_exact, u.domain, u.N, u.k, rule.order) - norm_l2(projected) ** 2
        return float(np.sqrt(norm_l2(u - projected) ** 2 + max(defect, 0.0)))

    points = _tensor_points(u.domain, rule)
    exact = np.asarray(f_exact(points), dtype=float).reshape((rule.points.size,) * u.d)
    tables = get_tables(u.k, rule.N, rule.order)
    basis = tables.values[:, :hierarchical_size(u.N, u.k)].toarray()
    diff_sq = (evaluate_on_grid(u, [basis] * u.d) - exact) ** 2
    for _ in range(u.d):
        diff_sq = np.tensordot(rule.weights, diff_sq, axes=([0], [0]))
    return float(np.sqrt(u.domain.volume * diff_sq))
