"""
Sparse index sets, degree-of-freedom bookkeeping and functions in the sparse DG space.

The sparse space collects the tensor-product increment spaces W_l1 x ... x W_ld with
|l|_1 <= N. Coefficients are stored in one flat vector split into dense blocks, one per
level multi-index; inside a block the axis of dimension m runs over the 1D functions of
level l_m in hierarchical order (translation j, then polynomial index i).
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Iterator, Optional, Sequence, Union

import numpy as np
from scipy.special import comb

from ..config import settings
from ..errors import SpaceError
from .basis1d import (
    Side,
    get_basis_table,
    hierarchical_size,
    hierarchical_values,
    level_dim,
    level_offset,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True, order=True)
class MultiIndex:
    """Level vector l identifying the increment space W_l1 x ... x W_ld."""
    levels: tuple[int, ...]

    def __post_init__(self):
        if any(level < 0 for level in self.levels):
            raise SpaceError(f"Levels must be nonnegative, got {self.levels}")

    @property
    def d(self) -> int:
        return len(self.levels)

    @property
    def l1(self) -> int:
        return sum(self.levels)

    @property
    def linf(self) -> int:
        return max(self.levels) if self.levels else 0


@dataclass(frozen=True)
class BasisId:
    """Identifier (l, j, i) of one tensor-product basis function; i is 1-based."""
    level: MultiIndex
    translation: tuple[int, ...]
    poly: tuple[int, ...]

    def __post_init__(self):
        d = self.level.d
        if len(self.translation) != d or len(self.poly) != d:
            raise SpaceError("BasisId components must all have the same dimension")
        for level, j in zip(self.level.levels, self.translation):
            max_j = max(0, 2 ** (level - 1) - 1) if level > 0 else 0
            if not 0 <= j <= max_j:
                raise SpaceError(f"Translation {j} out of range [0, {max_j}] for level {level}")
        if any(i < 1 for i in self.poly):
            raise SpaceError(f"Polynomial indices are 1-based, got {self.poly}")

    def validate(self, k: int, N: int) -> None:
        """Check polynomial indices against degree k and the level sum against N."""
        if any(i > k + 1 for i in self.poly):
            raise SpaceError(f"Polynomial index in {self.poly} exceeds k+1={k + 1}")
        if self.level.l1 > N:
            raise SpaceError(f"Level {self.level.levels} outside the sparse set |l|_1 <= {N}")


def enumerate_levels(N: int, d: int) -> list[MultiIndex]:
    """All level multi-indices with |l|_1 <= N, lexicographically sorted."""
    if N < 0 or d < 1:
        raise SpaceError(f"enumerate_levels needs N >= 0 and d >= 1, got N={N}, d={d}")

    def recurse(dims: int, budget: int) -> Iterator[tuple[int, ...]]:
        if dims == 1:
            for level in range(budget + 1):
                yield (level,)
            return
        for level in range(budget + 1):
            for rest in recurse(dims - 1, budget - level):
                yield (level,) + rest

    return [MultiIndex(levels) for levels in recurse(d, N)]


def level_count(N: int, d: int) -> int:
    """Size of the sparse level set, C(N+d, d)."""
    return int(comb(N + d, d, exact=True))


def block_shape(level: MultiIndex, k: int) -> tuple[int, ...]:
    return tuple(level_dim(lm, k) for lm in level.levels)


def dof_count(N: int, k: int, d: int) -> int:
    """Number of basis functions of the sparse space with |l|_1 <= N."""
    return sum(int(np.prod(block_shape(level, k))) for level in enumerate_levels(N, d))


def full_grid_dof_count(N: int, k: int, d: int) -> int:
    return hierarchical_size(N, k) ** d


@dataclass(frozen=True)
class Fiber:
    """Flat positions of all coefficients sharing the levels off axis `axis`."""
    axis: int
    length: int
    index: np.ndarray


class SparseSpace:
    """
    Block layout of the sparse space for (N, k, d).

    Also precomputes, per dimension, the fibers used by dimension-by-dimension sweeps:
    with the levels of the other dimensions fixed at r, the blocks with l_m = 0..N-|r|
    concatenated along axis m run through the 1D hierarchical index of that dimension.
    """

    def __init__(self, N: int, k: int, d: int):
        if N < 0 or d < 1:
            raise SpaceError(f"Invalid sparse space N={N}, d={d}")
        self.N = N
        self.k = k
        self.d = d
        self.levels = enumerate_levels(N, d)
        self.shapes = [block_shape(level, k) for level in self.levels]
        sizes = [int(np.prod(shape)) for shape in self.shapes]
        self.offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(int)
        self.size = int(self.offsets[-1])
        self.block_number = {level.levels: b for b, level in enumerate(self.levels)}
        self.fibers = [self._build_fibers(m) for m in range(d)]
        self.index_levels = self._index_levels()

    def __repr__(self) -> str:
        return f"SparseSpace(N={self.N}, k={self.k}, d={self.d}, dof={self.size})"

    def block_slice(self, b: int) -> slice:
        return slice(self.offsets[b], self.offsets[b + 1])

    def block_indices(self, b: int) -> np.ndarray:
        return np.arange(self.offsets[b], self.offsets[b + 1]).reshape(self.shapes[b])

    def _build_fibers(self, m: int) -> list[Fiber]:
        fibers = []
        for level in self.levels:
            if level.levels[m] != 0:
                continue
            budget = self.N - level.l1
            pieces = []
            for lm in range(budget + 1):
                key = level.levels[:m] + (lm,) + level.levels[m + 1:]
                pieces.append(self.block_indices(self.block_number[key]))
            index = np.concatenate(pieces, axis=m)
            fibers.append(Fiber(axis=m, length=hierarchical_size(budget, self.k), index=index))
        return fibers

    def _index_levels(self) -> np.ndarray:
        """Level of every flat coefficient in each dimension; shape (size, d)."""
        out = np.empty((self.size, self.d), dtype=int)
        for b, level in enumerate(self.levels):
            out[self.block_slice(b)] = level.levels
        return out

    def hierarchical_slices(self, level: MultiIndex) -> tuple[slice, ...]:
        """Position of a block inside the full hierarchical tensor."""
        return tuple(
            slice(level_offset(lm, self.k), level_offset(lm, self.k) + level_dim(lm, self.k))
            for lm in level.levels
        )

    def restrict(self, full: np.ndarray) -> np.ndarray:
        """Flat sparse coefficients from a full hierarchical tensor."""
        values = np.empty(self.size, dtype=full.dtype)
        for b, level in enumerate(self.levels):
            values[self.block_slice(b)] = full[self.hierarchical_slices(level)].ravel()
        return values


@lru_cache(maxsize=64)
def get_space(N: int, k: int, d: int) -> SparseSpace:
    """Get or build the shared sparse-space layout for (N, k, d)."""
    space = SparseSpace(N, k, d)
    logger.debug(f"Built {space}")
    return space


@dataclass(frozen=True)
class Domain:
    """Axis-aligned box with an affine map onto the reference cube [0, 1]^d."""
    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self):
        if len(self.lower) != len(self.upper):
            raise SpaceError("Domain bounds must have equal length")
        if any(b <= a for a, b in zip(self.lower, self.upper)):
            raise SpaceError(f"Degenerate domain {self.lower} x {self.upper}")

    @classmethod
    def unit(cls, d: int) -> "Domain":
        return cls(lower=(0.0,) * d, upper=(1.0,) * d)

    @classmethod
    def product(cls, *boxes: "Domain") -> "Domain":
        return cls(
            lower=sum((box.lower for box in boxes), ()),
            upper=sum((box.upper for box in boxes), ()),
        )

    @property
    def d(self) -> int:
        return len(self.lower)

    @property
    def widths(self) -> np.ndarray:
        return np.asarray(self.upper) - np.asarray(self.lower)

    @property
    def volume(self) -> float:
        return float(np.prod(self.widths))

    def to_reference(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if points.shape[-1] != self.d:
            raise SpaceError(f"Points have dimension {points.shape[-1]}, domain has {self.d}")
        ref = (points - np.asarray(self.lower)) / self.widths
        tol = 1e-12
        if np.any((ref < -tol) | (ref > 1.0 + tol)):
            raise SpaceError("Evaluation point outside the domain")
        return np.clip(ref, 0.0, 1.0)

    def from_reference(self, ref: np.ndarray) -> np.ndarray:
        return np.asarray(self.lower) + np.asarray(ref) * self.widths

    def axis(self, m: int) -> "Domain":
        return Domain(lower=(self.lower[m],), upper=(self.upper[m],))


@dataclass
class SparseGridFunction:
    """
    A function u_h in the sparse DG space on a box domain.

    `values` is the flat coefficient vector. The basis is orthonormal on the reference cube,
    so ||u_h||^2 = volume * sum(values^2).
    """
    space: SparseSpace
    domain: Domain
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.space.size,):
            raise SpaceError(f"Expected {self.space.size} coefficients, got {self.values.shape}")
        if self.domain.d != self.space.d:
            raise SpaceError("Domain and space dimensions differ")

    @classmethod
    def zeros(cls, space: SparseSpace, domain: Optional[Domain] = None) -> "SparseGridFunction":
        return cls(space, domain or Domain.unit(space.d), np.zeros(space.size))

    @property
    def N(self) -> int:
        return self.space.N

    @property
    def k(self) -> int:
        return self.space.k

    @property
    def d(self) -> int:
        return self.space.d

    def with_values(self, values: np.ndarray) -> "SparseGridFunction":
        return SparseGridFunction(self.space, self.domain, values)

    def copy(self) -> "SparseGridFunction":
        return self.with_values(self.values.copy())

    def block(self, level: Union[MultiIndex, Sequence[int]]) -> np.ndarray:
        """Dense coefficient block of a level multi-index (a view)."""
        key = level.levels if isinstance(level, MultiIndex) else tuple(level)
        b = self.space.block_number.get(key)
        if b is None:
            raise SpaceError(f"Level {key} is not part of the sparse set")
        return self.values[self.space.block_slice(b)].reshape(self.space.shapes[b])

    def blocks(self) -> Iterator[tuple[MultiIndex, np.ndarray]]:
        for level in self.space.levels:
            yield level, self.block(level)

    def _position(self, basis_id: BasisId) -> tuple[np.ndarray, tuple[int, ...]]:
        basis_id.validate(self.k, self.N)
        local = tuple(j * (self.k + 1) + (i - 1) for j, i in zip(basis_id.translation, basis_id.poly))
        return self.block(basis_id.level), local

    def coefficient(self, basis_id: BasisId) -> float:
        block, local = self._position(basis_id)
        return float(block[local])

    def set_coefficient(self, basis_id: BasisId, value: float) -> None:
        block, local = self._position(basis_id)
        block[local] = value

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))

    def _check(self, other: "SparseGridFunction") -> None:
        if other.space is not self.space and (other.space.N, other.space.k, other.space.d) != (self.N, self.k, self.d):
            raise SpaceError("Operands live in different sparse spaces")

    def __add__(self, other: "SparseGridFunction") -> "SparseGridFunction":
        self._check(other)
        return self.with_values(self.values + other.values)

    def __sub__(self, other: "SparseGridFunction") -> "SparseGridFunction":
        self._check(other)
        return self.with_values(self.values - other.values)

    def __mul__(self, scalar: float) -> "SparseGridFunction":
        return self.with_values(self.values * scalar)

    __rmul__ = __mul__

    def __truediv__(self, scalar: float) -> "SparseGridFunction":
        return self.with_values(self.values / scalar)

    def __neg__(self) -> "SparseGridFunction":
        return self.with_values(-self.values)

    def inner(self, other: "SparseGridFunction") -> float:
        """L2 inner product via Parseval."""
        self._check(other)
        return float(self.domain.volume * np.dot(self.values, other.values))

    def to_full_tensor(self) -> np.ndarray:
        """Coefficients embedded in the full hierarchical tensor of shape (n,)*d."""
        n = hierarchical_size(self.N, self.k)
        if n ** self.d > settings.max_grid_points:
            raise SpaceError(f"Full tensor of {n ** self.d} entries exceeds max_grid_points")
        full = np.zeros((n,) * self.d)
        for level, block in self.blocks():
            full[self.space.hierarchical_slices(level)] = block
        return full

    def evaluate(self, points: np.ndarray, side: Side = "right") -> np.ndarray:
        """Point values at physical points of shape (npoints, d)."""
        ref = self.domain.to_reference(points)
        table = get_basis_table(self.k)
        tables = [hierarchical_values(table, self.N, ref[:, m], side) for m in range(self.d)]
        out = np.zeros(ref.shape[0])
        for level, block in self.blocks():
            slices = self.space.hierarchical_slices(level)
            acc = np.tensordot(tables[0][:, slices[0]], block, axes=([1], [0]))
            for m in range(1, self.d):
                acc = np.einsum("pa...,pa->p...", acc, tables[m][:, slices[m]])
            out += acc
        return out

    def __call__(self, points: np.ndarray) -> np.ndarray:
        return self.evaluate(points)


def eval_point(u: SparseGridFunction, x: Sequence[float], side: Side = "right") -> float:
    """u_h at a single physical point."""
    return float(u.evaluate(np.asarray(x, dtype=float)[None, :], side)[0])


def norm_l2(u: SparseGridFunction) -> float:
    """L2 norm by Parseval."""
    return float(np.sqrt(u.domain.volume * np.dot(u.values, u.values)))


def evaluate_on_grid(u: SparseGridFunction, matrices: Sequence[np.ndarray]) -> np.ndarray:
    """
    Values of u_h on a tensor grid.

    matrices[m] holds the 1D hierarchical functions at the grid nodes of dimension m,
    shape (P_m, (k+1) 2^N).
    """
    grid_size = int(np.prod([mat.shape[0] for mat in matrices]))
    if grid_size > settings.max_grid_points:
        raise SpaceError(f"Tensor grid of {grid_size} points exceeds max_grid_points")
    values = u.to_full_tensor()
    for m, mat in enumerate(matrices):
        values = np.moveaxis(np.tensordot(mat, values, axes=([1], [m])), 0, m)
    return values


MatrixSet = Sequence[Optional[np.ndarray]]


def _sweep(space: SparseSpace, matrix: np.ndarray, values: np.ndarray, m: int) -> np.ndarray:
    """Apply a 1D matrix along dimension m on every fiber, staying in the sparse set."""
    out = np.empty_like(values)

    def apply(fiber: Fiber) -> None:
        n = fiber.length
        block = values[fiber.index]
        result = np.tensordot(matrix[:n, :n], block, axes=([1], [m]))
        out[fiber.index] = np.moveaxis(result, 0, m)

    fibers = space.fibers[m]
    if settings.workers > 1 and len(fibers) > 1:
        with ThreadPoolExecutor(max_workers=settings.workers) as pool:
            list(pool.map(apply, fibers))
    else:
        for fiber in fibers:
            apply(fiber)
    return out


@dataclass(frozen=True, eq=False)
class SplitMatrix:
    """A 1D operator split into its level-lower (out <= in) and level-upper parts."""
    full: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    @classmethod
    def from_matrix(cls, matrix: np.ndarray, levels: np.ndarray) -> "SplitMatrix":
        lower_mask = levels[:, None] <= levels[None, :]
        return cls(full=matrix, lower=np.where(lower_mask, matrix, 0.0), upper=np.where(lower_mask, 0.0, matrix))


def apply_tensor_term(space: SparseSpace, matrices: Sequence[Optional[SplitMatrix]], values: np.ndarray) -> np.ndarray:
    """
    Sparse-restricted product (A_1 x ... x A_d) u for coefficients u in the sparse set.

    Each dimension is split into level-lower and level-upper parts so that every
    intermediate stays in the sparse set: for the lower part the sweep in dimension m
    goes first, for the upper part it goes last. `None` stands for the identity.
    """
    active = [m for m, mat in enumerate(matrices) if mat is not None]
    if not active:
        return values.copy()

    def recurse(position: int, x: np.ndarray) -> np.ndarray:
        m = active[position]
        split = matrices[m]
        if position == len(active) - 1:
            return _sweep(space, split.full, x, m)
        first = recurse(position + 1, _sweep(space, split.lower, x, m))
        second = _sweep(space, split.upper, recurse(position + 1, x), m)
        return first + second

    return recurse(0, values)


def export_snapshot(
    u: SparseGridFunction,
    path: Union[str, Path],
    resolution: int = 64,
    time: float = 0.0,
    cut: Optional[Sequence[float]] = None,
) -> Path:
    """
    Write point values on a uniform resolution x resolution grid as a plain-text table.

    For d > 2 the grid spans the first two dimensions; the remaining coordinates are held
    at `cut` (default: the domain midpoint).
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lower, upper = np.asarray(u.domain.lower), np.asarray(u.domain.upper)
    fixed = 0.5 * (lower + upper) if cut is None else np.asarray(cut, dtype=float)
    axes = [np.linspace(lower[m], upper[m], resolution) for m in range(min(u.d, 2))]
    mesh = np.meshgrid(*axes, indexing="ij")
    points = np.tile(fixed, (mesh[0].size, 1))
    for m, coords in enumerate(mesh):
        points[:, m] = coords.ravel()
    values = u.evaluate(points)

    with open(path, "w") as fh:
        fh.write(f"# dimension {u.d}\n# N {u.N}\n# k {u.k}\n# time {time:.17g}\n")
        for point, value in zip(points, values):
            fh.write(" ".join(f"{c:.17g}" for c in point) + f" {value:.17g}\n")
    logger.info(f"Snapshot written to {path}")
    return path

