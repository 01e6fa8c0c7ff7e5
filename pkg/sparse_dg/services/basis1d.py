"""
One-dimensional orthonormal multiwavelet bases on [0, 1].

Level 0 holds the orthonormal shifted Legendre polynomials of degree <= k. Level l >= 1
holds 2^(l-1) dilated and translated copies of k+1 mother wavelets, each orthogonal to
every polynomial of degree <= k on [0, 1]. All functions up to level N share one flat
"hierarchical index": ordered by level, then translation j, then polynomial index i.
"""
import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Literal, Optional

import numpy as np
from numpy.polynomial import legendre
from scipy import sparse

from ..errors import BasisError

logger = logging.getLogger(__name__)

MIN_DEGREE = 1
MAX_DEGREE = 4

Side = Literal["left", "right"]


def level_dim(level: int, k: int) -> int:
    """Dimension of the increment space W_level on [0, 1]."""
    return (k + 1) if level == 0 else (k + 1) * 2 ** (level - 1)


def level_offset(level: int, k: int) -> int:
    """First flat hierarchical index belonging to `level`."""
    return 0 if level == 0 else (k + 1) * 2 ** (level - 1)


def hierarchical_size(N: int, k: int) -> int:
    """Number of 1D functions on levels 0..N (equals the full-grid DG count)."""
    return (k + 1) * 2 ** N


def flat_levels(N: int, k: int) -> np.ndarray:
    """Level of every flat hierarchical index up to level N."""
    levels = np.zeros(hierarchical_size(N, k), dtype=int)
    for level in range(1, N + 1):
        start = level_offset(level, k)
        levels[start:start + level_dim(level, k)] = level
    return levels


def flat_index(level: int, j: int, i: int, k: int) -> int:
    """Flat hierarchical index of v^j_{i,level} (i is 1-based)."""
    return level_offset(level, k) + j * (k + 1) + (i - 1)


def gauss_legendre_01(n: int) -> tuple[np.ndarray, np.ndarray]:
    """n-point Gauss-Legendre rule mapped to [0, 1]."""
    nodes, weights = legendre.leggauss(n)
    return 0.5 * (nodes + 1.0), 0.5 * weights


def legendre_values(y: np.ndarray, k: int, deriv: int = 0) -> np.ndarray:
    """
    Orthonormal shifted Legendre polynomials sqrt(2r+1) P_r(2y-1), r = 0..k.

    Returns an array of shape y.shape + (k+1,) holding the `deriv`-th derivative in y.
    """
    y = np.asarray(y, dtype=float)
    t = 2.0 * y - 1.0
    scale = np.sqrt(2.0 * np.arange(k + 1) + 1.0)
    if deriv == 0:
        values = legendre.legvander(t, k) * scale
    else:
        identity = np.eye(k + 1)
        columns = [
            np.broadcast_to(legendre.legval(t, legendre.legder(identity[r], deriv)), t.shape)
            for r in range(k + 1)
        ]
        values = np.stack(columns, axis=-1) * scale * 2.0 ** deriv
    return values.reshape(y.shape + (k + 1,))


@dataclass(frozen=True, eq=False)
class Basis1dTable:
    """
    Coefficient table of the multiwavelet basis of degree k.

    legendre_coeffs[i, r]: coefficient of P_r(2x-1) in the i-th orthonormal polynomial.
    mother_coeffs[i, h, r]: coefficient of sqrt(2) * P~_r(2x - h) on half h (0: [0, 1/2],
    1: [1/2, 1]) in the i-th mother wavelet. Those half-pieces are orthonormal on [0, 1],
    so Euclidean products of coefficient vectors are L2 products of the functions.
    """
    k: int
    legendre_coeffs: np.ndarray
    mother_coeffs: np.ndarray


def _two_scale_matrices(k: int) -> tuple[np.ndarray, np.ndarray]:
    """Restrictions of the level-0 polynomials to each half, in half-piece coordinates."""
    y, w = gauss_legendre_01(k + 1)
    fine = legendre_values(y, k)
    left = legendre_values(0.5 * y, k)
    right = legendre_values(0.5 * (y + 1.0), k)
    h0 = (left * w[:, None]).T @ fine / np.sqrt(2.0)
    h1 = (right * w[:, None]).T @ fine / np.sqrt(2.0)
    return h0, h1


def _orthogonalize(vector: np.ndarray, rows: list[np.ndarray]) -> np.ndarray:
    # two passes of classical Gram-Schmidt
    for _ in range(2):
        for row in rows:
            vector = vector - (row @ vector) * row
    return vector


def build_basis_table(k: int) -> Basis1dTable:
    """
    Build the degree-k multiwavelet table by Gram-Schmidt on piecewise polynomials.

    Candidates are the half-pieces supported on [0, 1/2]; each is orthogonalized against
    the global polynomials of degree <= k and the wavelets accepted so far. The sign of
    each wavelet is fixed so that the highest nonzero coefficient of its right piece is
    positive.
    """
    if not MIN_DEGREE <= k <= MAX_DEGREE:
        raise BasisError(f"Polynomial degree k={k} outside supported range [{MIN_DEGREE}, {MAX_DEGREE}]")

    h0, h1 = _two_scale_matrices(k)
    globals_ = [row for row in np.hstack([h0, h1])]
    accepted = list(globals_)
    wavelets = []

    for s in range(k + 1):
        candidate = np.zeros(2 * (k + 1))
        candidate[s] = 1.0
        vector = _orthogonalize(candidate, accepted)
        norm = np.linalg.norm(vector)
        if norm < 1e-8:
            continue
        vector = _orthogonalize(vector / norm, accepted)
        vector /= np.linalg.norm(vector)

        right = vector[k + 1:]
        nonzero = np.flatnonzero(np.abs(right) > 1e-10)
        if nonzero.size and right[nonzero[-1]] < 0:
            vector = -vector

        accepted.append(vector)
        wavelets.append(vector)

    if len(wavelets) != k + 1:
        raise BasisError(f"Wavelet construction produced {len(wavelets)} functions, expected {k + 1}")

    mother = np.array(wavelets).reshape(k + 1, 2, k + 1)
    logger.debug(f"Built multiwavelet table for k={k}")
    return Basis1dTable(k=k, legendre_coeffs=np.diag(np.sqrt(2.0 * np.arange(k + 1) + 1.0)), mother_coeffs=mother)


@lru_cache(maxsize=None)
def get_basis_table(k: int) -> Basis1dTable:
    """Get or build the shared (immutable) table for degree k."""
    return build_basis_table(k)


def _mother_values(table: Basis1dTable, s: np.ndarray, side: Side, deriv: int = 0) -> np.ndarray:
    """All k+1 mother wavelets at points s in [0, 1]; shape (len(s), k+1)."""
    k = table.k
    half = (s > 0.5) if side == "left" else (s >= 0.5)
    y = 2.0 * s - half
    pieces = legendre_values(y, k, deriv) * np.sqrt(2.0) * 2.0 ** deriv
    coeffs = table.mother_coeffs[:, half.astype(int), :]
    return np.einsum("pr,ipr->pi", pieces, coeffs)


def _validate_index(table: Basis1dTable, level: int, j: int, i: int) -> None:
    if level < 0:
        raise BasisError(f"Level must be nonnegative, got {level}")
    max_j = max(0, 2 ** (level - 1) - 1) if level > 0 else 0
    if not 0 <= j <= max_j:
        raise BasisError(f"Translation j={j} out of range [0, {max_j}] for level {level}")
    if not 1 <= i <= table.k + 1:
        raise BasisError(f"Polynomial index i={i} out of range [1, {table.k + 1}]")


def eval_1d(
    table: Basis1dTable,
    level: int,
    j: int,
    i: int,
    x,
    side: Side = "right",
    deriv: int = 0,
):
    """
    Evaluate v^j_{i,level} at x in [0, 1].

    At dyadic breakpoints the limit from `side` is returned ("right" by default); at the
    domain ends the only available one-sided limit is used.
    """
    _validate_index(table, level, j, i)
    x_arr = np.asarray(x, dtype=float)
    if np.any((x_arr < 0.0) | (x_arr > 1.0)):
        raise BasisError("Evaluation point outside [0, 1]")

    if level == 0:
        values = legendre_values(x_arr, table.k, deriv)[..., i - 1]
    else:
        cells = 2 ** (level - 1)
        t = np.atleast_1d(x_arr * cells - j)
        if side == "right":
            inside = ((t >= 0.0) & (t < 1.0)) | ((t == 1.0) & (j == cells - 1))
        else:
            inside = ((t > 0.0) & (t <= 1.0)) | ((t == 0.0) & (j == 0))
        s = np.clip(t, 0.0, 1.0)
        mother = _mother_values(table, s, side, deriv)[:, i - 1]
        values = np.where(inside, mother, 0.0) * 2.0 ** ((level - 1) / 2) * float(cells) ** deriv
        values = values.reshape(x_arr.shape)

    return float(values) if np.ndim(values) == 0 else values


@dataclass(frozen=True)
class EdgeTraces:
    """
    One-sided traces of a single basis function on its support [a, b].

    The limits taken from outside the support are zero; at the ends of [0, 1] this is the
    zero extension.
    """
    support: tuple[float, float]
    left_end: float
    right_end: float
    mid_left: float
    mid_right: float

    @property
    def left_limits(self) -> tuple[float, float]:
        """Limits from the left at a and at b."""
        return 0.0, self.right_end

    @property
    def right_limits(self) -> tuple[float, float]:
        """Limits from the right at a and at b."""
        return self.left_end, 0.0


def eval_1d_edges(table: Basis1dTable, level: int, j: int, i: int) -> EdgeTraces:
    """
    Left and right limits at both support ends, plus both limits at the support midpoint
    (where the level >= 1 functions break).
    """
    _validate_index(table, level, j, i)
    width = 1.0 if level == 0 else 2.0 ** -(level - 1)
    a, b = j * width, (j + 1) * width
    mid = 0.5 * (a + b)
    return EdgeTraces(
        support=(a, b),
        left_end=eval_1d(table, level, j, i, a, side="right"),
        right_end=eval_1d(table, level, j, i, b, side="left"),
        mid_left=eval_1d(table, level, j, i, mid, side="left"),
        mid_right=eval_1d(table, level, j, i, mid, side="right"),
    )


def hierarchical_values(
    table: Basis1dTable,
    N: int,
    x,
    side: Side = "right",
    deriv: int = 0,
) -> np.ndarray:
    """Values of all functions on levels 0..N at points x; shape (len(x), (k+1) 2^N)."""
    k = table.k
    x = np.asarray(x, dtype=float).ravel()
    rows = np.arange(x.size)[:, None]
    out = np.zeros((x.size, hierarchical_size(N, k)))
    out[:, :k + 1] = legendre_values(x, k, deriv)

    for level in range(1, N + 1):
        cells = 2 ** (level - 1)
        t = x * cells
        j = np.floor(t) if side == "right" else np.ceil(t) - 1.0
        j = np.clip(j, 0, cells - 1).astype(int)
        s = np.clip(t - j, 0.0, 1.0)
        values = _mother_values(table, s, side, deriv) * 2.0 ** ((level - 1) / 2) * float(cells) ** deriv
        columns = level_offset(level, k) + j[:, None] * (k + 1) + np.arange(k + 1)[None, :]
        out[rows, columns] = values
    return out


@dataclass(frozen=True, eq=False)
class FaceLayout:
    """
    One-sided traces of every hierarchical function on the faces of the finest grid.

    Row f of `minus` / `plus` holds the traces from the cell on the low / high side of
    face f. Ghost sides (zero-exterior boundaries) are zero rows flagged in the masks.
    """
    minus: np.ndarray
    plus: np.ndarray
    minus_x: np.ndarray
    plus_x: np.ndarray
    minus_ghost: np.ndarray
    plus_ghost: np.ndarray


@dataclass(frozen=True, eq=False)
class HierarchicalTables:
    """Quadrature-point values, derivatives and face traces of all 1D functions up to level N."""
    k: int
    N: int
    order: int
    points: np.ndarray
    weights: np.ndarray
    values: sparse.csr_matrix
    derivatives: sparse.csr_matrix
    levels: np.ndarray
    left_traces: np.ndarray
    right_traces: np.ndarray

    @property
    def size(self) -> int:
        return hierarchical_size(self.N, self.k)

    def faces(self, periodic: bool) -> FaceLayout:
        """Face traces for a periodic or zero-exterior layout."""
        cells = 2 ** self.N
        face_x = np.arange(cells + 1) / cells
        if periodic:
            minus = self.left_traces[:cells].copy()
            minus[0] = self.left_traces[cells]
            plus = self.right_traces[:cells]
            minus_x = face_x[:cells].copy()
            minus_x[0] = 1.0
            ghost = np.zeros(cells, dtype=bool)
            return FaceLayout(minus, plus, minus_x, face_x[:cells], ghost, ghost)

        minus = self.left_traces.copy()
        minus[0] = 0.0
        plus = self.right_traces.copy()
        plus[cells] = 0.0
        minus_ghost = np.zeros(cells + 1, dtype=bool)
        plus_ghost = np.zeros(cells + 1, dtype=bool)
        minus_ghost[0] = True
        plus_ghost[cells] = True
        return FaceLayout(minus, plus, face_x, face_x, minus_ghost, plus_ghost)


def composite_gauss(N: int, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss rule with `order` points on each of the 2^N finest cells of [0, 1]."""
    nodes, weights = gauss_legendre_01(order)
    cells = 2 ** N
    starts = np.arange(cells)[:, None] / cells
    points = (starts + nodes[None, :] / cells).ravel()
    return points, np.tile(weights / cells, cells)


@lru_cache(maxsize=32)
def get_tables(k: int, N: int, order: Optional[int] = None) -> HierarchicalTables:
    """Get or build the cached hierarchical tables for (k, N, quadrature order)."""
    order = order or 2 * k + 2
    table = get_basis_table(k)
    points, weights = composite_gauss(N, order)
    face_x = np.arange(2 ** N + 1) / 2 ** N
    logger.debug(f"Building hierarchical tables k={k} N={N} order={order}")
    return HierarchicalTables(
        k=k,
        N=N,
        order=order,
        points=points,
        weights=weights,
        values=sparse.csr_matrix(hierarchical_values(table, N, points)),
        derivatives=sparse.csr_matrix(hierarchical_values(table, N, points, deriv=1)),
        levels=flat_levels(N, k),
        left_traces=hierarchical_values(table, N, face_x, side="left"),
        right_traces=hierarchical_values(table, N, face_x, side="right"),
    )
