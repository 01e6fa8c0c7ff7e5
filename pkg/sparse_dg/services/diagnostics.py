"""
Diagnostics - conserved quantities, Fourier modes of the field, entropy functionals,
convergence orders, and the CSV time series that records them.
"""
import csv
import logging
import math
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from ..errors import DiagnosticsError
from ..models.reports import ConservationEntry, ConservationReport, ConvergenceRow
from .basis1d import composite_gauss, get_basis_table, get_tables, hierarchical_values
from .kinetic import (
    PhaseSpaceLayout,
    RelaxationSpec,
    VlasovAmpereState,
    current_density,
    density,
    equilibrium,
    equilibrium_density,
    integral,
    kinetic_energy_density,
)
from .projection import l2_error
from .sparse_space import SparseGridFunction, dof_count, evaluate_on_grid, norm_l2

logger = logging.getLogger(__name__)

LOG_MODE_FLOOR = -20.0
ENTROPY_CLAMP = 1e-14
FOURIER_MODES = 4

SERIES_COLUMNS = (
    "t",
    "mass_rel_err",
    "momentum_err",
    "energy_rel_err",
    "enstrophy_rel_err",
    *(f"logFM{n}" for n in range(1, FOURIER_MODES + 1)),
    "H_log",
    "H2",
)


def conserved_quantities(
    state: Union[VlasovAmpereState, SparseGridFunction],
    layout: Optional[PhaseSpaceLayout] = None,
    time: float = 0.0,
) -> ConservationEntry:
    """
    Particle number, momentum, energy and enstrophy of a state.

    Without a layout the state is a plain transport solution and only particle number
    and enstrophy are filled in.
    """
    if isinstance(state, VlasovAmpereState):
        f, E = state.f, state.E
    else:
        f, E = state, None

    entry = ConservationEntry(time=time, particle_number=integral(f), enstrophy=norm_l2(f) ** 2)
    if layout is None:
        return entry

    entry.momentum = [integral(j) for j in current_density(f, layout)]
    entry.kinetic_energy = integral(kinetic_energy_density(f, layout))
    if E is not None:
        entry.field_energy = 0.5 * norm_l2(E) ** 2
    return entry


def log_fourier_mode(E: SparseGridFunction, n: int = 1, k_wave: float = 0.5) -> float:
    """
    log10 of the n-th Fourier mode of a 1D field on [a, a + L]:
    (1/L) sqrt(|int E sin(n k x)|^2 + |int E cos(n k x)|^2), floored at -20.
    """
    if n < 1:
        raise DiagnosticsError(f"Fourier mode index must be >= 1, got {n}")
    if E.d != 1:
        raise DiagnosticsError("log_fourier_mode takes a one-dimensional field")
    lower, length = E.domain.lower[0], float(E.domain.widths[0])
    points, weights = composite_gauss(E.N, 2 * (E.k + 3))
    values = hierarchical_values(get_basis_table(E.k), E.N, points) @ E.values
    x = lower + length * points
    wave = n * k_wave * x
    sin_part = length * np.sum(weights * values * np.sin(wave))
    cos_part = length * np.sum(weights * values * np.cos(wave))
    magnitude = math.hypot(sin_part, cos_part) / length
    if magnitude <= 10.0 ** LOG_MODE_FLOOR:
        return LOG_MODE_FLOOR
    return max(math.log10(magnitude), LOG_MODE_FLOOR)


def entropy_functionals(
    f: SparseGridFunction,
    layout: PhaseSpaceLayout,
    spec: Optional[RelaxationSpec] = None,
) -> tuple[float, float]:
    """
    (H_log, H_2) with H = f_h / M: int H log(H) M and int H^2 M, by tensor-grid quadrature.

    H is clamped to 1e-14 inside the logarithm.
    """
    spec = spec or RelaxationSpec()
    tables = get_tables(f.k, f.N, f.k + 2)
    basis = tables.values.toarray()
    values = evaluate_on_grid(f, [basis] * f.d)

    maxwellian = equilibrium(layout, spec)
    domain = f.domain
    axes = [domain.lower[m] + domain.widths[m] * tables.points for m in range(f.d)]
    mesh = np.meshgrid(*axes, indexing="ij")
    points = np.stack([coords.ravel() for coords in mesh], axis=-1)
    M = maxwellian(points).reshape(values.shape)

    H = values / M
    log_integrand = H * np.log(np.maximum(H, ENTROPY_CLAMP)) * M
    square_integrand = H ** 2 * M
    results = []
    for integrand in (log_integrand, square_integrand):
        for _ in range(f.d):
            integrand = np.tensordot(tables.weights, integrand, axes=([0], [0]))
        results.append(float(domain.volume * integrand))
    return results[0], results[1]


def density_error(f: SparseGridFunction, layout: PhaseSpaceLayout, spec: Optional[RelaxationSpec] = None) -> float:
    """||rho_h - rho_inf|| over the x-box."""
    spec = spec or RelaxationSpec()
    return l2_error(density(f, layout), equilibrium_density(layout, spec))


def convergence_orders(errors: Sequence[float], h: Sequence[float]) -> list[Optional[float]]:
    """Observed orders log(e_{i-1}/e_i) / log(h_{i-1}/h_i); the first entry is None."""
    if len(errors) != len(h):
        raise DiagnosticsError(f"Got {len(errors)} errors for {len(h)} mesh sizes")
    if any(e <= 0 for e in errors) or any(x <= 0 for x in h):
        raise DiagnosticsError("Errors and mesh sizes must be positive")
    orders: list[Optional[float]] = [None] if errors else []
    for i in range(1, len(errors)):
        orders.append(math.log(errors[i - 1] / errors[i]) / math.log(h[i - 1] / h[i]))
    return orders


def convergence_table(levels: Sequence[int], errors: Sequence[float], k: int, d: int) -> list[ConvergenceRow]:
    """Rows (N, h_N, DOF, error, order) of an error table."""
    h = [2.0 ** -N for N in levels]
    orders = convergence_orders(errors, h)
    return [
        ConvergenceRow(N=N, h=h_N, dof=dof_count(N, k, d), error=error, order=order)
        for N, h_N, error, order in zip(levels, h, errors, orders)
    ]


def _momentum_error(drift: list[float]) -> float:
    if not drift:
        return float("nan")
    return max(drift, key=abs)


def _format(value: Optional[float]) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ""
    return f"{value:.17g}"


class TimeSeriesWriter:
    """
    Observer that appends one CSV row per call.

    Columns are fixed; quantities that do not apply to the problem are left empty.
    """

    def __init__(
        self,
        path: Union[str, Path],
        layout: Optional[PhaseSpaceLayout] = None,
        relaxation: Optional[RelaxationSpec] = None,
        k_wave: float = 0.5,
        entropy: bool = False,
    ):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.layout = layout
        self.relaxation = relaxation
        self.k_wave = k_wave
        self.entropy = entropy
        self.report = ConservationReport()
        self.entropy_series: list[tuple[float, float, float]] = []
        self.density_series: list[tuple[float, float]] = []
        with open(self.path, "w", newline="") as fh:
            csv.writer(fh).writerow(SERIES_COLUMNS)

    def __call__(self, step: int, t: float, state) -> None:
        entry = conserved_quantities(state, self.layout, t)
        self.report.add(entry)
        drift = self.report.drift(entry)

        modes: list[Optional[float]] = [None] * FOURIER_MODES
        if isinstance(state, VlasovAmpereState):
            modes = [log_fourier_mode(state.E, n, self.k_wave) for n in range(1, FOURIER_MODES + 1)]

        h_log = h_two = None
        if self.entropy and self.layout is not None:
            h_log, h_two = entropy_functionals(state, self.layout, self.relaxation)
            self.entropy_series.append((t, h_log, h_two))
        if self.relaxation is not None and self.layout is not None:
            self.density_series.append((t, density_error(state, self.layout, self.relaxation)))

        row = [
            t,
            drift["mass_rel_err"],
            _momentum_error(drift["momentum_err"]),
            drift["energy_rel_err"] if self.layout is not None else None,
            drift["enstrophy_rel_err"],
            *modes,
            h_log,
            h_two,
        ]
        with open(self.path, "a", newline="") as fh:
            csv.writer(fh).writerow([_format(value) for value in row])
        logger.debug(f"step {step}: t={t:.6g} mass drift {drift['mass_rel_err']:.3e}")
