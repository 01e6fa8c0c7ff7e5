"""Tests for conserved quantities, field modes, entropy functionals and the CSV time series."""
import csv
import math

import numpy as np
import pytest
from scipy.special import erf

from sparse_dg.errors import DiagnosticsError
from sparse_dg.models.reports import ConservationEntry, ConservationReport
from sparse_dg.services.diagnostics import (
    LOG_MODE_FLOOR,
    SERIES_COLUMNS,
    TimeSeriesWriter,
    conserved_quantities,
    convergence_orders,
    convergence_table,
    entropy_functionals,
    log_fourier_mode,
)
from sparse_dg.services.kinetic import (
    PhaseSpaceLayout,
    RelaxationSpec,
    VlasovAmpereState,
    density,
    equilibrium,
    landau_datum,
    poisson_field,
)
from sparse_dg.services.projection import SeparableFunction, project, project_separable
from sparse_dg.services.sparse_space import Domain, SparseGridFunction, get_space, norm_l2

from .oracles import quadrature_2d

VLASOV = PhaseSpaceLayout.vlasov()
SMALL_BOX = PhaseSpaceLayout.relaxation(1, length=2.0, v_cut=2.0)
X_BOX = Domain((0.0,), (4 * math.pi,))


def field(func, N=5, k=2):
    return project(lambda p: func(p[:, 0]), N, k, domain=X_BOX)


def landau_state(N=4, k=2):
    f = project_separable(landau_datum(), N, k, VLASOV.domain)
    return VlasovAmpereState(f, poisson_field(density(f, VLASOV)))


class TestLogFourierMode:
    def test_single_mode(self):
        E = field(lambda x: 0.3 * np.sin(0.5 * x))
        assert log_fourier_mode(E, 1) == pytest.approx(math.log10(0.15), abs=1e-3)

    def test_cosine_counts_the_same(self):
        E = field(lambda x: 0.3 * np.cos(0.5 * x))
        assert log_fourier_mode(E, 1) == pytest.approx(math.log10(0.15), abs=1e-3)

    def test_other_modes_do_not_leak(self):
        E = field(lambda x: 0.3 * np.sin(0.5 * x) + 0.1 * np.cos(x))
        assert log_fourier_mode(E, 1) == pytest.approx(math.log10(0.15), abs=1e-3)
        assert log_fourier_mode(E, 2) == pytest.approx(math.log10(0.05), abs=1e-3)
        assert log_fourier_mode(E, 3) < log_fourier_mode(E, 1) - 3

    def test_zero_field_hits_the_floor(self):
        E = SparseGridFunction.zeros(get_space(5, 2, 1), X_BOX)
        assert log_fourier_mode(E, 1) == LOG_MODE_FLOOR

    def test_invalid_arguments(self):
        E = field(np.sin)
        with pytest.raises(DiagnosticsError):
            log_fourier_mode(E, 0)
        with pytest.raises(DiagnosticsError):
            log_fourier_mode(landau_state().f, 1)


class TestConservedQuantities:
    def test_zero_state(self):
        f = SparseGridFunction.zeros(get_space(3, 1, 2), VLASOV.domain)
        entry = conserved_quantities(f, VLASOV)
        assert entry.particle_number == 0.0
        assert entry.momentum == [0.0]
        assert entry.energy == 0.0
        assert entry.enstrophy == 0.0

    def test_transport_state(self, rng):
        space = get_space(3, 2, 2)
        u = SparseGridFunction(space, Domain((0.0, 0.0), (2.0, 3.0)), rng.standard_normal(space.size))
        entry = conserved_quantities(u, time=0.5)
        assert entry.time == 0.5
        assert entry.particle_number == pytest.approx(6.0 * u.values[0])
        assert entry.enstrophy == pytest.approx(6.0 * np.sum(u.values ** 2))
        assert entry.momentum == []
        assert entry.kinetic_energy == 0.0

    def test_landau_state(self):
        entry = conserved_quantities(landau_state(), VLASOV)
        assert entry.particle_number == pytest.approx(4 * math.pi, rel=1e-7)
        assert entry.momentum[0] == pytest.approx(0.0, abs=1e-12)
        assert entry.kinetic_energy == pytest.approx(2 * math.pi, rel=1e-7)
        assert entry.field_energy == pytest.approx(math.pi, rel=1e-2)
        assert entry.energy == pytest.approx(entry.kinetic_energy + entry.field_energy)

    def test_energy_matches_quadrature(self):
        f = project_separable(equilibrium(SMALL_BOX, RelaxationSpec()), 4, 2, SMALL_BOX.domain)
        E = SparseGridFunction.zeros(get_space(4, 2, 1), SMALL_BOX.x_domain)
        entry = conserved_quantities(VlasovAmpereState(f, E), SMALL_BOX)
        expected = quadrature_2d(lambda p: 0.5 * p[:, 1] ** 2 * f.evaluate(p), (-2.0, -2.0), (2.0, 2.0))
        assert entry.kinetic_energy == pytest.approx(expected, rel=1e-10)
        assert entry.field_energy == 0.0
        assert entry.enstrophy == pytest.approx(norm_l2(f) ** 2)


class TestEntropy:
    N, k = 6, 3
    maxwell_mass = erf(math.sqrt(2.0))

    def project(self, separable):
        return project_separable(separable, self.N, self.k, SMALL_BOX.domain)

    def test_equilibrium(self):
        f = self.project(equilibrium(SMALL_BOX, RelaxationSpec()))
        h_log, h_two = entropy_functionals(f, SMALL_BOX)
        assert h_log == pytest.approx(0.0, abs=1e-6)
        assert h_two == pytest.approx(self.maxwell_mass, rel=1e-6)

    def test_scaled_equilibrium(self):
        f = 2.0 * self.project(equilibrium(SMALL_BOX, RelaxationSpec()))
        h_log, h_two = entropy_functionals(f, SMALL_BOX)
        assert h_log == pytest.approx(2 * math.log(2.0) * self.maxwell_mass, rel=1e-5)
        assert h_two == pytest.approx(4 * self.maxwell_mass, rel=1e-6)

    def test_perturbed_equilibrium(self):
        M = equilibrium(SMALL_BOX, RelaxationSpec())
        (_, (rho, mu)), = M.terms
        bump = lambda x: np.cos(0.5 * math.pi * x)
        f = self.project(SeparableFunction(terms=[(1.0, [rho, mu]), (0.3, [lambda x: rho(x) * bump(x), mu])]))
        ratio = lambda p: 1.0 + 0.3 * bump(p[:, 0])

        h_log, h_two = entropy_functionals(f, SMALL_BOX)
        lower, upper = (-2.0, -2.0), (2.0, 2.0)
        expected_log = quadrature_2d(lambda p: ratio(p) * np.log(ratio(p)) * M(p), lower, upper)
        expected_two = quadrature_2d(lambda p: ratio(p) ** 2 * M(p), lower, upper)
        assert h_log == pytest.approx(expected_log, rel=1e-5)
        assert h_two == pytest.approx(expected_two, rel=1e-6)
        assert h_two > self.maxwell_mass

    def test_negative_values_are_clamped(self):
        f = -1.0 * self.project(equilibrium(SMALL_BOX, RelaxationSpec()))
        h_log, h_two = entropy_functionals(f, SMALL_BOX)
        assert np.isfinite(h_log)
        assert h_two == pytest.approx(self.maxwell_mass, rel=1e-6)


class TestConvergenceOrders:
    def test_second_order_example(self):
        orders = convergence_orders([3.62e-1, 9.17e-2], [1 / 8, 1 / 16])
        assert orders[0] is None
        assert orders[1] == pytest.approx(1.98, abs=5e-3)

    def test_equal_errors(self):
        assert convergence_orders([1e-3, 1e-3], [0.5, 0.25])[1] == pytest.approx(0.0)

    def test_third_order_example(self):
        assert convergence_orders([1.48e-2, 2.13e-3], [1 / 8, 1 / 16])[1] == pytest.approx(2.80, abs=5e-3)

    def test_empty(self):
        assert convergence_orders([], []) == []

    @pytest.mark.parametrize("errors,h", [
        ([1e-2, 0.0], [0.5, 0.25]),
        ([1e-2, -1e-3], [0.5, 0.25]),
        ([1e-2, 1e-3], [0.5, 0.0]),
        ([1e-2, 1e-3], [0.5]),
    ])
    def test_invalid_input(self, errors, h):
        with pytest.raises(DiagnosticsError):
            convergence_orders(errors, h)

    def test_table_rows(self):
        rows = convergence_table([3, 4], [3.62e-1, 9.17e-2], k=1, d=2)
        assert [row.N for row in rows] == [3, 4]
        assert [row.dof for row in rows] == [80, 192]
        assert rows[0].h == 0.125
        assert rows[0].order is None
        assert rows[1].order == pytest.approx(1.98, abs=5e-3)


class TestConservationReport:
    def test_relative_change(self):
        assert ConservationReport.relative(1.1, 1.0) == pytest.approx(0.1)
        assert ConservationReport.relative(-0.9, -1.0) == pytest.approx(0.1)
        assert ConservationReport.relative(1e-3, 0.0) == 1e-3

    def test_drift_and_maximum(self):
        report = ConservationReport()
        report.add(ConservationEntry(time=0.0, particle_number=2.0, momentum=[0.0], kinetic_energy=1.0, enstrophy=4.0))
        report.add(ConservationEntry(time=1.0, particle_number=2.2, momentum=[-0.5], kinetic_energy=0.5,
                                     field_energy=0.4, enstrophy=3.0))
        report.add(ConservationEntry(time=2.0, particle_number=2.0, momentum=[0.1], kinetic_energy=1.0, enstrophy=2.0))

        drift = report.drift(report.entries[1])
        assert drift["mass_rel_err"] == pytest.approx(0.1)
        assert drift["momentum_err"] == [-0.5]
        assert drift["energy_rel_err"] == pytest.approx(-0.1)
        assert drift["enstrophy_rel_err"] == pytest.approx(-0.25)

        worst = report.max_drift()
        assert worst["mass_rel_err"] == pytest.approx(0.1)
        assert worst["momentum_err"] == pytest.approx(0.5)
        assert worst["energy_rel_err"] == pytest.approx(0.1)
        assert worst["enstrophy_rel_err"] == pytest.approx(0.5)


def read_rows(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        return header, [dict(zip(header, row)) for row in reader]


class TestTimeSeriesWriter:
    def test_transport_series(self, tmp_path):
        space = get_space(3, 1, 2)
        u = SparseGridFunction(space, Domain.unit(2), np.ones(space.size))
        writer = TimeSeriesWriter(tmp_path / "series.csv")
        writer(0, 0.0, u)
        writer(1, 0.1, 1.1 * u)

        header, rows = read_rows(tmp_path / "series.csv")
        assert tuple(header) == SERIES_COLUMNS
        assert len(rows) == 2
        assert float(rows[0]["mass_rel_err"]) == 0.0
        assert float(rows[1]["t"]) == pytest.approx(0.1)
        assert float(rows[1]["mass_rel_err"]) == pytest.approx(0.1)
        assert float(rows[1]["enstrophy_rel_err"]) == pytest.approx(0.21)
        for column in ("momentum_err", "energy_rel_err", "logFM1", "H_log", "H2"):
            assert rows[1][column] == ""
        assert len(writer.report.entries) == 2

    def test_vlasov_ampere_series(self, tmp_path):
        state = landau_state()
        writer = TimeSeriesWriter(tmp_path / "va" / "series.csv", VLASOV)
        writer(0, 0.0, state)

        _, rows = read_rows(tmp_path / "va" / "series.csv")
        row = rows[0]
        assert float(row["energy_rel_err"]) == 0.0
        assert float(row["momentum_err"]) == 0.0
        assert float(row["logFM1"]) == pytest.approx(math.log10(0.5), abs=1e-2)
        assert float(row["logFM2"]) < float(row["logFM1"]) - 3
        assert row["H_log"] == ""
        assert writer.entropy_series == []

    def test_relaxation_series(self, tmp_path):
        spec = RelaxationSpec()
        f = project_separable(equilibrium(SMALL_BOX, spec), 5, 2, SMALL_BOX.domain)
        writer = TimeSeriesWriter(tmp_path / "series.csv", SMALL_BOX, relaxation=spec, entropy=True)
        writer(0, 0.0, f)

        _, rows = read_rows(tmp_path / "series.csv")
        assert float(rows[0]["H_log"]) == pytest.approx(0.0, abs=1e-4)
        assert rows[0]["logFM1"] == ""
        assert writer.entropy_series[0][0] == 0.0
        t, error = writer.density_series[0]
        # mu is not renormalized on the cut-off box, so rho_h = erf(sqrt 2) rho_inf
        norm = math.sqrt(2 * math.pi) * erf(math.sqrt(2.0))
        rho_norm = math.sqrt(math.sqrt(math.pi) * erf(2.0)) / norm
        assert t == 0.0
        assert error == pytest.approx((1 - erf(math.sqrt(2.0))) * rho_norm, rel=1e-2)
