"""
Run Controller - benchmark orchestration.
Decides how a configured problem is set up, advanced, measured and written out.
"""
import logging
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional

from ..config import settings
from ..errors import ConfigError
from ..models.reports import ConvergenceRow, RunMetadata
from ..models.run_config import FieldMode, Problem, RunConfig
from .benchmarks import KineticBenchmark, kinetic_benchmark, transport_benchmark
from .diagnostics import TimeSeriesWriter, convergence_table
from .kinetic import RelaxationSolver, VlasovAmpereSolver, VlasovAmpereState, reverse_velocity
from .output_writer import OutputWriter, get_output_writer
from .projection import l2_error
from .sparse_space import export_snapshot, get_space
from .time_stepper import StepControl, cfl_dt, integrate
from .transport_operator import TransportOperator

logger = logging.getLogger(__name__)


@dataclass
class Simulation:
    """A problem ready to advance: initial state, right-hand side and step control."""
    state: object
    rhs: Callable
    control: StepControl
    observers: list = field(default_factory=list)
    reference: Optional[Callable] = None


@dataclass
class Outcome:
    state: object
    time: float = 0.0
    steps: int = 0
    dt: float = 0.0
    wall_time: float = 0.0
    error: Optional[float] = None
    artifacts: list[str] = field(default_factory=list)


class RunController:
    """
    Runs benchmarks end to end.

    - run: set up, integrate with diagnostics and snapshots, record metadata
    - convergence: error/order table over a range of levels
    - projection_study: projection errors of the initial datum over a range of levels
    """

    def __init__(self, writer: Optional[OutputWriter] = None):
        self.writer = writer

    def _writer(self, cfg: RunConfig) -> OutputWriter:
        if cfg.output_dir:
            return OutputWriter(cfg.output_dir)
        return self.writer or get_output_writer()

    @staticmethod
    def _apply_runtime(cfg: RunConfig) -> None:
        if cfg.workers is not None:
            settings.workers = cfg.workers

    def run(self, config: RunConfig) -> RunMetadata:
        """Execute one configured run and write its artifacts."""
        cfg = config.resolved()
        self._apply_runtime(cfg)
        writer = self._writer(cfg)
        metadata = RunMetadata(
            problem=cfg.problem.value,
            parameters=cfg.model_dump(mode="json"),
            dimension=cfg.total_dim,
            dof=get_space(cfg.N, cfg.k, cfg.total_dim).size,
        )
        run_dir = writer.run_dir(metadata)
        logger.info(f"Run {metadata.run_id}: {cfg.problem.value} N={cfg.N} k={cfg.k} DOF={metadata.dof}")

        outcome = self._simulate(cfg, cfg.N, run_dir)
        metadata.dt = outcome.dt
        metadata.steps = outcome.steps
        metadata.final_time = outcome.time
        metadata.wall_time = outcome.wall_time
        metadata.l2_error = outcome.error
        metadata.artifacts = outcome.artifacts
        writer.record_run(metadata)
        return metadata

    def convergence(self, config: RunConfig) -> list[ConvergenceRow]:
        """Errors against the problem reference at every level of the sweep."""
        cfg = config.resolved()
        self._apply_runtime(cfg)
        if cfg.problem in (Problem.RELAX_1D1V, Problem.RELAX_2D2V):
            raise ConfigError(
                f"{cfg.problem.value} has no exact reference for a convergence study",
                {"problem.problem": "no reference"},
            )

        levels = cfg.levels()
        errors = []
        for N in levels:
            started = time.perf_counter()
            if cfg.problem in (Problem.VLASOV_LANDAU, Problem.VLASOV_TWOSTREAM):
                error = self.reversibility_error(cfg, N)
            else:
                error = self._simulate(cfg, N).error
            errors.append(error)
            logger.info(f"N={N}: error {error:.3e} ({time.perf_counter() - started:.1f}s)")

        rows = convergence_table(levels, errors, cfg.k, cfg.total_dim)
        writer = self._writer(cfg)
        writer.write_convergence(rows, writer.output_dir / self._table_name(cfg, "convergence"))
        return rows

    def projection_study(self, config: RunConfig) -> list[ConvergenceRow]:
        """||P u0 - u0|| at every level of the sweep."""
        cfg = config.resolved()
        self._apply_runtime(cfg)
        levels = cfg.levels()
        errors = []
        if cfg.is_kinetic:
            bench = kinetic_benchmark(cfg)
            for N in levels:
                errors.append(l2_error(bench.project_initial(N, cfg.k), bench.datum))
        else:
            bench = transport_benchmark(cfg)
            for N in levels:
                errors.append(l2_error(bench.project_initial(N, cfg.k), bench.initial))

        rows = convergence_table(levels, errors, cfg.k, cfg.total_dim)
        writer = self._writer(cfg)
        writer.write_convergence(rows, writer.output_dir / self._table_name(cfg, "projection"))
        return rows

    def reversibility_error(self, config: RunConfig, N: int) -> float:
        """
        Vlasov-Ampere run to T, velocity reversal, run for T again, reversal again;
        the L2 distance to the initial datum.
        """
        cfg = config.resolved()
        bench = kinetic_benchmark(cfg)
        sim = self._kinetic_simulation(cfg, bench, N)
        forward = integrate(sim.state, sim.rhs, sim.control)
        state = forward.state
        turned = VlasovAmpereState(reverse_velocity(state.f, bench.layout), state.E)
        back = integrate(turned, sim.rhs, sim.control, dt=forward.dt)
        returned = reverse_velocity(back.state.f, bench.layout)
        return l2_error(returned, bench.datum)

    @staticmethod
    def _table_name(cfg: RunConfig, kind: str) -> str:
        return f"{kind}-{cfg.problem.value}-k{cfg.k}-d{cfg.total_dim}.csv"

    def _transport_simulation(self, cfg: RunConfig, N: int) -> Simulation:
        bench = transport_benchmark(cfg)
        u0 = bench.project_initial(N, cfg.k)
        operator = TransportOperator(u0.space, u0.domain, bench.operator_field(N, cfg.k, cfg.field_mode),
                                     bench.flux, bench.boundary)
        control = StepControl(
            final_time=cfg.T, k=cfg.k, N=N, speeds=bench.speeds(N, cfg.k),
            widths=list(bench.domain.widths), cfl=cfg.cfl,
        )
        return Simulation(state=u0, rhs=operator, control=control, reference=bench.exact)

    def _kinetic_simulation(self, cfg: RunConfig, bench: KineticBenchmark, N: int) -> Simulation:
        if cfg.field_mode == FieldMode.EXACT:
            logger.warning("field_mode=exact does not apply to kinetic problems; using projected fields")
        layout = bench.layout
        f0 = bench.project_initial(N, cfg.k)
        widths = list(layout.domain.widths)
        if bench.is_vlasov:
            solver = VlasovAmpereSolver(layout, N, cfg.k, bench.flux)
            state = solver.initial_state(f0)
            speeds = [layout.v_cut, max(solver.max_field(state.E), 1.0)]
            control = StepControl(final_time=cfg.T, k=cfg.k, N=N, speeds=speeds, widths=widths, cfl=cfg.cfl)
            return Simulation(state=state, rhs=solver.rhs, control=control)

        solver = RelaxationSolver(layout, N, cfg.k, bench.relaxation, bench.flux)
        speeds = [layout.v_cut] * layout.dx + [layout.x_upper] * layout.dx
        control = StepControl(final_time=cfg.T, k=cfg.k, N=N, speeds=speeds, widths=widths, cfl=cfg.cfl)
        return Simulation(state=f0, rhs=solver.rhs, control=control)

    def _simulate(self, cfg: RunConfig, N: int, run_dir: Optional[Path] = None) -> Outcome:
        """Set up and integrate; with a run directory, also write series and snapshots."""
        bench = kinetic_benchmark(cfg) if cfg.is_kinetic else None
        sim = self._kinetic_simulation(cfg, bench, N) if bench else self._transport_simulation(cfg, N)

        series = None
        if run_dir is not None:
            layout = bench.layout if bench else None
            series = TimeSeriesWriter(
                run_dir / "series.csv",
                layout=layout,
                relaxation=bench.relaxation if bench else None,
                k_wave=bench.k_wave if bench else 0.5,
                entropy=bool(bench and bench.relaxation is not None and layout.dx == 1),
            )
            sim.observers.append(series)

        outcome = self._advance(sim, cfg, run_dir)

        if sim.reference is not None:
            reference = sim.reference(outcome.time)
            if reference is not None:
                outcome.error = l2_error(outcome.state, reference)
        if series is not None:
            outcome.artifacts.append(str(series.path))
            drift = series.report.max_drift()
            logger.info(
                "Max drift: mass {mass_rel_err:.3e}, momentum {momentum_err:.3e}, "
                "energy {energy_rel_err:.3e}, enstrophy {enstrophy_rel_err:.3e}".format(**drift)
            )
            if series.density_series:
                outcome.error = series.density_series[-1][1]
                path = run_dir / "density.csv"
                self._writer(cfg).write_series(("t", "density_l2_err"), series.density_series, path)
                outcome.artifacts.append(str(path))
        return outcome

    def _advance(self, sim: Simulation, cfg: RunConfig, run_dir: Optional[Path]) -> Outcome:
        """Integrate in segments that end on every requested snapshot time."""
        final_time = sim.control.final_time
        snapshot_times = sorted({t for t in cfg.snapshot_times if 0.0 <= t <= final_time}) if run_dir else []
        ends = sorted({t for t in snapshot_times if t > 0.0} | {final_time})
        dt = cfl_dt(sim.control) if final_time > 0 else 0.0
        outcome = Outcome(state=sim.state, dt=dt)

        if 0.0 in snapshot_times:
            outcome.artifacts.append(self._snapshot(sim.state, 0.0, cfg, run_dir))

        t = 0.0
        for i, end in enumerate(ends):
            result = integrate(
                outcome.state,
                sim.rhs,
                replace(sim.control, final_time=end),
                sim.observers,
                stride=cfg.series_stride,
                dt=dt or None,
                start_time=t,
                observe_start=i == 0,
            )
            outcome.state, t = result.state, result.time
            outcome.steps += result.steps
            outcome.wall_time += result.wall_time
            if end in snapshot_times and end > 0.0:
                outcome.artifacts.append(self._snapshot(outcome.state, end, cfg, run_dir))

        outcome.time = t
        logger.info(f"Reached T={t:g} in {outcome.steps} steps, dt={dt:.6g}, {outcome.wall_time:.2f}s")
        return outcome

    @staticmethod
    def _snapshot(state, t: float, cfg: RunConfig, run_dir: Path) -> str:
        f = state.f if isinstance(state, VlasovAmpereState) else state
        path = run_dir / f"snapshot-t{t:.6g}.dat"
        return str(export_snapshot(f, path, cfg.sample_resolution, t))


# Global controller instance
_controller: Optional[RunController] = None


def get_run_controller() -> RunController:
    """Get or create the global run controller."""
    global _controller
    if _controller is None:
        _controller = RunController()
    return _controller
