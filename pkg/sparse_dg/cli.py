"""
Command-line entry point.

    python -m sparse_dg.cli run <config>
    python -m sparse_dg.cli converge <config>
    python -m sparse_dg.cli dof N K D
    python -m sparse_dg.cli project-study <config>

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""
import argparse
import logging
import sys
from typing import Optional, Sequence

from .config import configure_logging
from .errors import ConfigError, NumericalBlowupError, SparseDGError
from .models.reports import ConvergenceRow
from .models.run_config import load_run_config
from .services.output_writer import OutputWriter
from .services.run_controller import RunController
from .services.sparse_space import dof_count

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _print_table(rows: Sequence[ConvergenceRow]) -> None:
    print(f"{'N':>3} {'h_N':>10} {'DOF':>10} {'L2 error':>12} {'order':>7}")
    for row in rows:
        order = "--" if row.order is None else f"{row.order:.2f}"
        print(f"{row.N:>3} {'1/' + str(2 ** row.N):>10} {row.dof:>10} {row.error:>12.2E} {order:>7}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sparse-dg", description="Sparse-grid DG benchmark driver")
    parser.add_argument("--log-level", default=None, help="Logging level (default: settings)")
    parser.add_argument("--output-dir", default=None, help="Artifact directory (overrides SPARSE_DG_OUTPUT_DIR)")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Run one configured benchmark")
    run.add_argument("config")

    converge = sub.add_parser("converge", help="Error/order table over N_min..N_max")
    converge.add_argument("config")

    dof = sub.add_parser("dof", help="Degrees of freedom of the sparse space")
    dof.add_argument("N", type=int)
    dof.add_argument("K", type=int)
    dof.add_argument("D", type=int)

    study = sub.add_parser("project-study", help="Projection errors of the initial datum over N_min..N_max")
    study.add_argument("config")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)

    try:
        if args.command == "dof":
            if args.N < 0 or args.K < 1 or args.D < 1:
                raise ConfigError("dof needs N >= 0, K >= 1, D >= 1", {"dof": f"{args.N} {args.K} {args.D}"})
            print(dof_count(args.N, args.K, args.D))
            return EXIT_OK

        config = load_run_config(args.config)
        controller = RunController(OutputWriter(args.output_dir) if args.output_dir else None)
        if args.command == "run":
            metadata = controller.run(config)
            print(metadata.model_dump_json(indent=2))
        elif args.command == "converge":
            _print_table(controller.convergence(config))
        else:
            _print_table(controller.projection_study(config))
        return EXIT_OK

    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        for name, message in exc.field_errors.items():
            print(f"  {name}: {message}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalBlowupError as exc:
        print(f"numerical failure: {exc} (last good time {exc.last_good_time})", file=sys.stderr)
        return EXIT_NUMERICAL
    except SparseDGError as exc:
        logger.error(f"Run failed: {exc}")
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
