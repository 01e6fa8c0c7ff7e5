"""
Output Writer - run artifacts on disk.
Appends run metadata to a JSON-lines history, keeps a summary, and writes tables.
"""
import csv
import json
import logging
from datetime import datetime
from pathlib import Path
from typing import Any, Optional, Sequence, Union

from ..config import settings
from ..models.reports import ConvergenceRow, RunMetadata

logger = logging.getLogger(__name__)


def _number(value: Optional[float]) -> str:
    return "" if value is None else f"{value:.17g}"


class OutputWriter:
    """
    Writes run artifacts under one output directory.

    runs.jsonl holds one RunMetadata record per completed run; summary.json counts runs
    per problem and keeps the last wall time.
    """

    def __init__(self, output_dir: Union[str, Path, None] = None):
        self.output_dir = Path(output_dir or settings.output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)
        self.runs_file = self.output_dir / "runs.jsonl"
        self.summary_file = self.output_dir / "summary.json"

    def run_dir(self, metadata: RunMetadata) -> Path:
        """Directory for the artifacts of one run."""
        path = self.output_dir / f"{metadata.problem}-{metadata.run_id}"
        path.mkdir(parents=True, exist_ok=True)
        return path

    def record_run(self, metadata: RunMetadata) -> None:
        """Append a run to the history and refresh the summary."""
        with open(self.runs_file, "a") as f:
            f.write(metadata.model_dump_json() + "\n")
        self._update_summary(metadata)
        logger.info(f"Run {metadata.run_id} recorded in {self.runs_file}")

    def write_convergence(self, rows: Sequence[ConvergenceRow], path: Union[str, Path]) -> Path:
        """Error/order table as CSV: N, h, dof, error, order."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["N", "h", "dof", "error", "order"])
            for row in rows:
                writer.writerow([row.N, _number(row.h), row.dof, _number(row.error), _number(row.order)])
        logger.info(f"Convergence table written to {path}")
        return path

    def write_series(self, columns: Sequence[str], rows: Sequence[Sequence[float]], path: Union[str, Path]) -> Path:
        """A small numeric time series as CSV."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(columns)
            for row in rows:
                writer.writerow([_number(value) for value in row])
        return path

    def get_summary(self) -> dict[str, Any]:
        """Summary of recorded runs."""
        if not self.summary_file.exists():
            return {"total_runs": 0, "by_problem": {}, "last_updated": None}

        with open(self.summary_file, "r") as f:
            return json.load(f)

    def get_recent_runs(self, limit: int = 10) -> list[dict[str, Any]]:
        """Most recent run records."""
        if not self.runs_file.exists():
            return []

        runs = []
        with open(self.runs_file, "r") as f:
            for line in f:
                try:
                    runs.append(json.loads(line))
                except json.JSONDecodeError:
                    continue

        return runs[-limit:]

    def _update_summary(self, metadata: RunMetadata) -> None:
        summary = self.get_summary()
        summary["total_runs"] += 1

        problem = summary["by_problem"].setdefault(metadata.problem, {"count": 0, "last_wall_time": None})
        problem["count"] += 1
        problem["last_wall_time"] = round(metadata.wall_time, 3)

        summary["last_updated"] = datetime.now().isoformat()

        with open(self.summary_file, "w") as f:
            json.dump(summary, f, indent=2)


# Global writer instance
_writer: Optional[OutputWriter] = None


def get_output_writer() -> OutputWriter:
    """Get or create the global output writer."""
    global _writer
    if _writer is None:
        _writer = OutputWriter()
    return _writer
