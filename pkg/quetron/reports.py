"""Module for writing experiment artifacts.

Every CSV starts with a comment line naming the package version and a hash
of the experiment configuration, so a file can be traced back to the run
that produced it. Floats are written with 17 significant digits, which
round-trips IEEE doubles exactly.
"""

import csv
import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

import numpy as np

from quetron import __version__
from quetron.models import AuditResult, BoundReport, ExperimentConfig, ScalingStudy

logger = logging.getLogger(__name__)


PathLike = Union[str, Path]


def format_float(value: Any) -> str:
    """Format a number with 17 significant digits; other values with str()."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    return str(value)


def config_hash(config: ExperimentConfig) -> str:
    """SHA-256 of the canonical JSON form of a configuration."""
    canonical = json.dumps(config.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def header_line(config: Optional[ExperimentConfig]) -> str:
    digest = config_hash(config) if config is not None else "none"
    return f"# quetron {__version__} config={digest}"


def read_matrix_csv(path: PathLike) -> np.ndarray:
    """Load a matrix written by :meth:`ResultWriter.write_matrix`."""
    return np.atleast_2d(np.loadtxt(path, delimiter=",", comments="#"))


def _slope_status(channel: str, study: ScalingStudy) -> List[str]:
    if channel in study.excluded:
        return ["excluded", study.excluded[channel]]
    return ["insufficient", ""]


class ResultWriter:
    """Writes CSV tables, matrices and key-value reports into one directory.

    Args:
        out_dir: Output directory, created on first write
        config: Configuration recorded in every CSV header
    """

    def __init__(self, out_dir: PathLike, config: Optional[ExperimentConfig] = None):
        self.out_dir = Path(out_dir)
        self.config = config

    def _path(self, name: str) -> Path:
        path = self.out_dir / name
        path.parent.mkdir(parents=True, exist_ok=True)
        return path

    def write_csv(self, name: str, columns: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
        """Write a table with the provenance header.

        Args:
            name: File name inside the output directory
            columns: Column names
            rows: Row values, formatted with :func:`format_float`

        Returns:
            Path to the written file
        """
        path = self._path(name)
        with open(path, "w", encoding="utf-8", newline="") as handle:
            handle.write(header_line(self.config) + "\n")
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                writer.writerow([format_float(value) for value in row])
        logger.info("wrote %s", path)
        return path

    def write_matrix(self, name: str, matrix: np.ndarray) -> Path:
        """Write a real matrix as headerless comma-separated rows."""
        matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
        path = self._path(name)
        with open(path, "w", encoding="utf-8", newline="") as handle:
            handle.write(header_line(self.config) + "\n")
            writer = csv.writer(handle, lineterminator="\n")
            for row in matrix:
                writer.writerow([format_float(value) for value in row])
        logger.info("wrote %s (%d x %d)", path, *matrix.shape)
        return path

    def write_key_value(self, name: str, values: Dict[str, Any]) -> Path:
        """Write ``key = value`` lines in the given order."""
        path = self._path(name)
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(header_line(self.config) + "\n")
            for key, value in values.items():
                handle.write(f"{key} = {format_float(value)}\n")
        logger.info("wrote %s", path)
        return path

    def write_bound_report(self, stem: str, report: BoundReport) -> List[Path]:
        """Write the constants and hypotheses of a report plus its check table.

        Returns:
            Paths of ``<stem>.txt`` and ``<stem>_checks.csv``
        """
        values: Dict[str, Any] = {}
        if report.precondition:
            values["precondition"] = report.precondition
        for key in ("norm_a", "norm_binv", "norm_b0inv", "norm_nu", "kappa", "kappa0",
                    "mu", "mu0", "alpha", "alpha_hat", "beta", "b_min"):
            value = getattr(report, key)
            if value is not None:
                values[key] = value
        for key, flag in report.hypotheses.items():
            values[f"hypothesis.{key}"] = flag
        summary = self.write_key_value(f"{stem}.txt", values)
        table = self.write_csv(
            f"{stem}_checks.csv",
            ["check", "status", "measured", "bound", "margin", "at", "reason"],
            [[c.name, c.status, c.measured, c.bound, c.margin, c.t, c.reason or ""] for c in report.checks],
        )
        return [summary, table]

    def write_scaling_study(self, stem: str, study: ScalingStudy, extra: Optional[Dict[str, Sequence[float]]] = None) -> List[Path]:
        """Write per-ratio relaxation errors and the fitted slopes.

        Args:
            stem: File stem; files are ``<stem>.csv`` and ``<stem>_slopes.csv``
            study: Result of a slope study
            extra: Additional per-ratio columns
        """
        extra = extra or {}
        columns = ["theta_over_gamma", "tau", "tau0", "delta_tau_rel", "delta_tau0_rel", "delta_tau1_rel"]
        columns += list(extra)
        rows = []
        for index, (ratio, item) in enumerate(zip(study.ratios, study.metrics)):
            row = [ratio, item.tau, item.tau0, item.delta_tau_rel, item.delta_tau0_rel, item.delta_tau1_rel]
            row += [values[index] for values in extra.values()]
            rows.append(row)
        table = self.write_csv(f"{stem}.csv", columns, rows)
        slopes = self.write_csv(
            f"{stem}_slopes.csv",
            ["channel", "slope", "intercept", "rvalue", "stderr", "used_points", "excluded_points", "status", "reason"],
            [
                [channel, fit.slope, fit.intercept, fit.rvalue, fit.stderr, fit.used_points, fit.excluded_points, "fit", ""]
                if fit is not None else
                [channel, None, None, None, None, 0, None, *_slope_status(channel, study)]
                for channel, fit in study.slopes.items()
            ],
        )
        return [table, slopes]

    def write_audit(self, stem: str, result: AuditResult) -> Path:
        """One row per (draw, check) of a randomized audit."""
        rows = []
        for index, (n, report) in enumerate(zip(result.sizes, result.reports)):
            for check in report.checks:
                rows.append([index, n, check.name, check.status, check.measured, check.bound,
                             check.margin, check.reason or ""])
        return self.write_csv(
            f"{stem}.csv",
            ["draw", "n", "check", "status", "measured", "bound", "margin", "reason"],
            rows,
        )
