"""Bound reports for a single network and randomized bound audits."""

import logging
from typing import Any, Dict

from quetron.bounds import audit_spec, randomized_audit
from quetron.models import ExperimentConfig
from quetron.experiments.inputs import resolve_spec
from quetron.reports import ResultWriter

logger = logging.getLogger(__name__)

DEFAULT_AUDIT_SIZES = (3, 7)


def run_bounds_report(config: ExperimentConfig) -> Dict[str, Any]:
    """Audit one network and write ``bounds_report.txt`` and ``bounds_report_checks.csv``.

    Raises:
        SpecValidationError: If the network has complex couplings
    """
    spec = resolve_spec(config)
    report = audit_spec(spec, lemmas=True)
    paths = ResultWriter(config.out_dir, config).write_bound_report("bounds_report", report)
    counts = {status: sum(check.status == status for check in report.checks) for status in ("pass", "fail", "skipped")}
    logger.info("bound checks: %d pass, %d fail, %d skipped", counts["pass"], counts["fail"], counts["skipped"])
    return {"report": report, "counts": counts, "paths": paths}


def run_audit(config: ExperimentConfig, progress: bool = False) -> Dict[str, Any]:
    """Randomized audit over ``config.draws`` connected real networks; writes ``audit.csv``."""
    low, high = (config.n_range[0], config.n_range[1]) if config.n_range else DEFAULT_AUDIT_SIZES
    result = randomized_audit(
        config.draws,
        config.seed,
        n_range=(low, high),
        theta_over_gamma=config.theta / config.gamma,
        workers=config.workers,
        progress=progress,
    )
    path = ResultWriter(config.out_dir, config).write_audit("audit", result)
    return {"result": result, "failures": result.failures, "paths": [path]}
