"""Scaling studies on the built-in network families.

``run_ideal_or_chain`` sweeps Theta/Gamma for one family and network size;
``run_dim_scan`` keeps Theta = 0.01 and Gamma = 1 and grows the network.
"""

import logging
from functools import partial
from typing import Any, Dict, Tuple

import numpy as np

from quetron.analysis import localized_relaxation_errors
from quetron.bounds import fit_channel, fit_slope, scaling_slope_study
from quetron.errors import ConfigurationError
from quetron.kinetic import compute_N, compute_N0
from quetron.linalg import inequality_projector, inverse_on_inequality, operator_norm
from quetron.models import ExperimentConfig, ScalingFamily
from quetron.network import FAMILIES, network_family
from quetron.parallel import ordered_map
from quetron.experiments.inputs import log_grid, resolve_family
from quetron.reports import ResultWriter

logger = logging.getLogger(__name__)

DEFAULT_GRID = (1e-4, 1e-2, 9)
DIM_SCAN_THETA = 0.01
DIM_SCAN_GAMMA = 1.0
DIM_SCAN_FAMILIES = ("highly-ideal", "chain-ideal")
DEFAULT_N_RANGE = {"highly-ideal": (4, 16, 2), "chain-ideal": (4, 40, 4)}
LOCAL_CHANNELS = ("local_MN", "local_MN0", "local_NN0")


def _localized_at(family: ScalingFamily, ratio: float) -> Tuple[float, float, float]:
    return localized_relaxation_errors(family.at_ratio(ratio).instantiate(), site=1)


def run_ideal_or_chain(config: ExperimentConfig, progress: bool = False) -> Dict[str, Any]:
    """Relaxation errors of one family (or a spec file) along a Theta/Gamma grid.

    Writes ``<family>_scaling.csv`` with worst-case and site-1 errors per
    grid point, and ``<family>_scaling_slopes.csv`` with the fitted slopes.

    Raises:
        ConfigurationError: For an unknown family or an odd-n ideal chain
    """
    if config.family is not None and config.family not in FAMILIES:
        raise ConfigurationError(f"family must be one of {', '.join(FAMILIES)}, got {config.family!r}")
    family = resolve_family(config)
    ratios = log_grid(config, DEFAULT_GRID).tolist()

    study = scaling_slope_study(family, ratios, workers=config.workers, progress=progress)
    localized = ordered_map(partial(_localized_at, family), study.ratios, config.workers,
                            desc=f"{family.name} site 1", progress=progress)
    extra = {name: [row[index] for row in localized] for index, name in enumerate(LOCAL_CHANNELS)}

    slopes, excluded = dict(study.slopes), dict(study.excluded)
    for name, values in extra.items():
        slopes[name], reason = fit_channel(name, study.ratios, values)
        if reason is not None:
            excluded[name] = reason
    study = study.model_copy(update={"slopes": slopes, "excluded": excluded})

    writer = ResultWriter(config.out_dir, config)
    paths = writer.write_scaling_study(f"{family.name}_scaling", study, extra)
    for channel, fit in study.slopes.items():
        if fit is not None:
            logger.info("%s %s slope %.3f (r = %.4f)", family.name, channel, fit.slope, fit.rvalue)
    return {"study": study, "paths": paths}


def kinetic_pair_errors(spec) -> Tuple[float, float, float, float]:
    """(tau, tau0, worst-case and site-1 relative N vs N0 relaxation errors)."""
    inv_N = inverse_on_inequality(compute_N(spec), label="N")
    inv_N0 = inverse_on_inequality(compute_N0(spec), label="N0")
    tau = operator_norm(inv_N)
    start = inequality_projector(spec.n)[:, 0]
    local = np.linalg.norm((inv_N - inv_N0) @ start) / np.linalg.norm(inv_N @ start)
    return tau, operator_norm(inv_N0), operator_norm(inv_N - inv_N0) / tau, float(local)


def _dim_point(name: str, n: int) -> Tuple[float, float, float, float]:
    spec = network_family(name, n, DIM_SCAN_THETA, DIM_SCAN_GAMMA).instantiate()
    return kinetic_pair_errors(spec)


def run_dim_scan(config: ExperimentConfig, progress: bool = False) -> Dict[str, Any]:
    """N versus N0 relaxation error as the network grows.

    Writes ``<family>_dim_scan.csv`` (with the log-log slope between
    neighbouring sizes) before fitting, then ``<family>_dim_scan_slopes.csv``.

    Raises:
        ConfigurationError: For a family other than highly-ideal or chain-ideal
        InsufficientDataError: If the size grid is too short for a slope fit;
            the CSV is written first
    """
    if config.family not in DIM_SCAN_FAMILIES:
        raise ConfigurationError(f"dim-scan family must be one of {', '.join(DIM_SCAN_FAMILIES)}")
    low, high, step = config.n_range or DEFAULT_N_RANGE[config.family]
    sizes = list(range(low, high + 1, step))
    points = ordered_map(partial(_dim_point, config.family), sizes, config.workers,
                         desc=f"{config.family} sizes", progress=progress)

    errors = np.array([point[2] for point in points])
    local_slopes = [None] + [
        float(np.log(errors[i] / errors[i - 1]) / np.log(sizes[i] / sizes[i - 1]))
        for i in range(1, len(sizes))
    ]
    writer = ResultWriter(config.out_dir, config)
    stem = f"{config.family}_dim_scan"
    table = writer.write_csv(
        f"{stem}.csv",
        ["n", "tau", "tau0", "delta_tau1_rel", "local_NN0", "local_slope"],
        [[n, *point, slope] for n, point, slope in zip(sizes, points, local_slopes)],
    )
    fit = fit_slope(sizes, errors)
    slopes = writer.write_csv(
        f"{stem}_slopes.csv",
        ["channel", "slope", "intercept", "rvalue", "stderr", "used_points", "excluded_points"],
        [["NN0", fit.slope, fit.intercept, fit.rvalue, fit.stderr, fit.used_points, fit.excluded_points]],
    )
    logger.info("%s: delta_tau1_rel grows with slope %.3f in n", config.family, fit.slope)
    return {"sizes": sizes, "points": points, "local_slopes": local_slopes, "fit": fit, "paths": [table, slopes]}
