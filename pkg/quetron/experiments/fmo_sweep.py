"""Trapping efficiency of the FMO monomer across dephasing rates."""

import logging
from typing import Any, Dict, Tuple

import numpy as np

from quetron.analysis import efficiency
from quetron.kinetic import compute_N0
from quetron.models import ExperimentConfig
from quetron.network import FMO_INITIAL_POPULATIONS, fmo_monomer
from quetron.parallel import ordered_map
from quetron.experiments.inputs import log_grid
from quetron.reports import ResultWriter

logger = logging.getLogger(__name__)

DEFAULT_GRID = (1e-3, 1e5, 81)
REFERENCE_GAMMA = 170.0
COLUMNS = ["gamma", "f_M", "f_N", "f_N0", "relerr_N", "relerr_N0"]


def fmo_point(gamma: float) -> Tuple[float, ...]:
    """Efficiencies of the three models at one dephasing rate (cm^-1)."""
    spec = fmo_monomer(gamma)
    f_M = efficiency(spec, FMO_INITIAL_POPULATIONS, "M")
    f_N = efficiency(spec, FMO_INITIAL_POPULATIONS, "N")
    f_N0 = efficiency(spec, FMO_INITIAL_POPULATIONS, "N0")
    return gamma, f_M, f_N, f_N0, abs(f_N - f_M) / f_M, abs(f_N0 - f_M) / f_M


def run_fmo_sweep(config: ExperimentConfig, progress: bool = False) -> Dict[str, Any]:
    """Sweep gamma over a log grid and write ``fmo_sweep.csv`` and ``fmo_N0.csv``.

    Args:
        config: Experiment configuration; only ``grid``, ``workers`` and
            ``out_dir`` are used
        progress: Show a progress bar

    Returns:
        Dictionary with the rows, the gamma of peak f_M and written paths
    """
    gammas = log_grid(config, DEFAULT_GRID)
    rows = ordered_map(fmo_point, gammas.tolist(), config.workers, desc="fmo", progress=progress)
    writer = ResultWriter(config.out_dir, config)
    table = writer.write_csv("fmo_sweep.csv", COLUMNS, rows)
    reference = writer.write_matrix("fmo_N0.csv", compute_N0(fmo_monomer(REFERENCE_GAMMA)).data)

    peak = rows[int(np.argmax([row[1] for row in rows]))]
    logger.info("peak quantum efficiency %.4f at gamma = %.4g cm^-1", peak[1], peak[0])
    return {
        "rows": rows,
        "peak_gamma": peak[0],
        "peak_efficiency": peak[1],
        "max_relerr_N": max(row[4] for row in rows),
        "paths": [table, reference],
    }
