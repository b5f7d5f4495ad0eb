"""Population trajectories of the quantum and kinetic models, with matrix dumps."""

import logging
from typing import Any, Dict

import numpy as np

from quetron.analysis import population_trajectory
from quetron.kinetic import compute_N, compute_N0, rate_matrix_offdiagonal_signs, series_terms
from quetron.liouvillian import assemble_blocks
from quetron.models import ExperimentConfig, NetworkSpec
from quetron.experiments.inputs import resolve_spec
from quetron.reports import ResultWriter

logger = logging.getLogger(__name__)


def default_horizon(spec: NetworkSpec) -> float:
    """Ten times the slowest nonzero decay time of N0."""
    rates = np.abs(np.linalg.eigvals(compute_N0(spec).data).real)
    scale = float(np.max(rates, initial=0.0))
    slow = rates[rates > 1e-12 * scale]
    if slow.size == 0:
        return 1.0
    return 10.0 / float(slow.min())


def run_simulate(config: ExperimentConfig) -> Dict[str, Any]:
    """Evolve an exciton starting on site 1 under M, N and N0.

    Writes ``trajectories.csv`` (time, then n populations per model) and the
    requested dumps ``M.csv``, ``N.csv``, ``N0.csv`` and ``N_<k>.csv``.
    """
    spec = resolve_spec(config)
    n = spec.n
    blocks = assemble_blocks(spec)
    N = compute_N(spec, blocks)
    N0 = compute_N0(spec)
    negative = rate_matrix_offdiagonal_signs(N)
    if negative:
        logger.warning("N has negative transfer rates between sites %s", negative)

    t_max = config.t_max or default_horizon(spec)
    t_grid = np.linspace(0.0, t_max, config.steps)
    start = np.zeros(n * n)
    start[0] = 1.0
    quantum = population_trajectory(blocks.M, start, t_grid, n_sites=n)
    kinetic = population_trajectory(N, start[:n], t_grid)
    local = population_trajectory(N0, start[:n], t_grid)

    writer = ResultWriter(config.out_dir, config)
    columns = ["t"] + [f"{model}_p{k}" for model in ("M", "N", "N0") for k in range(1, n + 1)]
    rows = np.column_stack([t_grid, quantum, kinetic, local])
    paths = [writer.write_csv("trajectories.csv", columns, rows.tolist())]

    if config.dump_m:
        paths.append(writer.write_matrix("M.csv", blocks.M))
    if config.dump_n:
        paths.append(writer.write_matrix("N.csv", N.data))
    if config.dump_n0:
        paths.append(writer.write_matrix("N0.csv", N0.data))
    if config.dump_nk is not None:
        for term in series_terms(spec, config.dump_nk, blocks):
            paths.append(writer.write_matrix(f"N_{term.order}.csv", term.data))
    return {"t_grid": t_grid, "M": quantum, "N": kinetic, "N0": local, "paths": paths}
