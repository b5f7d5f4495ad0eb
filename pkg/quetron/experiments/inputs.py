"""Turn an ExperimentConfig into networks."""

import logging
from pathlib import Path
from typing import Tuple

import numpy as np

from quetron.errors import ConfigurationError
from quetron.models import ExperimentConfig, NetworkSpec, ScalingFamily
from quetron.network import FAMILIES, load_spec, network_family

logger = logging.getLogger(__name__)

DEFAULT_SITES = {"highly": 5, "chain": 6}


def default_sites(family: str) -> int:
    return DEFAULT_SITES["highly" if family.startswith("highly") else "chain"]


def resolve_family(config: ExperimentConfig) -> ScalingFamily:
    """Family named in the config, or a spec file wrapped at unit scales.

    Raises:
        ConfigurationError: If neither or both of a spec file and a family are given
    """
    if config.spec_path and config.family:
        raise ConfigurationError("give either --spec or --family, not both")
    if config.spec_path:
        spec = load_spec(config.spec_path)
        return ScalingFamily(base=spec, theta=1.0, gamma=1.0, name=Path(config.spec_path).stem)
    if not config.family:
        raise ConfigurationError(f"a network is required: --spec FILE or --family {{{','.join(FAMILIES)}}}")
    n = config.n or default_sites(config.family)
    return network_family(config.family, n, config.theta, config.gamma, config.e, config.seed)


def resolve_spec(config: ExperimentConfig) -> NetworkSpec:
    """The concrete network of a config: the spec file as written, or the family at (theta, gamma)."""
    return resolve_family(config).instantiate()


def log_grid(config: ExperimentConfig, default: Tuple[float, float, int]) -> np.ndarray:
    """Log-spaced grid from ``config.grid`` or the given default."""
    low, high, count = config.grid or default
    grid = np.geomspace(low, high, int(count))
    logger.debug("grid %.3g..%.3g with %d points", low, high, count)
    return grid
