"""Network construction: connectivity, built-in families and spec files.

Named families are built at unit scales (couplings in units of Theta,
energies and dephasing in units of Gamma) and wrapped in a
:class:`~quetron.models.ScalingFamily`, so a random draw keeps its shape
while the scales are swept.
"""

import logging
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np
import yaml
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from quetron.errors import ConfigurationError, SpecValidationError
from quetron.models import CM_PER_S, NetworkSpec, ScalingFamily

logger = logging.getLogger(__name__)

FAMILIES = ("highly-ideal", "highly-random", "chain-ideal", "chain-random")

# rate or energy unit -> multiplier to cm^-1
UNIT_TO_CM = {
    "cm-1": 1.0,
    "per-ps": 1e12 / CM_PER_S,
    "per-ns": 1e9 / CM_PER_S,
}

FMO_HAMILTONIAN = np.array([
    [280, -106, 8, -5, 6, -8, -4],
    [-106, 420, 28, 6, 2, 13, 1],
    [8, 28, 0, -62, -1, -9, 17],
    [-5, 6, -62, 175, -70, -19, -57],
    [6, 2, -1, -70, 320, 40, -2],
    [-8, 13, -9, -19, 40, 360, 32],
    [-4, 1, 17, -57, -2, 32, 260],
], dtype=float)
FMO_INITIAL_POPULATIONS = np.array([0.5, 0.0, 0.0, 0.0, 0.0, 0.5, 0.0])
FMO_TRAP_SITE = 3
FMO_RECOMBINATION = UNIT_TO_CM["per-ns"]
FMO_TRAP_RATE = UNIT_TO_CM["per-ps"]


def is_connected(spec: NetworkSpec) -> bool:
    """True when the graph with an edge wherever V_kl != 0 is connected."""
    if spec.n == 1:
        return True
    graph = csr_matrix(np.abs(spec.couplings) > 0)
    count, _ = connected_components(graph, directed=False)
    return count == 1


def _unit_spec(couplings: np.ndarray, energies: np.ndarray) -> NetworkSpec:
    n = couplings.shape[0]
    return NetworkSpec(
        n=n,
        energies=energies,
        couplings=couplings,
        dephasing=np.ones(n),
        loss=np.zeros(n),
    )


def highly_connected(
    n: int,
    theta: float = 1.0,
    gamma: float = 1.0,
    rng: Optional[np.random.Generator] = None
) -> NetworkSpec:
    """All-to-all network with uniform dephasing gamma.

    Without a generator every coupling is theta and every energy 0. With
    one, couplings are drawn from (0, theta] and energies from [0, gamma).
    """
    if n < 2:
        raise SpecValidationError(f"a highly connected network needs n >= 2, got {n}")
    if rng is None:
        couplings = np.ones((n, n)) - np.eye(n)
        energies = np.zeros(n)
    else:
        upper = np.triu(1.0 - rng.random((n, n)), 1)
        couplings = upper + upper.T
        energies = rng.random(n)
    return _unit_spec(couplings, energies).with_rates(theta, gamma)


def circular_chain(
    n: int,
    theta: float = 1.0,
    gamma: float = 1.0,
    e: float = 1.0,
    rng: Optional[np.random.Generator] = None
) -> NetworkSpec:
    """Nearest-neighbour ring with uniform dephasing gamma.

    Without a generator every link has coupling theta and the energies
    alternate between 0 and gamma * e, so every link carries the gap
    gamma * e. With one, link couplings come from (0, theta] and energies
    from [0, gamma).

    Raises:
        ConfigurationError: If the ideal ring has odd n
    """
    if n < 3:
        raise ConfigurationError(f"a circular chain needs n >= 3, got {n}")
    if rng is None and n % 2:
        raise ConfigurationError(f"the ideal circular chain needs an even number of sites, got {n}")
    links = np.ones(n) if rng is None else 1.0 - rng.random(n)
    couplings = np.zeros((n, n))
    for k in range(n):
        l = (k + 1) % n
        couplings[k, l] = couplings[l, k] = links[k]
    if rng is None:
        energies = e * (np.arange(n) % 2)
    else:
        energies = rng.random(n)
    return _unit_spec(couplings, energies).with_rates(theta, gamma)


def random_network(n: int, rng: np.random.Generator, edge_probability: float = 0.5) -> NetworkSpec:
    """Random connected unit network.

    A random spanning path guarantees connectivity; every other pair is
    coupled with the given probability. Couplings come from (0, 1] and
    energies from [0, 1); dephasing is 1 on every site.
    """
    order = rng.permutation(n)
    mask = np.zeros((n, n), dtype=bool)
    mask[order[:-1], order[1:]] = True
    mask |= rng.random((n, n)) < edge_probability
    mask = np.triu(mask | mask.T, 1)
    upper = np.where(mask, 1.0 - rng.random((n, n)), 0.0)
    couplings = upper + upper.T
    return _unit_spec(couplings, rng.random(n))


def network_family(
    name: str,
    n: int,
    theta: float,
    gamma: float,
    e: float = 1.0,
    seed: Optional[int] = None
) -> ScalingFamily:
    """Build one of the named families.

    Args:
        name: One of ``FAMILIES``
        n: Number of sites
        theta: Coupling scale
        gamma: Dephasing scale
        e: Chain energy gap in units of gamma
        seed: Seed for the random families

    Returns:
        ScalingFamily wrapping the unit network
    """
    if name not in FAMILIES:
        raise ConfigurationError(f"unknown family '{name}'; choose from {', '.join(FAMILIES)}")
    rng = np.random.default_rng(seed) if name.endswith("random") else None
    if name.startswith("highly"):
        base = highly_connected(n, rng=rng)
    else:
        base = circular_chain(n, e=e, rng=rng)
    family = ScalingFamily(base=base, theta=theta, gamma=gamma, name=name)
    if rng is not None and name.startswith("chain"):
        stats = link_gap_statistics(family.instantiate())
        logger.info(
            "random chain link gaps |E_kl|/Gamma: min %.3g mean %.3g max %.3g",
            stats["min"] / gamma, stats["mean"] / gamma, stats["max"] / gamma,
        )
    return family


def link_gap_statistics(spec: NetworkSpec) -> Dict[str, float]:
    """Min, mean and max of |E_k - E_l| over coupled pairs."""
    rows, cols = np.nonzero(np.triu(np.abs(spec.couplings) > 0, 1))
    if rows.size == 0:
        raise SpecValidationError("network has no couplings")
    gaps = np.abs(spec.energies[rows] - spec.energies[cols])
    return {"min": float(gaps.min()), "mean": float(gaps.mean()), "max": float(gaps.max())}


def fmo_monomer(gamma: float) -> NetworkSpec:
    """Seven-site FMO monomer in cm^-1 with recombination on every site and a trap on site 3.

    Args:
        gamma: Dephasing rate applied to every site, in cm^-1
    """
    n = FMO_HAMILTONIAN.shape[0]
    loss = np.full(n, FMO_RECOMBINATION)
    trapping = np.zeros(n)
    loss[FMO_TRAP_SITE - 1] += FMO_TRAP_RATE
    trapping[FMO_TRAP_SITE - 1] = FMO_TRAP_RATE
    return NetworkSpec(
        n=n,
        energies=np.diag(FMO_HAMILTONIAN),
        couplings=FMO_HAMILTONIAN - np.diag(np.diag(FMO_HAMILTONIAN)),
        dephasing=np.full(n, float(gamma)),
        loss=loss,
        trapping=trapping,
    )


def _site_vector(data: Dict[str, Any], key: str, n: int, factor: float, default: float = 0.0) -> np.ndarray:
    values = data.get(key)
    if values is None:
        return np.full(n, default)
    if np.isscalar(values):
        return np.full(n, float(values) * factor)
    return np.asarray(values, dtype=float) * factor


def spec_from_dict(data: Dict[str, Any]) -> NetworkSpec:
    """Build a NetworkSpec from the mapping stored in a spec file.

    Coupling entries use 1-based site indices and list each pair once; the
    conjugate entry is filled in.
    """
    try:
        n = int(data["n"])
    except (KeyError, TypeError, ValueError) as exc:
        raise SpecValidationError("spec needs an integer 'n'") from exc
    units = data.get("units", "cm-1")
    if units not in UNIT_TO_CM:
        raise SpecValidationError(f"unknown units '{units}'; choose from {', '.join(UNIT_TO_CM)}")
    factor = UNIT_TO_CM[units]

    couplings = np.zeros((n, n), dtype=complex)
    for entry in data.get("couplings") or []:
        i, j = int(entry["i"]), int(entry["j"])
        if not (1 <= i <= n and 1 <= j <= n) or i == j:
            raise SpecValidationError(f"coupling ({i}, {j}) is not an off-diagonal pair of 1..{n}")
        value = complex(float(entry.get("re", 0.0)), float(entry.get("im", 0.0))) * factor
        couplings[i - 1, j - 1] = value
        couplings[j - 1, i - 1] = np.conj(value)

    return NetworkSpec(
        n=n,
        energies=_site_vector(data, "energies", n, factor),
        couplings=couplings,
        dephasing=_site_vector(data, "dephasing", n, factor),
        loss=_site_vector(data, "loss", n, factor),
        trapping=_site_vector(data, "trapping", n, factor),
    )


def spec_to_dict(spec: NetworkSpec) -> Dict[str, Any]:
    """Inverse of :func:`spec_from_dict`, always in cm^-1."""
    rows, cols = np.nonzero(np.triu(np.abs(spec.couplings) > 0, 1))
    return {
        "n": spec.n,
        "units": "cm-1",
        "energies": spec.energies.tolist(),
        "couplings": [
            {
                "i": int(k) + 1,
                "j": int(l) + 1,
                "re": float(spec.couplings[k, l].real),
                "im": float(spec.couplings[k, l].imag),
            }
            for k, l in zip(rows, cols)
        ],
        "dephasing": spec.dephasing.tolist(),
        "loss": spec.loss.tolist(),
        "trapping": spec.trapping.tolist(),
    }


def load_spec(path: Union[str, Path]) -> NetworkSpec:
    """Load a network spec from a YAML file.

    Raises:
        SpecValidationError: If the file is not a mapping or fails validation
    """
    with open(path, "r", encoding="utf-8") as handle:
        data = yaml.safe_load(handle)
    if not isinstance(data, dict):
        raise SpecValidationError(f"{path}: spec file must contain a mapping")
    logger.debug("loaded spec from %s", path)
    return spec_from_dict(data)


def dump_spec(spec: NetworkSpec, path: Union[str, Path]) -> None:
    """Write a network spec to a YAML file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        yaml.safe_dump(spec_to_dict(spec), handle, sort_keys=False)
