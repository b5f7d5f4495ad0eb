"""Time evolution, relaxation times and trapping efficiency.

The relaxation operator of a conservative generator G on the inequality
subspace I is -G^-1 restricted to I; its norm is the relaxation time. For
the full quantum generator M the same object is the time integral
int_0^inf T e^{Mt} T^H P_I dt, computed here by eliminating the coherence
block and, as a cross-check, by adaptive quadrature.
"""

import logging
from math import isqrt
from typing import Optional, Tuple

import numpy as np
from scipy.integrate import quad_vec
from scipy.linalg import eigh, expm, svd

from quetron.errors import DegenerateSpectrumError, SpecValidationError
from quetron.kinetic import compute_N, compute_N0, extract_generalized_network
from quetron.linalg import (
    ArrayLike,
    GuardedLU,
    as_array,
    deflation_basis,
    inequality_projector,
    inverse_on_inequality,
    operator_norm,
)
from quetron.liouvillian import assemble_blocks
from quetron.models import EvolutionError, NetworkSpec, RelaxationMetrics
from quetron.network import is_connected

logger = logging.getLogger(__name__)


class Propagator:
    """Matrix exponential e^{Gt} of a fixed generator.

    Symmetric generators are diagonalized once and reused for every t;
    anything else falls back to scaling-and-squaring ``expm``.

    Args:
        generator: Square real matrix (or KineticMatrix)
    """

    def __init__(self, generator: ArrayLike):
        G = np.array(as_array(generator), dtype=float)
        if G.ndim != 2 or G.shape[0] != G.shape[1]:
            raise SpecValidationError(f"generator must be square, got shape {G.shape}")
        self.generator = G
        self.symmetric = np.array_equal(G, G.T)
        if self.symmetric:
            self._eigenvalues, self._eigenvectors = eigh(G)

    @property
    def dim(self) -> int:
        return self.generator.shape[0]

    def matrix(self, t: float) -> np.ndarray:
        """Return e^{Gt} for t >= 0."""
        if t < 0:
            raise SpecValidationError(f"time must be non-negative, got {t}")
        if t == 0:
            return np.eye(self.dim)
        if self.symmetric:
            vectors = self._eigenvectors
            return (vectors * np.exp(self._eigenvalues * t)) @ vectors.T
        return expm(self.generator * t)

    def apply(self, x0: np.ndarray, t: float) -> np.ndarray:
        """Return e^{Gt} x0; t = 0 returns a copy of x0."""
        x0 = np.asarray(x0, dtype=float)
        if x0.shape != (self.dim,):
            raise SpecValidationError(f"initial vector has shape {x0.shape}, expected ({self.dim},)")
        if t < 0:
            raise SpecValidationError(f"time must be non-negative, got {t}")
        if t == 0:
            return x0.copy()
        if self.symmetric:
            vectors = self._eigenvectors
            return vectors @ (np.exp(self._eigenvalues * t) * (vectors.T @ x0))
        return expm(self.generator * t) @ x0


def propagate(generator: ArrayLike, x0: np.ndarray, t: float) -> np.ndarray:
    """Return e^{Gt} x0."""
    return Propagator(generator).apply(x0, t)


def population_trajectory(
    generator: ArrayLike,
    x0: np.ndarray,
    t_grid: np.ndarray,
    n_sites: Optional[int] = None
) -> np.ndarray:
    """Evolve x0 over a time grid.

    Args:
        generator: Kinetic matrix or packed quantum generator
        x0: Initial vector in the generator's coordinates
        t_grid: Non-negative times
        n_sites: Keep only the first n_sites components (the populations
            when the generator is M)

    Returns:
        Array of shape (len(t_grid), n_sites or dim)
    """
    propagator = Propagator(generator)
    keep = propagator.dim if n_sites is None else n_sites
    return np.array([propagator.apply(x0, float(t))[:keep] for t in np.asarray(t_grid, dtype=float)])


def relaxation_time(generator: ArrayLike) -> float:
    """||G^-1|| on I, i.e. 1 / (smallest singular value of G restricted to I).

    Raises:
        SpecValidationError: If G does not conserve total population
        DegenerateSpectrumError: If G has more than one zero eigenvalue
    """
    G = as_array(generator)
    scale = max(operator_norm(G), 1e-300)
    if np.max(np.abs(G.sum(axis=0)), initial=0.0) > 1e-10 * scale:
        raise SpecValidationError("relaxation time needs a population-conserving generator (zero loss)")
    if G.shape[0] == 1:
        return 0.0
    return operator_norm(inverse_on_inequality(G))


def quantum_relaxation_operator(M: np.ndarray) -> np.ndarray:
    """Return int_0^inf T e^{Mt} T^H P_I dt as an (n, n) matrix.

    The integral solves M x = -(P_I p, 0) with x traceless. Coherences are
    eliminated first through the coherence block of M, which leaves the
    population generator m_PP - m_PC m_CC^-1 m_CP; that is inverted on I.

    Raises:
        DegenerateSpectrumError: If the zero eigenvalue of M is not simple
        SpecValidationError: If M has no null direction (nonzero loss)
    """
    M = np.asarray(M, dtype=float)
    n = isqrt(M.shape[0])
    if n * n != M.shape[0]:
        raise SpecValidationError(f"generator size {M.shape[0]} is not a perfect square")
    scale = max(operator_norm(M), 1e-300)
    if np.max(np.abs(M[:n].sum(axis=0)), initial=0.0) > 1e-12 * scale:
        raise SpecValidationError("generator has no stationary state; loss must be zero")
    reduced = extract_generalized_network(M, label="coherence block of M").data
    if n == 1:
        return np.zeros((1, 1))
    return -inverse_on_inequality(reduced, label="reduced quantum generator")


def integrate_relaxation_quadrature(
    M: np.ndarray,
    horizon: float,
    epsrel: float = 1e-8
) -> Tuple[np.ndarray, float]:
    """Integrate T e^{Mt} T^H P_I over [0, horizon] with adaptive quadrature.

    The horizon should be many relaxation times (e.g. 50 tau0). Breakpoints
    are placed log-uniformly from the fastest time scale to the horizon.

    Returns:
        Tuple of (integral, error estimate including a tail term)
    """
    M = np.asarray(M, dtype=float)
    n = isqrt(M.shape[0])
    projector = inequality_projector(n)

    def integrand(t: float) -> np.ndarray:
        return expm(M * t)[:n, :n] @ projector

    fastest = 1.0 / max(operator_norm(M), 1e-300)
    points = np.geomspace(fastest, horizon, 24)[:-1] if horizon > fastest else None
    value, error = quad_vec(integrand, 0.0, horizon, epsrel=epsrel, epsabs=0.0, points=points)
    tail = operator_norm(integrand(horizon)) * horizon / 50.0
    logger.debug("relaxation quadrature error %.3e, tail %.3e", error, tail)
    return value, float(error + tail)


def relaxation_metrics(spec: NetworkSpec) -> RelaxationMetrics:
    """Relaxation times of N and N0 and their distances to the quantum relaxation operator.

    Raises:
        SpecValidationError: If the spec violates the bound-mode assumptions
        DegenerateSpectrumError: If the network is disconnected
    """
    spec.require_bound_mode()
    if spec.n < 2:
        raise SpecValidationError("relaxation needs at least two sites")
    if not is_connected(spec):
        raise DegenerateSpectrumError("network is disconnected")
    blocks = assemble_blocks(spec)
    inv_N = inverse_on_inequality(compute_N(spec, blocks), label="N")
    inv_N0 = inverse_on_inequality(compute_N0(spec), label="N0")
    quantum = quantum_relaxation_operator(blocks.M)

    tau = operator_norm(inv_N)
    tau0 = operator_norm(inv_N0)
    delta_tau = operator_norm(quantum + inv_N)
    delta_tau0 = operator_norm(quantum + inv_N0)
    delta_tau1 = operator_norm(inv_N - inv_N0)
    return RelaxationMetrics(
        tau=tau,
        tau0=tau0,
        mu=1.0 / tau,
        mu0=1.0 / tau0,
        delta_tau=delta_tau,
        delta_tau0=delta_tau0,
        delta_tau1=delta_tau1,
        delta_tau_rel=delta_tau / tau,
        delta_tau0_rel=delta_tau0 / tau0,
        delta_tau1_rel=delta_tau1 / tau,
    )


def localized_relaxation_errors(spec: NetworkSpec, site: int = 1) -> Tuple[float, float, float]:
    """Relative relaxation errors for an exciton starting on one site.

    Compares the Euclidean norms of the integrated population deviations
    int (x(t) - 1/n) dt of the three models for x(0) = e_site, relative to
    the kinetic value.

    Returns:
        Tuple of (M vs N, M vs N0, N vs N0)
    """
    spec.require_bound_mode()
    blocks = assemble_blocks(spec)
    start = np.zeros(spec.n)
    start[site - 1] = 1.0
    start = inequality_projector(spec.n) @ start
    quantum = quantum_relaxation_operator(blocks.M) @ start
    kinetic = -inverse_on_inequality(compute_N(spec, blocks), label="N") @ start
    local = -inverse_on_inequality(compute_N0(spec), label="N0") @ start
    scale = np.linalg.norm(kinetic)
    return (
        float(np.linalg.norm(quantum - kinetic) / scale),
        float(np.linalg.norm(quantum - local) / scale),
        float(np.linalg.norm(kinetic - local) / scale),
    )


def evolution_error(spec: NetworkSpec, t_grid: np.ndarray) -> EvolutionError:
    """Operator norms on I of the differences between the population propagators.

    Args:
        spec: Network in bound mode
        t_grid: Non-negative times

    Returns:
        EvolutionError with one value per time for M vs N, M vs N0 and N vs N0
    """
    spec.require_bound_mode()
    n = spec.n
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(t_grid < 0):
        raise SpecValidationError("time grid must be non-negative")
    blocks = assemble_blocks(spec)
    quantum = Propagator(blocks.M)
    kinetic = Propagator(compute_N(spec, blocks))
    local = Propagator(compute_N0(spec))
    Q = deflation_basis(n)

    err_N, err_N0, err_N_N0 = [], [], []
    for t in t_grid:
        E_M = quantum.matrix(t)[:n, :n] @ Q
        E_N = kinetic.matrix(t) @ Q
        E_N0 = local.matrix(t) @ Q
        err_N.append(operator_norm(E_M - E_N))
        err_N0.append(operator_norm(E_M - E_N0))
        err_N_N0.append(operator_norm(E_N - E_N0))
    return EvolutionError(
        t_grid=t_grid,
        err_N=np.array(err_N),
        err_N0=np.array(err_N0),
        err_N_N0=np.array(err_N_N0),
    )


def _check_hurwitz(G: np.ndarray, label: str) -> None:
    leading = float(np.max(np.linalg.eigvals(G).real))
    if leading >= 0:
        raise DegenerateSpectrumError(
            f"{label} is not strictly stable (leading eigenvalue real part {leading:.3e})"
        )


def efficiency(spec: NetworkSpec, p0: np.ndarray, model: str = "M") -> float:
    """Fraction of the exciton captured by the traps.

    f = sum_k trapping_k int_0^inf x_k(t) dt = sum_k trapping_k (-G^-1 x0)_k

    Args:
        spec: Network with at least one positive loss rate
        p0: Initial populations, summing to one
        model: "M", "N" or "N0"

    Returns:
        Efficiency in [0, 1]

    Raises:
        SpecValidationError: For bad initial populations, an unknown model or zero loss
        DegenerateSpectrumError: If the generator is not strictly stable
    """
    p0 = np.asarray(p0, dtype=float)
    if p0.shape != (spec.n,):
        raise SpecValidationError(f"initial populations have shape {p0.shape}, expected ({spec.n},)")
    if np.any(p0 < 0) or abs(p0.sum() - 1.0) > 1e-12:
        raise SpecValidationError(f"initial populations must be non-negative and sum to 1, got sum {p0.sum()}")
    if spec.is_lossless:
        raise SpecValidationError("efficiency needs at least one loss rate > 0")

    if model == "M":
        G = assemble_blocks(spec).M
        x0 = np.zeros(G.shape[0])
        x0[:spec.n] = p0
    elif model == "N":
        G = compute_N(spec).data
        x0 = p0
    elif model == "N0":
        G = compute_N0(spec).data
        x0 = p0
    else:
        raise SpecValidationError(f"unknown model '{model}'; choose M, N or N0")

    _check_hurwitz(G, model)
    occupation = GuardedLU(G, label=model).solve(-x0)[:spec.n]
    return float(spec.trapping @ occupation)


def stationary_populations(M: np.ndarray) -> np.ndarray:
    """Populations of the null vector of M, normalized to unit trace."""
    M = np.asarray(M, dtype=float)
    n = isqrt(M.shape[0])
    null = svd(M)[2][-1]
    populations = null[:n]
    return populations / populations.sum()


def relaxation_rate(generator: ArrayLike) -> float:
    """mu = 1 / relaxation_time(G)."""
    return 1.0 / relaxation_time(generator)
