"""Classical kinetic networks obtained by eliminating the coherences.

The exact reduction is N = a^T (b + c2)^-1 a + c1 (with b = b0 + nu). The
local approximation N0 keeps only the dephasing block b0 and has the closed
form

    mu_kl = 2 |V_kl|^2 (gamma_kl + kappa_kl) / ((gamma_kl + kappa_kl)^2 + E_kl^2)

off the diagonal, with diagonal -kappa_k - sum_l mu_kl. The series
N = sum_k N_k expands the difference in powers of nu (b0 + c2)^-1.
"""

import logging
from math import isqrt
from typing import List, Optional, Tuple

import numpy as np

from quetron.errors import SingularRateError, SpecValidationError
from quetron.linalg import GuardedLU, operator_norm
from quetron.liouvillian import assemble_blocks
from quetron.models import KineticMatrix, LiouvillianBlocks, NetworkSpec

logger = logging.getLogger(__name__)


def pair_rates(spec: NetworkSpec) -> np.ndarray:
    """Return the symmetric matrix of local hopping rates mu_kl (zero diagonal).

    Raises:
        SingularRateError: If a coupled pair has gamma_kl + kappa_kl = 0
    """
    g = spec.dephasing
    kappa = spec.loss
    decay = 0.5 * (g[:, None] + g[None, :]) + 0.5 * (kappa[:, None] + kappa[None, :])
    gap = spec.energies[:, None] - spec.energies[None, :]
    weight = np.abs(spec.couplings) ** 2
    coupled = weight > 0
    if np.any(coupled & (decay == 0)):
        k, l = np.argwhere(coupled & (decay == 0))[0]
        raise SingularRateError(
            f"pair ({k + 1}, {l + 1}) is coupled but has no coherence decay",
            pair=(int(k) + 1, int(l) + 1),
        )
    rates = np.zeros_like(weight)
    denominator = decay ** 2 + gap ** 2
    rates[coupled] = 2.0 * weight[coupled] * decay[coupled] / denominator[coupled]
    return rates


def compute_N0(spec: NetworkSpec) -> KineticMatrix:
    """Local kinetic network from the closed-form pair rates."""
    rates = pair_rates(spec)
    N0 = rates - np.diag(spec.loss + rates.sum(axis=1))
    return KineticMatrix(data=N0, kind="N0")


def _coherence_solver(blocks: LiouvillianBlocks, full: bool) -> GuardedLU:
    matrix = (blocks.b if full else blocks.b0) + blocks.c2
    return GuardedLU(matrix, label="b + c2" if full else "b0 + c2")


def compute_N(spec: NetworkSpec, blocks: Optional[LiouvillianBlocks] = None) -> KineticMatrix:
    """Exact kinetic network a^T (b + c2)^-1 a + c1.

    Args:
        spec: Network specification
        blocks: Pre-assembled blocks of ``spec``

    Raises:
        IllConditionedError: If b + c2 is numerically singular
    """
    if blocks is None:
        blocks = assemble_blocks(spec)
    if blocks.a.size == 0:
        return KineticMatrix(data=blocks.c1, kind="N")
    solved = _coherence_solver(blocks, full=True).solve(blocks.a)
    N = blocks.c1 + blocks.a.T @ solved
    negative = rate_matrix_offdiagonal_signs(N)
    if spec.is_real and negative:
        logger.warning("exact kinetic network has negative off-diagonal rates at %s", negative)
    return KineticMatrix(data=N, kind="N")


def series_terms(spec: NetworkSpec, order: int, blocks: Optional[LiouvillianBlocks] = None) -> List[KineticMatrix]:
    """Return N_0, ..., N_order of the expansion in nu (b0 + c2)^-1.

    N_k = a^T (b0 + c2)^-1 (-nu (b0 + c2)^-1)^k a, and the population loss
    c1 is carried by the leading term so that N_0 equals :func:`compute_N0`.
    """
    if order < 0:
        raise SpecValidationError(f"series order must be >= 0, got {order}")
    if blocks is None:
        blocks = assemble_blocks(spec)
    if blocks.a.size == 0:
        return [KineticMatrix(data=blocks.c1, kind="Nk", order=0)] + [
            KineticMatrix(data=np.zeros_like(blocks.c1), kind="Nk", order=k) for k in range(1, order + 1)
        ]
    solver = _coherence_solver(blocks, full=False)
    current = solver.solve(blocks.a)
    terms = [KineticMatrix(data=blocks.c1 + blocks.a.T @ current, kind="Nk", order=0)]
    for k in range(1, order + 1):
        current = solver.solve(-blocks.nu @ current)
        terms.append(KineticMatrix(data=blocks.a.T @ current, kind="Nk", order=k))
    return terms


def compute_Nk(spec: NetworkSpec, k: int) -> KineticMatrix:
    """Single term N_k of the series."""
    return series_terms(spec, k)[k]


def partial_sum(spec: NetworkSpec, order: int) -> KineticMatrix:
    """Sum of N_0 through N_order."""
    total = sum(term.data for term in series_terms(spec, order))
    return KineticMatrix(data=total, kind="PartialSum", order=order)


def series_ratio(spec: NetworkSpec, blocks: Optional[LiouvillianBlocks] = None) -> float:
    """||nu (b0 + c2)^-1||; the series converges geometrically when this is below one."""
    if blocks is None:
        blocks = assemble_blocks(spec)
    if blocks.nu.size == 0:
        return 0.0
    return operator_norm(blocks.nu @ np.linalg.inv(blocks.b0 + blocks.c2))


def extract_generalized_network(M: np.ndarray, label: str = "coherence block") -> KineticMatrix:
    """Schur complement of the coherence block of any packed generator.

    Returns m_PP - m_PC m_CC^-1 m_CP where P are the first n coordinates
    and C the remaining n^2 - n.

    Raises:
        SpecValidationError: If M is not square with a perfect-square size
        IllConditionedError: If m_CC is numerically singular
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise SpecValidationError(f"generator must be square, got shape {M.shape}")
    n = isqrt(M.shape[0])
    if n * n != M.shape[0]:
        raise SpecValidationError(f"generator size {M.shape[0]} is not a perfect square")
    m_pp, m_pc = M[:n, :n], M[:n, n:]
    m_cp, m_cc = M[n:, :n], M[n:, n:]
    if m_cc.size == 0:
        return KineticMatrix(data=m_pp, kind="Generalized")
    reduced = m_pp - m_pc @ GuardedLU(m_cc, label=label).solve(m_cp)
    return KineticMatrix(data=reduced, kind="Generalized")


def rate_matrix_offdiagonal_signs(matrix: np.ndarray, rtol: float = 1e-12) -> List[Tuple[int, int]]:
    """1-based pairs whose off-diagonal rate is negative beyond rounding."""
    data = matrix.data if isinstance(matrix, KineticMatrix) else np.asarray(matrix)
    scale = float(np.max(np.abs(data), initial=0.0))
    off = data - np.diag(np.diag(data))
    return [(int(k) + 1, int(l) + 1) for k, l in np.argwhere(off < -rtol * scale)]
