"""Assembly of the Lindblad generator in packed coordinates.

The generator acts on packed density vectors (see :mod:`quetron.density`) as

    M = [[c1, -a^T], [a, b0 + nu + c2]]

with populations first and the (Re, Im) coherence pairs after. Three
independent constructions are provided: the explicit block rules
(:func:`assemble_blocks`), direct evaluation of the superoperator on a
Hermitian basis (:func:`assemble_M_direct`) and, for the transformed
coherence coordinates, the label rules of :func:`tilde_nu_from_rules`.
"""

import logging
from typing import List, Tuple

import numpy as np

from quetron.density import SQRT2, coherence_pairs, pair_lookup
from quetron.models import LiouvillianBlocks, NetworkSpec, TildeBlocks

logger = logging.getLogger(__name__)

U0 = np.array([[-1j, 1j], [1.0, 1.0]]) / SQRT2


def _coherence_source(lookup: np.ndarray, p: int, q: int) -> Tuple[int, int]:
    """Return (pair number, sign) such that rho_pq = x + i*sign*y of that pair."""
    if p < q:
        return int(lookup[p, q]), 1
    return int(lookup[q, p]), -1


def assemble_blocks(spec: NetworkSpec) -> LiouvillianBlocks:
    """Build the blocks of M from the network parameters.

    Each pair (k, l) contributes a 2x2 dephasing block
    [[-gamma_kl, E_kl], [-E_kl, -gamma_kl]] to b0, with
    gamma_kl = (gamma_k + gamma_l)/2 and E_kl = E_k - E_l.

    Args:
        spec: Network specification

    Returns:
        LiouvillianBlocks with M assembled
    """
    n = spec.n
    rows, cols = coherence_pairs(n)
    lookup = pair_lookup(n)
    size = 2 * rows.size
    V = spec.couplings
    E = spec.energies
    g = spec.dephasing
    kappa = spec.loss

    a = np.zeros((size, n))
    b0 = np.zeros((size, size))
    nu = np.zeros((size, size))
    c2 = np.zeros((size, size))

    for p, (k, l) in enumerate(zip(rows, cols)):
        re, im = 2 * p, 2 * p + 1
        gkl = 0.5 * (g[k] + g[l])
        ekl = E[k] - E[l]
        b0[re, re] = b0[im, im] = -gkl
        b0[re, im] = ekl
        b0[im, re] = -ekl
        c2[re, re] = c2[im, im] = -0.5 * (kappa[k] + kappa[l])

        v = V[k, l]
        a[re, k] = -SQRT2 * v.imag
        a[re, l] = SQRT2 * v.imag
        a[im, k] = SQRT2 * v.real
        a[im, l] = -SQRT2 * v.real

        # d rho_kl / dt  gets  -i V_km rho_ml + i V_ml rho_km  for every third site m
        for m in range(n):
            if m == k or m == l:
                continue
            for w, (q, s) in (
                (-1j * V[k, m], _coherence_source(lookup, m, l)),
                (1j * V[m, l], _coherence_source(lookup, k, m)),
            ):
                if w == 0:
                    continue
                nu[re, 2 * q] += w.real
                nu[re, 2 * q + 1] -= s * w.imag
                nu[im, 2 * q] += w.imag
                nu[im, 2 * q + 1] += s * w.real

    c1 = -np.diag(kappa)
    M = np.block([[c1, -a.T], [a, b0 + nu + c2]])
    return LiouvillianBlocks(n=n, a=a, b0=b0, nu=nu, c1=c1, c2=c2, M=M)


def liouvillian_superoperator(spec: NetworkSpec, rho: np.ndarray) -> np.ndarray:
    """Apply the master-equation superoperator to a matrix.

    Returns -i[H + V, rho] - (1/2){K, rho} plus site dephasing with jump
    operators sqrt(gamma_k)|k><k|, where K = diag(kappa).
    """
    H = spec.hamiltonian()
    K = np.diag(spec.loss).astype(complex)
    drho = -1j * (H @ rho - rho @ H) - 0.5 * (K @ rho + rho @ K)
    for k, gamma in enumerate(spec.dephasing):
        if gamma == 0:
            continue
        c = np.zeros((spec.n, spec.n), dtype=complex)
        c[k, k] = 1.0
        cdc = c.conj().T @ c
        drho += gamma * (c @ rho @ c.conj().T - 0.5 * (cdc @ rho + rho @ cdc))
    return drho


def hermitian_basis(n: int) -> np.ndarray:
    """Orthonormal Hermitian basis matching the packed coordinates.

    Populations |k><k| first, then for each pair k < l
    (|k><l| + |l><k|)/sqrt2 and (i|k><l| - i|l><k|)/sqrt2, so that the
    packed vector of rho is (Tr(s_j rho))_j.
    """
    basis = np.zeros((n * n, n, n), dtype=complex)
    for k in range(n):
        basis[k, k, k] = 1.0
    rows, cols = coherence_pairs(n)
    for p, (k, l) in enumerate(zip(rows, cols)):
        basis[n + 2 * p, k, l] = basis[n + 2 * p, l, k] = 1.0 / SQRT2
        basis[n + 2 * p + 1, k, l] = 1j / SQRT2
        basis[n + 2 * p + 1, l, k] = -1j / SQRT2
    return basis


def assemble_M_direct(spec: NetworkSpec) -> np.ndarray:
    """Build M entry by entry as M_ij = Re Tr(s_i^H L(s_j)) over the Hermitian basis."""
    basis = hermitian_basis(spec.n)
    images = np.array([liouvillian_superoperator(spec, element) for element in basis])
    return np.einsum("iab,jab->ij", basis.conj(), images).real


def tilde_transform(blocks: LiouvillianBlocks) -> TildeBlocks:
    """Rotate every coherence pair by U0 = (1/sqrt2)[[-i, i], [1, 1]].

    The transformed coordinates of a pair are i*conj(rho_kl) and -i*rho_kl,
    which makes b0 diagonal with entries -gamma_kl + i E_kl and their
    conjugates.
    """
    pairs = blocks.a.shape[0] // 2
    U = np.kron(np.eye(pairs), U0)
    diag = np.empty(2 * pairs, dtype=complex)
    for p in range(pairs):
        re, im = 2 * p, 2 * p + 1
        alpha = blocks.b0[re, re] + 1j * blocks.b0[re, im]
        diag[re] = alpha
        diag[im] = np.conj(alpha)
    return TildeBlocks(
        a_t=U.conj().T @ blocks.a,
        b0_t=np.diag(diag),
        nu_t=U.conj().T @ blocks.nu @ U,
        U=U,
    )


def _tilde_target(lookup: np.ndarray, p: int, q: int) -> Tuple[int, int]:
    """Column and sign of w_pq = i rho_qp in the transformed coordinates."""
    if p < q:
        return 2 * int(lookup[p, q]), 1
    return 2 * int(lookup[q, p]) + 1, -1


def tilde_nu_from_rules(spec: NetworkSpec) -> np.ndarray:
    """Build the transformed coherence coupling directly from V.

    Every nonzero entry couples a pair to a pair sharing one site, with a
    value of +-i V or +-i conj(V).
    """
    n = spec.n
    V = spec.couplings
    rows, cols = coherence_pairs(n)
    lookup = pair_lookup(n)
    nu_t = np.zeros((2 * rows.size, 2 * rows.size), dtype=complex)

    for p, (k, l) in enumerate(zip(rows, cols)):
        row, bar = 2 * p, 2 * p + 1
        for m in range(n):
            if m == k or m == l:
                continue
            terms: List[Tuple[int, complex, Tuple[int, int]]] = [
                (row, -1j * V[l, m], (k, m)),
                (row, 1j * V[m, k], (m, l)),
                (bar, 1j * V[k, m], (l, m)),
                (bar, -1j * V[m, l], (m, k)),
            ]
            for target, coefficient, (i, j) in terms:
                column, sign = _tilde_target(lookup, i, j)
                nu_t[target, column] += sign * coefficient
    return nu_t


def trace_functional(n: int) -> np.ndarray:
    """Row vector returning Tr(rho) from a packed vector."""
    functional = np.zeros(n * n)
    functional[:n] = 1.0
    return functional
