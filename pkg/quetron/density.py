"""Packing of Hermitian density matrices into real vectors.

The packed layout stores the n populations first, followed by
sqrt(2) Re rho_kl and sqrt(2) Im rho_kl for every pair k < l in
lexicographic order. With that scaling the map is an isometry from the
Frobenius norm to the Euclidean norm.
"""

import logging
from functools import lru_cache
from math import isqrt
from typing import Tuple, Union

import numpy as np

from quetron.errors import SpecValidationError
from quetron.models import HERMITIAN_RTOL, DensityVector

logger = logging.getLogger(__name__)

SQRT2 = np.sqrt(2.0)


@lru_cache(maxsize=64)
def _pairs(n: int) -> Tuple[np.ndarray, np.ndarray]:
    rows, cols = np.triu_indices(n, 1)
    rows.setflags(write=False)
    cols.setflags(write=False)
    return rows, cols


def coherence_pairs(n: int) -> Tuple[np.ndarray, np.ndarray]:
    """Return 0-based (rows, cols) of the pairs k < l in packing order."""
    return _pairs(n)


def pair_lookup(n: int) -> np.ndarray:
    """Return an (n, n) table mapping a 0-based pair (k, l), k < l, to its pair number.

    Entries with k >= l are -1. Pair number p occupies packed positions
    n + 2p (real part) and n + 2p + 1 (imaginary part).
    """
    table = -np.ones((n, n), dtype=int)
    rows, cols = coherence_pairs(n)
    table[rows, cols] = np.arange(rows.size)
    return table


def coherence_index(n: int, k: int, l: int) -> Tuple[int, int]:
    """Return the 1-based packed positions of (Re rho_kl, Im rho_kl).

    Args:
        n: Number of sites
        k: 1-based row index
        l: 1-based column index, k < l <= n

    Returns:
        Tuple of 1-based positions of the real and imaginary parts
    """
    if not 1 <= k < l <= n:
        raise SpecValidationError(f"coherence index needs 1 <= k < l <= n, got k={k}, l={l}, n={n}")
    re = n + 2 * n * (k - 1) - k * (k + 1) + 2 * l - 1
    return re, re + 1


def pack_density(rho: np.ndarray, rtol: float = HERMITIAN_RTOL) -> DensityVector:
    """Pack a Hermitian matrix into its real vector.

    Args:
        rho: Square complex matrix
        rtol: Relative Frobenius tolerance for the Hermiticity check

    Returns:
        DensityVector of length n^2

    Raises:
        SpecValidationError: If rho is not square or not Hermitian
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise SpecValidationError(f"density matrix must be square, got shape {rho.shape}")
    n = rho.shape[0]

    skew = rho - rho.conj().T
    scale = np.linalg.norm(rho)
    if np.linalg.norm(skew) > rtol * scale:
        k, l = np.unravel_index(int(np.argmax(np.abs(skew))), skew.shape)
        raise SpecValidationError(
            f"density matrix is not Hermitian: worst entry rho[{k + 1},{l + 1}] = {rho[k, l]}"
        )

    rows, cols = coherence_pairs(n)
    upper = rho[rows, cols]
    data = np.empty(n * n)
    data[:n] = np.diag(rho).real
    data[n::2] = SQRT2 * upper.real
    data[n + 1::2] = SQRT2 * upper.imag
    return DensityVector(n=n, data=data)


def unpack_density(vector: Union[DensityVector, np.ndarray]) -> np.ndarray:
    """Rebuild the Hermitian matrix from a packed vector.

    Raises:
        SpecValidationError: If the length is not a perfect square
    """
    data = vector.data if isinstance(vector, DensityVector) else np.asarray(vector, dtype=float)
    if data.ndim != 1:
        raise SpecValidationError(f"density vector must be one-dimensional, got shape {data.shape}")
    n = isqrt(data.size)
    if n * n != data.size or n == 0:
        raise SpecValidationError(f"density vector length {data.size} is not a perfect square")

    rows, cols = coherence_pairs(n)
    upper = (data[n::2] + 1j * data[n + 1::2]) / SQRT2
    rho = np.diag(data[:n].astype(complex))
    rho[rows, cols] = upper
    rho[cols, rows] = upper.conj()
    return rho


def population_projector(n: int) -> np.ndarray:
    """Return T, the (n, n^2) map keeping the population block of a packed vector."""
    return np.eye(n, n * n)


def site_state(n: int, site: int) -> DensityVector:
    """Packed vector of the exciton localized on a 1-based site."""
    if not 1 <= site <= n:
        raise SpecValidationError(f"site {site} outside 1..{n}")
    data = np.zeros(n * n)
    data[site - 1] = 1.0
    return DensityVector(n=n, data=data)
