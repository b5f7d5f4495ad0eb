"""Dense linear-algebra helpers shared by the solvers.

Solves go through :class:`GuardedLU`, which refuses matrices whose
estimated condition number exceeds ``CONDITION_LIMIT``. Norms on the
inequality subspace I = {x : sum(x) = 0} are computed in an orthonormal
basis of I.
"""

import logging
from functools import lru_cache
from typing import Optional, Tuple, Union

import numpy as np
from scipy.linalg import get_lapack_funcs, lu_factor, lu_solve, null_space, svdvals

from quetron.errors import DegenerateSpectrumError, IllConditionedError
from quetron.models import CONDITION_LIMIT, KineticMatrix

logger = logging.getLogger(__name__)

ArrayLike = Union[np.ndarray, KineticMatrix]


def as_array(matrix: ArrayLike) -> np.ndarray:
    """Return the dense array behind a KineticMatrix, or the array itself."""
    return matrix.data if isinstance(matrix, KineticMatrix) else np.asarray(matrix)


def operator_norm(matrix: np.ndarray) -> float:
    """Spectral norm (largest singular value)."""
    matrix = np.asarray(matrix)
    if matrix.size == 0:
        return 0.0
    return float(svdvals(matrix)[0])


class GuardedLU:
    """LU factorization that checks the reciprocal condition number first.

    Args:
        matrix: Square matrix to factor
        limit: Largest accepted condition number
        label: Name used in error messages

    Raises:
        IllConditionedError: If the 1-norm condition estimate exceeds ``limit``
    """

    def __init__(self, matrix: np.ndarray, limit: float = CONDITION_LIMIT, label: str = "matrix"):
        matrix = np.asarray(matrix)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ValueError(f"{label} must be square, got shape {matrix.shape}")
        self.shape = matrix.shape
        self.lu, self.piv = lu_factor(matrix, check_finite=True)
        (gecon,) = get_lapack_funcs(("gecon",), (self.lu,))
        anorm = np.linalg.norm(matrix, 1)
        rcond, _ = gecon(self.lu, anorm, norm="1") if anorm > 0 else (0.0, 0)
        if rcond * limit < 1.0:
            smallest = float(svdvals(matrix)[-1])
            condition = 1.0 / rcond if rcond > 0 else float("inf")
            raise IllConditionedError(
                f"{label} is ill-conditioned (condition ~ {condition:.3e}, "
                f"smallest singular value {smallest:.3e})",
                smallest_singular_value=smallest,
                condition_number=condition,
            )

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return lu_solve((self.lu, self.piv), rhs)


def inequality_projector(n: int) -> np.ndarray:
    """Orthogonal projector onto I: P_I = 1 - ones / n."""
    return np.eye(n) - np.full((n, n), 1.0 / n)


@lru_cache(maxsize=64)
def _basis(n: int) -> np.ndarray:
    basis = null_space(np.ones((1, n)))
    basis.setflags(write=False)
    return basis


def deflation_basis(n: int) -> np.ndarray:
    """Orthonormal basis of I as an (n, n - 1) matrix."""
    return _basis(n)


def restrict_to_inequality(matrix: ArrayLike) -> np.ndarray:
    """Return Q^T G Q, the action of G on I in the deflation basis."""
    G = as_array(matrix)
    Q = deflation_basis(G.shape[0])
    return Q.T @ G @ Q


def inverse_on_inequality(matrix: ArrayLike, label: str = "generator") -> np.ndarray:
    """Return Q (Q^T G Q)^-1 Q^T, the inverse of G on I written as an (n, n) matrix.

    Raises:
        DegenerateSpectrumError: If G has a further null direction inside I
    """
    G = as_array(matrix)
    n = G.shape[0]
    Q = deflation_basis(n)
    reduced = Q.T @ G @ Q
    if reduced.size == 0:
        return np.zeros((n, n))
    singular = svdvals(reduced)
    if singular[-1] <= 1e-12 * singular[0]:
        raise DegenerateSpectrumError(
            f"{label} has a repeated zero eigenvalue (disconnected network?); "
            f"smallest singular value on I is {singular[-1]:.3e}"
        )
    return Q @ np.linalg.solve(reduced, Q.T)


def inverse_perturbation_bound(A: np.ndarray, B: np.ndarray) -> Tuple[float, float, bool]:
    """Compare ||(A + B)^-1 - A^-1|| with 2 ||A^-1||^2 ||B||.

    Returns:
        Tuple of (measured difference, bound, whether ||B|| <= 1/(2 ||A^-1||))
    """
    A_inv = np.linalg.inv(A)
    measured = operator_norm(np.linalg.inv(A + B) - A_inv)
    norm_inv = operator_norm(A_inv)
    norm_B = operator_norm(B)
    return measured, 2.0 * norm_inv ** 2 * norm_B, norm_B <= 0.5 / norm_inv


def resolvent_norm_bounds(A: np.ndarray, z: complex, c: Optional[float] = None) -> Tuple[float, float, float]:
    """Resolvent norm of a symmetric negative definite A at Re z >= 0, with both bounds.

    Args:
        A: Symmetric matrix with A <= -c
        z: Point with Re z >= 0
        c: Definiteness margin; minus the largest eigenvalue of A when omitted

    Returns:
        Tuple of (||(z - A)^-1||, 1/c, 1/|z|)
    """
    A = np.asarray(A)
    if c is None:
        c = -float(np.max(np.linalg.eigvalsh(A)))
    if c <= 0:
        raise ValueError("resolvent bound needs a negative definite matrix")
    resolvent = np.linalg.inv(z * np.eye(A.shape[0]) - A)
    bound_z = 1.0 / abs(z) if z != 0 else float("inf")
    return operator_norm(resolvent), 1.0 / c, bound_z
