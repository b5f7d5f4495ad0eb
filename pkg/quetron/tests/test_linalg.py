"""Tests for the linear-algebra helpers."""

import numpy as np
import pytest

from quetron.errors import DegenerateSpectrumError, IllConditionedError
from quetron.linalg import (
    GuardedLU,
    deflation_basis,
    inequality_projector,
    inverse_on_inequality,
    inverse_perturbation_bound,
    operator_norm,
    resolvent_norm_bounds,
    restrict_to_inequality,
)
from quetron.models import KineticMatrix


class TestGuardedLU:
    """Test cases for the condition-checked solver."""

    def test_solves(self):
        """A well-conditioned system is solved."""
        rng = np.random.default_rng(0)
        A = rng.normal(size=(5, 5)) + 5 * np.eye(5)
        rhs = rng.normal(size=(5, 2))
        np.testing.assert_allclose(A @ GuardedLU(A).solve(rhs), rhs, atol=1e-12)

    def test_refuses_near_singular(self):
        """The smallest singular value is attached to the error."""
        A = np.array([[1.0, 1.0], [1.0, 1.0 + 1e-14]])
        with pytest.raises(IllConditionedError, match="ill-conditioned") as info:
            GuardedLU(A, label="test")
        assert info.value.smallest_singular_value < 1e-13
        assert info.value.condition_number > 1e12

    def test_requires_square(self):
        """Rectangular input is rejected."""
        with pytest.raises(ValueError, match="square"):
            GuardedLU(np.zeros((2, 3)))


class TestInequalitySubspace:
    """Test cases for the projector, basis and restricted inverse."""

    def test_basis_is_orthonormal_and_traceless(self):
        """Columns are orthonormal and sum to zero."""
        Q = deflation_basis(5)
        assert Q.shape == (5, 4)
        np.testing.assert_allclose(Q.T @ Q, np.eye(4), atol=1e-14)
        np.testing.assert_allclose(Q.sum(axis=0), 0.0, atol=1e-14)
        np.testing.assert_allclose(Q @ Q.T, inequality_projector(5), atol=1e-14)

    def test_inverse_on_inequality(self):
        """G X = X G = P_I for a connected rate matrix."""
        G = np.array([[-2.0, 1.0, 0.5], [1.0, -1.5, 1.0], [1.0, 0.5, -1.5]])
        G = G - np.diag(G.sum(axis=0))
        inverse = inverse_on_inequality(KineticMatrix(data=G, kind="N"))
        P = inequality_projector(3)
        np.testing.assert_allclose(P @ G @ inverse, P, atol=1e-12)
        np.testing.assert_allclose(inverse @ np.ones(3), 0.0, atol=1e-12)

    def test_restriction_eigenvalues(self):
        """Q^T G Q carries the nonzero spectrum of a symmetric rate matrix."""
        G = np.array([[-1.0, 1.0], [1.0, -1.0]])
        np.testing.assert_allclose(restrict_to_inequality(G), [[-2.0]], atol=1e-14)

    def test_disconnected_rejected(self):
        """A second null direction inside I is reported."""
        G = np.zeros((4, 4))
        G[:2, :2] = [[-1.0, 1.0], [1.0, -1.0]]
        G[2:, 2:] = [[-1.0, 1.0], [1.0, -1.0]]
        with pytest.raises(DegenerateSpectrumError, match="disconnected"):
            inverse_on_inequality(G)

    def test_operator_norm(self):
        """Largest singular value, zero for an empty matrix."""
        assert operator_norm(np.diag([3.0, -4.0])) == pytest.approx(4.0)
        assert operator_norm(np.zeros((0, 0))) == 0.0


class TestInverseBounds:
    """Test cases for the perturbation and resolvent primitives."""

    def test_perturbation_bound_holds(self):
        """||(A+B)^-1 - A^-1|| <= 2 ||A^-1||^2 ||B|| for small B."""
        rng = np.random.default_rng(3)
        for _ in range(20):
            A = rng.normal(size=(4, 4)) + 4 * np.eye(4)
            norm_inv = operator_norm(np.linalg.inv(A))
            B = rng.normal(size=(4, 4))
            B *= 0.4 / (norm_inv * operator_norm(B))
            measured, bound, small = inverse_perturbation_bound(A, B)
            assert small
            assert measured <= bound

    def test_resolvent_bounds(self):
        """||(z - A)^-1|| <= min(1/c, 1/|z|) on the closed right half plane."""
        A = -np.diag([0.5, 1.0, 3.0])
        for z in (0.0, 0.3j, 2.0 + 1.0j, 10.0):
            measured, inverse_c, inverse_z = resolvent_norm_bounds(A, z)
            assert inverse_c == pytest.approx(2.0)
            assert measured <= min(inverse_c, inverse_z) * (1 + 1e-12)

    def test_explicit_margin(self):
        """A smaller margin gives a looser bound."""
        A = -np.diag([0.5, 1.0])
        _, inverse_c, _ = resolvent_norm_bounds(A, 1j, c=0.25)
        assert inverse_c == pytest.approx(4.0)

    def test_resolvent_needs_definite(self):
        """A matrix with a zero eigenvalue has no margin."""
        with pytest.raises(ValueError, match="negative definite"):
            resolvent_norm_bounds(np.array([[-1.0, 1.0], [1.0, -1.0]]), 1.0)
