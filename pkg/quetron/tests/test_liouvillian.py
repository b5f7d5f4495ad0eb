"""Tests for generator assembly."""

import numpy as np
import pytest

from quetron.density import pack_density, unpack_density
from quetron.liouvillian import (
    assemble_M_direct,
    assemble_blocks,
    hermitian_basis,
    liouvillian_superoperator,
    tilde_nu_from_rules,
    tilde_transform,
    trace_functional,
)
from quetron.models import NetworkSpec
from quetron.network import random_network


def random_spec(n, rng, complex_couplings=False, lossy=False, theta=1.0):
    """Random dense network with optional complex couplings and loss."""
    upper = np.triu(rng.uniform(-1, 1, (n, n)), 1)
    if complex_couplings:
        upper = upper + 1j * np.triu(rng.uniform(-1, 1, (n, n)), 1)
    couplings = theta * (upper + upper.conj().T)
    loss = rng.uniform(0, 0.5, n) if lossy else np.zeros(n)
    return NetworkSpec(
        n=n,
        energies=rng.uniform(-1, 1, n),
        couplings=couplings,
        dephasing=rng.uniform(0.5, 2.0, n),
        loss=loss,
    )


class TestAssembly:
    """Test cases for assemble_blocks."""

    @pytest.fixture
    def rng(self):
        return np.random.default_rng(2024)

    def test_two_site_generator(self):
        """Hand-derived M for a dimer with coupling v, gap e and dephasing g."""
        v, e, g = 0.3, 0.7, 1.1
        spec = NetworkSpec(n=2, energies=[e, 0.0], couplings=[[0, v], [v, 0]], dephasing=[g, g], loss=[0.0, 0.0])
        s = np.sqrt(2.0) * v
        expected = np.array([
            [0.0, 0.0, 0.0, -s],
            [0.0, 0.0, 0.0, s],
            [0.0, 0.0, -g, e],
            [s, -s, -e, -g],
        ])
        np.testing.assert_allclose(assemble_blocks(spec).M, expected, atol=1e-15)

    def test_dephasing_block_convention(self):
        """Pair (1,2) with gamma_12 = 1 and E_12 = -1."""
        spec = NetworkSpec(n=2, energies=[0.0, 1.0], couplings=np.zeros((2, 2)), dephasing=[1.0, 1.0], loss=[0.0, 0.0])
        np.testing.assert_array_equal(assemble_blocks(spec).b0, [[-1.0, -1.0], [1.0, -1.0]])

    def test_block_layout(self, rng):
        """M is [[c1, -a^T], [a, b0 + nu + c2]]."""
        spec = random_spec(4, rng, complex_couplings=True, lossy=True)
        blocks = assemble_blocks(spec)
        n = spec.n
        np.testing.assert_array_equal(blocks.M[:n, :n], blocks.c1)
        np.testing.assert_array_equal(blocks.M[:n, n:], -blocks.a.T)
        np.testing.assert_array_equal(blocks.M[n:, :n], blocks.a)
        np.testing.assert_allclose(blocks.M[n:, n:], blocks.b0 + blocks.nu + blocks.c2)
        np.testing.assert_array_equal(blocks.c1, -np.diag(spec.loss))

    def test_matches_direct_assembly(self, rng):
        """Block rules and the basis-trace construction agree."""
        for trial in range(30):
            n = int(rng.integers(2, 7))
            spec = random_spec(n, rng, complex_couplings=bool(trial % 2), lossy=bool(trial % 3 == 0))
            M = assemble_blocks(spec).M
            direct = assemble_M_direct(spec)
            assert np.linalg.norm(M - direct) <= 1e-12 * max(np.linalg.norm(direct), 1.0)

    def test_matches_direct_assembly_on_random_networks(self):
        """Same agreement on sparse networks at small coupling."""
        rng = np.random.default_rng(99)
        for _ in range(100):
            spec = random_network(int(rng.integers(3, 8)), rng).with_rates(theta=1e-2)
            M = assemble_blocks(spec).M
            assert np.linalg.norm(M - assemble_M_direct(spec)) <= 1e-12 * np.linalg.norm(M)

    def test_acts_like_superoperator(self, rng):
        """M applied to a packed matrix equals the packed superoperator image."""
        spec = random_spec(3, rng, complex_couplings=True, lossy=True)
        x = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        rho = x @ x.conj().T
        image = liouvillian_superoperator(spec, rho)
        np.testing.assert_allclose(assemble_blocks(spec).M @ pack_density(rho).data,
                                   pack_density(image).data, atol=1e-12)

    def test_trace_preserved_without_loss(self, rng):
        """The trace functional annihilates M when nothing is lost."""
        spec = random_spec(5, rng, complex_couplings=True)
        np.testing.assert_allclose(trace_functional(5) @ assemble_blocks(spec).M, 0.0, atol=1e-14)

    def test_trace_decays_with_loss(self, rng):
        """With loss, d Tr(rho)/dt = -sum kappa_k rho_kk."""
        spec = random_spec(3, rng, lossy=True)
        row = trace_functional(3) @ assemble_blocks(spec).M
        np.testing.assert_allclose(row[:3], -spec.loss, atol=1e-14)
        np.testing.assert_allclose(row[3:], 0.0, atol=1e-14)

    def test_real_couplings_give_skew_nu(self, rng):
        """nu is skew-symmetric when V is real."""
        blocks = assemble_blocks(random_spec(5, rng))
        np.testing.assert_allclose(blocks.nu, -blocks.nu.T, atol=1e-15)

    def test_nu_vanishes_for_dimer(self):
        """Two sites have no third site to route through."""
        spec = NetworkSpec(n=2, energies=[0.0, 1.0], couplings=[[0, 1.0], [1.0, 0]], dephasing=[1.0, 1.0], loss=[0.0, 0.0])
        assert not np.any(assemble_blocks(spec).nu)

    def test_superoperator_keeps_hermiticity(self, rng):
        """Images of Hermitian matrices are Hermitian and traceless without loss."""
        spec = random_spec(4, rng, complex_couplings=True)
        x = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        image = liouvillian_superoperator(spec, x + x.conj().T)
        np.testing.assert_allclose(image, image.conj().T, atol=1e-13)
        assert abs(np.trace(image)) < 1e-13


def three_site_generator(E, V, g):
    """The 9x9 generator of a lossless trimer, written out entry by entry.

    Coordinates are rho_11, rho_22, rho_33, then sqrt2 (Re, Im) of rho_12,
    rho_13 and rho_23.
    """
    s = np.sqrt(2.0)
    r = {pair: V[pair].real for pair in ((0, 1), (0, 2), (1, 2))}
    i = {pair: V[pair].imag for pair in ((0, 1), (0, 2), (1, 2))}
    g12, g13, g23 = (g[0] + g[1]) / 2, (g[0] + g[2]) / 2, (g[1] + g[2]) / 2
    E12, E13, E23 = E[0] - E[1], E[0] - E[2], E[1] - E[2]
    a, b, c = (0, 1), (0, 2), (1, 2)
    return np.array([
        [0, 0, 0, s * i[a], -s * r[a], s * i[b], -s * r[b], 0, 0],
        [0, 0, 0, -s * i[a], s * r[a], 0, 0, s * i[c], -s * r[c]],
        [0, 0, 0, 0, 0, -s * i[b], s * r[b], -s * i[c], s * r[c]],
        [-s * i[a], s * i[a], 0, -g12, E12, i[c], -r[c], i[b], -r[b]],
        [s * r[a], -s * r[a], 0, -E12, -g12, r[c], i[c], -r[b], -i[b]],
        [-s * i[b], 0, s * i[b], -i[c], -r[c], -g13, E13, i[a], r[a]],
        [s * r[b], 0, -s * r[b], r[c], -i[c], -E13, -g13, -r[a], i[a]],
        [0, -s * i[c], s * i[c], -i[b], r[b], -i[a], r[a], -g23, E23],
        [0, s * r[c], -s * r[c], r[b], i[b], -r[a], -i[a], -E23, -g23],
    ])


class TestThreeSiteGenerator:
    """Test cases against the written-out trimer generator."""

    @pytest.fixture
    def trimer(self):
        V = np.zeros((3, 3), dtype=complex)
        V[0, 1], V[0, 2], V[1, 2] = 0.3 - 0.2j, -0.5 + 0.1j, 0.7 + 0.4j
        V = V + V.conj().T
        E, g = np.array([0.2, -0.4, 1.1]), np.array([0.9, 1.3, 0.6])
        spec = NetworkSpec(n=3, energies=E, couplings=V, dephasing=g, loss=np.zeros(3))
        return spec, three_site_generator(E, V, g)

    def test_full_matrix(self, trimer):
        """Every entry of M matches the written-out generator."""
        spec, expected = trimer
        np.testing.assert_allclose(assemble_blocks(spec).M, expected, rtol=0, atol=1e-14)

    def test_split_into_b0_and_nu(self, trimer):
        """b0 holds the gamma and E entries, nu the coupling entries."""
        spec, expected = trimer
        blocks = assemble_blocks(spec)
        coherences = expected[3:, 3:]
        block_diagonal = np.kron(np.eye(3), np.ones((2, 2))).astype(bool)
        np.testing.assert_allclose(blocks.b0, np.where(block_diagonal, coherences, 0.0), atol=1e-14)
        np.testing.assert_allclose(blocks.nu, np.where(block_diagonal, 0.0, coherences), atol=1e-14)

    def test_population_row_spot_value(self):
        """Row rho_11, column sqrt2 Im rho_12 is -sqrt2 V_12 for real couplings."""
        spec = NetworkSpec(n=3, energies=[1.0, 2.0, 3.0], couplings=np.ones((3, 3)) - np.eye(3),
                           dephasing=[1.0, 1.0, 1.0], loss=[0.0, 0.0, 0.0])
        assert assemble_blocks(spec).M[0, 4] == pytest.approx(-np.sqrt(2.0))

    def test_transformed_coupling(self, trimer):
        """a-tilde couples population k to the pair (k, l) with conj(V_kl) and V_kl."""
        spec, _ = trimer
        V = spec.couplings
        expected = np.array([
            [np.conj(V[0, 1]), -np.conj(V[0, 1]), 0],
            [V[0, 1], -V[0, 1], 0],
            [np.conj(V[0, 2]), 0, -np.conj(V[0, 2])],
            [V[0, 2], 0, -V[0, 2]],
            [0, np.conj(V[1, 2]), -np.conj(V[1, 2])],
            [0, V[1, 2], -V[1, 2]],
        ])
        np.testing.assert_allclose(tilde_transform(assemble_blocks(spec)).a_t, expected, atol=1e-14)

    def test_scaling_is_linear(self, trimer):
        """Scaling couplings and rates together by s scales M by s."""
        spec, _ = trimer
        for s in (1e-3, 0.5, 7.0):
            scaled = assemble_blocks(spec.with_rates(theta=s, gamma=s)).M
            np.testing.assert_allclose(scaled, s * assemble_blocks(spec).M, rtol=1e-14, atol=1e-15 * s)


class TestHermitianBasis:
    """Test cases for the basis used by the direct assembly."""

    def test_orthonormal(self):
        """Tr(s_i s_j) is the identity."""
        basis = hermitian_basis(3)
        gram = np.einsum("iab,jba->ij", basis, basis)
        np.testing.assert_allclose(gram, np.eye(9), atol=1e-15)

    def test_coordinates_match_packing(self):
        """Tr(s_j rho) reproduces the packed vector."""
        rng = np.random.default_rng(5)
        x = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        rho = x + x.conj().T
        coordinates = np.einsum("jab,ba->j", hermitian_basis(3), rho).real
        np.testing.assert_allclose(coordinates, pack_density(rho).data, atol=1e-14)
        np.testing.assert_allclose(unpack_density(coordinates), rho, atol=1e-14)


class TestTildeCoordinates:
    """Test cases for the rotated coherence coordinates."""

    @pytest.fixture
    def spec(self):
        return random_spec(5, np.random.default_rng(17), complex_couplings=True, lossy=True)

    def test_rotation_is_unitary(self, spec):
        """U is unitary."""
        U = tilde_transform(assemble_blocks(spec)).U
        np.testing.assert_allclose(U.conj().T @ U, np.eye(U.shape[0]), atol=1e-15)

    def test_b0_diagonalized(self, spec):
        """U^H b0 U is diagonal with -gamma_kl +- i E_kl."""
        blocks = assemble_blocks(spec)
        tilde = tilde_transform(blocks)
        np.testing.assert_allclose(tilde.U.conj().T @ blocks.b0 @ tilde.U, tilde.b0_t, atol=1e-14)
        g = spec.dephasing
        E = spec.energies
        assert tilde.b0_t[0, 0] == pytest.approx(-0.5 * (g[0] + g[1]) + 1j * (E[0] - E[1]))
        assert tilde.b0_t[1, 1] == pytest.approx(np.conj(tilde.b0_t[0, 0]))

    def test_a_transformed(self, spec):
        """a_t is U^H a."""
        blocks = assemble_blocks(spec)
        tilde = tilde_transform(blocks)
        np.testing.assert_allclose(tilde.a_t, tilde.U.conj().T @ blocks.a, atol=1e-15)

    def test_label_rules_match_product(self, spec):
        """Entry-by-entry rules reproduce U^H nu U."""
        tilde = tilde_transform(assemble_blocks(spec))
        np.testing.assert_allclose(tilde_nu_from_rules(spec), tilde.nu_t, atol=1e-13)

    def test_label_rules_real_couplings(self):
        """Rules also hold for sparse real networks."""
        spec = random_network(6, np.random.default_rng(8))
        tilde = tilde_transform(assemble_blocks(spec))
        np.testing.assert_allclose(tilde_nu_from_rules(spec), tilde.nu_t, atol=1e-13)
