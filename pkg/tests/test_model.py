"""Geometry, couplings, basis and Hamiltonian assembly."""

import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ckzgate.model import (
    GeometryError,
    UnsupportedSizeError,
    assemble_hamiltonian,
    basis_for_input,
    build_extended_graph,
    build_star_graph,
    input_bits,
    mis_configurations,
    mis_excitations,
    parity_matrix,
    parity_of,
)
from ckzgate.qdyn import ContractViolation

B = 2 * math.pi * 48.0


class TestGeometry:
    @pytest.mark.parametrize("k,ratio", [(2, 64), (3, 27), (4, 8)])
    def test_outer_coupling_ratio(self, k, ratio):
        arr = build_star_graph(k, B)
        c = arr.couplings
        assert np.allclose(c[0, 1:], B, rtol=1e-12)
        # nearest outer pair
        assert c[1, 2] == pytest.approx(B / ratio, rel=1e-10)

    def test_k4_diagonal_pair(self):
        c = build_star_graph(4, B).couplings
        assert c[1, 3] == pytest.approx(B / 64, rel=1e-10)

    def test_symmetric_star(self):
        assert build_star_graph(3, B).is_symmetric_star()

    @pytest.mark.parametrize("k", [1, 5])
    def test_unsupported_sizes(self, k):
        with pytest.raises(UnsupportedSizeError):
            build_star_graph(k, B)

    def test_large_star_on_request(self):
        with pytest.warns(RuntimeWarning, match="weak-coupling"):
            assert build_star_graph(5, B, allow_large=True).n_atoms == 6

    def test_extended_zero_matches_star(self):
        a = build_extended_graph(3, (0, 0, 0), B)
        b = build_star_graph(3, B)
        assert np.allclose(a.couplings, b.couplings)

    def test_extended_chain_neighbours(self):
        arr = build_extended_graph(3, (1, 0, 0), B)
        edges = arr.blockade_edges()
        c = arr.couplings
        assert np.allclose(c[edges], B, rtol=1e-10)
        assert arr.n_atoms == 5 and arr.aux_counts == (1, 0, 0)

    def test_atom_cap(self):
        with pytest.raises(ContractViolation):
            build_extended_graph(2, (6, 6), B)

    def test_nonpositive_coupling(self):
        with pytest.raises(ContractViolation):
            build_star_graph(2, -1.0)

    def test_overlapping_atoms(self):
        arr = build_star_graph(2, B)
        pos = arr.positions.copy()
        pos[2] = pos[1] + 1e-3
        with pytest.raises(GeometryError):
            arr.with_positions(pos)


class TestHamiltonian:
    def test_two_level_block(self):
        arr = build_star_graph(2, B)
        basis = basis_for_input(arr, (1, 0, 0))
        h = assemble_hamiltonian(arr, basis, 2.0, 0.5)
        assert np.allclose(h, [[0, 1], [1, -0.5]])

    def test_interaction_diagonal(self):
        arr = build_star_graph(2, B)
        basis = basis_for_input(arr, (1, 1, 0))
        delta = 3.0
        h = assemble_hamiltonian(arr, basis, 0.0, delta)
        assert h[basis.index((1, 1)), basis.index((1, 1))] == pytest.approx(-2 * delta + B)

    @pytest.mark.parametrize("k", [2, 3, 4])
    @given(om=st.floats(0.1, 100), de=st.floats(-200, 200))
    def test_parity_antisymmetry(self, k, om, de):
        arr = build_star_graph(k, B)
        basis = basis_for_input(arr, (1,) * (k + 1))
        p = parity_matrix(basis)
        h = assemble_hamiltonian(arr, basis, om, de)
        h_flip = assemble_hamiltonian(arr, basis, om, -de, interaction_sign=-1, lam=1.0)
        assert np.allclose(p @ h @ p, -h_flip, atol=1e-9)

    def test_hermitian_without_decay(self):
        arr = build_star_graph(3, B)
        h = assemble_hamiltonian(arr, basis_for_input(arr, (1, 1, 1, 1)), 40.0, 20.0)
        assert np.allclose(h, h.conj().T)

    def test_bad_sign(self):
        arr = build_star_graph(2, B)
        with pytest.raises(ContractViolation):
            assemble_hamiltonian(arr, basis_for_input(arr, (1, 1, 1)), 1, 1, interaction_sign=0)

    def test_input_length_checked(self):
        arr = build_star_graph(2, B)
        with pytest.raises(ContractViolation):
            basis_for_input(arr, (1, 1))


class TestParityAndMis:
    @pytest.mark.parametrize("k", [2, 3, 4])
    def test_closed_form_matches_brute_force(self, k):
        arr = build_star_graph(k, B)
        for q in input_bits(k + 1):
            best, _ = mis_configurations(arr, basis_for_input(arr, q))
            assert mis_excitations(arr, q) == best

    @pytest.mark.parametrize("n", [(1, 1), (2, 1), (1, 0, 0)])
    def test_extended_closed_form(self, n):
        arr = build_extended_graph(len(n), n, B)
        for q in input_bits(len(n) + 1):
            best, _ = mis_configurations(arr, basis_for_input(arr, q))
            assert mis_excitations(arr, q) == best

    @pytest.mark.parametrize("q,nu", [((1, 1, 1), 3), ((0, 1, 1), 2), ((1, 0, 0), 2), ((0, 0, 0), 2)])
    def test_bus_chain_counts(self, q, nu):
        arr = build_extended_graph(2, (1, 1), B)
        assert mis_excitations(arr, q) == nu

    def test_star_counts(self):
        arr = build_star_graph(3, B)
        assert mis_excitations(arr, (1, 1, 1, 1)) == 3
        assert mis_excitations(arr, (1, 0, 0, 0)) == 1
        assert mis_excitations(arr, (0, 0, 0, 0)) == 0

    @pytest.mark.parametrize("state,sign", [("1rr", 1), ("r11", -1), ("111", 1), ("rrr", -1)])
    def test_parity_of(self, state, sign):
        assert parity_of(state) == sign

    def test_input_bits_order(self):
        assert input_bits(2) == list(itertools.product((0, 1), repeat=2))

