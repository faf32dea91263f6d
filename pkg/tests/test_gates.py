import itertools

import numpy as np
import pytest

from resumable_teleport.core import apply, basis_state, random_state
from resumable_teleport.gates import (
    ChannelSpec,
    dft,
    filter_block_coefficients,
    filter_d21,
    fourier_state,
    gcnot,
    gen_pauli,
    psi_basis,
)


def ket(n, i):
    v = np.zeros(n, dtype=complex)
    v[i] = 1
    return v


def pauli_by_definition(n, p, s):
    w = np.exp(2j * np.pi / n)
    return sum(w ** (-f * p) * np.outer(ket(n, f), ket(n, (f + s) % n)) for f in range(n))


class TestChannelSpec:
    def test_validation(self):
        with pytest.raises(ValueError):
            ChannelSpec(3, [0.5, 0.1, np.sqrt(0.74)])  # unsorted
        with pytest.raises(ValueError):
            ChannelSpec(2, [-0.6, 0.8])
        with pytest.raises(ValueError):
            ChannelSpec(2, [0.5, 0.5])

    def test_from_coefficients_sorts_and_normalizes(self):
        ch = ChannelSpec.from_coefficients([3, 0, 4])
        np.testing.assert_allclose(ch.schmidt, [0, 0.6, 0.8])

    def test_b0_squared_preset(self):
        ch = ChannelSpec.from_b0_squared(4, 0.1)
        np.testing.assert_allclose(ch.schmidt**2, [0.1, 0.3, 0.3, 0.3])
        assert ChannelSpec.from_b0_squared(4, 0.25).success_probability == pytest.approx(1)


class TestGenPauli:
    def test_identity(self):
        for n in range(2, 8):
            np.testing.assert_array_equal(gen_pauli(n, 0, 0).matrix, np.eye(n))

    def test_qutrit_shift_is_v(self):
        v = np.outer(ket(3, 0), ket(3, 1)) + np.outer(ket(3, 1), ket(3, 2)) + np.outer(ket(3, 2), ket(3, 0))
        np.testing.assert_array_equal(gen_pauli(3, 0, 1).matrix, v)

    def test_matches_definition(self):
        for n in range(2, 6):
            for p, s in itertools.product(range(n), repeat=2):
                np.testing.assert_allclose(gen_pauli(n, p, s).matrix, pauli_by_definition(n, p, s), atol=1e-15)

    def test_unitary_exhaustive(self):
        for n in range(2, 8):
            for p, s in itertools.product(range(n), repeat=2):
                assert gen_pauli(n, p, s).unitary_within(1e-12)

    def test_range(self):
        with pytest.raises(ValueError):
            gen_pauli(3, 3, 0)
        with pytest.raises(ValueError):
            gen_pauli(3, 0, -1)

    def test_composition_up_to_phase(self, rng):
        for _ in range(50):
            n = int(rng.integers(2, 8))
            p1, s1, p2, s2 = (int(x) for x in rng.integers(0, n, 4))
            prod = gen_pauli(n, p1, s1).matrix @ gen_pauli(n, p2, s2).matrix
            target = gen_pauli(n, (p1 + p2) % n, (s1 + s2) % n).matrix
            np.testing.assert_allclose(np.abs(prod), np.abs(target), atol=1e-12)
            # same permutation of basis states, a single common phase
            nz = np.abs(target) > 0.5
            ratio = prod[nz] / target[nz]
            np.testing.assert_allclose(ratio, ratio[0], atol=1e-12)


class TestGcnot:
    def test_control_zero_identity(self):
        for n in range(2, 6):
            for x in range(n):
                out = apply(gcnot(n), [0, 1], basis_state(n, [0, x]))
                np.testing.assert_array_equal(out.amplitudes, basis_state(n, [0, x]).amplitudes)

    def test_qutrit_control_one(self):
        out = apply(gcnot(3), [0, 1], basis_state(3, [1, 0]))
        np.testing.assert_allclose(out.amplitudes, basis_state(3, [1, 2]).amplitudes)

    def test_qutrit_blocks(self):
        v = gen_pauli(3, 0, 1).matrix
        m = gcnot(3).matrix
        np.testing.assert_array_equal(m[0:3, 0:3], np.eye(3))
        np.testing.assert_array_equal(m[3:6, 3:6], v)
        np.testing.assert_array_equal(m[6:9, 6:9], v.conj().T)

    def test_unitary(self):
        for n in range(2, 8):
            g = gcnot(n)
            np.testing.assert_allclose(g.dagger.matrix @ g.matrix, np.eye(n * n), atol=1e-12)

    def test_round_trip_on_register(self, rng):
        for _ in range(100):
            n = int(rng.integers(2, 5))
            c, t = (int(x) for x in rng.permutation(3)[:2])
            s = random_state(n, 3, rng)
            back = apply(gcnot(n).dagger, [c, t], apply(gcnot(n), [c, t], s))
            np.testing.assert_allclose(back.amplitudes, s.amplitudes, atol=1e-12)


class TestFilter:
    def test_maximal_is_identity(self):
        for n in range(2, 8):
            np.testing.assert_allclose(filter_d21(ChannelSpec.maximal(n)).matrix, np.eye(n * n), atol=1e-15)

    def test_qutrit_blocks(self, qutrit_channel):
        m = filter_d21(qutrit_channel).matrix
        v = gen_pauli(3, 0, 1).matrix
        np.testing.assert_allclose(m[0:3, 0:3], np.eye(3), atol=1e-15)
        np.testing.assert_allclose(m[3:6, 3:6], (np.eye(3) + v) / np.sqrt(2), atol=1e-15)
        np.testing.assert_allclose(m[6:9, 6:9], np.eye(3) / np.sqrt(3) + np.sqrt(2 / 3) * v, atol=1e-15)

    def test_qutrit_non_unitary(self, qutrit_channel):
        d = filter_d21(qutrit_channel)
        # block 1 gives M M^dagger - I = (V + V^dagger)/2, max entry 1/2
        assert d.unitarity_deviation() == pytest.approx(0.5, abs=1e-12)
        assert d.unitarity_deviation() > 0.1
        assert not d.unitary_within(1e-6)

    def test_block_action(self, rng):
        for _ in range(20):
            n = int(rng.integers(2, 7))
            ch = ChannelSpec.random(n, rng)
            keep, leak = filter_block_coefficients(ch)
            d = filter_d21(ch)
            for y, x in itertools.product(range(n), repeat=2):
                out = apply(d, [0, 1], basis_state(n, [y, x])).tensor_view()[y]
                want = keep[y] * ket(n, x) + leak[y] * ket(n, (x - 1) % n)
                np.testing.assert_allclose(out, want, atol=1e-15)
                assert keep[y] == pytest.approx(ch.b0 / ch.schmidt[y], abs=1e-15)

    def test_zero_coefficient_block_is_shift(self):
        ch = ChannelSpec(3, [0.0, 0.6, 0.8])
        m = filter_d21(ch).matrix
        np.testing.assert_array_equal(m[0:3, 0:3], gen_pauli(3, 0, 1).matrix)
        # with b0 = 0 every block is a pure shift, hence unitary
        assert filter_d21(ch).unitary_within(1e-12)


class TestDft:
    def test_hadamard(self):
        np.testing.assert_allclose(dft(2).matrix, np.array([[1, 1], [1, -1]]) / np.sqrt(2), atol=1e-15)

    def test_qutrit_kappa_zero(self):
        out = apply(dft(3), [0], basis_state(3, [0]))
        np.testing.assert_allclose(out.amplitudes, np.ones(3) / np.sqrt(3), atol=1e-15)

    def test_columns_are_fourier_states(self):
        for n in range(2, 9):
            for k in range(n):
                np.testing.assert_allclose(dft(n).matrix[:, k], fourier_state(n, k).amplitudes, atol=1e-14)

    def test_unitary(self):
        for n in range(2, 17):
            f = dft(n).matrix
            np.testing.assert_allclose(f.conj().T @ f, np.eye(n), atol=1e-12)


class TestPsiBasis:
    def test_psi00_is_channel(self, qutrit_channel):
        np.testing.assert_allclose(psi_basis(qutrit_channel)[0, 0].amplitudes, qutrit_channel.state().amplitudes)

    def test_normalized(self, rng):
        for n in range(2, 6):
            for s in psi_basis(ChannelSpec.random(n, rng)).values():
                assert s.is_normalized()

    def test_maximal_orthonormal(self):
        for n in range(2, 6):
            states = np.array([s.amplitudes for s in psi_basis(ChannelSpec.maximal(n)).values()])
            np.testing.assert_allclose(states.conj() @ states.T, np.eye(n * n), atol=1e-12)

    def test_gcnot_factorizes(self, rng):
        for n in range(2, 6):
            ch = ChannelSpec.random(n, rng)
            w = np.exp(2j * np.pi / n)
            for (p, s), psi in psi_basis(ch).items():
                tau = ch.schmidt * w ** (p * np.arange(n))
                out = apply(gcnot(n), [1, 0], psi)
                want = np.kron(ket(n, s), tau)
                np.testing.assert_allclose(out.amplitudes, want, atol=1e-14)
