import itertools

import numpy as np
import pytest

from resumable_teleport.core import tensor
from resumable_teleport.gates import ChannelSpec
from resumable_teleport.oracle import (
    branch_table,
    closed_form_delta,
    enumerate_outcomes,
    gram_rank,
    reconstruct_total,
)
from resumable_teleport.protocol import InputState, alice_pipeline, prepare_total


def gram_det_closed_form(ch):
    # the Gram matrix is block diagonal in the shift index with circulant
    # blocks whose eigenvalues are N * b_k^2
    n = ch.level_count
    return float((n**n * np.prod(ch.schmidt**2)) ** n)


class TestReconstruction:
    def test_qutrit(self, rng, qutrit_channel):
        x = InputState.random(3, rng)
        err = np.max(np.abs(reconstruct_total(x, qutrit_channel).amplitudes - tensor(x.state(), qutrit_channel.state()).amplitudes))
        assert err < 1e-12

    @pytest.mark.parametrize("n", range(2, 7))
    def test_random(self, rng, n):
        for _ in range(20):
            x, ch = InputState.random(n, rng), ChannelSpec.random(n, rng)
            direct = tensor(x.state(), ch.state()).amplitudes
            assert np.max(np.abs(reconstruct_total(x, ch).amplitudes - direct)) < 1e-12

    def test_product_channel(self):
        x = InputState(3, [1, 0, 0])
        ch = ChannelSpec(3, [0, 0, 1])
        direct = tensor(x.state(), ch.state()).amplitudes
        assert np.max(np.abs(reconstruct_total(x, ch).amplitudes - direct)) < 1e-12


class TestOutcomeTable:
    def test_flag_zero_probability(self, rng):
        for n in range(2, 7):
            x, ch = InputState.random(n, rng), ChannelSpec.random(n, rng)
            t = enumerate_outcomes(x, ch)
            assert t.flag_probability(0) == pytest.approx(n * ch.b0**2, abs=1e-12)
            assert t.total == pytest.approx(1, abs=1e-9)

    def test_cells(self, rng):
        for n in range(2, 7):
            x, ch = InputState.random(n, rng), ChannelSpec.random(n, rng)
            t = enumerate_outcomes(x, ch)
            for m, k in itertools.product(range(n), repeat=2):
                assert t.probability(0, (m, k)) == pytest.approx(ch.b0**2 / n, abs=1e-12)
            for j in range(1, n):
                assert t.probability(1, (j,)) == pytest.approx(ch.schmidt[j] ** 2 - ch.b0**2, abs=1e-12)

    def test_agrees_with_pipeline(self, rng):
        for n in range(2, 7):
            for _ in range(10):
                x, ch = InputState.random(n, rng), ChannelSpec.random(n, rng)
                oracle_t = enumerate_outcomes(x, ch).as_dict()
                piped = branch_table(alice_pipeline(prepare_total(x, ch), ch).tensor_view()).as_dict()
                assert oracle_t.keys() == piped.keys()
                for key, p in oracle_t.items():
                    assert abs(p - piped[key]) < 1e-9

    def test_closed_form_equals_pipeline_state(self, rng):
        for n in range(2, 7):
            x, ch = InputState.random(n, rng), ChannelSpec.random(n, rng)
            piped = alice_pipeline(prepare_total(x, ch), ch).tensor_view()
            np.testing.assert_allclose(closed_form_delta(x, ch), piped, atol=1e-12)

    def test_branch_states_are_payload(self, rng):
        n = 4
        x, ch = InputState.random(n, rng), ChannelSpec.random(n, rng)
        w = np.exp(2j * np.pi / n)
        f = np.arange(n)
        for row in enumerate_outcomes(x, ch).rows:
            if row.flag == 0:
                m, k = row.outcomes
                corrected = np.conj(w ** (-f * k)) * row.state
                corrected = np.roll(corrected, m)
            else:
                (j,) = row.outcomes
                corrected = np.roll(row.state, j + 1)
            assert abs(abs(np.vdot(corrected, x.amplitudes)) - 1) < 1e-12

    def test_sampled_agreement(self, qutrit_channel):
        from resumable_teleport.protocol import run_attempt

        x = InputState.random(3, 4)
        table = enumerate_outcomes(x, qutrit_channel).as_dict()
        counts = dict.fromkeys(table, 0)
        samples = 10_000
        for seed in range(samples):
            t = run_attempt(x, qutrit_channel, seed)
            key = (0, (t.success.m, t.success.n)) if t.succeeded else (1, (t.failure.j,))
            counts[key] += 1
        for key, p in table.items():
            sigma = np.sqrt(p * (1 - p) / samples)
            assert abs(counts[key] / samples - p) <= 5 * sigma + 1e-12


class TestGram:
    def test_maximal(self):
        for n in range(2, 6):
            det, ok = gram_rank(ChannelSpec.maximal(n))
            assert det == pytest.approx(1, abs=1e-10) and ok

    def test_degenerate(self):
        det, ok = gram_rank(ChannelSpec.from_coefficients([0, 1, 2]))
        assert not ok and det < 1e-12

    def test_qutrit(self, qutrit_channel):
        det, ok = gram_rank(qutrit_channel)
        assert ok
        assert det == pytest.approx(0.421875, rel=1e-10)  # (27 * 1/36)^3

    def test_smallest_eigenvalue_decides(self):
        # |det| is far below 1e-12 here, yet the states are independent
        ch = ChannelSpec.from_coefficients([0.035, 0.15, 0.35, 0.42, 0.82])
        det, ok = gram_rank(ch)
        assert det < 1e-12 and ok

    def test_closed_form(self, rng):
        for n in range(2, 6):
            ch = ChannelSpec.random(n, rng)
            det, ok = gram_rank(ch)
            assert det == pytest.approx(gram_det_closed_form(ch), rel=1e-8)
            assert ok == (ch.b0 > 0)

    def test_spans_when_b0_positive(self, rng):
        # solve for the coefficients of |phi>|Phi> in the psi (x) Bob-factor expansion
        n = 3
        x, ch = InputState.random(n, rng), ChannelSpec.random(n, rng)
        from resumable_teleport.gates import psi_basis

        basis = [psi.amplitudes for psi in psi_basis(ch).values()]
        target = tensor(x.state(), ch.state()).amplitudes.reshape(n * n, n)
        a = np.array(basis).T
        coeffs, *_ = np.linalg.lstsq(a, target, rcond=None)
        np.testing.assert_allclose(a @ coeffs, target, atol=1e-12)
