"""Independent checks that do not go through the gate pipeline.

Everything here is written from closed-form amplitudes so that a bug in
:mod:`resumable_teleport.gates` or :func:`resumable_teleport.core.apply`
cannot confirm itself.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import StateVector
from .gates import ChannelSpec, gen_pauli, psi_basis
from .protocol import InputState

GRAM_TOL = 1e-12
PROB_TOL = 1e-9


def _omega_powers(n: int, k: np.ndarray) -> np.ndarray:
    return np.exp(2j * np.pi * k / n)


def corrected_payload(payload: InputState, phase: int, shift: int) -> np.ndarray:
    """``sum_f alpha_{f+shift} omega**(-f*phase) |f>`` written out directly."""
    n = payload.level_count
    f = np.arange(n)
    return payload.amplitudes[(f + shift) % n] * _omega_powers(n, -f * phase)


def reconstruct_total(payload: InputState, channel: ChannelSpec) -> StateVector:
    """Rebuild ``|phi>_1 |Phi>_23`` as ``(1/N) sum_nm |psi_nm>_12 U(n,m)|phi>_3``."""
    n = channel.level_count
    phi = payload.amplitudes
    total = np.zeros(n**3, dtype=np.complex128)
    for (p, s), psi in psi_basis(channel).items():
        bob = gen_pauli(n, p, s).matrix @ phi
        total += np.kron(psi.amplitudes, bob)
    return StateVector(n, total / n)


def closed_form_delta(payload: InputState, channel: ChannelSpec) -> np.ndarray:
    """Four-slot ``|Delta>`` as an ``(N, N, N, N)`` array, built term by term.

    Success part: ``(b0/N) sum_mn |0>|m> (sum_j omega**(jn) |j>) U(n,m)|phi>``.
    Failure part: ``sum_{j>=1} sqrt(b_j^2 - b0^2) |1> (payload shifted down by j+1) |j>|j>``.
    """
    n = channel.level_count
    b = channel.schmidt
    b0 = channel.b0
    j = np.arange(n)
    out = np.zeros((n,) * 4, dtype=np.complex128)
    for m in range(n):
        for k in range(n):
            channel_part = _omega_powers(n, j * k)
            out[0, m] += (b0 / n) * np.outer(channel_part, corrected_payload(payload, k, m))
    alpha = payload.amplitudes
    for jj in range(1, n):
        weight = np.sqrt(max(b[jj] ** 2 - b0**2, 0.0))
        shifted = alpha[(j + jj + 1) % n]
        out[1, :, jj, jj] += weight * shifted
    return out


def fourier_projections(delta: np.ndarray) -> np.ndarray:
    """``<kappa_k|`` applied to slot 2 of a four-slot array, by explicit sums."""
    n = delta.shape[0]
    j = np.arange(n)
    kappa = _omega_powers(n, np.outer(j, j)) / np.sqrt(n)  # kappa[j, k]
    return np.einsum("jk,abjd->abkd", kappa.conj(), delta)


@dataclass(frozen=True)
class OutcomeRow:
    flag: int
    outcomes: tuple[int, ...]
    probability: float
    state: Optional[np.ndarray]  # normalized Bob (flag 0) or Alice slot-1 (flag 1) state


@dataclass(frozen=True)
class OutcomeTable:
    level_count: int
    rows: tuple[OutcomeRow, ...]

    @property
    def total(self) -> float:
        return float(sum(r.probability for r in self.rows))

    def flag_probability(self, flag: int) -> float:
        return float(sum(r.probability for r in self.rows if r.flag == flag))

    def probability(self, flag: int, outcomes: tuple[int, ...]) -> float:
        for r in self.rows:
            if r.flag == flag and r.outcomes == tuple(outcomes):
                return r.probability
        raise KeyError((flag, outcomes))

    def as_dict(self) -> dict[tuple[int, tuple[int, ...]], float]:
        return {(r.flag, r.outcomes): r.probability for r in self.rows}


def _normalized_or_none(v: np.ndarray) -> Optional[np.ndarray]:
    nrm = np.linalg.norm(v)
    return v / nrm if nrm > 1e-12 else None


def branch_table(delta: np.ndarray) -> OutcomeTable:
    """Project a four-slot ``|Delta>`` array onto every protocol branch.

    Flag 0 rows are keyed ``(m, n)``: slot 1 in the standard basis, slot 2 in
    the Fourier basis. Flag 1 rows are keyed ``(j,)``: slot 2 in the standard
    basis, for ``j >= 1``. Negative round-off is clamped to zero.
    """
    n = delta.shape[0]
    rows = []
    fourier = fourier_projections(delta)
    for m in range(n):
        for k in range(n):
            bob = fourier[0, m, k, :]
            p = max(float(np.vdot(bob, bob).real), 0.0)
            rows.append(OutcomeRow(0, (m, k), p, _normalized_or_none(bob)))
    for j in range(1, n):
        alice = delta[1, :, j, :]
        p = max(float(np.vdot(alice, alice).real), 0.0)
        # slot 3 is |j> on this branch; keep the slot-1 column
        rows.append(OutcomeRow(1, (j,), p, _normalized_or_none(alice[:, j])))
    return OutcomeTable(n, tuple(rows))


def enumerate_outcomes(payload: InputState, channel: ChannelSpec) -> OutcomeTable:
    """Joint probability of every branch, computed from the closed-form ``|Delta>``."""
    table = branch_table(closed_form_delta(payload, channel))
    if abs(table.total - 1.0) > PROB_TOL:
        raise ArithmeticError(f"outcome table sums to {table.total!r}")
    return table


def gram_rank(channel: ChannelSpec) -> tuple[float, bool]:
    """``(|det G|, independent)`` for the Gram matrix of the psi states.

    Independence is decided on the smallest Gram eigenvalue (which equals
    ``N * b0**2``), not on the determinant: the determinant is a product of
    ``N**2`` eigenvalues and underflows any fixed threshold for moderate N
    even when every state is well separated.
    """
    states = np.array([s.amplitudes for s in psi_basis(channel).values()])
    gram = states.conj() @ states.T
    det = float(abs(np.linalg.det(gram)))
    smallest = float(np.linalg.eigvalsh(gram)[0])
    return det, smallest > GRAM_TOL
