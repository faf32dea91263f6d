"""Operator constructors for the resumable teleportation protocol.

Phase convention: ``omega = exp(+2j*pi/N)``; the generalized Pauli
``U(n, m) = sum_f omega**(-f*n) |f><f+m|`` carries the conjugate phase.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .core import Operator, StateVector

SCHMIDT_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class ChannelSpec:
    """Schmidt form ``sum_j b_j |j>|j>`` of a two-qudit channel state.

    Coefficients are real, non-negative, ascending and square-normalized.
    Use :meth:`from_coefficients` to normalize and sort arbitrary input.
    """

    level_count: int
    schmidt: np.ndarray

    def __post_init__(self):
        b = np.array(self.schmidt, dtype=float).reshape(-1)
        if self.level_count < 2:
            raise ValueError("level_count must be >= 2")
        if b.size != self.level_count:
            raise ValueError(f"expected {self.level_count} Schmidt coefficients, got {b.size}")
        if np.any(b < 0):
            raise ValueError("Schmidt coefficients must be non-negative")
        if np.any(np.diff(b) < 0):
            raise ValueError("Schmidt coefficients must be sorted ascending")
        if abs(float(np.sum(b**2)) - 1.0) > SCHMIDT_TOL:
            raise ValueError(f"sum of squared Schmidt coefficients is {np.sum(b**2)!r}, not 1")
        b.setflags(write=False)
        object.__setattr__(self, "schmidt", b)

    @classmethod
    def from_coefficients(cls, coefficients) -> ChannelSpec:
        b = np.sort(np.asarray(coefficients, dtype=float))
        if np.any(b < 0):
            raise ValueError("Schmidt coefficients must be non-negative")
        nrm = np.linalg.norm(b)
        if nrm == 0:
            raise ValueError("all Schmidt coefficients are zero")
        return cls(b.size, b / nrm)

    @classmethod
    def maximal(cls, level_count: int) -> ChannelSpec:
        return cls(level_count, np.full(level_count, 1 / np.sqrt(level_count)))

    @classmethod
    def from_b0_squared(cls, level_count: int, b0_squared: float) -> ChannelSpec:
        """``b0**2 = x`` with the remainder spread evenly over the other levels."""
        if not 0 <= b0_squared <= 1 / level_count + SCHMIDT_TOL:
            raise ValueError(f"b0^2 must lie in [0, 1/N]; got {b0_squared}")
        b0_squared = min(b0_squared, 1 / level_count)
        rest = (1 - b0_squared) / (level_count - 1)
        b = np.sqrt(np.array([b0_squared] + [rest] * (level_count - 1)))
        return cls(level_count, b / np.linalg.norm(b))

    @classmethod
    def random(cls, level_count: int, rng=None) -> ChannelSpec:
        """Schmidt spectrum of a Haar-random two-qudit pure state."""
        rng = np.random.default_rng(rng)
        z = rng.standard_normal((level_count, level_count)) + 1j * rng.standard_normal(
            (level_count, level_count)
        )
        return cls.from_coefficients(np.linalg.svd(z, compute_uv=False))

    @property
    def b0(self) -> float:
        return float(self.schmidt[0])

    @property
    def success_probability(self) -> float:
        return self.level_count * self.b0**2

    def state(self) -> StateVector:
        n = self.level_count
        amps = np.zeros(n * n, dtype=np.complex128)
        amps[np.arange(n) * (n + 1)] = self.schmidt
        return StateVector(n, amps)

    def __repr__(self) -> str:
        return f"ChannelSpec(N={self.level_count}, schmidt={np.round(self.schmidt, 6).tolist()})"


def _check_level_count(n: int):
    if int(n) != n or n < 2:
        raise ValueError(f"level count must be an integer >= 2, got {n}")


@lru_cache(maxsize=None)
def _pauli_matrix(n: int, phase: int, shift: int) -> np.ndarray:
    f = np.arange(n)
    m = np.zeros((n, n), dtype=np.complex128)
    m[f, (f + shift) % n] = np.exp(-2j * np.pi * f * phase / n)
    m.setflags(write=False)
    return m


def gen_pauli(n: int, phase: int, shift: int) -> Operator:
    """Clock-and-shift operator ``U(phase, shift)``; maps ``|x>`` to ``omega**(-(x-shift)*phase) |x-shift>``."""
    _check_level_count(n)
    if not (0 <= phase < n and 0 <= shift < n):
        raise ValueError(f"indices ({phase}, {shift}) out of range for N={n}")
    return Operator(n, 1, _pauli_matrix(n, phase, shift))


def controlled(blocks) -> Operator:
    """Block-diagonal two-qudit operator ``sum_y |y><y| (x) blocks[y]`` (control first)."""
    blocks = [np.asarray(b) for b in blocks]
    n = len(blocks)
    m = np.zeros((n * n, n * n), dtype=np.complex128)
    for y, b in enumerate(blocks):
        m[y * n:(y + 1) * n, y * n:(y + 1) * n] = b
    return Operator(n, 2, m)


def gcnot(n: int) -> Operator:
    """Generalized CNOT: control value ``y`` applies ``U(0, y)`` (shift down by ``y``) to the target."""
    _check_level_count(n)
    return controlled(_pauli_matrix(n, 0, y) for y in range(n))


def filter_block_coefficients(channel: ChannelSpec) -> tuple[np.ndarray, np.ndarray]:
    """Per-control ``(keep, leak)`` weights of the discrimination filter.

    ``keep[y] = b0/b_y`` (defined as 0 when ``b_y == 0``) and
    ``leak[y] = sqrt(1 - keep[y]**2)``.
    """
    b = channel.schmidt
    keep = np.divide(channel.b0, b, out=np.zeros_like(b), where=b > 0)
    keep = np.minimum(keep, 1.0)
    return keep, np.sqrt(1.0 - keep**2)


def filter_d21(channel: ChannelSpec) -> Operator:
    """Controlled discrimination filter (control first).

    Block ``y`` is ``(b0/b_y) I + sqrt(1 - (b0/b_y)**2) U(0, 1)``. With real
    non-negative weights this is not unitary whenever ``0 < b0 < b_y``;
    check :meth:`Operator.unitarity_deviation`. It still preserves the norm
    of every state the protocol feeds it.
    """
    n = channel.level_count
    keep, leak = filter_block_coefficients(channel)
    eye = np.eye(n)
    shift = _pauli_matrix(n, 0, 1)
    return controlled(keep[y] * eye + leak[y] * shift for y in range(n))


def dft(n: int) -> Operator:
    """``F = N**-0.5 * sum_{j,k} omega**(j*k) |j><k|``; column ``k`` is the Fourier state kappa_k."""
    _check_level_count(n)
    j = np.arange(n)
    return Operator(n, 1, np.exp(2j * np.pi * np.outer(j, j) / n) / np.sqrt(n))


def fourier_state(n: int, k: int) -> StateVector:
    j = np.arange(n)
    return StateVector(n, np.exp(2j * np.pi * j * k / n) / np.sqrt(n))


def psi_state(channel: ChannelSpec, phase: int, shift: int) -> StateVector:
    """``|psi_{phase,shift}> = sum_k b_k omega**(k*phase) |k+shift>|k>`` on two slots."""
    n = channel.level_count
    k = np.arange(n)
    amps = np.zeros(n * n, dtype=np.complex128)
    amps[((k + shift) % n) * n + k] = channel.schmidt * np.exp(2j * np.pi * k * phase / n)
    return StateVector(n, amps)


def psi_basis(channel: ChannelSpec) -> dict[tuple[int, int], StateVector]:
    """All ``N**2`` states ``|psi_nm>`` keyed by ``(n, m)`` (phase index, shift index)."""
    n = channel.level_count
    return {(p, s): psi_state(channel, p, s) for s in range(n) for p in range(n)}
