"""Resumable probabilistic teleportation of one qudit.

Register layout is ``(ancilla, alice_1, alice_2, bob)`` = slots ``0..3``.
Alice holds the payload in slot 1 and her half of the channel in slot 2.
After her five-step pipeline, the ancilla reads 0 on success and 1 on
failure. On failure the payload can be restored in slot 1 exactly, so the
protocol can be retried over a fresh channel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np

from . import core
from .core import (
    NORM_TOL,
    ConsistencyError,
    DimensionMismatchError,
    StateVector,
    apply,
    basis_state,
    factor_slot,
    fidelity,
    measure,
    outcome_distribution,
    postselect,
    tensor,
)
from .gates import ChannelSpec, dft, filter_d21, gcnot, gen_pauli

ANCILLA, PAYLOAD, CHANNEL_A, BOB = 0, 1, 2, 3
INPUT_TOL = 1e-12
FAILURE_NOTICE = "retry"


@dataclass(frozen=True, eq=False)
class InputState:
    """Single-qudit payload ``sum_i alpha_i |i>``."""

    level_count: int
    amplitudes: np.ndarray

    def __post_init__(self):
        a = np.array(self.amplitudes, dtype=np.complex128).reshape(-1)
        if a.size != self.level_count:
            raise DimensionMismatchError(
                f"expected {self.level_count} amplitudes, got {a.size}"
            )
        if abs(float(np.vdot(a, a).real) - 1.0) > INPUT_TOL:
            raise ValueError("input amplitudes are not normalized")
        a.setflags(write=False)
        object.__setattr__(self, "amplitudes", a)

    @classmethod
    def from_amplitudes(cls, amplitudes) -> InputState:
        a = np.asarray(amplitudes, dtype=np.complex128)
        return cls(a.size, a / np.linalg.norm(a))

    @classmethod
    def random(cls, level_count: int, rng=None) -> InputState:
        return cls(level_count, core.random_state(level_count, 1, rng).amplitudes)

    @classmethod
    def from_state(cls, s: StateVector) -> InputState:
        if s.slot_count != 1:
            raise DimensionMismatchError("payload must be a single qudit")
        return cls(s.level_count, s.normalized().amplitudes)

    def state(self) -> StateVector:
        return StateVector(self.level_count, self.amplitudes)


@dataclass(frozen=True)
class SuccessBranch:
    m: int
    n: int
    m_probability: float
    n_probability: float
    classical_message: tuple[int, int]
    bob_before_correction: StateVector
    bob_final: StateVector
    fidelity: float


@dataclass(frozen=True)
class FailureBranch:
    j: int
    probability: float
    recovered: StateVector
    fidelity: float
    notice: str = FAILURE_NOTICE


@dataclass(frozen=True)
class Transcript:
    """Everything that happened in one teleportation attempt."""

    channel: ChannelSpec
    input: InputState
    rng_seed: int
    snapshots: dict[str, StateVector] = field(repr=False)
    flag_outcome: int
    flag_probability: float
    p_success: float
    p_fail: float
    success: Optional[SuccessBranch] = None
    failure: Optional[FailureBranch] = None

    def __post_init__(self):
        if (self.success is None) == (self.failure is None):
            raise ConsistencyError("exactly one branch must be populated")
        if (self.flag_outcome == 0) != (self.success is not None):
            raise ConsistencyError("branch does not match flag outcome")

    @property
    def succeeded(self) -> bool:
        return self.success is not None

    @property
    def fidelity(self) -> float:
        """Delivered fidelity on success, recovered fidelity on failure."""
        return self.success.fidelity if self.success else self.failure.fidelity

    def to_record(self) -> dict:
        """JSON-serializable summary (states are omitted except the payload)."""
        rec = {
            "N": self.channel.level_count,
            "schmidt": self.channel.schmidt.tolist(),
            "input": [[z.real, z.imag] for z in self.input.amplitudes.tolist()],
            "seed": self.rng_seed,
            "flag": self.flag_outcome,
            "flag_probability": self.flag_probability,
            "p_success": self.p_success,
            "p_fail": self.p_fail,
        }
        if self.success:
            s = self.success
            rec["success"] = {
                "m": s.m,
                "n": s.n,
                "message": list(s.classical_message),
                "fidelity": s.fidelity,
            }
        else:
            f = self.failure
            rec["failure"] = {
                "j": f.j,
                "probability": f.probability,
                "notice": f.notice,
                "fidelity": f.fidelity,
            }
        return rec


@dataclass(frozen=True)
class AttemptStats:
    """Aggregate over one or more resumable runs.

    ``empirical_success_rate`` is successes per attempt; ``mean_attempts_to_success``
    averages only over runs that delivered (NaN if none did). Fidelity minima are
    NaN when the corresponding branch never occurred.
    """

    attempts: int
    successes: int
    empirical_success_rate: float
    mean_attempts_to_success: float
    min_fidelity_success: float
    min_fidelity_recovery: float
    runs: int = 1

    @property
    def delivered(self) -> bool:
        return self.successes > 0


@lru_cache(maxsize=None)
def _gcnot_pair(n: int):
    c = gcnot(n)
    return c, c.dagger


@lru_cache(maxsize=None)
def _dft_dagger(n: int):
    return dft(n).dagger


def _check_dims(payload: InputState, channel: ChannelSpec):
    if payload.level_count != channel.level_count:
        raise DimensionMismatchError(
            f"payload dim {payload.level_count} vs channel dim {channel.level_count}"
        )


def prepare_total(payload: InputState, channel: ChannelSpec) -> StateVector:
    """``|0>_0 (x) |phi>_1 (x) |Phi>_23``."""
    _check_dims(payload, channel)
    n = channel.level_count
    return tensor(tensor(basis_state(n, [0]), payload.state()), channel.state())


def alice_stages(total: StateVector, channel: ChannelSpec) -> dict[str, StateVector]:
    """Run Alice's gate sequence, returning every intermediate state.

    Keys: ``psi_total``, ``factorized`` (after C21), ``omega`` (after C10^dagger),
    ``gamma`` (after D21), ``delta`` (after C10).
    """
    n = channel.level_count
    if total.level_count != n or total.slot_count != 4:
        raise DimensionMismatchError("expected a 4-slot register matching the channel")
    if outcome_distribution(total, ANCILLA)[0][1] < 1 - NORM_TOL:
        raise ValueError("ancilla must start in |0>")
    c, c_dag = _gcnot_pair(n)
    factorized = apply(c, [CHANNEL_A, PAYLOAD], total)
    omega = apply(c_dag, [PAYLOAD, ANCILLA], factorized)
    gamma = apply(filter_d21(channel), [CHANNEL_A, PAYLOAD], omega)
    delta = apply(c, [PAYLOAD, ANCILLA], gamma)
    return {
        "psi_total": total,
        "factorized": factorized,
        "omega": omega,
        "gamma": gamma,
        "delta": delta,
    }


def alice_pipeline(total: StateVector, channel: ChannelSpec) -> StateVector:
    """Alice's operations up to (not including) the flag measurement; returns ``|Delta>``."""
    delta = alice_stages(total, channel)["delta"]
    if not delta.is_normalized():
        raise ConsistencyError(f"|Delta> lost norm: {delta.norm!r}")
    stray = sum(p for d, p in outcome_distribution(delta, ANCILLA) if d >= 2)
    if stray > NORM_TOL:
        raise ConsistencyError(f"ancilla has weight {stray:.3e} outside {{0, 1}}")
    return delta


def flag_probabilities(delta: StateVector) -> tuple[float, float]:
    dist = dict(outcome_distribution(delta, ANCILLA))
    return dist[0], dist[1]


def _select(s: StateVector, slot: int, rng, digit: Optional[int]):
    if digit is None:
        return measure(s, slot, rng)
    p, post = postselect(s, slot, digit)
    return digit, p, post


def _success(delta_projected, reference, rng=None, m=None, k=None) -> SuccessBranch:
    n = delta_projected.level_count
    m, p_m, s = _select(delta_projected, PAYLOAD, rng, m)
    if abs(p_m - 1 / n) > NORM_TOL:
        raise ConsistencyError(f"standard-basis outcome {m} has probability {p_m}, expected 1/{n}")
    s = apply(_dft_dagger(n), [CHANNEL_A], s)
    k, p_k, s = _select(s, CHANNEL_A, rng, k)
    if abs(p_k - 1 / n) > NORM_TOL:
        raise ConsistencyError(f"Fourier outcome {k} has probability {p_k}, expected 1/{n}")
    bob_before = factor_slot(s, BOB)
    bob_final = apply(gen_pauli(n, k, m).dagger, [0], bob_before)
    return SuccessBranch(
        m=m,
        n=k,
        m_probability=p_m,
        n_probability=p_k,
        classical_message=(k, m),
        bob_before_correction=bob_before,
        bob_final=bob_final,
        fidelity=fidelity(bob_final, reference.state()),
    )


def _failure(delta_projected, reference, rng=None, j=None) -> FailureBranch:
    n = delta_projected.level_count
    p0 = outcome_distribution(delta_projected, CHANNEL_A)[0][1]
    if p0 > NORM_TOL:
        raise ConsistencyError(f"failure branch has weight {p0:.3e} on channel digit 0")
    j, p_j, s = _select(delta_projected, CHANNEL_A, rng, j)
    if j == 0:
        raise ConsistencyError("channel digit 0 observed on the failure branch")
    held = factor_slot(s, PAYLOAD)
    recovered = apply(gen_pauli(n, 0, (j + 1) % n).dagger, [0], held)
    return FailureBranch(
        j=j,
        probability=p_j,
        recovered=recovered,
        fidelity=fidelity(recovered, reference.state()),
    )


def success_path(
    delta_projected: StateVector, rng: np.random.Generator, reference: InputState
) -> SuccessBranch:
    """Measure slot 1 (standard basis) and slot 2 (Fourier basis); Bob corrects.

    ``delta_projected`` is ``|Delta>`` after the ancilla read 0. ``reference``
    is the original payload and is only used to score the result.
    """
    return _success(delta_projected, reference, rng=rng)


def success_branch(
    delta_projected: StateVector, m: int, n: int, reference: InputState
) -> SuccessBranch:
    """Same as :func:`success_path` but postselected on outcomes ``(m, n)``."""
    return _success(delta_projected, reference, m=m, k=n)


def failure_path(
    delta_projected: StateVector, rng: np.random.Generator, reference: InputState
) -> FailureBranch:
    """Measure slot 2, then undo the residual shift ``U(0, j+1)`` on the payload slot."""
    return _failure(delta_projected, reference, rng=rng)


def failure_branch(delta_projected: StateVector, j: int, reference: InputState) -> FailureBranch:
    return _failure(delta_projected, reference, j=j)


def run_attempt(payload: InputState, channel: ChannelSpec, seed: int) -> Transcript:
    """One full attempt, deterministic in ``seed``."""
    rng = np.random.default_rng(seed)
    stages = alice_stages(prepare_total(payload, channel), channel)
    delta = stages["delta"]
    if not delta.is_normalized():
        raise ConsistencyError(f"|Delta> lost norm: {delta.norm!r}")
    p_success, p_fail = flag_probabilities(delta)
    if abs(p_success + p_fail - 1.0) > NORM_TOL:
        raise ConsistencyError("ancilla has weight outside {0, 1}")
    flag, p_flag, projected = measure(delta, ANCILLA, rng)
    snapshots = {k: stages[k] for k in ("psi_total", "omega", "gamma", "delta")}
    common = dict(
        channel=channel,
        input=payload,
        rng_seed=seed,
        snapshots=snapshots,
        flag_outcome=flag,
        flag_probability=p_flag,
        p_success=p_success,
        p_fail=p_fail,
    )
    if flag == 0:
        return Transcript(success=success_path(projected, rng, payload), **common)
    return Transcript(failure=failure_path(projected, rng, payload), **common)


def _nanmin(values) -> float:
    return min(values) if values else math.nan


def run_resumable(
    payload: InputState, channel: ChannelSpec, max_attempts: int, seed: int
) -> tuple[AttemptStats, Transcript]:
    """Retry until success or ``max_attempts``; attempt ``i`` uses ``seed + i``.

    Every retry consumes a fresh copy of ``channel`` and teleports the state
    recovered from the previous failure. If all attempts fail the payload is
    still intact; the stats record zero successes.
    """
    if max_attempts < 1:
        raise ValueError("max_attempts must be >= 1")
    current = payload
    fid_success: list[float] = []
    fid_recovery: list[float] = []
    for i in range(max_attempts):
        t = run_attempt(current, channel, seed + i)
        if t.succeeded:
            # score against the original payload, not the recovered copy
            f = fidelity(t.success.bob_final, payload.state())
            fid_success.append(f)
            break
        f = fidelity(t.failure.recovered, payload.state())
        fid_recovery.append(f)
        current = InputState.from_state(t.failure.recovered)
    attempts = i + 1
    successes = int(t.succeeded)
    stats = AttemptStats(
        attempts=attempts,
        successes=successes,
        empirical_success_rate=successes / attempts,
        mean_attempts_to_success=float(attempts) if successes else math.nan,
        min_fidelity_success=_nanmin(fid_success),
        min_fidelity_recovery=_nanmin(fid_recovery),
    )
    return stats, t


def merge_stats(parts) -> AttemptStats:
    """Combine per-run stats into one aggregate."""
    parts = list(parts)
    if not parts:
        raise ValueError("nothing to merge")
    attempts = sum(p.attempts for p in parts)
    successes = sum(p.successes for p in parts)
    delivered = [p for p in parts if p.successes]
    mean_att = (
        sum(p.attempts for p in delivered) / len(delivered) if delivered else math.nan
    )

    def _min(name):
        vals = [getattr(p, name) for p in parts if not math.isnan(getattr(p, name))]
        return _nanmin(vals)

    return AttemptStats(
        attempts=attempts,
        successes=successes,
        empirical_success_rate=successes / attempts,
        mean_attempts_to_success=mean_att,
        min_fidelity_success=_min("min_fidelity_success"),
        min_fidelity_recovery=_min("min_fidelity_recovery"),
        runs=sum(p.runs for p in parts),
    )


def monte_carlo(
    payload: InputState,
    channel: ChannelSpec,
    runs: int,
    seed: int,
    max_attempts: int = 1000,
) -> AttemptStats:
    """Aggregate ``runs`` independent resumable runs.

    Run ``r`` starts at seed ``seed + r * max_attempts`` so that no two
    attempts anywhere in the batch share a seed.
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    return merge_stats(
        run_resumable(payload, channel, max_attempts, seed + r * max_attempts)[0]
        for r in range(runs)
    )


__all__ = [
    "InputState",
    "SuccessBranch",
    "FailureBranch",
    "Transcript",
    "AttemptStats",
    "prepare_total",
    "alice_stages",
    "alice_pipeline",
    "flag_probabilities",
    "success_path",
    "failure_path",
    "success_branch",
    "failure_branch",
    "run_attempt",
    "run_resumable",
    "merge_stats",
    "monte_carlo",
]
