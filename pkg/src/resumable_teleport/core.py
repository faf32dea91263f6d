"""Dense state-vector algebra for registers of equal-dimension qudits.

Register convention: slot 0 is the most significant digit, so the basis
state ``|d0 d1 ... d_{k-1}>`` lives at flat index ``sum(d_i * N**(k-1-i))``.
This is the left-to-right ket order used throughout the package
(slot 0 = ancilla, 1 and 2 = Alice, 3 = Bob).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

NORM_TOL = 1e-10
ALGEBRA_TOL = 1e-12
DEGENERATE_PROB = 1e-15


class DimensionMismatchError(ValueError):
    """Two objects with incompatible level counts or shapes were combined."""


class NumericalDegeneracyError(ArithmeticError):
    """A measurement was requested on a state with (numerically) zero weight."""


class ConsistencyError(RuntimeError):
    """A protocol-level invariant did not hold on a simulated state."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.complex128, copy=True)
    a.setflags(write=False)
    return a


def digits_of(index: int, level_count: int, slot_count: int) -> tuple[int, ...]:
    """Base-N digits of ``index``, most significant first."""
    if not 0 <= index < level_count**slot_count:
        raise ValueError(f"index {index} out of range for {slot_count} slots of dim {level_count}")
    out = []
    for _ in range(slot_count):
        index, d = divmod(index, level_count)
        out.append(d)
    return tuple(reversed(out))


def index_of(digits: Sequence[int], level_count: int) -> int:
    idx = 0
    for d in digits:
        if not 0 <= d < level_count:
            raise ValueError(f"digit {d} out of range for dim {level_count}")
        idx = idx * level_count + int(d)
    return idx


def _slot_count_for(size: int, level_count: int) -> int:
    k, n = 0, 1
    while n < size:
        n *= level_count
        k += 1
    if n != size or k == 0:
        raise DimensionMismatchError(
            f"{size} amplitudes is not a positive power of level count {level_count}"
        )
    return k


@dataclass(frozen=True, eq=False)
class StateVector:
    """Pure state of ``slot_count`` qudits, each with ``level_count`` levels.

    The amplitude array is stored read-only. Constructing a state does not
    renormalize; use :meth:`normalized` or :func:`state` for that.
    """

    level_count: int
    amplitudes: np.ndarray = field(repr=False)
    slot_count: int = field(init=False)

    def __post_init__(self):
        if self.level_count < 2:
            raise ValueError("level_count must be >= 2")
        amps = np.asarray(self.amplitudes).reshape(-1)
        object.__setattr__(self, "slot_count", _slot_count_for(amps.size, self.level_count))
        object.__setattr__(self, "amplitudes", _frozen(amps))

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def is_normalized(self, tol: float = NORM_TOL) -> bool:
        return abs(self.norm**2 - 1.0) <= tol

    def normalized(self) -> StateVector:
        n = self.norm
        if n < DEGENERATE_PROB:
            raise NumericalDegeneracyError("cannot normalize a zero vector")
        return StateVector(self.level_count, self.amplitudes / n)

    def tensor_view(self) -> np.ndarray:
        return self.amplitudes.reshape((self.level_count,) * self.slot_count)

    def amplitude(self, digits: Sequence[int]) -> complex:
        if len(digits) != self.slot_count:
            raise ValueError("need one digit per slot")
        return complex(self.amplitudes[index_of(digits, self.level_count)])

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.amplitudes, dtype=dtype)

    def __repr__(self) -> str:
        return f"StateVector(N={self.level_count}, k={self.slot_count}, norm={self.norm:.12g})"


@dataclass(frozen=True, eq=False)
class Operator:
    """Dense ``N**arity`` square matrix acting on ``arity`` register slots."""

    level_count: int
    arity: int
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        side = self.level_count**self.arity
        m = np.asarray(self.matrix)
        if m.shape != (side, side):
            raise DimensionMismatchError(
                f"matrix shape {m.shape} does not match {self.arity} slots of dim {self.level_count}"
            )
        object.__setattr__(self, "matrix", _frozen(m))

    def unitarity_deviation(self) -> float:
        """Max-norm of ``M M^dagger - I``."""
        m = self.matrix
        return float(np.max(np.abs(m @ m.conj().T - np.eye(m.shape[0]))))

    def unitary_within(self, tol: float = ALGEBRA_TOL) -> bool:
        return self.unitarity_deviation() <= tol

    @property
    def dagger(self) -> Operator:
        return Operator(self.level_count, self.arity, self.matrix.conj().T)

    def __matmul__(self, other: Operator) -> Operator:
        if (self.level_count, self.arity) != (other.level_count, other.arity):
            raise DimensionMismatchError("operators act on different spaces")
        return Operator(self.level_count, self.arity, self.matrix @ other.matrix)

    def __repr__(self) -> str:
        return f"Operator(N={self.level_count}, arity={self.arity})"


def state(level_count: int, amplitudes, normalize: bool = True) -> StateVector:
    """Build a state from raw amplitudes, normalizing unless told not to."""
    s = StateVector(level_count, np.asarray(amplitudes, dtype=np.complex128))
    return s.normalized() if normalize else s


def basis_state(level_count: int, digits: Sequence[int]) -> StateVector:
    amps = np.zeros(level_count ** len(digits), dtype=np.complex128)
    amps[index_of(digits, level_count)] = 1.0
    return StateVector(level_count, amps)


def random_state(level_count: int, slot_count: int = 1, rng=None) -> StateVector:
    """Haar-random pure state: normalized i.i.d. standard complex Gaussians."""
    rng = np.random.default_rng(rng)
    size = level_count**slot_count
    z = rng.standard_normal(size) + 1j * rng.standard_normal(size)
    return StateVector(level_count, z / np.linalg.norm(z))


def tensor(a: StateVector, b: StateVector) -> StateVector:
    if a.level_count != b.level_count:
        raise DimensionMismatchError(
            f"level counts differ: {a.level_count} vs {b.level_count}"
        )
    return StateVector(a.level_count, np.kron(a.amplitudes, b.amplitudes))


def _check_targets(targets: Sequence[int], slot_count: int) -> tuple[int, ...]:
    targets = tuple(int(t) for t in targets)
    if len(set(targets)) != len(targets):
        raise ValueError(f"repeated target slot in {targets}")
    for t in targets:
        if not 0 <= t < slot_count:
            raise ValueError(f"target slot {t} out of range for {slot_count} slots")
    return targets


def apply(op: Operator, targets: Sequence[int], s: StateVector) -> StateVector:
    """Apply ``op`` to the listed slots, identity elsewhere.

    ``targets[0]`` is the most significant digit of the operator's own
    index, so for a controlled gate built with the control first, pass
    ``[control, target]``. The result is never renormalized.
    """
    if op.level_count != s.level_count:
        raise DimensionMismatchError(
            f"operator dim {op.level_count} vs state dim {s.level_count}"
        )
    if op.arity != len(targets):
        raise ValueError(f"operator arity {op.arity} but {len(targets)} targets given")
    k = s.slot_count
    targets = _check_targets(targets, k)
    n, a = s.level_count, op.arity

    psi = s.tensor_view()
    gate = op.matrix.reshape((n,) * (2 * a))
    out = np.tensordot(gate, psi, axes=(tuple(range(a, 2 * a)), targets))
    # tensordot puts the gate's output axes first; move them back into place
    out = np.moveaxis(out, tuple(range(a)), targets)
    return StateVector(n, out.reshape(-1))


def _slot_weights(s: StateVector, slot: int) -> np.ndarray:
    (slot,) = _check_targets([slot], s.slot_count)
    probs = np.abs(s.tensor_view()) ** 2
    other = tuple(i for i in range(s.slot_count) if i != slot)
    return probs.sum(axis=other) if other else probs


def outcome_distribution(s: StateVector, slot: int) -> list[tuple[int, float]]:
    """Exact standard-basis outcome probabilities for one slot."""
    w = _slot_weights(s, slot)
    return [(d, float(p)) for d, p in enumerate(w)]


def project(s: StateVector, slot: int, digit: int) -> StateVector:
    """Unnormalized projection of ``slot`` onto ``|digit>``."""
    (slot,) = _check_targets([slot], s.slot_count)
    if not 0 <= digit < s.level_count:
        raise ValueError(f"digit {digit} out of range")
    t = np.array(s.tensor_view())
    mask = np.ones(s.level_count, dtype=bool)
    mask[digit] = False
    idx = [slice(None)] * s.slot_count
    idx[slot] = mask
    t[tuple(idx)] = 0.0
    return StateVector(s.level_count, t.reshape(-1))


def measure(s: StateVector, slot: int, rng: np.random.Generator) -> tuple[int, float, StateVector]:
    """Projective standard-basis measurement of a single slot.

    Returns ``(outcome, probability, post_state)``; the post-measurement
    state keeps all slots and is renormalized.
    """
    w = _slot_weights(s, slot)
    total = float(w.sum())
    if total < DEGENERATE_PROB:
        raise NumericalDegeneracyError(f"slot {slot} carries no probability weight")
    if abs(total - 1.0) > NORM_TOL:
        raise ValueError(f"measured state is not normalized (norm^2 = {total!r})")
    p = w / total
    outcome = int(rng.choice(s.level_count, p=p))
    post = project(s, slot, outcome)
    return outcome, float(p[outcome]), post.normalized()


def postselect(s: StateVector, slot: int, digit: int) -> tuple[float, StateVector]:
    """Probability of ``digit`` on ``slot`` and the renormalized post-measurement state."""
    post = project(s, slot, digit)
    p = post.norm**2
    if p < DEGENERATE_PROB:
        raise NumericalDegeneracyError(f"outcome {digit} on slot {slot} has zero probability")
    return float(p / s.norm**2), post.normalized()


def fidelity(a: StateVector, b: StateVector) -> float:
    """``|<a|b>|**2`` for two pure states of the same shape."""
    if a.level_count != b.level_count or a.amplitudes.size != b.amplitudes.size:
        raise DimensionMismatchError("fidelity needs states of identical shape")
    f = abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2
    return float(min(max(f, 0.0), 1.0))


def factor_slot(s: StateVector, slot: int, tol: float = NORM_TOL) -> StateVector:
    """Single-qudit state of ``slot`` when ``s`` is a product across that cut.

    Raises :class:`ConsistencyError` if the slot is entangled with the rest
    of the register beyond ``tol`` (measured as the discarded Schmidt weight).
    """
    (slot,) = _check_targets([slot], s.slot_count)
    n = s.level_count
    t = np.moveaxis(s.tensor_view(), slot, 0).reshape(n, -1)
    u, sv, _ = np.linalg.svd(t, full_matrices=False)
    weight = sv**2
    if weight.sum() < DEGENERATE_PROB:
        raise NumericalDegeneracyError("zero state has no factor")
    residual = float(weight[1:].sum() / weight.sum())
    if residual > tol:
        raise ConsistencyError(f"slot {slot} is entangled (discarded weight {residual:.3e})")
    return StateVector(n, u[:, 0])
