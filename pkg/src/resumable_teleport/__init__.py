"""Qudit state-vector simulation of resumable probabilistic teleportation."""

from .core import (
    ConsistencyError,
    DimensionMismatchError,
    NumericalDegeneracyError,
    Operator,
    StateVector,
    apply,
    basis_state,
    fidelity,
    measure,
    outcome_distribution,
    postselect,
    tensor,
)
from .gates import ChannelSpec, dft, filter_d21, gcnot, gen_pauli, psi_basis
from .protocol import (
    AttemptStats,
    InputState,
    Transcript,
    alice_pipeline,
    flag_probabilities,
    monte_carlo,
    prepare_total,
    run_attempt,
    run_resumable,
)

__version__ = "0.1.0"
