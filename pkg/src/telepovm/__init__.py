"""Probabilistic teleportation of an unknown two-qubit state through a partly
entangled four-qubit channel, using two Bell measurements, a five-outcome
conclusive POVM and Pauli corrections."""

from .analysis import (
    BranchReport,
    conditional_success_probability,
    enumerate_all_branches,
    total_success_probability,
)
from .errors import (
    DerivationFailure,
    HermiticityError,
    InfeasibleX,
    LabelCollision,
    LabelError,
    NotApplicable,
    NumericalError,
    ShapeError,
    TelepovmError,
    TrialError,
    ValidationError,
)
from .harness import ExperimentConfig, ExperimentSummary, TrialRecord, run_experiment, run_trial
from .povm import (
    BranchPlan,
    DistortionVector,
    PauliCorrection,
    PovmSet,
    build_povm,
    derive_branch_plan,
    min_valid_x,
    sample_povm,
    success_correction,
)
from .protocol import (
    BellIndex,
    BellOutcome,
    Channel,
    Payload,
    apply_cnots,
    attach_ancilla,
    build_world_state,
    collapsed_closed_form,
    measure_bell_pairs,
)
from .statevec import StateVector, apply_gate, expectation, fidelity, project, tensor

__version__ = "0.1.0"
