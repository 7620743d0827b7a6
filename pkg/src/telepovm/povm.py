"""
Five-element conclusive POVM on the ancilla pair and the per-branch recovery plans.

After the two CNOTs Bob's register holds sum_k p_k d_k |k>_56 |k>_ab, where
``d`` is the distortion vector of the branch.  Four rank-one elements built
from reciprocal-amplitude states on ``a,b`` pick out one of four sign
patterns of the payload on 5,6; the fifth element absorbs the rest and
signals failure.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import protocol as pr
from . import statevec as sv
from .errors import (
    DerivationFailure,
    InfeasibleX,
    NotApplicable,
    NumericalError,
    ValidationError,
)
from .linalg import eigh_jacobi, psd_sqrt
from .protocol import ANCILLA_LABELS, BOB_LABELS, BellOutcome, Channel, Payload
from .statevec import StateVector

X_MAX = 4.0
COMPLETENESS_TOL = 1e-10
PSD_TOL = 1e-10
RANK_TOL = 1e-10
FIDELITY_TOL = 1e-10
# relative slack when comparing a requested x with x_min
X_SLACK = 1e-12

# rows: sign pattern of the k-th ancilla state over |00>,|01>,|10>,|11>
SIGN_PATTERNS = np.array(
    [[1, 1, 1, 1], [1, 1, -1, -1], [1, -1, 1, -1], [1, -1, -1, 1]], dtype=float
)


@dataclass(frozen=True)
class DistortionVector:
    """Per-basis-state channel weights multiplying the payload on 5,6."""

    d00: float
    d01: float
    d10: float
    d11: float

    def __post_init__(self):
        for name in ("d00", "d01", "d10", "d11"):
            v = float(getattr(self, name))
            if not np.isfinite(v) or abs(v) < pr.CHANNEL_FLOOR:
                raise ValidationError(f"distortion component {name}={v!r} too small")
            object.__setattr__(self, name, v)

    @classmethod
    def from_channel(cls, channel: Channel) -> "DistortionVector":
        return cls(*channel.coeffs())

    def values(self) -> np.ndarray:
        return np.array([self.d00, self.d01, self.d10, self.d11])

    def inverse_square_sum(self) -> float:
        return float(np.sum(1.0 / self.values() ** 2))

    def __str__(self):
        return "(" + ", ".join(f"{v:.6g}" for v in self.values()) + ")"


def _as_distortion(d) -> DistortionVector:
    if isinstance(d, DistortionVector):
        return d
    if isinstance(d, Channel):
        return DistortionVector.from_channel(d)
    return DistortionVector(*d)


def min_valid_x(d) -> float:
    """Smallest x keeping every diagonal entry of the inconclusive element nonnegative.

    The k-th diagonal entry is 1 - 4 / (x * S * d_k**2) with S = sum 1/d_k**2,
    so the binding entry is the one with the smallest |d_k|.
    """
    inv2 = 1.0 / _as_distortion(d).values() ** 2
    return float(4.0 * np.max(inv2) / np.sum(inv2))


def ancilla_states(d) -> np.ndarray:
    """The four normalized discrimination states on a,b as rows."""
    inv = 1.0 / _as_distortion(d).values()
    return SIGN_PATTERNS * inv / np.linalg.norm(inv)


@dataclass(frozen=True, eq=False)
class PovmSet:
    elements: tuple[np.ndarray, ...]
    x: float
    source: DistortionVector
    states: np.ndarray = field(repr=False)
    kraus5: np.ndarray = field(repr=False)

    def completeness_residual(self) -> float:
        return float(np.max(np.abs(sum(self.elements) - np.eye(4))))

    def eigenvalues(self) -> list[np.ndarray]:
        return [eigh_jacobi(p)[0] for p in self.elements]

    def min_eigenvalue(self) -> float:
        return float(min(w[0] for w in self.eigenvalues()))

    def check(self) -> dict:
        """Evaluate every structural invariant; ``report["ok"]`` summarizes."""
        eig = self.eigenvalues()
        x_min = min_valid_x(self.source)
        report = {
            "x": self.x,
            "x_min": x_min,
            "completeness_residual": self.completeness_residual(),
            "min_eigenvalue": float(min(w[0] for w in eig)),
            "p5_min_eigenvalue": float(eig[4][0]),
            "ranks": [int(np.sum(np.abs(w) > RANK_TOL)) for w in eig],
            "hermitian": all(sv.is_hermitian(p) for p in self.elements),
        }
        report["ok"] = bool(
            report["hermitian"]
            and report["completeness_residual"] <= COMPLETENESS_TOL
            and report["min_eigenvalue"] >= -PSD_TOL
            and report["ranks"][:4] == [1, 1, 1, 1]
            and x_min * (1 - X_SLACK) <= self.x <= X_MAX * (1 + X_SLACK)
        )
        return report


def build_povm(d, x: float | None = None) -> PovmSet:
    """Conclusive POVM for distortion ``d`` with weight ``x``.

    ``x`` defaults to :func:`min_valid_x`, which maximizes the success
    probability.  Raises :class:`InfeasibleX` outside ``[x_min, 4]``.
    PovmSets are immutable, so repeated requests share one instance.
    """
    return _build_povm(_as_distortion(d), None if x is None else float(x))


@lru_cache(maxsize=1024)
def _build_povm(d: DistortionVector, x: float | None) -> PovmSet:
    x_min = min_valid_x(d)
    if x is None:
        x = x_min
    x = float(x)
    if not np.isfinite(x) or x < x_min * (1 - X_SLACK):
        raise InfeasibleX(f"x={x!r} is below x_min={x_min!r}; P5 would not be positive")
    if x > X_MAX * (1 + X_SLACK):
        raise InfeasibleX(f"x={x!r} exceeds the admissible maximum {X_MAX}")
    states = ancilla_states(d)
    rank1 = [np.outer(s, s).astype(complex) / x for s in states]
    p5 = np.eye(4, dtype=complex) - sum(rank1)
    p5 = 0.5 * (p5 + p5.conj().T)
    elements = tuple(rank1 + [p5])
    for e in elements:
        e.setflags(write=False)
    states.setflags(write=False)
    return PovmSet(elements, x, d, states, psd_sqrt(p5))


def povm_probabilities(state: StateVector, povm: PovmSet) -> np.ndarray:
    """Born probabilities of the five outcomes on the ancillas of ``state``."""
    return np.array([sv.expectation(state, p, ANCILLA_LABELS) for p in povm.elements])


def povm_branches(state: StateVector, povm: PovmSet) -> tuple[np.ndarray, list[StateVector]]:
    """Outcome probabilities and normalized post-measurement states for all five results.

    Entries 1-4 of the state list live on 5,6; entry 5 on 5,6,a,b (see
    :func:`sample_povm`).  Impossible outcomes get a null state.
    """
    posts, probs = [], []
    rest, residuals, weights = sv.project_many(state, povm.states, ANCILLA_LABELS)
    for res, w in zip(residuals, weights):
        if w < sv.NULL_PROB:
            posts.append(StateVector(rest, np.zeros(4), null=True).reorder(BOB_LABELS))
        else:
            posts.append(StateVector(rest, res / np.sqrt(w)).reorder(BOB_LABELS))
        probs.append(w / povm.x)
    p5 = sv.expectation(state, povm.elements[4], ANCILLA_LABELS)
    probs.append(p5)
    post5 = sv.apply_gate(state, povm.kraus5, ANCILLA_LABELS)
    if post5.norm2() < sv.NULL_PROB:
        posts.append(StateVector._trusted(post5.labels, np.zeros_like(post5.amps), null=True))
    else:
        posts.append(post5.normalized())
    probs = np.clip(np.array(probs), 0.0, None)
    total = float(np.sum(probs))
    if abs(total - 1.0) > pr.PROB_DRIFT_TOL:
        raise NumericalError(f"POVM probabilities sum to {total!r}")
    return probs, posts


def sample_povm(
    state: StateVector, povm: PovmSet, rng: np.random.Generator
) -> tuple[int, StateVector]:
    """Measure the ancillas of a 5,6,a,b state.

    Outcomes 1-4 return the normalized 5,6 residual after projecting the
    ancillas onto the matching discrimination state.  Outcome 5 is
    inconclusive: the state returned is the full 5,6,a,b register after the
    Kraus operator sqrt(P5), normalized, since 5,6 stay entangled with a,b.
    """
    probs, posts = povm_branches(state, povm)
    k = pr._sample_index(probs, rng)
    return k + 1, posts[k]


PAULIS = ("I", "X", "Z", "XZ")
_PAULI_MATRICES = {
    "I": sv.I2,
    "X": sv.X,
    "Z": sv.Z,
    # X first, then Z
    "XZ": sv.Z @ sv.X,
}


@dataclass(frozen=True)
class PauliCorrection:
    on5: str = "I"
    on6: str = "I"

    def __post_init__(self):
        if self.on5 not in PAULIS or self.on6 not in PAULIS:
            raise ValidationError(f"unknown Pauli in ({self.on5}, {self.on6})")

    def apply(self, state: StateVector) -> StateVector:
        for label, name in (("5", self.on5), ("6", self.on6)):
            if name != "I":
                state = sv.apply_gate(state, _PAULI_MATRICES[name], (label,))
        return state

    def matrix(self) -> np.ndarray:
        return np.kron(_PAULI_MATRICES[self.on5], _PAULI_MATRICES[self.on6])

    def __str__(self):
        return f"{self.on5}(x){self.on6}"


PAULI_PAIRS = tuple(PauliCorrection(p, q) for p, q in itertools.product(PAULIS, PAULIS))

_SUCCESS_TABLE = {
    1: PauliCorrection("I", "I"),
    2: PauliCorrection("Z", "I"),
    3: PauliCorrection("I", "Z"),
    4: PauliCorrection("Z", "Z"),
}


def success_correction(outcome: int) -> PauliCorrection:
    """Pauli pair that restores the payload after POVM outcome 1-4."""
    try:
        return _SUCCESS_TABLE[outcome]
    except KeyError:
        raise NotApplicable(f"POVM outcome {outcome!r} carries no correction") from None


@dataclass(frozen=True)
class BranchPlan:
    bell_outcome: BellOutcome
    pre_correction: PauliCorrection
    distortion: DistortionVector
    post_corrections: dict

    def run_bob(self, state56: StateVector) -> StateVector:
        """Bob's deterministic stage: pre-correction, ancillas, CNOTs."""
        state = self.pre_correction.apply(state56)
        return pr.apply_cnots(pr.attach_ancilla(state))


def _signed_permutations(coeffs: np.ndarray):
    """All 384 signed permutations, unsigned ones first, identity first of all."""
    perms = list(itertools.permutations(range(4)))
    signs = sorted(itertools.product((1, -1), repeat=4), key=lambda s: s.count(-1))
    for sgn in signs:
        for perm in perms:
            yield np.array(sgn) * coeffs[list(perm)]


def _probe_payloads(n: int = 5) -> list[Payload]:
    rng = np.random.default_rng(0x5EED)
    return [Payload.haar(rng) for _ in range(n)]


def _canonical(payload: Payload, dist: np.ndarray) -> StateVector:
    return StateVector(BOB_LABELS, payload.vector() * dist).normalized()


def _search_pre(key, channel: Channel, probes) -> tuple[PauliCorrection, DistortionVector]:
    collapsed = [pr.collapsed_closed_form(p, channel, key)[0] for p in probes]
    coeffs = channel.coeffs()
    for dist in _signed_permutations(coeffs):
        for pre in PAULI_PAIRS:
            if all(
                sv.fidelity(pre.apply(c), _canonical(p, dist)) >= 1 - FIDELITY_TOL
                for c, p in zip(collapsed, probes)
            ):
                return pre, DistortionVector(*dist)
    raise DerivationFailure(f"no pre-correction maps branch {key} to canonical form")


def _search_post(pre, dist: DistortionVector, key, channel, probes) -> dict:
    povm = build_povm(dist)
    post = {}
    for i, anc in enumerate(povm.states, start=1):
        results = []
        for p in probes:
            collapsed = pr.collapsed_closed_form(p, channel, key)[0]
            reg = pr.apply_cnots(pr.attach_ancilla(pre.apply(collapsed)))
            res, _ = sv.project(reg, StateVector(ANCILLA_LABELS, anc), ANCILLA_LABELS)
            results.append((p, res.reorder(BOB_LABELS).normalized()))
        for corr in PAULI_PAIRS:
            if all(
                sv.fidelity(corr.apply(s), p.state(BOB_LABELS)) >= 1 - FIDELITY_TOL
                for p, s in results
            ):
                post[i] = corr
                break
        else:
            raise DerivationFailure(f"no correction recovers POVM outcome {i} on branch {key}")
    return post


@lru_cache(maxsize=256)
def _derive(key, channel: Channel) -> tuple[PauliCorrection, DistortionVector, tuple]:
    probes = _probe_payloads()
    pre, dist = _search_pre(key, channel, probes)
    post = _search_post(pre, dist, key, channel, probes)
    return pre, dist, tuple(sorted(post.items()))


def derive_branch_plan(outcome: BellOutcome | tuple, channel: Channel) -> BranchPlan:
    """Recovery plan for one double-Bell branch, found by exhaustive search.

    The pre-correction and distortion come from scanning the 16 Pauli pairs
    on 5,6 against the 384 signed permutations of the channel coefficients,
    unsigned permutations first.  A candidate is accepted when it turns the
    tabulated collapsed state into ``sum_k p_k d_k |k>`` for five fixed
    Haar-random payloads.  The post-corrections are then found the same way
    for each conclusive POVM outcome.  Results are memoized per channel.
    """
    if not isinstance(outcome, BellOutcome):
        outcome = BellOutcome(*outcome)
    pre, dist, post = _derive(outcome.key, channel)
    return BranchPlan(outcome, pre, dist, dict(post))


def derive_all_plans(channel: Channel) -> dict:
    return {key: derive_branch_plan(key, channel) for key in pr.OUTCOME_ORDER}
