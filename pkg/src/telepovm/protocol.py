"""
Alice's side of the protocol and Bob's deterministic pre-measurement stage.

Register layout: the payload sits on qubits ``1,2``; the four-qubit channel
on ``3,4,5,6`` with amplitudes alpha|0000> + beta|1001> + gamma|0110> +
delta|1111>.  Alice holds 1-4 and measures pairs (2,3) and (1,4) in the Bell
basis; Bob is left with 5,6 and later adds ancillas ``a,b``.
"""
from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import statevec as sv
from .errors import NumericalError, ValidationError
from .statevec import StateVector

NORM_TOL = 1e-12
CHANNEL_FLOOR = 1e-6
# cumulative Born weights may drift this far before sampling refuses
PROB_DRIFT_TOL = 1e-9

PAYLOAD_LABELS = ("1", "2")
CHANNEL_LABELS = ("3", "4", "5", "6")
BOB_LABELS = ("5", "6")
ANCILLA_LABELS = ("a", "b")


@dataclass(frozen=True)
class Payload:
    """Unknown state a|00> + b|01> + c|10> + d|11> on qubits 1,2."""

    a: complex
    b: complex
    c: complex
    d: complex

    def __post_init__(self):
        for name in "abcd":
            v = complex(getattr(self, name))
            if not np.isfinite(v):
                raise ValidationError(f"payload coefficient {name} is not finite")
            object.__setattr__(self, name, v)
        n2 = float(np.sum(np.abs(self.vector()) ** 2))
        if abs(n2 - 1.0) > NORM_TOL:
            raise ValidationError(f"payload squared norm {n2!r} differs from 1")

    @classmethod
    def normalized(cls, coeffs) -> "Payload":
        v = np.asarray(coeffs, dtype=complex)
        nrm = np.linalg.norm(v)
        if v.shape != (4,) or nrm == 0:
            raise ValidationError("payload needs four coefficients, not all zero")
        return cls(*(v / nrm))

    @classmethod
    def haar(cls, rng: np.random.Generator) -> "Payload":
        """Haar-random pure state: normalized standard complex Gaussian."""
        z = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        return cls.normalized(z)

    def vector(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c, self.d], dtype=complex)

    def state(self, labels=PAYLOAD_LABELS) -> StateVector:
        return StateVector(tuple(labels), self.vector())


@dataclass(frozen=True)
class Channel:
    """Real coefficients (alpha, beta, gamma, delta) of the shared channel."""

    alpha: float
    beta: float
    gamma: float
    delta: float

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma", "delta"):
            v = getattr(self, name)
            if isinstance(v, complex) or np.iscomplexobj(v):
                raise ValidationError(f"channel coefficient {name} must be real")
            v = float(v)
            if not np.isfinite(v) or abs(v) < CHANNEL_FLOOR:
                raise ValidationError(
                    f"channel coefficient {name}={v!r} must be nonzero (|.| >= {CHANNEL_FLOOR})"
                )
            object.__setattr__(self, name, v)
        n2 = float(np.sum(self.coeffs() ** 2))
        if abs(n2 - 1.0) > NORM_TOL:
            raise ValidationError(f"channel squared norm {n2!r} differs from 1")

    @classmethod
    def normalized(cls, coeffs) -> "Channel":
        v = np.asarray(coeffs, dtype=float)
        if v.shape != (4,):
            raise ValidationError("channel needs four coefficients")
        return cls(*(v / np.linalg.norm(v)))

    @classmethod
    def random(cls, rng: np.random.Generator, floor: float = 0.05) -> "Channel":
        """Random signed channel with every |coefficient| comfortably above ``floor``."""
        while True:
            v = rng.standard_normal(4)
            v /= np.linalg.norm(v)
            if np.min(np.abs(v)) >= floor:
                return cls(*v)

    def coeffs(self) -> np.ndarray:
        return np.array([self.alpha, self.beta, self.gamma, self.delta])

    def inverse_square_sum(self) -> float:
        """1/alpha**2 + 1/beta**2 + 1/gamma**2 + 1/delta**2."""
        return float(np.sum(1.0 / self.coeffs() ** 2))

    def state(self, labels=CHANNEL_LABELS) -> StateVector:
        amps = np.zeros(16, dtype=complex)
        for bits, c in zip(("0000", "1001", "0110", "1111"), self.coeffs()):
            amps[int(bits, 2)] = c
        return StateVector(tuple(labels), amps)


class BellIndex(enum.Enum):
    PHI_PLUS = "phi+"
    PHI_MINUS = "phi-"
    PSI_PLUS = "psi+"
    PSI_MINUS = "psi-"

    @property
    def vector(self) -> np.ndarray:
        return _BELL_VECTORS[self]

    def state(self, labels) -> StateVector:
        return StateVector(tuple(labels), self.vector)

    @classmethod
    def parse(cls, token: str) -> "BellIndex":
        return cls(token.strip().lower())

    def __str__(self):
        return self.value


_R = 1 / np.sqrt(2)
_BELL_VECTORS = {
    BellIndex.PHI_PLUS: np.array([_R, 0, 0, _R], dtype=complex),
    BellIndex.PHI_MINUS: np.array([_R, 0, 0, -_R], dtype=complex),
    BellIndex.PSI_PLUS: np.array([0, _R, _R, 0], dtype=complex),
    BellIndex.PSI_MINUS: np.array([0, _R, -_R, 0], dtype=complex),
}
for _v in _BELL_VECTORS.values():
    _v.setflags(write=False)

BELL_ORDER = (BellIndex.PHI_PLUS, BellIndex.PHI_MINUS, BellIndex.PSI_PLUS, BellIndex.PSI_MINUS)
# (pair23, pair14), pair23 major
OUTCOME_ORDER = tuple((p23, p14) for p23 in BELL_ORDER for p14 in BELL_ORDER)


@dataclass(frozen=True)
class BellOutcome:
    pair23: BellIndex
    pair14: BellIndex
    probability: float = float("nan")

    @property
    def key(self) -> tuple[BellIndex, BellIndex]:
        return (self.pair23, self.pair14)

    def __str__(self):
        return f"({self.pair23},{self.pair14})"


def build_world_state(payload: Payload, channel: Channel) -> StateVector:
    """Six-qubit product of the payload (1,2) and the channel (3,4,5,6)."""
    return sv.tensor(payload.state(), channel.state())


# row r = 4*i23 + i14 is <B23_i| (x) <B14_j| on qubits (2,3,1,4)
_DOUBLE_BELL_ROWS = np.array(
    [np.kron(_BELL_VECTORS[p23], _BELL_VECTORS[p14]) for p23, p14 in OUTCOME_ORDER]
)


def bell_branches(world: StateVector) -> list[tuple[BellOutcome, StateVector]]:
    """All sixteen double-Bell branches of ``world``, in :data:`OUTCOME_ORDER`.

    Each residual on 5,6 is unnormalized (null when the branch cannot
    occur) and ``outcome.probability`` is its squared norm.
    """
    rest, residuals, probs = sv.project_many(world, _DOUBLE_BELL_ROWS, ("2", "3", "1", "4"))
    out = []
    for (p23, p14), res, prob in zip(OUTCOME_ORDER, residuals, probs):
        if prob < sv.NULL_PROB:
            state, prob = StateVector(rest, np.zeros(4), null=True), 0.0
        else:
            state = StateVector(rest, res)
        out.append((BellOutcome(p23, p14, float(prob)), state.reorder(BOB_LABELS)))
    return out


def bell_branches_sequential(world: StateVector) -> list[tuple[BellOutcome, StateVector]]:
    """Same as :func:`bell_branches` but one :func:`~telepovm.statevec.project` call at a time."""
    out = []
    for p23 in BELL_ORDER:
        after23, _ = sv.project(world, p23.state(("2", "3")), ("2", "3"))
        for p14 in BELL_ORDER:
            if after23.null:
                res, prob = StateVector(BOB_LABELS, np.zeros(4), null=True), 0.0
            else:
                res, prob = sv.project(after23, p14.state(("1", "4")), ("1", "4"))
            out.append((BellOutcome(p23, p14, prob), res.reorder(BOB_LABELS)))
    return out


def _sample_index(probs: np.ndarray, rng: np.random.Generator) -> int:
    total = float(np.sum(probs))
    if abs(total - 1.0) > PROB_DRIFT_TOL:
        raise NumericalError(f"outcome probabilities sum to {total!r}")
    cdf = np.cumsum(probs / total)
    # side="right" never lands on a zero-weight entry
    i = int(np.searchsorted(cdf, rng.random(), side="right"))
    return min(i, len(probs) - 1)


@lru_cache(maxsize=64)
def _cached_branches(payload: Payload, channel: Channel):
    branches = bell_branches(build_world_state(payload, channel))
    probs = np.array([o.probability for o, _ in branches])
    states = [s if s.null else s.normalized() for _, s in branches]
    return [o for o, _ in branches], probs, states


def measure_bell_pairs(
    world: StateVector, rng: np.random.Generator
) -> tuple[BellOutcome, StateVector]:
    """Sample Alice's two Bell measurements on (2,3) and (1,4).

    Returns the outcome and the normalized conditional state of Bob's
    qubits 5,6.
    """
    if sorted(world.labels) != sorted(PAYLOAD_LABELS + CHANNEL_LABELS):
        raise ValidationError(f"world state must live on qubits 1..6, got {world.labels}")
    branches = bell_branches(world)
    probs = np.array([o.probability for o, _ in branches])
    outcome, residual = branches[_sample_index(probs, rng)]
    return outcome, residual.normalized()


def measure_bell_pairs_for(
    payload: Payload, channel: Channel, rng: np.random.Generator
) -> tuple[BellOutcome, StateVector]:
    """:func:`measure_bell_pairs` on the world state of ``payload`` and ``channel``.

    Branch tables are memoized per (payload, channel) so repeated trials on
    a fixed input only pay for the random draw.  Same stream, same result.
    """
    outcomes, probs, states = _cached_branches(payload, channel)
    i = _sample_index(probs, rng)
    return outcomes[i], states[i]


# Collapsed 5,6 states after the double Bell measurement, keyed (pair23, pair14).
# Each term reads sign, payload coefficient, channel coefficient, ket on 5,6.
_P, _M = BellIndex.PHI_PLUS, BellIndex.PHI_MINUS
_SP, _SM = BellIndex.PSI_PLUS, BellIndex.PSI_MINUS
CLOSED_FORMS = {
    (_P, _P): "+aα|00> +bβ|01> +cγ|10> +dδ|11>",
    (_P, _M): "+aα|00> +bβ|01> -cγ|10> -dδ|11>",
    (_P, _SP): "+aγ|10> +bδ|11> +cα|00> +dβ|01>",
    (_P, _SM): "+aγ|10> +bδ|11> -cα|00> -dβ|01>",
    (_M, _P): "+aα|00> -bβ|01> +cγ|10> -dδ|11>",
    (_M, _M): "+aα|00> -bβ|01> -cγ|10> +dδ|11>",
    (_M, _SP): "+aγ|10> -bδ|11> +cα|00> -dβ|01>",
    (_M, _SM): "+aγ|10> -bδ|11> -cα|00> +dβ|01>",
    (_SP, _P): "+aβ|01> +bα|00> +cδ|11> +dγ|10>",
    (_SP, _M): "+aβ|01> +bα|00> -cδ|11> -dγ|10>",
    (_SP, _SP): "+aδ|11> +bγ|10> +cβ|01> +dα|00>",
    (_SP, _SM): "+aδ|11> +bγ|10> -cβ|01> -dα|00>",
    (_SM, _P): "+aβ|01> -bα|00> +cδ|11> -dγ|10>",
    (_SM, _M): "+aβ|01> -bα|00> -cδ|11> +dγ|10>",
    (_SM, _SP): "+aδ|11> -bγ|10> +cβ|01> -dα|00>",
    (_SM, _SM): "+aδ|11> -bγ|10> -cβ|01> +dα|00>",
}
_TERM = re.compile(r"([+-])([abcd])([αβγδ])\|([01]{2})>")


def _parse_form(text: str) -> list[tuple[int, int, int, int]]:
    terms = [
        (1 if s == "+" else -1, "abcd".index(p), "αβγδ".index(c), int(k, 2))
        for s, p, c, k in _TERM.findall(text)
    ]
    assert len(terms) == 4, text
    return terms


_CLOSED_TERMS = {k: _parse_form(v) for k, v in CLOSED_FORMS.items()}


def collapsed_closed_form(
    payload: Payload, channel: Channel, outcome: BellOutcome | tuple
) -> tuple[StateVector, float]:
    """Bob's normalized 5,6 state and the outcome probability from the tabulated formulas.

    Independent of :func:`bell_branches`; the probability is the squared
    norm of the bracketed sum divided by 4.
    """
    key = outcome.key if isinstance(outcome, BellOutcome) else tuple(outcome)
    p, d = payload.vector(), channel.coeffs()
    amps = np.zeros(4, dtype=complex)
    for sign, pi, ci, ket in _CLOSED_TERMS[key]:
        amps[ket] += sign * p[pi] * d[ci]
    n2 = float(np.sum(np.abs(amps) ** 2))
    if n2 < sv.NULL_PROB:
        return StateVector(BOB_LABELS, np.zeros(4), null=True), 0.0
    return StateVector(BOB_LABELS, amps / np.sqrt(n2)), n2 / 4


def attach_ancilla(state56: StateVector) -> StateVector:
    """Append ancillas a,b in |00>."""
    return sv.tensor(state56, sv.basis_state(ANCILLA_LABELS, "00"))


def apply_cnots(state: StateVector) -> StateVector:
    """CNOT 5->a, then CNOT 6->b."""
    state = sv.apply_gate(state, sv.CNOT, ("5", "a"))
    return sv.apply_gate(state, sv.CNOT, ("6", "b"))
