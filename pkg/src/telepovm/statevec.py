"""
Dense statevector over labelled qubits.

Amplitudes are stored as a flat complex128 array of length 2**n.  The first
label is the most significant bit of the index, so ``|0110>`` on labels
``("3", "4", "5", "6")`` lives at index ``0b0110``.  Every operation returns
a new :class:`StateVector`; arrays are marked read-only on construction.

Global phase is never stripped.  Compare states with :func:`fidelity`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import HermiticityError, LabelCollision, LabelError, ShapeError, ValidationError

NORM_TOL = 1e-12
HERMITIAN_TOL = 1e-12
# below this squared norm a projected branch is treated as impossible
NULL_PROB = 1e-28

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class StateVector:
    """Pure state on an ordered tuple of qubit labels.

    ``null`` marks the residual of a zero-probability projection; such a
    state has all-zero amplitudes and must not be normalized.
    """

    labels: tuple[str, ...]
    amps: np.ndarray
    null: bool = field(default=False)

    def __post_init__(self):
        labels = tuple(str(l) for l in self.labels)
        if len(set(labels)) != len(labels):
            raise LabelCollision(f"duplicate labels in {labels}")
        amps = _frozen(self.amps).reshape(-1)
        if amps.size != 2 ** len(labels):
            raise ShapeError(
                f"{amps.size} amplitudes for {len(labels)} qubits (need {2 ** len(labels)})"
            )
        if not np.all(np.isfinite(amps)):
            raise ValidationError("non-finite amplitude")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "amps", amps)

    @classmethod
    def _trusted(cls, labels: tuple, amps: np.ndarray, null: bool = False) -> "StateVector":
        # internal results: labels already checked, amps fresh and well-shaped
        obj = object.__new__(cls)
        amps.setflags(write=False)
        object.__setattr__(obj, "labels", labels)
        object.__setattr__(obj, "amps", amps)
        object.__setattr__(obj, "null", null)
        return obj

    @property
    def n(self) -> int:
        return len(self.labels)

    def norm2(self) -> float:
        return float(np.vdot(self.amps, self.amps).real)

    def normalized(self) -> "StateVector":
        if self.null:
            raise ValidationError("cannot normalize a null (zero-probability) state")
        nrm = np.sqrt(self.norm2())
        if nrm == 0.0:
            raise ValidationError("cannot normalize the zero vector")
        return StateVector._trusted(self.labels, self.amps / nrm)

    def tensor(self) -> np.ndarray:
        """Amplitudes reshaped to one axis per qubit."""
        return self.amps.reshape((2,) * self.n)

    def axes(self, labels: Iterable[str]) -> list[int]:
        out = []
        for l in labels:
            try:
                out.append(self.labels.index(str(l)))
            except ValueError:
                raise LabelError(f"label {l!r} not in {self.labels}") from None
        return out

    def reorder(self, labels: Sequence[str]) -> "StateVector":
        """Same state with the qubit order permuted to ``labels``."""
        labels = tuple(str(l) for l in labels)
        if sorted(labels) != sorted(self.labels):
            raise LabelError(f"{labels} is not a permutation of {self.labels}")
        if labels == self.labels:
            return self
        t = np.transpose(self.tensor(), self.axes(labels))
        return StateVector._trusted(labels, t.reshape(-1).copy(), self.null)

    def __repr__(self):
        nz = [
            f"{a:.4g}|{i:0{self.n}b}>"
            for i, a in enumerate(self.amps)
            if abs(a) > 1e-12
        ]
        body = " + ".join(nz) if nz else "0"
        return f"StateVector[{','.join(self.labels)}]({body})"


def from_amplitudes(labels: Sequence[str], amps, normalize: bool = False) -> StateVector:
    s = StateVector(tuple(labels), amps)
    return s.normalized() if normalize else s


def basis_state(labels: Sequence[str], bits: str) -> StateVector:
    """Computational basis ket, e.g. ``basis_state("56", "10")``."""
    labels = tuple(labels)
    if len(bits) != len(labels):
        raise ShapeError(f"bit string {bits!r} does not match {len(labels)} labels")
    amps = np.zeros(2 ** len(labels), dtype=complex)
    amps[int(bits, 2)] = 1.0
    return StateVector(labels, amps)


def tensor(left: StateVector, right: StateVector) -> StateVector:
    """Product state on ``left.labels + right.labels``."""
    clash = set(left.labels) & set(right.labels)
    if clash:
        raise LabelCollision(f"labels {sorted(clash)} appear on both sides")
    return StateVector._trusted(left.labels + right.labels, np.kron(left.amps, right.amps))


def _check_gate(gate: np.ndarray, k: int) -> np.ndarray:
    gate = np.asarray(gate, dtype=complex)
    if gate.shape != (2**k, 2**k):
        raise ShapeError(f"gate of shape {gate.shape} cannot act on {k} qubit(s)")
    return gate


def apply_gate(state: StateVector, gate, targets: Sequence[str]) -> StateVector:
    """Apply ``gate`` to the qubits ``targets`` (first target = MSB of the gate).

    Acts as identity on every other qubit.  Works for non-unitary operators
    too, which is how Kraus operators are applied.
    """
    targets = [str(t) for t in targets]
    if len(set(targets)) != len(targets):
        raise LabelCollision(f"repeated target in {targets}")
    k = len(targets)
    gate = _check_gate(gate, k)
    ax = state.axes(targets)
    rest = [i for i in range(state.n) if i not in ax]
    perm = ax + rest
    t = np.transpose(state.tensor(), perm).reshape(2**k, -1)
    t = (gate @ t).reshape((2,) * state.n)
    t = np.transpose(t, np.argsort(perm))
    return StateVector._trusted(state.labels, t.reshape(-1).copy())


def project(
    state: StateVector, basis_vector: StateVector, on_labels: Sequence[str]
) -> tuple[StateVector, float]:
    """Contract ``<basis_vector|`` against the qubits ``on_labels``.

    Returns the unnormalized residual on the remaining labels together with
    its squared norm, which is the Born probability of that outcome when
    ``state`` is normalized.  A vanishing branch comes back with probability
    0.0 and ``null=True``.
    """
    on_labels = [str(l) for l in on_labels]
    if basis_vector.n != len(on_labels):
        raise ShapeError(
            f"basis vector on {basis_vector.n} qubits, {len(on_labels)} labels given"
        )
    if abs(basis_vector.norm2() - 1.0) > NORM_TOL:
        raise ValidationError("basis vector is not normalized")
    ax = state.axes(on_labels)
    rest_ax = [i for i in range(state.n) if i not in ax]
    m = np.transpose(state.tensor(), ax + rest_ax).reshape(2 ** len(ax), -1)
    residual = np.conj(basis_vector.amps) @ m
    rest = tuple(state.labels[i] for i in rest_ax)
    prob = float(np.vdot(residual, residual).real)
    if prob < NULL_PROB:
        return StateVector._trusted(rest, np.zeros_like(residual), null=True), 0.0
    return StateVector._trusted(rest, residual), prob


def project_many(
    state: StateVector, basis_rows, on_labels: Sequence[str]
) -> tuple[tuple[str, ...], np.ndarray, np.ndarray]:
    """Batched :func:`project` for the rows of ``basis_rows`` (each a normalized ket).

    Returns the remaining labels, the unnormalized residuals as rows, and
    their squared norms.
    """
    on_labels = [str(l) for l in on_labels]
    rows = np.atleast_2d(np.asarray(basis_rows, dtype=complex))
    if rows.shape[1] != 2 ** len(on_labels):
        raise ShapeError(f"basis rows of length {rows.shape[1]} for {len(on_labels)} labels")
    if np.any(np.abs(np.sum(np.abs(rows) ** 2, axis=1) - 1.0) > NORM_TOL):
        raise ValidationError("basis rows are not normalized")
    ax = state.axes(on_labels)
    rest_ax = [i for i in range(state.n) if i not in ax]
    m = np.transpose(state.tensor(), ax + rest_ax).reshape(2 ** len(ax), -1)
    residuals = np.conj(rows) @ m
    probs = np.sum(np.abs(residuals) ** 2, axis=1)
    return tuple(state.labels[i] for i in rest_ax), residuals, probs


def is_hermitian(op, tol: float = HERMITIAN_TOL) -> bool:
    op = np.asarray(op)
    return op.ndim == 2 and op.shape[0] == op.shape[1] and np.allclose(op, op.conj().T, rtol=0, atol=tol)


def expectation(state: StateVector, op, on_labels: Sequence[str]) -> float:
    """<state| op (x) I |state> for a Hermitian ``op`` on ``on_labels``."""
    op = np.asarray(op, dtype=complex)
    if not is_hermitian(op):
        raise HermiticityError("expectation requires a Hermitian operator")
    val = np.vdot(state.amps, apply_gate(state, op, on_labels).amps)
    if abs(val.imag) > 1e-12:
        raise HermiticityError(f"expectation has imaginary residue {val.imag:.3e}")
    return float(val.real)


def overlap(psi: StateVector, phi: StateVector) -> complex:
    if psi.labels != phi.labels:
        if sorted(psi.labels) != sorted(phi.labels):
            raise LabelError(f"label mismatch: {psi.labels} vs {phi.labels}")
        phi = phi.reorder(psi.labels)
    return complex(np.vdot(psi.amps, phi.amps))


def fidelity(psi: StateVector, phi: StateVector) -> float:
    """|<psi|phi>|**2, insensitive to global phase.

    Label sets must match; differing order is reconciled by reordering.
    """
    return abs(overlap(psi, phi)) ** 2
