"""
Closed-form success probabilities and an exact branch-enumeration oracle.

Nothing here samples.  :func:`enumerate_all_branches` walks all sixteen
double-Bell outcomes, runs Bob's stage on each, and reads off the five POVM
probabilities and the fidelity of every corrected conclusive state.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import povm as pv
from . import protocol as pr
from . import statevec as sv
from .protocol import ANCILLA_LABELS, BOB_LABELS, BellOutcome, Channel, Payload
from .statevec import StateVector, fidelity

__all__ = [
    "BranchReport",
    "Enumeration",
    "fidelity",
    "conditional_success_probability",
    "total_success_probability",
    "enumerate_all_branches",
    "format_table",
]


def _feasible_x(channel: Channel, x: float | None) -> float:
    # build_povm carries the range check
    return pv.build_povm(channel, x).x


def conditional_success_probability(channel: Channel, x: float | None = None) -> float:
    """Joint probability of one particular Bell branch and a conclusive POVM result.

    Equal to 1 / (x * S) with S = sum of 1/coefficient**2, whatever the
    payload or the branch.
    """
    x = _feasible_x(channel, x)
    return 1.0 / (x * channel.inverse_square_sum())


def total_success_probability(channel: Channel, x: float | None = None) -> float:
    """p = 16 / (x * S); at x = x_min this is 4 * min(coefficient**2)."""
    return 16.0 * conditional_success_probability(channel, x)


@dataclass(frozen=True)
class BranchReport:
    bell_outcome: BellOutcome
    bell_probability: float
    povm_probabilities: tuple[float, ...]
    success_probability: float
    # NaN where the branch (or the POVM outcome) cannot occur
    success_fidelities: tuple[float, ...]


@dataclass(frozen=True)
class Enumeration:
    reports: tuple[BranchReport, ...]
    total: float
    x: float

    def __iter__(self):
        return iter(self.reports)

    def min_fidelity(self) -> float:
        f = [v for r in self.reports for v in r.success_fidelities if not np.isnan(v)]
        return min(f) if f else float("nan")


def enumerate_all_branches(
    payload: Payload, channel: Channel, x: float | None = None
) -> Enumeration:
    povm_cache: dict = {}
    plans = pv.derive_all_plans(channel)
    x = _feasible_x(channel, x)
    target = payload.state(BOB_LABELS)
    reports = []
    for outcome, residual in pr.bell_branches(pr.build_world_state(payload, channel)):
        plan = plans[outcome.key]
        if residual.null:
            reports.append(
                BranchReport(outcome, 0.0, (float("nan"),) * 5, 0.0, (float("nan"),) * 4)
            )
            continue
        povm = povm_cache.get(plan.distortion)
        if povm is None:
            povm = povm_cache[plan.distortion] = pv.build_povm(plan.distortion, x)
        reg = plan.run_bob(residual.normalized())
        probs = pv.povm_probabilities(reg, povm)
        fids = []
        for i, anc in enumerate(povm.states, start=1):
            res, w = sv.project(reg, StateVector(ANCILLA_LABELS, anc), ANCILLA_LABELS)
            if res.null:
                fids.append(float("nan"))
                continue
            fixed = plan.post_corrections[i].apply(res.reorder(BOB_LABELS).normalized())
            fids.append(fidelity(fixed, target))
        reports.append(
            BranchReport(
                outcome,
                outcome.probability,
                tuple(float(p) for p in probs),
                outcome.probability * float(np.sum(probs[:4])),
                tuple(fids),
            )
        )
    total = float(sum(r.success_probability for r in reports))
    return Enumeration(tuple(reports), total, x)


def format_table(enum: Enumeration) -> str:
    head = (
        f"{'pair23':>6} {'pair14':>6} {'P(bell)':>10} "
        + " ".join(f"{'P' + str(i):>9}" for i in range(1, 6))
        + f" {'P(succ)':>10} {'min F':>14}"
    )
    lines = [head, "-" * len(head)]
    for r in enum:
        fs = [f for f in r.success_fidelities if not np.isnan(f)]
        minf = f"{min(fs):.12f}" if fs else "-"
        lines.append(
            f"{str(r.bell_outcome.pair23):>6} {str(r.bell_outcome.pair14):>6} "
            f"{r.bell_probability:10.6f} "
            + " ".join(f"{p:9.6f}" for p in r.povm_probabilities)
            + f" {r.success_probability:10.6f} {minf:>14}"
        )
    lines.append(f"total success probability: {enum.total:.12f}")
    return "\n".join(lines)
