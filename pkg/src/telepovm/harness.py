"""
Seeded Monte Carlo runs of the full protocol and their persisted records.

Every trial owns a numpy ``Generator`` seeded from ``(master_seed, trial_id)``
through :func:`trial_seed`, a SplitMix64 finalizer applied to
``master_seed + (trial_id + 1) * 0x9E3779B97F4A7C15 (mod 2**64)``, feeding
``PCG64``.  Trial order therefore never affects results.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import analysis
from . import povm as pv
from . import protocol as pr
from .errors import TelepovmError, TrialError, ValidationError
from .protocol import BellIndex, Channel, Payload

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
SUCCESS_FIDELITY = 1 - 1e-9
CSV_HEADER = ("trial_id", "bell23", "bell14", "povm_outcome", "success", "fidelity")
SEED_ENV = "TELEPOVM_SEED"


def splitmix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def trial_seed(master_seed: int, trial_id: int) -> int:
    return splitmix64((master_seed + (trial_id + 1) * GOLDEN_GAMMA) & MASK64)


def trial_rng(master_seed: int, trial_id: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(trial_seed(master_seed, trial_id)))


def default_seed() -> int:
    return int(os.environ.get(SEED_ENV, "0")) & MASK64


@dataclass(frozen=True)
class ExperimentConfig:
    """One Monte Carlo experiment.

    ``payload=None`` draws a fresh Haar-random payload in every trial;
    ``x=None`` uses the smallest feasible POVM weight.
    """

    channel: Channel
    payload: Payload | None = None
    x: float | None = None
    trials: int = 1000
    master_seed: int = 0
    output_path: str | None = None

    def __post_init__(self):
        if not isinstance(self.channel, Channel):
            raise ValidationError("channel must be a Channel")
        if self.payload is not None and not isinstance(self.payload, Payload):
            raise ValidationError("payload must be a Payload or None")
        if int(self.trials) < 1:
            raise ValidationError(f"trials must be >= 1, got {self.trials}")
        if not 0 <= int(self.master_seed) <= MASK64:
            raise ValidationError("master_seed must fit in 64 unsigned bits")
        object.__setattr__(self, "trials", int(self.trials))
        object.__setattr__(self, "master_seed", int(self.master_seed))
        # fail early on an infeasible x
        pv.build_povm(self.channel, self.x)

    @property
    def payload_mode(self) -> str:
        return "random_haar" if self.payload is None else "explicit"

    @property
    def x_mode(self) -> str:
        return "auto_min" if self.x is None else "explicit"

    def x_used(self) -> float:
        return pv.build_povm(self.channel, self.x).x

    @classmethod
    def from_dict(cls, data: dict, renormalize: bool = True) -> "ExperimentConfig":
        """Build from the flat JSON layout (see README)."""
        data = dict(data)
        make_ch = Channel.normalized if renormalize else (lambda v: Channel(*v))
        channel = make_ch(_real_list(data["channel"], "channel"))
        mode = data.get("payload_mode", "explicit" if "payload" in data else "random_haar")
        if mode == "random_haar":
            payload = None
        elif mode == "explicit":
            coeffs = _complex_list(data["payload"], "payload")
            payload = Payload.normalized(coeffs) if renormalize else Payload(*coeffs)
        else:
            raise ValidationError(f"unknown payload_mode {mode!r}")
        x_mode = data.get("x_mode", "explicit" if data.get("x") is not None else "auto_min")
        if x_mode == "auto_min":
            x = None
        elif x_mode == "explicit":
            x = float(data["x"])
        else:
            raise ValidationError(f"unknown x_mode {x_mode!r}")
        seed = data.get("master_seed")
        return cls(
            channel=channel,
            payload=payload,
            x=x,
            trials=int(data.get("trials", 1000)),
            master_seed=default_seed() if seed is None else int(seed),
            output_path=data.get("output_path"),
        )


def _real_list(v, what):
    if isinstance(v, str):
        v = v.split(",")
    out = [float(t) for t in v]
    if len(out) != 4:
        raise ValidationError(f"{what} needs 4 values, got {len(out)}")
    return out


def _complex_list(v, what):
    if isinstance(v, str):
        v = v.split(",")
    out = []
    for t in v:
        if isinstance(t, (list, tuple)):
            out.append(complex(float(t[0]), float(t[1])))
        elif isinstance(t, str):
            out.append(complex(t.strip().replace(" ", "")))
        else:
            out.append(complex(t))
    if len(out) != 4:
        raise ValidationError(f"{what} needs 4 values, got {len(out)}")
    return out


@dataclass(frozen=True)
class TrialRecord:
    trial_id: int
    bell23: BellIndex
    bell14: BellIndex
    povm_outcome: int
    success: bool
    fidelity: float  # -1 for inconclusive trials

    def row(self) -> list[str]:
        fid = "-1" if not self.success else f"{self.fidelity:.12g}"
        return [
            str(self.trial_id),
            self.bell23.value,
            self.bell14.value,
            str(self.povm_outcome),
            "true" if self.success else "false",
            fid,
        ]


@dataclass(frozen=True)
class ExperimentSummary:
    trials: int
    successes: int
    empirical_p: float
    analytic_p: float
    three_sigma: float
    min_success_fidelity: float | None
    x_used: float
    seed: int
    passed: bool = field(default=False)

    @property
    def status(self) -> str:
        return "PASS" if self.passed else "FAIL"

    def to_json(self) -> str:
        d = asdict(self)
        d["status"] = self.status
        return json.dumps(d, indent=2)


@contextmanager
def _stage(name: str, trial_id: int):
    try:
        yield
    except TelepovmError as exc:
        raise TrialError(name, trial_id, exc) from exc
    except (ValueError, ArithmeticError) as exc:
        raise TrialError(name, trial_id, exc) from exc


@dataclass(frozen=True, eq=False)
class BobBranch:
    """Everything Bob does on one Bell branch that involves no randomness."""

    collapsed: "pr.StateVector"
    plan: pv.BranchPlan
    povm: pv.PovmSet
    pre_corrected: "pr.StateVector"
    with_ancilla: "pr.StateVector"
    after_cnots: "pr.StateVector"
    povm_probs: np.ndarray
    post_states: tuple
    finals: tuple
    fidelities: tuple


@lru_cache(maxsize=4096)
def bob_branch(payload: Payload, channel: Channel, key: tuple, x: float | None) -> BobBranch:
    """Bob's deterministic processing of branch ``key``, memoized.

    Repeated trials on a fixed payload reuse it, leaving only the two
    random draws per trial.
    """
    outcomes, _, states = pr._cached_branches(payload, channel)
    collapsed = states[pr.OUTCOME_ORDER.index(key)]
    plan = pv.derive_branch_plan(key, channel)
    povm = pv.build_povm(plan.distortion, x)
    pre = plan.pre_correction.apply(collapsed)
    anc = pr.attach_ancilla(pre)
    reg = pr.apply_cnots(anc)
    probs, posts = pv.povm_branches(reg, povm)
    target = payload.state(pr.BOB_LABELS)
    finals, fids = [], []
    for k in range(1, 5):
        post = posts[k - 1]
        if post.null:
            finals.append(post)
            fids.append(float("nan"))
            continue
        final = plan.post_corrections[k].apply(post)
        finals.append(final)
        fids.append(analysis.fidelity(final, target))
    return BobBranch(
        collapsed, plan, povm, pre, anc, reg, probs, tuple(posts), tuple(finals), tuple(fids)
    )


def run_trial(config: ExperimentConfig, trial_id: int, trace: list | None = None) -> TrialRecord:
    """One full protocol run, determined entirely by ``(master_seed, trial_id)``.

    Draw order on the trial stream: Haar payload (random mode only), Bell
    outcome, POVM outcome.  When ``trace`` is a list, ``(stage, value)``
    pairs are appended to it.
    """
    rng = trial_rng(config.master_seed, trial_id)
    log = trace.append if trace is not None else (lambda item: None)
    with _stage("payload", trial_id):
        payload = config.payload if config.payload is not None else Payload.haar(rng)
        log(("payload", payload.state()))
    with _stage("bell_measurement", trial_id):
        if trace is not None:
            log(("world", pr.build_world_state(payload, config.channel)))
        outcome, _ = pr.measure_bell_pairs_for(payload, config.channel, rng)
        log(("bell_outcome", outcome))
    with _stage("bob", trial_id):
        b = bob_branch(payload, config.channel, outcome.key, config.x)
        log(("collapsed_56", b.collapsed))
        log(("plan", b.plan))
        log(("pre_corrected_56", b.pre_corrected))
        log(("with_ancilla", b.with_ancilla))
        log(("after_cnots", b.after_cnots))
        log(("povm_probabilities", b.povm_probs))
    with _stage("povm", trial_id):
        k = pr._sample_index(b.povm_probs, rng) + 1
        log(("povm_outcome", k))
        log(("post_povm", b.post_states[k - 1]))
    if k == 5:
        return TrialRecord(trial_id, outcome.pair23, outcome.pair14, 5, False, -1.0)
    log(("final_56", b.finals[k - 1]))
    log(("fidelity", b.fidelities[k - 1]))
    return TrialRecord(trial_id, outcome.pair23, outcome.pair14, k, True, b.fidelities[k - 1])


def summarize(config: ExperimentConfig, records) -> ExperimentSummary:
    n = len(records)
    succ = [r for r in records if r.success]
    p = analysis.total_success_probability(config.channel, config.x)
    emp = len(succ) / n
    sigma3 = 3 * math.sqrt(max(p * (1 - p), 0.0) / n)
    return ExperimentSummary(
        trials=n,
        successes=len(succ),
        empirical_p=emp,
        analytic_p=p,
        three_sigma=sigma3,
        min_success_fidelity=min((r.fidelity for r in succ), default=None),
        x_used=config.x_used(),
        seed=config.master_seed,
        # float slack so an exact match at p = 0 or 1 passes
        passed=abs(emp - p) <= sigma3 + 1e-12,
    )


def records_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in records:
        w.writerow(r.row())
    return buf.getvalue()


def read_records(path) -> list[TrialRecord]:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(
                TrialRecord(
                    int(row["trial_id"]),
                    BellIndex(row["bell23"]),
                    BellIndex(row["bell14"]),
                    int(row["povm_outcome"]),
                    row["success"] == "true",
                    float(row["fidelity"]),
                )
            )
    return out


def run_experiment(config: ExperimentConfig, return_records: bool = False):
    """Run every trial; write ``records.csv`` and ``summary.json`` under ``output_path``.

    A statistical miss is reported through ``summary.passed``, not raised.
    Returns the summary, or ``(summary, records)`` with ``return_records``.
    """
    records = [run_trial(config, i) for i in range(config.trials)]
    summary = summarize(config, records)
    if config.output_path is not None:
        out = Path(config.output_path)
        try:
            out.mkdir(parents=True, exist_ok=True)
            (out / "records.csv").write_text(records_csv(records))
            (out / "summary.json").write_text(summary.to_json() + "\n")
        except OSError as exc:
            raise OSError(f"cannot write experiment output to {out}: {exc}") from exc
    return (summary, records) if return_records else summary
