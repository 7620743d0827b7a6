"""
Command line front end.

    telepovm validate   --channel A,B,C,D [--x V]
    telepovm analyze    --channel A,B,C,D [--x V] [--payload a,b,c,d]
    telepovm run        --channel A,B,C,D --payload a,b,c,d [--seed S] [--trial-id N] [--x V]
    telepovm experiment [--config FILE] [--channel ...] [--payload ...|--random-payload]
                        [--trials N] [--seed S] [--x V] [--output DIR]

Exit codes: 0 success, 1 validation failure, 2 bad usage.  Coefficient
lists are renormalized when their squared norm is within 1e-6 of 1, so
rounded inputs such as 0.3162278 are accepted.  Use ``--channel=-0.5,...``
for lists that start with a minus sign.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import analysis
from . import harness as hn
from . import povm as pv
from . import protocol as pr
from .errors import TelepovmError, ValidationError

INPUT_NORM_SLACK = 1e-6


def _normalized(values, what):
    v = np.asarray(values)
    n2 = float(np.sum(np.abs(v) ** 2))
    if abs(n2 - 1.0) > INPUT_NORM_SLACK:
        raise ValidationError(f"{what} squared norm is {n2:.9g}, not 1")
    return v / np.sqrt(n2)


def parse_channel(text: str) -> pr.Channel:
    return pr.Channel(*_normalized(hn._real_list(text, "channel"), "channel"))


def parse_payload(text: str) -> pr.Payload:
    return pr.Payload(*_normalized(hn._complex_list(text, "payload"), "payload"))


def cmd_validate(args) -> int:
    channel = parse_channel(args.channel)
    x_min = pv.min_valid_x(channel)
    print(f"x_min = {x_min:.12g}")
    povm = pv.build_povm(channel, args.x)
    rep = povm.check()
    print(f"x = {rep['x']:.12g}")
    print(f"completeness residual = {rep['completeness_residual']:.3e}")
    print(f"min eigenvalue = {rep['min_eigenvalue']:.3e}")
    print(f"P5 min eigenvalue = {rep['p5_min_eigenvalue']:.3e}")
    print(f"ranks P1..P5 = {rep['ranks']}")
    print("PASS" if rep["ok"] else "FAIL")
    return 0 if rep["ok"] else 1


def cmd_analyze(args) -> int:
    channel = parse_channel(args.channel)
    payload = parse_payload(args.payload)
    x_min = pv.min_valid_x(channel)
    x = pv.build_povm(channel, args.x).x
    print("channel = " + ", ".join(f"{c:.9g}" for c in channel.coeffs()))
    print(f"x_min = {x_min:.12g}")
    print(f"x = {x:.12g}")
    cond = analysis.conditional_success_probability(channel, x)
    print(f"conditional success probability per branch = {cond:.12g}")
    print(f"p = {analysis.total_success_probability(channel, x):.12g}")
    print()
    print(analysis.format_table(analysis.enumerate_all_branches(payload, channel, x)))
    return 0


def cmd_run(args) -> int:
    cfg = hn.ExperimentConfig(
        channel=parse_channel(args.channel),
        payload=parse_payload(args.payload),
        x=args.x,
        trials=1,
        master_seed=hn.default_seed() if args.seed is None else args.seed,
    )
    trace: list = []
    rec = hn.run_trial(cfg, args.trial_id, trace=trace)
    for stage, value in trace:
        if isinstance(value, pv.BranchPlan):
            post = ", ".join(f"{k}:{c}" for k, c in sorted(value.post_corrections.items()))
            value = (
                f"pre={value.pre_correction} distortion={value.distortion} post={{{post}}}"
            )
        elif isinstance(value, np.ndarray):
            value = np.array2string(value, precision=6)
        print(f"[{stage}] {value}")
    print("record:", ",".join(rec.row()))
    return 0


def _experiment_config(args) -> hn.ExperimentConfig:
    data: dict = {}
    if args.config:
        with open(args.config) as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise ValidationError("config file must hold a JSON object")
    # flags override file values
    if args.channel is not None:
        data["channel"] = list(parse_channel(args.channel).coeffs())
    if args.payload is not None:
        data["payload_mode"] = "explicit"
        p = parse_payload(args.payload).vector()
        data["payload"] = [[z.real, z.imag] for z in p]
    if args.random_payload:
        data["payload_mode"] = "random_haar"
    if args.x is not None:
        data["x_mode"], data["x"] = "explicit", args.x
    if args.trials is not None:
        data["trials"] = args.trials
    if args.seed is not None:
        data["master_seed"] = args.seed
    if args.output is not None:
        data["output_path"] = args.output
    if "channel" not in data:
        raise ValidationError("experiment needs a channel (--channel or config file)")
    channel = parse_channel(",".join(str(c) for c in data["channel"]))
    data["channel"] = list(channel.coeffs())
    return hn.ExperimentConfig.from_dict(data)


def cmd_experiment(args) -> int:
    cfg = _experiment_config(args)
    summary = hn.run_experiment(cfg)
    print(summary.to_json())
    if cfg.output_path:
        print(f"records and summary written to {cfg.output_path}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="telepovm",
        description="Probabilistic two-qubit teleportation with a conclusive POVM.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="build the POVM and check its invariants")
    p.add_argument("--channel", required=True, help="alpha,beta,gamma,delta")
    p.add_argument("--x", type=float, default=None)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("analyze", help="closed-form probabilities and the 16-branch table")
    p.add_argument("--channel", required=True)
    p.add_argument("--x", type=float, default=None)
    p.add_argument("--payload", default="0.5,0.5,0.5,0.5", help="payload used for the table")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("run", help="one verbose trial with stage-by-stage states")
    p.add_argument("--channel", required=True)
    p.add_argument("--payload", required=True, help="a,b,c,d; complex like 0.5+0.5j")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--trial-id", type=int, default=0)
    p.add_argument("--x", type=float, default=None)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("experiment", help="Monte Carlo run with CSV records and JSON summary")
    p.add_argument("--config", default=None, help="flat JSON config file")
    p.add_argument("--channel", default=None)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--payload", default=None)
    g.add_argument("--random-payload", action="store_true")
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--x", type=float, default=None)
    p.add_argument("--output", default=None, help="directory for records.csv and summary.json")
    p.set_defaults(func=cmd_experiment)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (TelepovmError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
