"""Command line: check, classify, simulate, oracle.

Exit codes: 0 yes (or done), 1 no, 2 usage or input error, 3 inconclusive.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from fractions import Fraction

from .classification import classify_bounded, classify_fixed
from .graph import mec_decomposition
from .io import (
    format_fraction,
    loads_strategy,
    dumps_strategy,
    model_hash,
    parse_fraction,
    parse_model,
    result_document,
)
from .model import BW, KINDS, ModelError, KindMismatch, WindowSpec
from .oracle import PartialStrategy, TooLarge, brute_force_value, monte_carlo
from .solver import UnsoundForCap, YES, solve

EXIT_YES = 0
EXIT_NO = 1
EXIT_USAGE = 2
EXIT_INCONCLUSIVE = 3


class UsageError(Exception):
    pass


def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"{text!r} must be at least 1")
    return v


def _nonneg(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"{text!r} must be non-negative")
    return v


def _rational(text: str) -> Fraction:
    try:
        return parse_fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"{text!r} is not of the form num/den") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="winmdp", description="Window objectives on Markov decision processes.")
    sub = p.add_subparsers(dest="command", required=True)

    def objective_args(q):
        q.add_argument("file")
        q.add_argument("--objective", required=True, help="one of {dfw,fw,bw}-{mp,par}")
        q.add_argument("--lambda", dest="window", type=_positive, help="window size (DFW and FW)")

    c = sub.add_parser("check", help="optimal values and a threshold decision")
    objective_args(c)
    c.add_argument("--state", required=True)
    c.add_argument("--threshold", type=_rational)
    c.add_argument("--cap", type=_positive, help="largest window size tried by BW")
    c.add_argument("--emit-strategy", action="store_true", help="include the strategy in the result")
    c.add_argument("--strategy-out", help="write the strategy document to this file")

    k = sub.add_parser("classify", help="classify the maximal end-components")
    k.add_argument("file")
    k.add_argument("--kind", required=True, choices=KINDS)
    g = k.add_mutually_exclusive_group(required=True)
    g.add_argument("--lambda", dest="window", type=_positive)
    g.add_argument("--bounded", action="store_true")
    k.add_argument("--cap", type=_positive)

    s = sub.add_parser("simulate", help="Monte Carlo estimate under a strategy")
    objective_args(s)
    s.add_argument("--state", help="start state (default: first declared state)")
    s.add_argument("--samples", required=True, type=_positive)
    s.add_argument("--horizon", required=True, type=_positive)
    s.add_argument("--seed", required=True, type=_nonneg)
    s.add_argument("--strategy", help="strategy document (default: the solver's optimal strategy)")
    s.add_argument("--cap", type=_positive)

    o = sub.add_parser("oracle", help="brute-force optimal values over memoryless unfolding strategies")
    objective_args(o)
    return p


def _load(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    return parse_model(text)


def _spec(args, m) -> WindowSpec:
    try:
        variant, _, kind = args.objective.lower().partition("-")
        spec = WindowSpec(variant, kind, None if variant == BW else args.window)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if spec.variant == BW and args.window is not None:
        raise UsageError("--lambda does not apply to bw objectives")
    spec.check_model(m)
    if spec.window is not None and spec.window > 10 * m.n_states:
        print(
            f"winmdp: warning: window size {spec.window} exceeds ten times the number of states",
            file=sys.stderr,
        )
    return spec


def _state(m, name):
    if name is None:
        return m.states[0]
    if not m.has_state(name):
        raise UsageError(f"unknown state {name!r}")
    return name


def _emit(doc: dict) -> None:
    json.dump(doc, sys.stdout, indent=2)
    sys.stdout.write("\n")


def cmd_check(args) -> int:
    m = _load(args.file)
    spec = _spec(args, m)
    state = _state(m, args.state)
    t0 = time.perf_counter()
    verdict = solve(m, spec, cap=args.cap)
    elapsed = time.perf_counter() - t0
    code = EXIT_YES
    decision = None
    if args.threshold is not None:
        if not 0 <= args.threshold <= 1:
            raise UsageError("threshold must lie in [0, 1]")
        try:
            decision = verdict.decide(state, args.threshold)
            code = EXIT_YES if decision == YES else EXIT_NO
        except UnsoundForCap:
            decision = "inconclusive"
            code = EXIT_INCONCLUSIVE
    if args.strategy_out:
        with open(args.strategy_out, "w", encoding="utf-8") as fh:
            fh.write(dumps_strategy(verdict.strategy))
    _emit(result_document(
        m, verdict, state=state, threshold=args.threshold, decision=decision,
        timing=elapsed, include_strategy=args.emit_strategy,
    ))
    return code


def cmd_classify(args) -> int:
    m = _load(args.file)
    if m.kind != args.kind:
        raise KindMismatch(f"--kind {args.kind} but the model is {m.kind}-labeled")
    t0 = time.perf_counter()
    report = []
    for i, mec in enumerate(mec_decomposition(m).mecs):
        sub = mec.as_mdp(m)
        if args.bounded:
            status = classify_bounded(sub, args.kind, args.cap, index=i)
        else:
            status = classify_fixed(sub, args.kind, args.window, index=i)
        report.append(status.summary())
    _emit({
        "model_hash": model_hash(m),
        "kind": args.kind,
        "lambda": None if args.bounded else args.window,
        "mec_report": report,
        "timing_seconds": round(time.perf_counter() - t0, 6),
    })
    return EXIT_YES


def cmd_simulate(args) -> int:
    m = _load(args.file)
    spec = _spec(args, m)
    state = _state(m, args.state)
    if spec.window is not None and args.horizon < spec.window:
        raise UsageError("--horizon must be at least the window size")
    if args.strategy:
        try:
            with open(args.strategy, encoding="utf-8") as fh:
                sigma = loads_strategy(fh.read())
        except OSError as exc:
            raise UsageError(f"cannot read {args.strategy}: {exc.strerror}") from None
        except (ValueError, KeyError, TypeError) as exc:
            raise UsageError(f"malformed strategy document: {exc}") from None
    else:
        sigma = solve(m, spec, cap=args.cap).strategy
    t0 = time.perf_counter()
    est = monte_carlo(m, sigma, spec, state, args.samples, args.horizon, args.seed)
    lo, hi = est.interval
    _emit({
        "model_hash": model_hash(m),
        "spec": {"objective": spec.name, "lambda": spec.window},
        "state": str(state),
        "estimate": est.estimate,
        "samples": est.n,
        "horizon": est.horizon,
        "seed": est.seed,
        "interval_99": [lo, hi],
        "convention": est.label,
        "timing_seconds": round(time.perf_counter() - t0, 6),
    })
    return EXIT_YES


def cmd_oracle(args) -> int:
    m = _load(args.file)
    spec = _spec(args, m)
    if spec.variant == BW:
        raise UsageError("the brute-force oracle covers dfw and fw objectives only")
    t0 = time.perf_counter()
    values = brute_force_value(m, spec)
    _emit({
        "model_hash": model_hash(m),
        "spec": {"objective": spec.name, "lambda": spec.window},
        "values": {str(s): format_fraction(v) for s, v in values.items()},
        "timing_seconds": round(time.perf_counter() - t0, 6),
    })
    return EXIT_YES


COMMANDS = {"check": cmd_check, "classify": cmd_classify, "simulate": cmd_simulate, "oracle": cmd_oracle}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_YES
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ModelError, KindMismatch, PartialStrategy, TooLarge) as exc:
        print(f"winmdp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
