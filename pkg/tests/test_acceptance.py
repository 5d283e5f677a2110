"""Acceptance gate: nine end-to-end criteria, one PASS/FAIL line each.

Run on its own with ``pytest tests/test_acceptance.py -v -s`` or
``python tests/test_acceptance.py``.
"""
import sys
import time
from fractions import Fraction
from functools import cache

import pytest

from winmdp.classification import GOOD, classify_fixed
from winmdp.datasets import load_branching, load_coin_flip, load_reopening, make_corpus, make_random_mdp
from winmdp.graph import mec_decomposition
from winmdp.io import dumps_strategy, loads_strategy
from winmdp.model import WindowSpec
from winmdp.oracle import TooLarge, brute_force_value, eval_strategy_exact, monte_carlo
from winmdp.solver import solve_bw, solve_dfw, solve_fw

CORPUS_SEED = 2024
CORPUS_DRAWN = 300
CORPUS_MIN = 200


def report(capsys, number, ok, detail):
    with capsys.disabled():
        print(f"\n[criterion {number}] {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, detail


def timed(fn, *args, **kwargs):
    t0 = time.perf_counter()
    out = fn(*args, **kwargs)
    return out, time.perf_counter() - t0


@cache
def reopening_runs():
    """(spec, state, verdict, seconds) for every solve of the three-state chain."""
    runs = []
    for kind in ("par", "mp"):
        m = load_reopening(kind)
        for lam in range(1, 9):
            v, dt = timed(solve_fw, m, kind, lam)
            runs.append((m, WindowSpec("fw", kind, lam), "s1", v, dt))
        v, dt = timed(solve_bw, m, kind)
        runs.append((m, WindowSpec("bw", kind), "s1", v, dt))
    return runs


@cache
def coin_flip_runs():
    m = load_coin_flip()
    runs = []
    v, dt = timed(solve_fw, m, "par", 1)
    runs.append((m, WindowSpec("fw", "par", 1), "s", v, dt))
    for lam in range(1, 11):
        v, dt = timed(solve_dfw, m, "par", lam)
        runs.append((m, WindowSpec("dfw", "par", lam), "s", v, dt))
    v, dt = timed(solve_bw, m, "par")
    runs.append((m, WindowSpec("bw", "par"), "s", v, dt))
    return runs


@cache
def branching_run():
    m = load_branching()
    v, dt = timed(solve_dfw, m, "par", 5)
    return m, WindowSpec("dfw", "par", 5), "s1", v, dt


@cache
def corpus_runs():
    """Solver and brute-force values on the random corpus (instances too large to enumerate are skipped)."""
    runs, skipped = [], 0
    for m, kind, lam in make_corpus(CORPUS_DRAWN, seed=CORPUS_SEED):
        try:
            expected = {v: brute_force_value(m, WindowSpec(v, kind, lam)) for v in ("dfw", "fw")}
        except TooLarge:
            skipped += 1
            continue
        got = {
            "dfw": solve_dfw(m, kind, lam),
            "fw": solve_fw(m, kind, lam),
        }
        runs.append((m, kind, lam, expected, got))
    return runs, skipped


def test_criterion_1_reopening(capsys):
    runs = reopening_runs()
    wrong = [(spec.name, spec.window) for _, spec, s, v, _ in runs if v.values[s] != 0]
    slowest = max(dt for *_, dt in runs)
    ok = not wrong and slowest < 1.0
    report(capsys, 1, ok, f"{len(runs)} solves at s1, non-zero: {wrong}, slowest {slowest:.3f}s (limit 1s)")


def test_criterion_2_coin_flip(capsys):
    runs = coin_flip_runs()
    bad = []
    for _, spec, s, v, _ in runs:
        if spec.variant == "dfw":
            want = 1 - Fraction(1, 2 ** (spec.window - 1))
        else:
            want = Fraction(1)
        if v.values[s] != want:
            bad.append((spec.name, spec.window, v.values[s], want))
    total = sum(dt for *_, dt in runs)
    ok = not bad and total < 1.0
    report(capsys, 2, ok, f"{len(runs)} solves, mismatches: {bad}, total {total:.3f}s (limit 1s)")


def test_criterion_3_branching(capsys):
    t0 = time.perf_counter()
    m, spec, s, v, _ = branching_run()
    reimported = loads_strategy(dumps_strategy(v.strategy))
    replay = eval_strategy_exact(m, reimported, spec, s)
    status = classify_fixed(m, "par", 5)
    safe = status.result == GOOD and status.safe_region == set(m.states)
    dt = time.perf_counter() - t0
    ok = v.values[s] == 1 and replay == 1 and safe and dt < 5.0
    report(
        capsys, 3, ok,
        f"value {v.values[s]}, re-imported strategy value {replay}, "
        f"whole EC 5-safe {safe}, {dt:.2f}s (limit 5s)",
    )


def test_criterion_4_oracle_equivalence(capsys):
    t0 = time.perf_counter()
    runs, skipped = corpus_runs()
    dt = time.perf_counter() - t0
    mismatches = [
        (i, variant)
        for i, (_, _, _, expected, got) in enumerate(runs)
        for variant in ("dfw", "fw")
        if got[variant].values != expected[variant]
    ]
    ok = len(runs) >= CORPUS_MIN and not mismatches and dt < 600
    report(
        capsys, 4, ok,
        f"{len(runs)} instances compared ({skipped} skipped as too large to enumerate), "
        f"mismatches {mismatches}, {dt:.1f}s (limit 600s)",
    )


def test_criterion_5_zero_one_law(capsys):
    runs, _ = corpus_runs()
    failures, checked = [], 0
    for i, (m, kind, lam, _, _) in enumerate(runs):
        for mec in mec_decomposition(m).mecs:
            sub = mec.as_mdp(m)
            good = classify_fixed(sub, kind, lam).good
            values = set(solve_fw(sub, kind, lam).values.values())
            checked += 1
            if values != ({1} if good else {0}):
                failures.append((i, mec.states))
    report(capsys, 5, not failures, f"{checked} MECs, failures {failures}")


def test_criterion_6_monotonicity(capsys):
    runs, _ = corpus_runs()
    violations, comparisons = [], 0
    for i, (m, kind, lam, _, _) in enumerate(runs):
        dfw = [solve_dfw(m, kind, k).values for k in range(lam, lam + 3)]
        fw = [solve_fw(m, kind, k).values for k in range(lam, lam + 3)]
        # a cap at least as large as every window tried keeps BW comparable
        cap = max(2 * m.n_states + 2, m.n_states ** 2 * max(m.max_weight, 1), lam + 2)
        bw = solve_bw(m, kind, cap=cap).values
        for s in m.states:
            chain = [dfw[0][s] <= dfw[1][s] <= dfw[2][s], fw[0][s] <= fw[1][s] <= fw[2][s]]
            chain += [dfw[k][s] <= fw[k][s] <= bw[s] for k in range(3)]
            comparisons += len(chain)
            if not all(chain):
                violations.append((i, s))
    report(capsys, 6, not violations, f"{comparisons} comparisons, violations {violations}")


def test_criterion_7_strategy_soundness(capsys):
    t0 = time.perf_counter()
    verdicts = [(m, spec, v) for m, spec, _, v, _ in reopening_runs() + coin_flip_runs() + [branching_run()]]
    for m, kind, lam, _, got in corpus_runs()[0]:
        for variant in ("dfw", "fw"):
            verdicts.append((m, WindowSpec(variant, kind, lam), got[variant]))
    failures, checked = [], 0
    for m, spec, v in verdicts:
        for s in m.states:
            checked += 1
            if eval_strategy_exact(m, v.strategy, spec, s) != v.values[s]:
                failures.append((spec.name, spec.window, s))
    dt = time.perf_counter() - t0
    report(capsys, 7, not failures, f"{len(verdicts)} verdicts, {checked} state values replayed, failures {failures}, {dt:.1f}s")


def test_criterion_8_monte_carlo(capsys):
    t0 = time.perf_counter()
    m = load_coin_flip()
    spec = WindowSpec("dfw", "par", 3)
    sigma = solve_dfw(m, "par", 3).strategy
    exact = Fraction(3, 4)
    big = monte_carlo(m, sigma, spec, "s", 100_000, 30, seed=0)
    trials = [monte_carlo(m, sigma, spec, "s", 2_000, 30, seed=1000 + k) for k in range(100)]
    covered = sum(est.covers(exact) for est in trials)
    dt = time.perf_counter() - t0
    ok = abs(big.estimate - 0.75) <= 0.01 and covered >= 95 and dt < 60
    report(
        capsys, 8, ok,
        f"estimate {big.estimate:.4f} (n=10^5, target 3/4 +- 0.01), "
        f"99% interval covered 3/4 in {covered}/100 trials of n=2000, {dt:.1f}s (limit 60s)",
    )


def test_criterion_9_scale(capsys):
    m = make_random_mdp(5000, "par", max_actions=3, action_weights=[0, 0, 1], seed=9)
    assert all(len(m.enabled_actions(s)) == 3 for s in m.states)
    v, dt = timed(solve_fw, m, "par", 4)
    in_range = all(0 <= x <= 1 for x in v.values.values())
    ok = in_range and dt < 300
    report(capsys, 9, ok, f"5000 states x 3 actions, values in [0,1] {in_range}, {dt:.1f}s (limit 300s)")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v", "-s"]))
