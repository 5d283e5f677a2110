"""Optimal values and witness strategies for DFW, FW and BW objectives."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping

from .classification import (
    NOT_GOOD_WITHIN_CAP,
    EcStatus,
    build_good_strategy,
    classify_bounded,
    classify_fixed,
    solve_safety_game,
)
from .exact import max_reach_indices
from .graph import mec_decomposition
from .model import BW, DFW, FW, MealyStrategy, Mdp, WindowSpec, to_fraction
from .unfolding import lift_strategy

EXACT = "exact"
BOUNDED_BY_CAP = "bounded_by_cap"

YES = "yes"
NO = "no"

FREE = "free"


class UnsoundForCap(RuntimeError):
    """A "no" answer was requested from values that are only lower bounds."""


@dataclass(frozen=True)
class Verdict:
    spec: WindowSpec
    values: Mapping  # state id -> Fraction
    strategy: MealyStrategy
    mec_report: tuple = ()
    confidence: str = EXACT
    good_states: frozenset = field(default=frozenset(), repr=False)

    def value(self, state) -> Fraction:
        return self.values[state]

    def decide(self, state, alpha) -> str:
        return decide_threshold(self, state, alpha)


def decide_threshold(v: Verdict, state, alpha) -> str:
    alpha = to_fraction(alpha)
    if not 0 <= alpha <= 1:
        raise ValueError(f"threshold must lie in [0, 1], got {alpha}")
    if state not in v.values:
        raise KeyError(f"unknown state {state!r}")
    if v.values[state] >= alpha:
        return YES
    if v.confidence == BOUNDED_BY_CAP:
        raise UnsoundForCap(
            f"value {v.values[state]} at {state!r} is only a lower bound; "
            f"cannot certify that {alpha} is out of reach"
        )
    return NO


def thread_limit() -> int:
    raw = os.environ.get("WINMDP_THREADS")
    if raw:
        try:
            n = int(raw)
        except ValueError:
            raise ValueError(f"WINMDP_THREADS must be a positive integer, got {raw!r}") from None
        if n < 1:
            raise ValueError(f"WINMDP_THREADS must be a positive integer, got {raw!r}")
        return n
    return os.cpu_count() or 1


def _fan_out(fn: Callable, items: list) -> list:
    """Map in order; threads only when it can help and is allowed."""
    workers = min(thread_limit(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def solve_dfw(m: Mdp, kind: str, window: int) -> Verdict:
    spec = WindowSpec(DFW, kind, window)
    spec.check_model(m)
    game = solve_safety_game(m, kind, window)
    u = game.unfolding
    inner = u.mdp
    winning = [c for c in range(inner.n_states) if c not in game.losing]
    values, choice = max_reach_indices(inner, winning, avoid=u.bad_indices)
    sigma = {}
    for c in range(inner.n_states):
        if c in game.losing and c not in u.bad_indices:
            a = choice[c]
        else:
            # safe move on the winning region, smallest action on bad configs
            a = game.choice[c]
        sigma[inner.states[c]] = inner.actions[a]
    strategy = lift_strategy(u, sigma)
    out = {s: values[u.initial_index(s)] for s in m.states}
    return Verdict(spec, out, strategy)


def _classify_all(m: Mdp, fn: Callable[[Mdp, int], EcStatus]):
    decomposition = mec_decomposition(m)
    subs = [mec.as_mdp(m) for mec in decomposition.mecs]
    statuses = _fan_out(lambda item: fn(item[1], item[0]), list(enumerate(subs)))
    return subs, statuses


def _assemble(m: Mdp, spec: WindowSpec, subs, statuses, confidence: str) -> Verdict:
    good = {}  # state id -> index of its good MEC
    goods = {}
    for i, (sub, status) in enumerate(zip(subs, statuses)):
        if status.good:
            goods[i] = build_good_strategy(sub, status).strategy
            for s in sub.states:
                good[s] = i
    target = [m.state_index(s) for s in good]
    values, choice = max_reach_indices(m, target)

    def enter(t):
        i = good.get(t)
        return FREE if i is None else (i, goods[i].init[t])

    init = {s: enter(s) for s in m.states}
    next_action = {}
    update = {}
    memory = [FREE]
    for s in range(m.n_states):
        sid = m.states[s]
        if sid in good:
            continue
        a = m.actions[choice[s]]
        next_action[sid, FREE] = a
        for t, _ in m.delta[s, choice[s]]:
            tid = m.states[t]
            update[a, tid, FREE] = enter(tid)
    for i, g in goods.items():
        memory.extend((i, q) for q in g.memory)
        for (s, q), a in g.next_action.items():
            next_action[s, (i, q)] = a
        for (a, t, q), q2 in g.update.items():
            update[a, t, (i, q)] = (i, q2)
    strategy = MealyStrategy(memory=tuple(memory), init=init, next_action=next_action, update=update)
    out = {m.states[s]: values[s] for s in range(m.n_states)}
    return Verdict(spec, out, strategy, tuple(statuses), confidence, frozenset(good))


def solve_fw(m: Mdp, kind: str, window: int) -> Verdict:
    """Maximal probability to reach a MEC that is good for window size ``window``."""
    spec = WindowSpec(FW, kind, window)
    spec.check_model(m)
    subs, statuses = _classify_all(m, lambda sub, i: classify_fixed(sub, kind, window, index=i))
    return _assemble(m, spec, subs, statuses, EXACT)


def solve_bw(m: Mdp, kind: str, cap: int | None = None) -> Verdict:
    """Like :func:`solve_fw`, with each MEC tested for goodness at its smallest window size.

    ``cap`` bounds the window sizes tried per MEC (default depends on the MEC).
    Mean-payoff MECs that exhaust the cap make the result a lower bound.
    """
    spec = WindowSpec(BW, kind)
    spec.check_model(m)
    subs, statuses = _classify_all(m, lambda sub, i: classify_bounded(sub, kind, cap, index=i))
    capped = any(st.result == NOT_GOOD_WITHIN_CAP for st in statuses)
    return _assemble(m, spec, subs, statuses, BOUNDED_BY_CAP if capped else EXACT)


def solve(m: Mdp, spec: WindowSpec, cap: int | None = None) -> Verdict:
    if spec.variant == DFW:
        return solve_dfw(m, spec.kind, spec.window)
    if spec.variant == FW:
        return solve_fw(m, spec.kind, spec.window)
    return solve_bw(m, spec.kind, cap)
