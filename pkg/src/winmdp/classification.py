"""End-component classification through the two-player safety game."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from .exact import max_reach_indices
from .graph import ADVERSARY, GameArena, attractor, is_strongly_connected
from .model import MP, PAR, KindMismatch, MealyStrategy, Mdp
from .unfolding import UnfoldedMdp, lift_strategy, unfold

GOOD = "good"
NOT_GOOD = "not_good"
NOT_GOOD_WITHIN_CAP = "not_good_within_cap"

REACH = "reach"


class NotAnEc(ValueError):
    pass


class NotGood(ValueError):
    pass


@dataclass(frozen=True)
class SafetyGame:
    """Solved safety game on an unfolding: the adversary attracts to ``bad``."""

    unfolding: UnfoldedMdp
    losing: frozenset  # configuration indices in the adversary attractor
    choice: Mapping  # configuration index -> action index

    def winning_states(self) -> frozenset:
        u = self.unfolding
        return frozenset(
            s for s in u.original.states if u.initial_index(s) not in self.losing
        )

    def sigma(self) -> dict:
        inner = self.unfolding.mdp
        return {inner.states[c]: inner.actions[a] for c, a in self.choice.items()}


def solve_safety_game(m: Mdp, kind: str, window: int) -> SafetyGame:
    """Sure-winning region for DFW(λ) on the unfolding of ``m``.

    Outside the attractor, the controller plays the smallest action whose
    whole support avoids it; inside, the smallest enabled action.
    """
    u = unfold(m, window, kind)
    inner = u.mdp
    losing = attractor(GameArena.from_mdp(inner), u.bad_indices, ADVERSARY)
    choice = {}
    for c, acts in enumerate(inner.enabled):
        pick = acts[0]
        if c not in losing:
            for a in acts:
                if all(t not in losing for t, _ in inner.delta[c, a]):
                    pick = a
                    break
        choice[c] = pick
    return SafetyGame(u, losing, choice)


def _check_ec(ec: Mdp, kind: str) -> None:
    if ec.kind != kind:
        raise KindMismatch(f"objective is {kind!r} but the end-component is {ec.kind!r}-labeled")
    if not is_strongly_connected(ec):
        raise NotAnEc("the given sub-MDP is not strongly connected")


def lambda_safe_region(ec: Mdp, kind: str, window: int) -> tuple[frozenset, MealyStrategy]:
    """States of ``ec`` from which DFW(λ) can be won surely, with the lifted safe strategy."""
    _check_ec(ec, kind)
    game = solve_safety_game(ec, kind, window)
    region = game.winning_states()
    strategy = lift_strategy(game.unfolding, game.sigma(), starts=[s for s in ec.states if s in region])
    return region, strategy


@dataclass(frozen=True)
class EcStatus:
    mec_index: int
    kind: str
    result: str
    lambda_star: int | None = None
    safe_region: frozenset = frozenset()
    safe_strategy: MealyStrategy | None = None
    cap: int | None = None
    states: tuple = ()
    tried: tuple = ()

    @property
    def good(self) -> bool:
        return self.result == GOOD

    @property
    def certified(self) -> bool:
        return self.result != NOT_GOOD_WITHIN_CAP

    def summary(self) -> dict:
        out = {
            "mec": self.mec_index,
            "states": [str(s) for s in self.states],
            "result": self.result,
        }
        if self.good:
            out["lambda"] = self.lambda_star
            out["safe_region"] = [str(s) for s in self.states if s in self.safe_region]
        if self.cap is not None:
            out["cap"] = self.cap
        return out


def classify_fixed(mec: Mdp, kind: str, window: int, index: int = 0) -> EcStatus:
    """good(λ) iff the safety-game winning region of the MEC is nonempty."""
    region, strategy = lambda_safe_region(mec, kind, window)
    if region:
        return EcStatus(index, kind, GOOD, window, region, strategy, states=mec.states, tried=(window,))
    return EcStatus(index, kind, NOT_GOOD, states=mec.states, tried=(window,))


def default_cap(mec: Mdp, kind: str) -> int:
    n = mec.n_states
    if kind == PAR:
        return 2 * n + 2
    return n * n * max(mec.max_weight, 1)


def classify_bounded(mec: Mdp, kind: str, cap: int | None = None, index: int = 0) -> EcStatus:
    """Smallest good window size by doubling then bisection, up to ``cap``.

    Parity answers are certified once ``cap >= 2|S_C| + 2``; exhausting the
    cap for mean-payoff is only reported as ``not_good_within_cap``.
    """
    _check_ec(mec, kind)
    if cap is None:
        cap = default_cap(mec, kind)
    if isinstance(cap, bool) or int(cap) != cap or cap < 1:
        raise ValueError(f"cap must be a positive integer, got {cap!r}")
    cap = int(cap)
    tried = []
    found = {}

    def probe(lam):
        if lam not in found:
            tried.append(lam)
            region, strategy = lambda_safe_region(mec, kind, lam)
            found[lam] = (region, strategy) if region else None
        return found[lam]

    lo = 0  # largest size known to fail
    hi = None
    lam = 1
    while True:
        lam = min(lam, cap)
        if probe(lam) is not None:
            hi = lam
            break
        lo = lam
        if lam >= cap:
            break
        lam *= 2
    if hi is None:
        certified = kind == PAR and cap >= 2 * mec.n_states + 2
        return EcStatus(
            index, kind, NOT_GOOD if certified else NOT_GOOD_WITHIN_CAP,
            cap=cap, states=mec.states, tried=tuple(tried),
        )
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if probe(mid) is not None:
            hi = mid
        else:
            lo = mid
    region, strategy = found[hi]
    return EcStatus(index, kind, GOOD, hi, region, strategy, cap=cap, states=mec.states, tried=tuple(tried))


@dataclass(frozen=True)
class GoodStrategy:
    """Reach-then-stay strategy inside a good end-component.

    Memory ``"reach"`` plays the memoryless almost-sure reach strategy
    towards the safe region; the first state of the safe region switches
    to the safe strategy's memory.
    """

    reach: Mapping  # state id -> action id, outside the safe region
    safe_region: frozenset
    safe: MealyStrategy
    strategy: MealyStrategy = field(repr=False)

    def switches_at(self, state) -> bool:
        return state in self.safe_region


def build_good_strategy(mec: Mdp, status: EcStatus) -> GoodStrategy:
    if not status.good:
        raise NotGood(f"MEC {status.mec_index} is {status.result}")
    region = status.safe_region
    safe = status.safe_strategy
    target = {mec.state_index(s) for s in region}
    values, choice = max_reach_indices(mec, target)
    reach = {}
    for s, a in enumerate(choice):
        if s in target:
            continue
        if values[s] != 1:
            raise AssertionError("a MEC reaches its own safe region almost surely")
        reach[mec.states[s]] = mec.actions[a]

    init = {}
    next_action = {}
    update = {}
    for s in mec.states:
        if s in region:
            init[s] = safe.init[s]
        else:
            init[s] = REACH
            a = reach[s]
            next_action[s, REACH] = a
            for t in mec.distribution(s, a):
                update[a, t, REACH] = safe.init[t] if t in region else REACH
    next_action.update(safe.next_action)
    update.update(safe.update)
    memory = tuple(safe.memory) if not reach else (REACH,) + tuple(safe.memory)
    composed = MealyStrategy(memory=memory, init=init, next_action=next_action, update=update)
    return GoodStrategy(reach=reach, safe_region=region, safe=safe, strategy=composed)
