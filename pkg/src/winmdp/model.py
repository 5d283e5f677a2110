"""MDP data model, objective selectors and Mealy strategies.

States and actions are identified by hashable ids (strings for user models,
tuples for unfoldings) and interned into dense indices in first-appearance
order. Every tie-break in the package follows this index order.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from types import MappingProxyType
from typing import Hashable, Iterable, Mapping

MP = "mp"
PAR = "par"
KINDS = (MP, PAR)

DFW = "dfw"
FW = "fw"
BW = "bw"
VARIANTS = (DFW, FW, BW)


class ModelError(ValueError):
    """Base class for malformed model descriptions."""

    line: int | None = None


class DeadlockState(ModelError):
    pass


class DistributionSum(ModelError):
    pass


class EmptySupport(ModelError):
    pass


class MixedLabeling(ModelError):
    pass


class NegativeOrZeroProbability(ModelError):
    pass


class ProbabilityAboveOne(ModelError):
    pass


class UnknownState(ModelError):
    pass


class MissingLabel(ModelError):
    pass


class ClosureViolation(ModelError):
    pass


class EmptyActionSet(ModelError):
    pass


class KindMismatch(ValueError):
    pass


def to_fraction(value) -> Fraction:
    """Exact conversion; floats are refused because they are rarely what the user meant."""
    if isinstance(value, bool):
        raise TypeError("probability must be a rational, got bool")
    if isinstance(value, float):
        raise TypeError(f"probability {value!r} is a float; give it as 'num/den'")
    if isinstance(value, (Fraction, int)):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"cannot read {value!r} as a rational")


class Mdp:
    """Immutable explicit-state MDP with exactly one labeling.

    Internally everything is index based: ``enabled[s]`` lists action
    indices in ascending order and ``delta[(s, a)]`` is a tuple of
    ``(successor index, probability)`` pairs sorted by successor index.
    """

    __slots__ = (
        "states", "actions", "enabled", "delta", "weights", "priorities",
        "_sidx", "_aidx",
    )

    def __init__(self, states, actions, enabled, delta, weights=None, priorities=None):
        object.__setattr__(self, "states", tuple(states))
        object.__setattr__(self, "actions", tuple(actions))
        object.__setattr__(self, "enabled", tuple(tuple(a) for a in enabled))
        object.__setattr__(self, "delta", MappingProxyType(dict(delta)))
        object.__setattr__(self, "weights", None if weights is None else tuple(weights))
        object.__setattr__(self, "priorities", None if priorities is None else tuple(priorities))
        object.__setattr__(self, "_sidx", {s: i for i, s in enumerate(self.states)})
        object.__setattr__(self, "_aidx", {a: i for i, a in enumerate(self.actions)})

    def __setattr__(self, name, value):
        raise AttributeError("Mdp is immutable")

    @property
    def kind(self) -> str | None:
        if self.weights is not None:
            return MP
        if self.priorities is not None:
            return PAR
        return None

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def max_weight(self) -> int:
        """W, the largest absolute action weight (0 for parity models)."""
        if not self.weights:
            return 0
        return max(abs(w) for w in self.weights)

    @property
    def max_priority(self) -> int:
        """d, the largest priority (0 for weighted models)."""
        if not self.priorities:
            return 0
        return max(self.priorities)

    def state_index(self, state: Hashable) -> int:
        try:
            return self._sidx[state]
        except KeyError:
            raise UnknownState(f"unknown state {state!r}") from None

    def action_index(self, action: Hashable) -> int:
        try:
            return self._aidx[action]
        except KeyError:
            raise ValueError(f"unknown action {action!r}") from None

    def has_state(self, state: Hashable) -> bool:
        return state in self._sidx

    def enabled_actions(self, state: Hashable) -> tuple:
        return tuple(self.actions[a] for a in self.enabled[self.state_index(state)])

    def distribution(self, state: Hashable, action: Hashable) -> dict:
        s = self.state_index(state)
        a = self.action_index(action)
        if (s, a) not in self.delta:
            raise ValueError(f"action {action!r} is not enabled in {state!r}")
        return {self.states[t]: p for t, p in self.delta[s, a]}

    def weight(self, action: Hashable) -> int:
        return self.weights[self.action_index(action)]

    def priority(self, state: Hashable) -> int:
        return self.priorities[self.state_index(state)]

    def is_markov_chain(self) -> bool:
        return all(len(a) == 1 for a in self.enabled)

    def successor_lists(self) -> list[list[int]]:
        """Support graph: successor state indices over all enabled actions."""
        out = []
        for s, acts in enumerate(self.enabled):
            seen = set()
            for a in acts:
                seen.update(t for t, _ in self.delta[s, a])
            out.append(sorted(seen))
        return out

    def to_raw(self) -> dict:
        """Plain description accepted by :func:`validate_mdp`."""
        transitions = {}
        for s, acts in enumerate(self.enabled):
            transitions[self.states[s]] = {
                self.actions[a]: {self.states[t]: p for t, p in self.delta[s, a]} for a in acts
            }
        raw = {"kind": self.kind, "states": list(self.states), "transitions": transitions}
        if self.weights is not None:
            raw["weights"] = {a: w for a, w in zip(self.actions, self.weights)}
        if self.priorities is not None:
            raw["priorities"] = {s: p for s, p in zip(self.states, self.priorities)}
        return raw

    def __eq__(self, other):
        if not isinstance(other, Mdp):
            return NotImplemented
        return (
            self.states == other.states
            and self.actions == other.actions
            and self.enabled == other.enabled
            and dict(self.delta) == dict(other.delta)
            and self.weights == other.weights
            and self.priorities == other.priorities
        )

    def __hash__(self):
        return hash((self.states, self.actions, self.enabled))

    def __repr__(self):
        return f"Mdp(kind={self.kind!r}, |S|={self.n_states}, |A|={len(self.actions)})"


def check_invariants(m: Mdp) -> None:
    """Raise the matching ModelError if ``m`` breaks a structural invariant."""
    if (m.weights is None) == (m.priorities is None):
        raise MixedLabeling("a model carries exactly one of weights or priorities")
    for s, acts in enumerate(m.enabled):
        if not acts:
            raise DeadlockState(f"state {m.states[s]!r} has no enabled action")
        for a in acts:
            dist = m.delta.get((s, a))
            if not dist:
                raise EmptySupport(f"δ({m.states[s]!r}, {m.actions[a]!r}) has empty support")
            total = Fraction(0)
            for t, p in dist:
                if p <= 0:
                    raise NegativeOrZeroProbability(
                        f"δ({m.states[s]!r}, {m.actions[a]!r})({m.states[t]!r}) = {p} is not positive"
                    )
                if p > 1:
                    raise ProbabilityAboveOne(
                        f"δ({m.states[s]!r}, {m.actions[a]!r})({m.states[t]!r}) = {p} exceeds 1"
                    )
                total += p
            if total != 1:
                raise DistributionSum(
                    f"δ({m.states[s]!r}, {m.actions[a]!r}) sums to {total}, not 1"
                )
    if m.priorities is not None and any(p < 0 for p in m.priorities):
        raise MissingLabel("priorities must be natural numbers")


def _is_integral(x) -> bool:
    if isinstance(x, bool):
        return False
    if isinstance(x, int):
        return True
    return isinstance(x, Fraction) and x.denominator == 1


def validate_mdp(raw: Mapping) -> Mdp:
    """Build a checked :class:`Mdp` from a plain description.

    ``raw`` holds ``transitions`` (state -> action -> successor -> probability),
    exactly one of ``weights`` (action -> int) or ``priorities``
    (state -> natural), and optionally ``states`` (declaration order) and
    ``kind``. Probabilities may be ints, Fractions or ``"num/den"`` strings.
    """
    if isinstance(raw, Mdp):
        raw = raw.to_raw()
    weights = raw.get("weights")
    priorities = raw.get("priorities")
    if weights is not None and priorities is not None:
        raise MixedLabeling("model has both weights and priorities")
    if weights is None and priorities is None:
        raise MixedLabeling("model has neither weights nor priorities")
    kind = raw.get("kind")
    labeled = MP if weights is not None else PAR
    if kind is not None and kind != labeled:
        raise MixedLabeling(f"header says {kind!r} but the labeling is {labeled!r}")

    transitions = raw.get("transitions", {})
    if not isinstance(transitions, Mapping):
        grouped: dict = {}
        for s, a, dist in transitions:
            grouped.setdefault(s, {})[a] = dist
        transitions = grouped

    states: list = []
    sidx: dict = {}

    def intern_state(s):
        if s not in sidx:
            sidx[s] = len(states)
            states.append(s)
        return sidx[s]

    for s in raw.get("states") or ():
        intern_state(s)
    declared = bool(raw.get("states"))
    for s in transitions:
        if declared and s not in sidx:
            raise UnknownState(f"transitions given for undeclared state {s!r}")
        intern_state(s)

    actions: list = []
    aidx: dict = {}
    enabled: list[set] = [set() for _ in states]
    delta: dict = {}
    for s, by_action in transitions.items():
        si = sidx[s]
        for a, dist in by_action.items():
            if a not in aidx:
                aidx[a] = len(actions)
                actions.append(a)
            ai = aidx[a]
            if not dist:
                raise EmptySupport(f"δ({s!r}, {a!r}) has empty support")
            row = {}
            for t, p in dist.items():
                if t not in sidx:
                    raise UnknownState(f"δ({s!r}, {a!r}) leads to undeclared state {t!r}")
                p = to_fraction(p)
                if p <= 0:
                    raise NegativeOrZeroProbability(f"δ({s!r}, {a!r})({t!r}) = {p} is not positive")
                if p > 1:
                    raise ProbabilityAboveOne(f"δ({s!r}, {a!r})({t!r}) = {p} exceeds 1")
                row[sidx[t]] = row.get(sidx[t], 0) + p
            total = sum(row.values(), Fraction(0))
            if total != 1:
                raise DistributionSum(f"δ({s!r}, {a!r}) sums to {total}, not 1")
            enabled[si].add(ai)
            delta[si, ai] = tuple(sorted(row.items()))
    for si, acts in enumerate(enabled):
        if not acts:
            raise DeadlockState(f"state {states[si]!r} has no enabled action")

    w_tuple = p_tuple = None
    if weights is not None:
        missing = [a for a in actions if a not in weights]
        if missing:
            raise MissingLabel(f"actions without weight: {missing!r}")
        w_tuple = []
        for a in actions:
            w = weights[a]
            if not _is_integral(w):
                raise MissingLabel(f"weight of {a!r} must be an integer, got {w!r}")
            w_tuple.append(int(w))
    else:
        missing = [s for s in states if s not in priorities]
        if missing:
            raise MissingLabel(f"states without priority: {missing!r}")
        p_tuple = []
        for s in states:
            p = priorities[s]
            if not _is_integral(p) or p < 0:
                raise MissingLabel(f"priority of {s!r} must be a natural number, got {p!r}")
            p_tuple.append(int(p))
        if p_tuple and max(p_tuple) > len(states) + 1:
            warnings.warn(
                f"largest priority {max(p_tuple)} exceeds |S|+1 = {len(states) + 1}",
                stacklevel=2,
            )

    return Mdp(
        states, actions, [sorted(a) for a in enabled], delta,
        weights=w_tuple, priorities=p_tuple,
    )


def restrict(m: Mdp, keep_states: Iterable, keep_actions: Mapping | None = None) -> Mdp:
    """Sub-MDP on ``keep_states`` with the given per-state action sets.

    ``keep_actions`` defaults to every enabled action. Relative state and
    action orders of ``m`` are preserved.
    """
    keep = {m.state_index(s) for s in keep_states}
    if not keep:
        raise EmptyActionSet("a sub-MDP needs at least one state")
    kept_acts: dict[int, list[int]] = {}
    for s in sorted(keep):
        if keep_actions is None:
            acts = list(m.enabled[s])
        else:
            acts = sorted({m.action_index(a) for a in keep_actions.get(m.states[s], ())})
        if not acts:
            raise EmptyActionSet(f"state {m.states[s]!r} keeps no action")
        for a in acts:
            if (s, a) not in m.delta:
                raise ValueError(f"action {m.actions[a]!r} is not enabled in {m.states[s]!r}")
            for t, _ in m.delta[s, a]:
                if t not in keep:
                    raise ClosureViolation(
                        f"action {m.actions[a]!r} in {m.states[s]!r} may lead to "
                        f"{m.states[t]!r}, outside the kept states"
                    )
        kept_acts[s] = acts

    old_states = sorted(keep)
    new_s = {old: new for new, old in enumerate(old_states)}
    used = sorted({a for acts in kept_acts.values() for a in acts})
    new_a = {old: new for new, old in enumerate(used)}
    delta = {}
    enabled = []
    for s in old_states:
        enabled.append([new_a[a] for a in kept_acts[s]])
        for a in kept_acts[s]:
            delta[new_s[s], new_a[a]] = tuple((new_s[t], p) for t, p in m.delta[s, a])
    return Mdp(
        [m.states[s] for s in old_states],
        [m.actions[a] for a in used],
        enabled,
        delta,
        weights=None if m.weights is None else [m.weights[a] for a in used],
        priorities=None if m.priorities is None else [m.priorities[s] for s in old_states],
    )


@dataclass(frozen=True)
class WindowSpec:
    """Objective selector: variant x kind x window size (absent for BW)."""

    variant: str
    kind: str
    window: int | None = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.variant == BW:
            if self.window is not None:
                raise ValueError("bounded window objectives take no window size")
        else:
            if self.window is None:
                raise ValueError(f"{self.variant} objectives need a window size")
            if isinstance(self.window, bool) or int(self.window) != self.window or self.window < 1:
                raise ValueError(f"window size must be a positive integer, got {self.window!r}")

    @classmethod
    def parse(cls, objective: str, window: int | None = None) -> "WindowSpec":
        """Read ``"fw-par"``-style selectors."""
        try:
            variant, kind = objective.lower().split("-")
        except ValueError:
            raise ValueError(f"objective must look like 'fw-par', got {objective!r}") from None
        return cls(variant, kind, window)

    @property
    def name(self) -> str:
        return f"{self.variant}-{self.kind}"

    def check_model(self, m: Mdp) -> None:
        if m.kind != self.kind:
            raise KindMismatch(f"objective is {self.kind!r} but the model is {m.kind!r}-labeled")


@dataclass(frozen=True)
class Query:
    initial_state: Hashable
    threshold: Fraction
    spec: WindowSpec

    def __post_init__(self):
        alpha = to_fraction(self.threshold)
        if not 0 <= alpha <= 1:
            raise ValueError(f"threshold must lie in [0, 1], got {alpha}")
        object.__setattr__(self, "threshold", alpha)

    def check_model(self, m: Mdp) -> None:
        m.state_index(self.initial_state)
        self.spec.check_model(m)


@dataclass(frozen=True)
class MealyStrategy:
    """Pure finite-memory strategy.

    ``next_action`` maps ``(state, memory)`` to an action and ``update``
    maps ``(action, next state, memory)`` to the next memory element.
    ``init`` gives the starting memory per initial state.
    """

    memory: tuple
    init: Mapping = field(default_factory=dict)
    next_action: Mapping = field(default_factory=dict)
    update: Mapping = field(default_factory=dict)

    @classmethod
    def memoryless(cls, choice: Mapping) -> "MealyStrategy":
        """Memoryless strategy from a state -> action map (single memory element 0)."""
        m0 = 0
        return cls(
            memory=(m0,),
            init={s: m0 for s in choice},
            next_action={(s, m0): a for s, a in choice.items()},
            update=_IdentityUpdate(m0),
        )

    @property
    def size(self) -> int:
        return len(self.memory)

    def initial(self, state):
        return self.init[state]

    def act(self, state, mem):
        return self.next_action[state, mem]

    def step(self, action, state, mem):
        return self.update[action, state, mem]

    def check(self, m: Mdp) -> None:
        """Every tabulated move must be enabled where it is played."""
        for (s, _), a in self.next_action.items():
            if a not in m.enabled_actions(s):
                raise ValueError(f"strategy plays {a!r} in {s!r} where it is not enabled")


class _IdentityUpdate(Mapping):
    """Update table of a memoryless strategy: every key maps to the single memory element."""

    def __init__(self, m0):
        self._m0 = m0

    def __getitem__(self, key):
        return self._m0

    def __iter__(self):
        return iter(())

    def __len__(self):
        return 0

    def __contains__(self, key):
        return True

    def __eq__(self, other):
        return isinstance(other, _IdentityUpdate) and other._m0 == self._m0

    def __hash__(self):
        return hash(self._m0)
