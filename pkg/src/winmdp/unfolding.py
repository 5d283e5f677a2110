"""Window unfoldings: configurations tracking the single open window.

A mean-payoff configuration is ``(state, steps, sum)`` with ``steps`` in
``0..λ`` and ``sum`` in ``-λW..0``; a parity configuration is
``(state, steps, min priority)``. Both reset when the tracked window
closes or has stayed open for λ steps, which is enough because a window
that closes also closes every window opened after it.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Hashable, Iterable, Mapping

from .model import MP, PAR, KindMismatch, MealyStrategy, Mdp, check_invariants

# priorities of the unfolded model: visiting `bad` finitely often is a
# co-Buchi condition, i.e. parity with bad -> 1 and everything else -> 2
BAD_PRIORITY = 1
SAFE_PRIORITY = 2


def mp_step(window: int, weights, config: tuple, action: int, target: int) -> tuple:
    """Configuration successor for mean-payoff (index level)."""
    _, l, z = config
    nz = z + weights[action]
    if l == window or nz >= 0:
        return (target, 0, 0)
    return (target, l + 1, nz)


def par_step(window: int, priorities, config: tuple, action: int, target: int) -> tuple:
    """Configuration successor for parity (index level)."""
    _, l, c = config
    if c % 2 == 1 and l < window - 1:
        return (target, l + 1, min(c, priorities[target]))
    return (target, 0, priorities[target])


@dataclass(frozen=True, eq=False)
class UnfoldedMdp:
    """λ-unfolding of ``original``.

    ``mdp`` ranges over configuration ids ``(state id, steps, value)`` and
    shares the action alphabet (and action indices) of ``original``.
    """

    original: Mdp
    mdp: Mdp
    kind: str
    window: int
    bad: frozenset  # configuration ids
    bad_indices: frozenset
    initial_of: Mapping  # state id -> configuration id
    _step: Callable

    def back(self, config) -> Hashable:
        """Projection of a configuration to its original state."""
        return config[0]

    def initial_index(self, state) -> int:
        return self.mdp.state_index(self.initial_of[state])

    def successor(self, config, action, state):
        """Deterministic configuration update after playing ``action`` and landing in ``state``."""
        o = self.original
        s, l, v = config
        nxt = self._step((o.state_index(s), l, v), o.action_index(action), o.state_index(state))
        return (o.states[nxt[0]], nxt[1], nxt[2])

    def is_bad(self, config) -> bool:
        return config in self.bad

    def __len__(self):
        return self.mdp.n_states


def config_bad(kind: str, window: int, config: tuple) -> bool:
    _, l, v = config
    if kind == MP:
        return l == window and v < 0
    return l == window - 1 and v % 2 == 1


def unfold(m: Mdp, window: int, kind: str) -> UnfoldedMdp:
    """Forward-explore the λ-unfolding from every state's initial configuration."""
    if m.kind != kind:
        raise KindMismatch(f"cannot build a {kind!r} unfolding of a {m.kind!r}-labeled model")
    if isinstance(window, bool) or int(window) != window or window < 1:
        raise ValueError(f"window size must be a positive integer, got {window!r}")
    window = int(window)
    if kind == MP:
        weights = m.weights
        floor = -window * m.max_weight

        def step(config, a, t):
            nxt = mp_step(window, weights, config, a, t)
            assert nxt[2] >= floor, "window sum left its range"
            return nxt

        initial = [(s, 0, 0) for s in range(m.n_states)]
    else:
        prios = m.priorities

        def step(config, a, t):
            return par_step(window, prios, config, a, t)

        initial = [(s, 0, prios[s]) for s in range(m.n_states)]

    index: dict[tuple, int] = {}
    configs: list[tuple] = []
    for c in initial:
        if c not in index:
            index[c] = len(configs)
            configs.append(c)
    enabled = []
    delta = {}
    i = 0
    while i < len(configs):
        c = configs[i]
        s = c[0]
        acts = m.enabled[s]
        enabled.append(acts)
        for a in acts:
            row = []
            for t, p in m.delta[s, a]:
                nc = step(c, a, t)
                j = index.get(nc)
                if j is None:
                    j = index[nc] = len(configs)
                    configs.append(nc)
                row.append((j, p))
            row.sort()
            delta[i, a] = tuple(row)
        i += 1

    ids = [(m.states[s], l, v) for s, l, v in configs]
    bad_idx = frozenset(i for i, c in enumerate(configs) if config_bad(kind, window, c))
    marks = [BAD_PRIORITY if i in bad_idx else SAFE_PRIORITY for i in range(len(configs))]
    inner = Mdp(ids, m.actions, enabled, delta, priorities=marks)
    check_invariants(inner)
    return UnfoldedMdp(
        original=m,
        mdp=inner,
        kind=kind,
        window=window,
        bad=frozenset(ids[i] for i in bad_idx),
        bad_indices=bad_idx,
        initial_of={m.states[s]: ids[index[c]] for s, c in enumerate(initial)},
        _step=step,
    )


def lift_strategy(
    u: UnfoldedMdp, sigma_u: Mapping, starts: Iterable | None = None
) -> MealyStrategy:
    """Turn a memoryless strategy on the unfolding into a Mealy strategy on the original.

    The memory is the current configuration. Only configurations reachable
    from the initial configurations of ``starts`` (default: every state)
    under ``sigma_u`` are tabulated. Bad configurations missing from
    ``sigma_u`` fall back to their smallest enabled action.
    """
    m = u.original
    inner = u.mdp
    starts = list(m.states) if starts is None else list(starts)
    init = {s: u.initial_of[s] for s in starts}
    seen = set(init.values())
    queue = sorted(seen, key=inner.state_index)
    next_action = {}
    update = {}
    while queue:
        c = queue.pop()
        s = c[0]
        a = sigma_u.get(c)
        if a is None:
            if c not in u.bad:
                raise ValueError(f"strategy undefined on reachable configuration {c!r}")
            a = m.actions[m.enabled[m.state_index(s)][0]]
        next_action[s, c] = a
        ci = inner.state_index(c)
        for t, _ in inner.delta[ci, inner.action_index(a)]:
            nc = inner.states[t]
            update[a, nc[0], c] = nc
            if nc not in seen:
                seen.add(nc)
                queue.append(nc)
    memory = tuple(sorted(seen, key=inner.state_index))
    return MealyStrategy(memory=memory, init=init, next_action=next_action, update=update)
