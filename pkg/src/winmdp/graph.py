"""Qualitative graph machinery: SCCs, MEC decomposition, prob-0/1 sets, attractors."""
from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .model import Mdp, restrict

CONTROLLER = "controller"
ADVERSARY = "adversary"


def tarjan_scc(n: int, succ: Sequence[Iterable[int]], nodes: Iterable[int] | None = None) -> list[list[int]]:
    """Strongly connected components, iteratively.

    Components come out in reverse topological order: every component is
    emitted after all components reachable from it. ``nodes`` restricts
    the search (edges leaving the restriction are ignored).
    """
    allowed = None
    if nodes is not None:
        nodes = list(nodes)
        allowed = set(nodes)
    else:
        nodes = range(n)
    index = {}
    low = {}
    on_stack = set()
    stack: list[int] = []
    out: list[list[int]] = []
    counter = 0
    for root in nodes:
        if root in index:
            continue
        work = [(root, iter(succ[root]))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if allowed is not None and w not in allowed:
                    continue
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(succ[w])))
                    advanced = True
                    break
                if w in on_stack and index[w] < low[v]:
                    low[v] = index[w]
            if advanced:
                continue
            work.pop()
            if work:
                u = work[-1][0]
                if low[v] < low[u]:
                    low[u] = low[v]
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                comp.sort()
                out.append(comp)
    return out


def bottom_sccs(n: int, succ: Sequence[Iterable[int]], nodes: Iterable[int] | None = None) -> list[list[int]]:
    """SCCs with no edge leaving them."""
    comps = tarjan_scc(n, succ, nodes)
    where = {}
    for i, c in enumerate(comps):
        for v in c:
            where[v] = i
    bottoms = []
    for i, c in enumerate(comps):
        if all(where.get(w) == i for v in c for w in succ[v]):
            bottoms.append(c)
    return bottoms


@dataclass(frozen=True)
class Mec:
    states: tuple
    actions: Mapping  # state id -> tuple of action ids

    def as_mdp(self, m: Mdp) -> Mdp:
        return restrict(m, self.states, self.actions)


@dataclass(frozen=True)
class MecDecomposition:
    mecs: tuple
    membership: Mapping  # state id -> mec index or None

    def __len__(self):
        return len(self.mecs)

    def __iter__(self):
        return iter(self.mecs)


def mec_indices(m: Mdp) -> list[tuple[list[int], dict[int, list[int]]]]:
    """Index-level MEC decomposition by iterated SCC pruning."""
    alive = {s: list(acts) for s, acts in enumerate(m.enabled)}
    while True:
        succ: dict[int, list[int]] = {}
        for s, acts in alive.items():
            targets = set()
            for a in acts:
                targets.update(t for t, _ in m.delta[s, a])
            succ[s] = sorted(t for t in targets if t in alive)
        comps = tarjan_scc(m.n_states, _DictSucc(succ), sorted(alive))
        comp_of = {}
        for i, c in enumerate(comps):
            for v in c:
                comp_of[v] = i
        changed = False
        for s in list(alive):
            kept = [a for a in alive[s] if all(comp_of.get(t) == comp_of[s] for t, _ in m.delta[s, a])]
            if len(kept) != len(alive[s]):
                changed = True
                if kept:
                    alive[s] = kept
                else:
                    del alive[s]
        if not changed:
            break
    result = []
    for c in comps:
        c = [s for s in c if s in alive]
        if c:
            result.append((c, {s: alive[s] for s in c}))
    result.sort(key=lambda item: item[0][0])
    return result


class _DictSucc:
    def __init__(self, d):
        self._d = d

    def __getitem__(self, v):
        return self._d.get(v, ())


def mec_decomposition(m: Mdp) -> MecDecomposition:
    """All maximal end-components of ``m``, ordered by their smallest state index."""
    mecs = []
    membership = {s: None for s in m.states}
    for i, (states, acts) in enumerate(mec_indices(m)):
        mecs.append(Mec(
            states=tuple(m.states[s] for s in states),
            actions={m.states[s]: tuple(m.actions[a] for a in acts[s]) for s in states},
        ))
        for s in states:
            membership[m.states[s]] = i
    return MecDecomposition(tuple(mecs), membership)


def is_strongly_connected(m: Mdp) -> bool:
    if m.n_states == 0:
        return False
    return len(tarjan_scc(m.n_states, m.successor_lists())) == 1


def predecessors(m: Mdp) -> list[list[tuple[int, int]]]:
    """pred[t] lists the (state, action) pairs that may move to t."""
    pred: list[list[tuple[int, int]]] = [[] for _ in range(m.n_states)]
    for s, acts in enumerate(m.enabled):
        for a in acts:
            for t, _ in m.delta[s, a]:
                pred[t].append((s, a))
    return pred


def prob0_indices(m: Mdp, target: set[int], avoid: set[int] = frozenset(), pred=None) -> set[int]:
    """States from which no strategy reaches ``target`` with positive probability."""
    if pred is None:
        pred = predecessors(m)
    reach = set(target)
    queue = list(target)
    while queue:
        t = queue.pop()
        for s, _ in pred[t]:
            if s not in reach and s not in avoid:
                reach.add(s)
                queue.append(s)
    return set(range(m.n_states)) - reach


def prob1_indices(
    m: Mdp, target: set[int], avoid: set[int] = frozenset(), pred=None
) -> tuple[set[int], dict[int, int]]:
    """Almost-sure reachability set with a memoryless witness.

    Greatest fixpoint over X of the least fixpoint over Y of
    ``target | {s : some a keeps supp inside X and hits Y}``. The witness
    action is the one that added a state to the last inner fixpoint, so
    following it strictly lowers the BFS layer with positive probability.
    """
    if pred is None:
        pred = predecessors(m)
    outside = set(avoid) - set(target)
    X = set(range(m.n_states)) - outside
    while True:
        Y = set(t for t in target if t in X)
        choice: dict[int, int] = {}
        frontier = sorted(Y)
        while frontier:
            nxt = set()
            for t in frontier:
                for s, a in pred[t]:
                    if s in Y or s not in X or s in outside:
                        continue
                    if all(u in X for u, _ in m.delta[s, a]):
                        # smallest qualifying action within the layer
                        if s not in choice or a < choice[s]:
                            choice[s] = a
                        nxt.add(s)
            Y.update(nxt)
            frontier = sorted(nxt)
        if Y == X:
            return X, choice
        X = Y


def prob01_reach(m: Mdp, target: Iterable) -> tuple[frozenset, frozenset]:
    """(prob0, prob1) as state-id sets for reaching ``target``."""
    tgt = {m.state_index(t) for t in target}
    pred = predecessors(m)
    p0 = prob0_indices(m, tgt, pred=pred)
    p1, _ = prob1_indices(m, tgt, pred=pred)
    return (
        frozenset(m.states[s] for s in p0),
        frozenset(m.states[s] for s in p1),
    )


@dataclass(frozen=True)
class GameArena:
    """Two-player reading of an MDP: the controller picks an action, the
    adversary picks any successor in its support."""

    n: int
    moves: tuple  # per node: tuple of (action index, tuple of successor nodes)

    @classmethod
    def from_mdp(cls, m: Mdp) -> "GameArena":
        moves = []
        for s, acts in enumerate(m.enabled):
            moves.append(tuple((a, tuple(t for t, _ in m.delta[s, a])) for a in acts))
        return cls(m.n_states, tuple(moves))

    def predecessors(self) -> list[list[tuple[int, int]]]:
        """pred[t] lists (node, move position) pairs with t among the move's successors."""
        pred: list[list[tuple[int, int]]] = [[] for _ in range(self.n)]
        for s, mv in enumerate(self.moves):
            for k, (_, succ) in enumerate(mv):
                for t in set(succ):
                    pred[t].append((s, k))
        return pred


def attractor(arena: GameArena, target: Iterable[int], player: str = CONTROLLER) -> frozenset:
    """Nodes from which ``player`` can force a visit to ``target``.

    Least fixpoint of the controllable-predecessor operator, processed in
    ascending node order.
    """
    if player not in (CONTROLLER, ADVERSARY):
        raise ValueError(f"player must be {CONTROLLER!r} or {ADVERSARY!r}")
    pred = arena.predecessors()
    attr = set(target)
    heap = sorted(attr)
    heapq.heapify(heap)
    if player == ADVERSARY:
        # the adversary wins a node once every controller move can be steered into attr
        remaining = [len(mv) for mv in arena.moves]
        hit = [[False] * len(mv) for mv in arena.moves]
        while heap:
            t = heapq.heappop(heap)
            for s, k in pred[t]:
                if s in attr or hit[s][k]:
                    continue
                hit[s][k] = True
                remaining[s] -= 1
                if remaining[s] == 0:
                    attr.add(s)
                    heapq.heappush(heap, s)
    else:
        missing = [[len(set(succ)) for _, succ in mv] for mv in arena.moves]
        while heap:
            t = heapq.heappop(heap)
            for s, k in pred[t]:
                if s in attr:
                    continue
                missing[s][k] -= 1
                if missing[s][k] == 0:
                    attr.add(s)
                    heapq.heappush(heap, s)
    return frozenset(attr)
