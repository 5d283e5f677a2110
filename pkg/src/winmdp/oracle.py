"""Independent cross-checks: exact strategy evaluation, brute force, sampling.

Nothing here calls the solver, the classification or the reachability
engine. The only shared pieces are the unfolding (which defines the
objectives) and the dense exact linear solver.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from fractions import Fraction
from statistics import NormalDist
from typing import Hashable

import numpy as np

from .exact import solve_linear_system
from .model import BW, DFW, FW, PAR, MealyStrategy, Mdp, WindowSpec, validate_mdp
from .unfolding import unfold

BRUTE_FORCE_LIMIT = 10_000


class PartialStrategy(ValueError):
    """The strategy has no move or no memory update for a reachable situation."""


class TooLarge(RuntimeError):
    pass


# -- Markov chain helpers ----------------------------------------------------

def _reach_sets(rows: list[list[tuple[int, Fraction]]]) -> list[set[int]]:
    out = []
    for v in range(len(rows)):
        seen = {v}
        stack = [v]
        while stack:
            x = stack.pop()
            for y, _ in rows[x]:
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        out.append(seen)
    return out


def _bottom_components(rows) -> list[frozenset]:
    """BSCCs, found as the nodes whose reachable set is a single class."""
    reach = _reach_sets(rows)
    comps = []
    done = set()
    for v in range(len(rows)):
        if v in done:
            continue
        r = reach[v]
        if all(v in reach[w] for w in r):
            comps.append(frozenset(r))
            done |= r
    return comps


def _reach_probability(rows, target: set[int], start: int) -> Fraction:
    """Probability of eventually hitting ``target`` from ``start`` by one dense solve."""
    if start in target:
        return Fraction(1)
    back: dict[int, list[int]] = {}
    for v, row in enumerate(rows):
        for w, _ in row:
            back.setdefault(w, []).append(v)
    can = set(target)
    stack = list(target)
    while stack:
        w = stack.pop()
        for v in back.get(w, ()):
            if v not in can:
                can.add(v)
                stack.append(v)
    if start not in can:
        return Fraction(0)
    free = sorted(can - target)
    pos = {v: i for i, v in enumerate(free)}
    A = [[Fraction(0)] * len(free) for _ in free]
    b = [Fraction(0)] * len(free)
    for v in free:
        i = pos[v]
        A[i][i] += 1
        for w, p in rows[v]:
            if w in target:
                b[i] += p
            elif w in pos:
                A[i][pos[w]] -= p
    return solve_linear_system(A, b)[pos[start]]


def _induced_chain(m: Mdp, sigma: MealyStrategy, start: Hashable, step=None, origin=None):
    """Reachable part of the product of ``m`` (or an unfolding via ``step``) with ``sigma``.

    Nodes are ``(position, memory)`` where position is a state or a
    configuration. Returns the node list, the rows and the action per node.
    """
    try:
        q0 = sigma.init[start]
    except KeyError:
        raise PartialStrategy(f"no initial memory for {start!r}") from None
    p0 = start if origin is None else origin
    index = {(p0, q0): 0}
    nodes = [(p0, q0)]
    rows = []
    acts = []
    i = 0
    while i < len(nodes):
        pos, q = nodes[i]
        s = pos if step is None else pos[0]
        try:
            a = sigma.next_action[s, q]
        except KeyError:
            raise PartialStrategy(f"no move for state {s!r} with memory {q!r}") from None
        if a not in m.enabled_actions(s):
            raise PartialStrategy(f"move {a!r} is not enabled in {s!r}")
        row = []
        for t, p in m.distribution(s, a).items():
            try:
                q2 = sigma.update[a, t, q]
            except KeyError:
                raise PartialStrategy(f"no memory update for ({a!r}, {t!r}, {q!r})") from None
            node = (t if step is None else step(pos, a, t), q2)
            j = index.get(node)
            if j is None:
                j = index[node] = len(nodes)
                nodes.append(node)
            row.append((j, p))
        rows.append(row)
        acts.append(a)
        i += 1
    return nodes, rows, acts


# -- exact evaluation ----------------------------------------------------------

def _mc_window_bound(n: int, kind: str, max_weight: int) -> int:
    if kind == PAR:
        return 2 * n + 2
    return n * n * max(max_weight, 1) + 2


def _bsccs_bounded_good(m: Mdp, nodes, rows, acts, kind: str) -> set[int]:
    """Nodes of BSCCs in which every path keeps all windows bounded."""
    good = set()
    for comp in _bottom_components(rows):
        members = sorted(comp)
        transitions = {
            nodes[v]: {acts[v]: {nodes[w]: p for w, p in rows[v]}} for v in members
        }
        labels = {}
        if kind == PAR:
            labels["priorities"] = {nodes[v]: m.priority(nodes[v][0]) for v in members}
        else:
            labels["weights"] = {a: m.weight(a) for a in {acts[v] for v in members}}
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")  # priorities of the whole model, fewer states
            chain = validate_mdp({"transitions": transitions, **labels})
        lam = _mc_window_bound(len(members), kind, m.max_weight)
        u = unfold(chain, lam, kind)
        # single action per configuration: bad is avoidable iff unreachable
        seen = {u.initial_of[s] for s in chain.states}
        stack = list(seen)
        hit = False
        while stack and not hit:
            c = stack.pop()
            if c in u.bad:
                hit = True
                break
            ci = u.mdp.state_index(c)
            for a in u.mdp.enabled[ci]:
                for t, _ in u.mdp.delta[ci, a]:
                    nc = u.mdp.states[t]
                    if nc not in seen:
                        seen.add(nc)
                        stack.append(nc)
        if not hit:
            good |= comp
    return good


def eval_strategy_exact(m: Mdp, sigma: MealyStrategy, spec: WindowSpec, state) -> Fraction:
    """Exact probability that ``sigma`` satisfies ``spec`` from ``state``."""
    spec.check_model(m)
    m.state_index(state)
    if spec.variant == BW:
        nodes, rows, acts = _induced_chain(m, sigma, state)
        good = _bsccs_bounded_good(m, nodes, rows, acts, spec.kind)
        return _reach_probability(rows, good, 0)

    u = unfold(m, spec.window, spec.kind)
    nodes, rows, _ = _induced_chain(m, sigma, state, step=u.successor, origin=u.initial_of[state])
    bad = {i for i, (c, _) in enumerate(nodes) if c in u.bad}
    if spec.variant == DFW:
        return 1 - _reach_probability(rows, bad, 0)
    good = set()
    for comp in _bottom_components(rows):
        if not comp & bad:
            good |= comp
    return _reach_probability(rows, good, 0)


def eval_strategy_values(m: Mdp, sigma: MealyStrategy, spec: WindowSpec, states=None) -> dict:
    states = m.states if states is None else states
    return {s: eval_strategy_exact(m, sigma, spec, s) for s in states}


# -- brute force -------------------------------------------------------------

def _enumerate_choices(inner: Mdp, root: int, absorbing: frozenset, limit: int) -> list[dict]:
    """Every memoryless choice function on the configurations it makes reachable from ``root``."""
    out: list[dict] = []

    def extend(assign: dict, pending: list[int]):
        if not pending:
            if len(out) >= limit:
                raise TooLarge(f"more than {limit} memoryless strategies to enumerate")
            out.append(dict(assign))
            return
        c = min(pending)
        rest = [x for x in pending if x != c]
        if c in absorbing:
            assign[c] = None
            extend(assign, rest)
            del assign[c]
            return
        for a in inner.enabled[c]:
            assign[c] = a
            new = [t for t, _ in inner.delta[c, a] if t not in assign and t not in rest]
            extend(assign, rest + sorted(set(new)))
            del assign[c]

    extend({}, [root])
    return out


def brute_force_value(m: Mdp, spec: WindowSpec, limit: int = BRUTE_FORCE_LIMIT) -> dict:
    """Pointwise maximum over every pure memoryless strategy of the unfolding."""
    if spec.variant not in (DFW, FW):
        raise ValueError("brute force covers DFW and FW only")
    spec.check_model(m)
    u = unfold(m, spec.window, spec.kind)
    inner = u.mdp
    bad = u.bad_indices
    absorbing = bad if spec.variant == DFW else frozenset()
    values = {}
    for s in m.states:
        root = u.initial_index(s)
        best = Fraction(0)
        for assign in _enumerate_choices(inner, root, absorbing, limit):
            local = sorted(assign)
            pos = {c: i for i, c in enumerate(local)}
            rows = []
            for c in local:
                a = assign[c]
                rows.append([(pos[c], Fraction(1))] if a is None else [(pos[t], p) for t, p in inner.delta[c, a]])
            bad_local = {pos[c] for c in local if c in bad}
            if spec.variant == DFW:
                v = 1 - _reach_probability(rows, bad_local, pos[root])
            else:
                good = set()
                for comp in _bottom_components(rows):
                    if not comp & bad_local:
                        good |= comp
                v = _reach_probability(rows, good, pos[root])
            if v > best:
                best = v
                if best == 1:
                    break
        values[s] = best
    return values


# -- Monte Carlo --------------------------------------------------------------

@dataclass(frozen=True)
class Estimate:
    estimate: float
    n: int
    horizon: int
    seed: int
    half_width: float  # 99% normal-approximation interval
    label: str

    @property
    def interval(self) -> tuple[float, float]:
        return (max(0.0, self.estimate - self.half_width), min(1.0, self.estimate + self.half_width))

    def covers(self, value) -> bool:
        lo, hi = self.interval
        return lo <= float(value) <= hi


Z99 = NormalDist().inv_cdf(0.995)

CONVENTIONS = {
    DFW: "prefix estimate: windows that can be decided inside the horizon are checked",
    FW: "lower bound estimate: success needs every decidable window of the second half to close",
    BW: "lower bound estimate: windows starting in the third quarter must close before the horizon",
}


def _sample_uniforms(seed: int, n: int, horizon: int) -> np.ndarray:
    out = np.empty((n, horizon))
    base = int(seed) << 64
    for i in range(n):
        out[i] = np.random.Generator(np.random.Philox(key=base | i)).random(horizon)
    return out


def _open_windows_par(P: np.ndarray, lam: int) -> np.ndarray:
    """Boolean matrix: window starting at column i stays open for ``lam`` positions."""
    k = P.shape[1] - lam + 1
    if k <= 0:
        return np.zeros((P.shape[0], 0), dtype=bool)
    cur = P[:, :k].copy()
    closed = cur % 2 == 0
    for j in range(1, lam):
        np.minimum(cur, P[:, j : j + k], out=cur)
        closed |= cur % 2 == 0
    return ~closed


def _open_windows_mp(Wt: np.ndarray, lam: int) -> np.ndarray:
    k = Wt.shape[1] - lam + 1
    if k <= 0:
        return np.zeros((Wt.shape[0], 0), dtype=bool)
    cs = np.zeros((Wt.shape[0], k), dtype=np.int64)
    closed = np.zeros((Wt.shape[0], k), dtype=bool)
    for j in range(lam):
        cs += Wt[:, j : j + k]
        closed |= cs >= 0
    return ~closed


def monte_carlo(
    m: Mdp, sigma: MealyStrategy, spec: WindowSpec, state, n: int, horizon: int, seed: int
) -> Estimate:
    """Estimate the satisfaction probability from ``n`` seeded runs of ``horizon`` steps.

    Run ``i`` draws from a Philox stream keyed by ``(seed, i)``, so any
    subset of runs can be reproduced independently.
    """
    spec.check_model(m)
    if n < 1:
        raise ValueError("n must be at least 1")
    lam = spec.window if spec.window is not None else 1
    if horizon < lam:
        raise ValueError(f"horizon must be at least the window size {lam}")
    if not 0 <= seed < 2**64:
        raise ValueError("seed must fit in 64 bits")

    nodes, rows, acts = _induced_chain(m, sigma, state)
    width = max(len(r) for r in rows)
    succ = np.zeros((len(rows), width), dtype=np.int64)
    cum = np.full((len(rows), width), 2.0)
    for v, row in enumerate(rows):
        acc = 0.0
        for k, (w, p) in enumerate(row):
            acc += float(p)
            succ[v, k] = w
            cum[v, k] = acc
        succ[v, len(row):] = row[-1][0]
        cum[v, len(row) - 1] = 2.0
    if spec.kind == PAR:
        label = np.array([m.priority(s) for s, _ in nodes], dtype=np.int64)
    else:
        label = np.array([m.weight(a) for a in acts], dtype=np.int64)

    U = _sample_uniforms(seed, n, horizon)
    path = np.empty((n, horizon + 1), dtype=np.int64)
    path[:, 0] = 0
    cur = path[:, 0].copy()
    for t in range(horizon):
        k = (U[:, t, None] >= cum[cur]).sum(axis=1)
        cur = succ[cur, k]
        path[:, t + 1] = cur

    if spec.kind == PAR:
        seq = label[path]  # priorities at positions 0..horizon
    else:
        seq = label[path[:, :-1]]  # weights of actions 0..horizon-1
    L = seq.shape[1]
    if spec.variant == DFW:
        ok = ~_open_windows(seq, lam, spec.kind).any(axis=1)
    elif spec.variant == FW:
        ok = ~_open_windows(seq[:, L // 2 :], lam, spec.kind).any(axis=1)
    else:
        tail = seq[:, L // 2 :]
        span = max(1, tail.shape[1] // 2)
        ok = ~_open_windows(tail, span, spec.kind).any(axis=1)
    p = float(ok.mean())
    half = Z99 * (p * (1 - p) / n) ** 0.5
    return Estimate(p, n, horizon, seed, half, CONVENTIONS[spec.variant])


def _open_windows(seq, lam, kind):
    return _open_windows_par(seq, lam) if kind == PAR else _open_windows_mp(seq, lam)
