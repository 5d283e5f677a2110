"""Exact rational linear algebra and maximum reachability."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from typing import Iterable, Mapping, Sequence

from .graph import predecessors, prob0_indices, prob1_indices, tarjan_scc
from .model import Mdp


class SingularMatrix(ArithmeticError):
    pass


def solve_linear_system(A: Sequence[Sequence], b: Sequence) -> list[Fraction]:
    """Solve ``A x = b`` exactly.

    Rows are scaled to integers and reduced by fraction-free (Bareiss)
    elimination, pivoting on the first usable row; only the final back
    substitution touches Fractions.
    """
    n = len(A)
    if len(b) != n or any(len(row) != n for row in A):
        raise ValueError("A must be square and match b")
    if n == 0:
        return []
    M = []
    for row, rhs in zip(A, b):
        row = [Fraction(v) for v in row] + [Fraction(rhs)]
        scale = lcm(*(v.denominator for v in row))
        M.append([v.numerator * (scale // v.denominator) for v in row])

    prev = 1
    for k in range(n):
        piv = next((i for i in range(k, n) if M[i][k] != 0), None)
        if piv is None:
            raise SingularMatrix(f"matrix is singular (no pivot in column {k})")
        if piv != k:
            M[k], M[piv] = M[piv], M[k]
        Mk = M[k]
        pk = Mk[k]
        for i in range(k + 1, n):
            Mi = M[i]
            f = Mi[k]
            if f == 0:
                for j in range(k + 1, n + 1):
                    Mi[j] = Mi[j] * pk // prev
            else:
                for j in range(k + 1, n + 1):
                    Mi[j] = (Mi[j] * pk - f * Mk[j]) // prev
            Mi[k] = 0
        prev = pk

    x = [Fraction(0)] * n
    for i in range(n - 1, -1, -1):
        acc = Fraction(M[i][n])
        row = M[i]
        for j in range(i + 1, n):
            if row[j]:
                acc -= row[j] * x[j]
        x[i] = acc / row[i]
    return x


def chain_values(succ: Mapping[int, Sequence[tuple[int, Fraction]]], boundary: Mapping[int, Fraction]) -> dict[int, Fraction]:
    """Absorption values of a Markov chain.

    ``succ`` gives the rows of the free nodes, ``boundary`` the fixed values.
    Free nodes that cannot reach a positive boundary value get 0; the rest
    are solved one SCC at a time in reverse topological order, so each
    dense solve only spans a single component.
    """
    positive = {v for v, x in boundary.items() if x != 0}
    pred: dict[int, list[int]] = {}
    for s, row in succ.items():
        for t, _ in row:
            pred.setdefault(t, []).append(s)
    live = set()
    queue = list(positive)
    while queue:
        t = queue.pop()
        for s in pred.get(t, ()):
            if s not in live and s not in boundary:
                live.add(s)
                queue.append(s)

    values: dict[int, Fraction] = dict(boundary)
    for s in succ:
        if s not in live and s not in boundary:
            values[s] = Fraction(0)
    if not live:
        return values

    order = sorted(live)
    local = {v: i for i, v in enumerate(order)}
    adj = [[local[t] for t, _ in succ[v] if t in live] for v in order]
    for comp in tarjan_scc(len(order), adj):
        nodes = [order[i] for i in comp]
        pos = {v: i for i, v in enumerate(nodes)}
        k = len(nodes)
        A = [[Fraction(0)] * k for _ in range(k)]
        rhs = [Fraction(0)] * k
        for i, v in enumerate(nodes):
            A[i][i] += 1
            for t, p in succ[v]:
                j = pos.get(t)
                if j is not None:
                    A[i][j] -= p
                else:
                    rhs[i] += p * values[t]
        for v, x in zip(nodes, solve_linear_system(A, rhs)):
            values[v] = x
    return values


@dataclass(frozen=True)
class ReachSolution:
    values: Mapping  # state id -> Fraction
    strategy: Mapping  # state id -> action id, outside the target


def max_reach_indices(
    m: Mdp, target: Iterable[int], avoid: Iterable[int] = ()
) -> tuple[list[Fraction], list[int | None]]:
    """Index-level maximum reachability.

    ``avoid`` states are treated as absorbing losses. Returns per-state
    values and a memoryless optimal choice (None on target states).
    """
    target = set(target)
    avoid = set(avoid) - target
    n = m.n_states
    pred = predecessors(m)
    p0 = prob0_indices(m, target, avoid, pred=pred)
    p1, p1_choice = prob1_indices(m, target, avoid, pred=pred)
    uncertain = [s for s in range(n) if s not in p0 and s not in p1 and s not in avoid]

    values = [Fraction(0)] * n
    choice: list[int | None] = [None] * n
    for s in range(n):
        if s in target:
            values[s] = Fraction(1)
        elif s in p1:
            values[s] = Fraction(1)
            choice[s] = p1_choice[s]
        else:
            choice[s] = m.enabled[s][0]

    if uncertain:
        boundary = {s: values[s] for s in range(n) if s not in uncertain}
        policy = {s: m.enabled[s][0] for s in uncertain}
        while True:
            x = chain_values({s: m.delta[s, policy[s]] for s in uncertain}, boundary)
            switched = False
            for s in uncertain:
                cur = sum((p * x[t] for t, p in m.delta[s, policy[s]]), Fraction(0))
                for a in m.enabled[s]:
                    if a == policy[s]:
                        continue
                    q = sum((p * x[t] for t, p in m.delta[s, a]), Fraction(0))
                    if q > cur:
                        policy[s] = a
                        switched = True
                        break
            if not switched:
                break
        for s in uncertain:
            values[s] = x[s]
            choice[s] = policy[s]
    return values, choice


def max_reachability(m: Mdp, target: Iterable, avoid: Iterable = ()) -> ReachSolution:
    """Exact maximal probability to reach ``target`` with a pure memoryless witness."""
    tgt = {m.state_index(t) for t in target}
    av = {m.state_index(t) for t in avoid}
    values, choice = max_reach_indices(m, tgt, av)
    return ReachSolution(
        values={m.states[s]: v for s, v in enumerate(values)},
        strategy={m.states[s]: m.actions[a] for s, a in enumerate(choice) if a is not None},
    )
