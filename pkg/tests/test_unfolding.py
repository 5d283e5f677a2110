import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from modelgen import small_mdps
from winmdp.model import KindMismatch, validate_mdp
from winmdp.solver import solve_dfw
from winmdp.unfolding import lift_strategy, unfold


def test_coin_flip_lambda2(coin_flip):
    u = unfold(coin_flip, 2, "par")
    assert set(u.mdp.states) == {("s", 0, 1), ("s", 1, 1), ("t", 1, 0), ("t", 0, 0)}
    assert u.bad == {("s", 1, 1)}
    assert u.initial_of == {"s": ("s", 0, 1), "t": ("t", 0, 0)}


def _all_even():
    return validate_mdp({
        "transitions": {"x": {"a": {"y": 1}}, "y": {"a": {"x": "1/2", "y": "1/2"}, "b": {"x": 1}}},
        "priorities": {"x": 0, "y": 2},
    })


def test_all_even_lambda1():
    m = _all_even()
    u = unfold(m, 1, "par")
    assert set(u.mdp.states) == {("x", 0, 0), ("y", 0, 2)}
    assert u.bad == set()


def test_kind_mismatch(coin_flip):
    with pytest.raises(KindMismatch):
        unfold(coin_flip, 2, "mp")
    with pytest.raises(ValueError):
        unfold(coin_flip, 0, "par")


def test_mean_payoff_configs(reopening_mp):
    u = unfold(reopening_mp, 2, "mp")
    assert u.initial_of["s1"] == ("s1", 0, 0)
    # a (-1) then b (0): window still open after two steps
    assert u.successor(("s1", 0, 0), "a", "s2") == ("s2", 1, -1)
    assert u.successor(("s2", 1, -1), "b", "s2") == ("s2", 2, -1)
    assert ("s2", 2, -1) in u.bad
    assert u.successor(("s2", 2, -1), "b", "s3") == ("s3", 0, 0)
    assert u.successor(("s2", 1, -1), "b", "s3") == ("s3", 2, -1)


@given(small_mdps(), st.integers(1, 4))
def test_size_bounds_and_projection(m, lam):
    u = unfold(m, lam, m.kind)
    if m.kind == "mp":
        bound = m.n_states * (lam + 1) * (lam * m.max_weight + 1)
        for s, l, z in u.mdp.states:
            assert 0 <= l <= lam and -lam * m.max_weight <= z <= 0
    else:
        bound = m.n_states * lam * (m.max_priority + 1)
        for s, l, c in u.mdp.states:
            assert 0 <= l <= lam - 1 and 0 <= c <= m.max_priority
    assert len(u) <= bound
    for s in m.states:
        assert u.back(u.initial_of[s]) == s


def _window_open(kind, lam, states, actions, m):
    """Is some window that fits in the run open for lam steps?"""
    if kind == "par":
        prios = [m.priority(s) for s in states]
        for i in range(len(prios) - lam + 1):
            run_min = prios[i]
            closed = run_min % 2 == 0
            for j in range(i + 1, i + lam):
                run_min = min(run_min, prios[j])
                closed = closed or run_min % 2 == 0
            if not closed:
                return True
        return False
    weights = [m.weight(a) for a in actions]
    for i in range(len(weights) - lam + 1):
        total = 0
        closed = False
        for j in range(i, i + lam):
            total += weights[j]
            closed = closed or total >= 0
        if not closed:
            return True
    return False


@given(small_mdps(), st.integers(1, 4), st.integers(0, 2**32 - 1), st.integers(1, 25))
def test_bad_visit_iff_sliding_window_open(m, lam, seed, length):
    u = unfold(m, lam, m.kind)
    rng = random.Random(seed)
    s = rng.choice(m.states)
    config = u.initial_of[s]
    states, actions = [s], []
    hit = config in u.bad
    for _ in range(length):
        a = rng.choice(m.enabled_actions(s))
        dist = m.distribution(s, a)
        t = rng.choice(sorted(dist))
        config = u.successor(config, a, t)
        assert u.back(config) == t
        s = t
        states.append(s)
        actions.append(a)
        hit = hit or config in u.bad
    assert hit == _window_open(m.kind, lam, states, actions, m)


@given(small_mdps(max_states=3), st.integers(1, 3))
def test_cylinder_probabilities_preserved(m, lam):
    u = unfold(m, lam, m.kind)
    inner = u.mdp

    def walk(s, config, p_orig, p_unf, depth):
        assert p_orig == p_unf
        if depth == 5:
            return
        for a in m.enabled_actions(s):
            ci = inner.state_index(config)
            row = dict(inner.delta[ci, inner.action_index(a)])
            for t, p in m.distribution(s, a).items():
                nc = u.successor(config, a, t)
                walk(t, nc, p_orig * p, p_unf * row[inner.state_index(nc)], depth + 1)

    for s in m.states[:2]:
        walk(s, u.initial_of[s], 1, 1, 0)


def test_lifted_all_even_is_behaviourally_memoryless():
    m = _all_even()
    u = unfold(m, 1, "par")
    sigma = lift_strategy(u, {("x", 0, 0): "a", ("y", 0, 2): "b"})
    assert sigma.size == m.n_states
    assert sigma.act("x", sigma.initial("x")) == "a"
    assert sigma.act("y", sigma.initial("y")) == "b"


def test_lift_rejects_partial_strategy(coin_flip):
    u = unfold(coin_flip, 2, "par")
    with pytest.raises(ValueError):
        lift_strategy(u, {})


def test_branching_memory_answers_branch(branching):
    sigma = solve_dfw(branching, "par", 5).strategy
    u = unfold(branching, 5, "par")
    assert sigma.size <= len(u)
    answers = {}
    for branch in (["s2", "s5", "s7", "s8"], ["s3", "s6", "s8"], ["s4", "s8"]):
        q = sigma.initial("s1")
        s = "s1"
        for t in branch:
            a = sigma.act(s, q)
            q = sigma.step(a, t, q)
            s = t
        answers[branch[0]] = sigma.act("s8", q)
    assert answers == {"s2": "b", "s3": "c", "s4": "d"}
