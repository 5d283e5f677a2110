"""Bundled example models and a seeded random-instance generator."""
from __future__ import annotations

from fractions import Fraction
from importlib import resources

import numpy as np

from .model import MP, PAR, Mdp, validate_mdp


def _load(name: str) -> Mdp:
    from .io import parse_model

    text = resources.files("winmdp").joinpath("data", name).read_text(encoding="utf-8")
    return parse_model(text)


def load_reopening(kind: str = PAR) -> Mdp:
    """Three-state chain whose windows reopen forever (priorities 1/2/0 or weights -1/0/1)."""
    return _load("reopening.mdp" if kind == PAR else "reopening_mp.mdp")


def load_coin_flip() -> Mdp:
    """Coin-flip escape from an odd state into an even sink."""
    return _load("coin_flip.mdp")


def load_branching() -> Mdp:
    """Fourteen-state model where answering three odd branches needs memory."""
    return _load("branching.mdp")


def _distribution(rng: np.random.Generator, n: int, max_support: int, max_part: int) -> dict:
    k = int(rng.integers(1, min(max_support, n) + 1))
    targets = rng.choice(n, size=k, replace=False)
    parts = rng.integers(1, max_part + 1, size=k)
    total = int(parts.sum())
    return {int(t): Fraction(int(p), total) for t, p in zip(targets, parts)}


def make_random_mdp(
    n_states: int,
    kind: str = PAR,
    max_actions: int = 3,
    max_weight: int = 2,
    max_priority: int = 3,
    max_support: int = 2,
    action_weights=None,
    seed: int = 0,
) -> Mdp:
    """Seeded random model.

    Each state gets between 1 and ``max_actions`` actions (drawn with
    ``action_weights`` if given), each with a support of at most
    ``max_support`` states and probabilities from small denominators.
    Action ids are unique per state, so mean-payoff weights are free per
    state-action pair.
    """
    if kind not in (MP, PAR):
        raise ValueError(f"kind must be {MP!r} or {PAR!r}")
    rng = np.random.default_rng(seed)
    counts = np.arange(1, max_actions + 1)
    if action_weights is not None:
        p = np.asarray(action_weights, dtype=float)
        p = p / p.sum()
    else:
        p = None
    width = len(str(n_states - 1))
    names = [f"s{i:0{width}d}" for i in range(n_states)]
    transitions = {}
    weights = {}
    for s in range(n_states):
        acts = {}
        for j in range(int(rng.choice(counts, p=p))):
            a = f"{names[s]}_{j}"
            dist = _distribution(rng, n_states, max_support, 3)
            acts[a] = {names[t]: q for t, q in sorted(dist.items())}
            weights[a] = int(rng.integers(-max_weight, max_weight + 1))
        transitions[names[s]] = acts
    raw = {"states": names, "transitions": transitions}
    if kind == MP:
        raw["weights"] = weights
    else:
        raw["priorities"] = {s: int(rng.integers(0, max_priority + 1)) for s in names}
    return validate_mdp(raw)


def make_corpus(count: int, seed: int = 0, max_states: int = 5, max_window: int = 3) -> list[tuple[Mdp, str, int]]:
    """``count`` small ``(model, kind, window)`` instances, alternating parity and mean-payoff.

    Models have at most ``max_states`` states, at most three actions per
    state (fewer are likelier), weights in ``-2..2`` and priorities up to
    ``min(3, |S| + 1)``.
    """
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        kind = PAR if i % 2 == 0 else MP
        n = int(rng.integers(1, max_states + 1))
        m = make_random_mdp(
            n, kind, max_actions=3, max_weight=2, max_priority=min(3, n + 1),
            action_weights=[3, 2, 1], seed=int(rng.integers(2**32)),
        )
        out.append((m, kind, int(rng.integers(1, max_window + 1))))
    return out
