"""scikit-learn style wrappers around the solver and the MEC classifier."""
from __future__ import annotations

from fractions import Fraction

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .classification import classify_bounded, classify_fixed
from .graph import mec_decomposition
from .model import BW, KINDS, Mdp, WindowSpec, check_invariants, validate_mdp
from .solver import decide_threshold, solve


def check_mdp(m) -> Mdp:
    """Accept an :class:`Mdp` or a plain description and return a checked model."""
    if isinstance(m, Mdp):
        check_invariants(m)
        return m
    return validate_mdp(m)


def check_objective(objective: str, window_size=None) -> WindowSpec:
    variant = objective.lower().partition("-")[0]
    return WindowSpec.parse(objective, None if variant == BW else window_size)


class WindowObjectiveSolver(BaseEstimator):
    """Optimal probabilities of a window objective, one per state.

    >>> from winmdp.datasets import load_coin_flip
    >>> est = WindowObjectiveSolver("dfw-par", window_size=3).fit(load_coin_flip())
    >>> est.predict(["s"])
    [Fraction(3, 4)]
    """

    def __init__(self, objective: str = "fw-par", window_size: int | None = None, cap: int | None = None):
        self.objective = objective
        self.window_size = window_size
        self.cap = cap

    def fit(self, X, y=None):
        m = check_mdp(X)
        spec = check_objective(self.objective, self.window_size)
        verdict = solve(m, spec, cap=self.cap)
        self.model_ = m
        self.spec_ = spec
        self.verdict_ = verdict
        self.values_ = dict(verdict.values)
        self.strategy_ = verdict.strategy
        self.mec_report_ = list(verdict.mec_report)
        self.confidence_ = verdict.confidence
        return self

    def predict(self, states=None) -> list[Fraction]:
        check_is_fitted(self, "verdict_")
        states = self.model_.states if states is None else states
        return [self.values_[s] for s in states]

    def decide(self, state, alpha) -> str:
        check_is_fitted(self, "verdict_")
        return decide_threshold(self.verdict_, state, alpha)


class MecClassifier(BaseEstimator):
    """Labels each maximal end-component as good or not for a window objective."""

    def __init__(self, kind: str = "par", window_size: int | None = None, bounded: bool = False, cap: int | None = None):
        self.kind = kind
        self.window_size = window_size
        self.bounded = bounded
        self.cap = cap

    def fit(self, X, y=None):
        m = check_mdp(X)
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if not self.bounded and self.window_size is None:
            raise ValueError("window_size is required unless bounded=True")
        decomposition = mec_decomposition(m)
        statuses = []
        for i, mec in enumerate(decomposition.mecs):
            sub = mec.as_mdp(m)
            if self.bounded:
                statuses.append(classify_bounded(sub, self.kind, self.cap, index=i))
            else:
                statuses.append(classify_fixed(sub, self.kind, self.window_size, index=i))
        self.model_ = m
        self.decomposition_ = decomposition
        self.statuses_ = statuses
        return self

    def predict(self, states=None) -> list:
        """Per state: the classification result of its MEC, or None outside MECs."""
        check_is_fitted(self, "statuses_")
        states = self.model_.states if states is None else states
        out = []
        for s in states:
            i = self.decomposition_.membership[s]
            out.append(None if i is None else self.statuses_[i].result)
        return out
