"""Text model format, strategy documents and result documents.

Model grammar, one item per line::

    mdp par                      # or: mdp mp
    state s1 priority 1          # mp models: state s1
    action s1 a                  # mp models: action s1 a weight -1
      s2 1/2                     # indented successor lines
      s3 1/2

``#`` starts a comment and blank lines are ignored.
"""
from __future__ import annotations

import hashlib
import json
import re
from fractions import Fraction
from typing import Mapping

from .model import (
    MP,
    PAR,
    DeadlockState,
    DistributionSum,
    MealyStrategy,
    Mdp,
    MissingLabel,
    ModelError,
    NegativeOrZeroProbability,
    ProbabilityAboveOne,
    UnknownState,
    _IdentityUpdate,
    validate_mdp,
)


class ModelSyntaxError(ModelError):
    def __init__(self, line: int | None, message: str):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


_NUMBER = re.compile(r"^[+-]?\d+(?:/[+-]?\d+)?$")


def _with_line(exc: ModelError, line: int) -> ModelError:
    exc.line = line
    exc.args = (f"line {line}: {exc.args[0]}",) if exc.args else exc.args
    return exc


def parse_fraction(text: str) -> Fraction:
    if not _NUMBER.match(text):
        raise ValueError(f"{text!r} is not a rational of the form num/den")
    return Fraction(text)


def format_fraction(x) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def parse_model(text: str) -> Mdp:
    kind = None
    states: list[str] = []
    state_line: dict[str, int] = {}
    priorities: dict[str, int] = {}
    blocks: list[dict] = []  # {state, action, weight, line, succ: [(t, p, line)]}
    weights: dict[str, int] = {}
    seen_pairs: set = set()
    current = None

    for no, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0]
        if not body.strip():
            continue
        indented = body[0] in " \t"
        tok = body.split()
        if kind is None:
            if indented or len(tok) != 2 or tok[0] != "mdp" or tok[1] not in (MP, PAR):
                raise ModelSyntaxError(no, "the first line must be 'mdp mp' or 'mdp par'")
            kind = tok[1]
            continue
        if indented:
            if current is None:
                raise ModelSyntaxError(no, "successor line outside an action block")
            if len(tok) != 2:
                raise ModelSyntaxError(no, "successor lines read '<state> <num>/<den>'")
            try:
                p = parse_fraction(tok[1])
            except (ValueError, ZeroDivisionError) as exc:
                raise ModelSyntaxError(no, str(exc)) from None
            if any(t == tok[0] for t, _, _ in current["succ"]):
                raise ModelSyntaxError(no, f"successor {tok[0]!r} listed twice")
            current["succ"].append((tok[0], p, no))
            continue
        current = None
        if tok[0] == "state":
            if kind == PAR:
                if len(tok) != 4 or tok[2] != "priority":
                    raise ModelSyntaxError(no, "parity states read 'state <id> priority <nat>'")
                if not tok[3].isdigit():
                    raise _with_line(MissingLabel(f"priority {tok[3]!r} is not a natural number"), no)
                priorities[tok[1]] = int(tok[3])
            elif len(tok) != 2:
                raise ModelSyntaxError(no, "mean-payoff states read 'state <id>'")
            if tok[1] in state_line:
                raise ModelSyntaxError(no, f"state {tok[1]!r} declared twice")
            state_line[tok[1]] = no
            states.append(tok[1])
        elif tok[0] == "action":
            if kind == MP:
                if len(tok) != 5 or tok[3] != "weight":
                    raise ModelSyntaxError(no, "mean-payoff actions read 'action <state> <id> weight <int>'")
                try:
                    w = int(tok[4])
                except ValueError:
                    raise _with_line(MissingLabel(f"weight {tok[4]!r} is not an integer"), no) from None
                if weights.setdefault(tok[2], w) != w:
                    raise ModelSyntaxError(no, f"action {tok[2]!r} already has weight {weights[tok[2]]}")
            elif len(tok) != 3:
                raise ModelSyntaxError(no, "parity actions read 'action <state> <id>'")
            if (tok[1], tok[2]) in seen_pairs:
                raise ModelSyntaxError(no, f"action {tok[2]!r} defined twice in {tok[1]!r}")
            seen_pairs.add((tok[1], tok[2]))
            current = {"state": tok[1], "action": tok[2], "line": no, "succ": []}
            blocks.append(current)
        else:
            raise ModelSyntaxError(no, f"unexpected keyword {tok[0]!r}")

    if kind is None:
        raise ModelSyntaxError(1, "empty model")

    by_state: dict[str, dict] = {s: {} for s in states}
    for b in blocks:
        no = b["line"]
        if b["state"] not in state_line:
            raise _with_line(UnknownState(f"action for undeclared state {b['state']!r}"), no)
        if not b["succ"]:
            raise ModelSyntaxError(no, f"action {b['action']!r} has no successor lines")
        total = Fraction(0)
        for t, p, pno in b["succ"]:
            if t not in state_line:
                raise _with_line(UnknownState(f"successor {t!r} is not a declared state"), pno)
            if p <= 0:
                raise _with_line(NegativeOrZeroProbability(f"probability {p} is not positive"), pno)
            if p > 1:
                raise _with_line(ProbabilityAboveOne(f"probability {p} exceeds 1"), pno)
            total += p
        if total != 1:
            raise _with_line(DistributionSum(f"probabilities of {b['action']!r} in {b['state']!r} sum to {total}"), no)
        by_state[b["state"]][b["action"]] = {t: p for t, p, _ in b["succ"]}
    for s, acts in by_state.items():
        if not acts:
            raise _with_line(DeadlockState(f"state {s!r} has no action"), state_line[s])

    raw = {"kind": kind, "states": states, "transitions": by_state}
    if kind == MP:
        raw["weights"] = weights
    else:
        raw["priorities"] = priorities
    return validate_mdp(raw)


def format_model(m: Mdp) -> str:
    """Canonical text; parsing it gives back an equal model."""
    lines = [f"mdp {m.kind}"]
    for s, sid in enumerate(m.states):
        lines.append(f"state {sid} priority {m.priorities[s]}" if m.kind == PAR else f"state {sid}")
    for s, sid in enumerate(m.states):
        for a in m.enabled[s]:
            head = f"action {sid} {m.actions[a]}"
            if m.kind == MP:
                head += f" weight {m.weights[a]}"
            lines.append(head)
            for t, p in m.delta[s, a]:
                lines.append(f"  {m.states[t]} {format_fraction(p)}")
    return "\n".join(lines) + "\n"


def model_hash(m: Mdp) -> str:
    return hashlib.sha256(format_model(m).encode("utf-8")).hexdigest()


# -- strategies ----------------------------------------------------------------

def export_strategy(sigma: MealyStrategy) -> dict:
    """Table representation with memory elements rendered as strings."""
    label = {q: str(q) for q in sigma.memory}
    if len(set(label.values())) != len(label):
        raise ValueError("memory elements do not have distinct string forms")
    doc = {
        "memory": [label[q] for q in sigma.memory],
        "init": {str(s): label[q] for s, q in sigma.init.items()},
        "next_action": [[str(s), label[q], str(a)] for (s, q), a in sigma.next_action.items()],
        "update": [],
    }
    if len(sigma.memory) > 1:
        doc["update"] = [
            [str(a), str(t), label[q], label[q2]] for (a, t, q), q2 in sigma.update.items()
        ]
    return doc


def import_strategy(doc: Mapping) -> MealyStrategy:
    memory = tuple(doc["memory"])
    if not memory:
        raise ValueError("a strategy needs at least one memory element")
    known = set(memory)

    def mem(q):
        if q not in known:
            raise ValueError(f"unknown memory element {q!r}")
        return q

    init = {s: mem(q) for s, q in doc["init"].items()}
    next_action = {(s, mem(q)): a for s, q, a in doc["next_action"]}
    if len(memory) == 1 and not doc.get("update"):
        update = _IdentityUpdate(memory[0])
    else:
        update = {(a, t, mem(q)): mem(q2) for a, t, q, q2 in doc.get("update", ())}
    return MealyStrategy(memory=memory, init=init, next_action=next_action, update=update)


def dumps_strategy(sigma: MealyStrategy) -> str:
    return json.dumps(export_strategy(sigma), indent=2, sort_keys=True)


def loads_strategy(text: str) -> MealyStrategy:
    return import_strategy(json.loads(text))


# -- results -------------------------------------------------------------------

def result_document(
    m: Mdp,
    verdict,
    state=None,
    threshold=None,
    decision: str | None = None,
    timing: float | None = None,
    include_strategy: bool = False,
) -> dict:
    spec = verdict.spec
    doc = {
        "model_hash": model_hash(m),
        "spec": {"objective": spec.name, "lambda": spec.window},
        "values": {str(s): format_fraction(v) for s, v in verdict.values.items()},
        "confidence": verdict.confidence,
        "mec_report": [st.summary() for st in verdict.mec_report],
        "strategy_memory": verdict.strategy.size,
    }
    if state is not None:
        doc["state"] = str(state)
        doc["value"] = format_fraction(verdict.values[state])
    if threshold is not None:
        doc["threshold"] = format_fraction(threshold)
    if decision is not None:
        doc["decision"] = decision
    if include_strategy:
        doc["strategy"] = export_strategy(verdict.strategy)
    if timing is not None:
        doc["timing_seconds"] = round(timing, 6)
    return doc
