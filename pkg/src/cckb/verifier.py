"""Static verification: does every executable grounding of an action preserve a query?

The check enumerates groundings of the action parameters over the known
individuals plus ``ar(γ)`` fresh ones, applies each, and compares the answers
of the query before and after over the candidate tuple space.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Iterator

from .actions import Action, ActionError, apply, ground
from .kb import CcKB
from .queries import MustMayEvaluator, Query, UnsatisfiableKBError
from .reasoner import fully_satisfiable, negative_closure


@dataclass(frozen=True)
class Counterexample:
    theta: tuple[tuple[str, str], ...]
    tuple: tuple[str, ...]
    direction: str  # "gained" or "lost"

    def to_json(self) -> dict:
        return {"bindings": dict(self.theta), "tuple": list(self.tuple), "direction": self.direction}


@dataclass(frozen=True)
class SkippedGrounding:
    theta: tuple[tuple[str, str], ...]
    reason: str

    def to_json(self) -> dict:
        return {"bindings": dict(self.theta), "reason": self.reason}


@dataclass(frozen=True)
class PreservationVerdict:
    preserving: bool
    counterexample: Counterexample | None = None
    skipped_groundings: tuple[SkippedGrounding, ...] = ()
    groundings_checked: int = 0
    all_counterexamples: tuple[Counterexample, ...] = field(default=(), compare=False)

    def to_json(self) -> dict:
        return {
            "preserving": self.preserving,
            "counterexample": self.counterexample.to_json() if self.counterexample else None,
            "skipped_groundings": [s.to_json() for s in self.skipped_groundings],
            "groundings_checked": self.groundings_checked,
        }


def fresh_individuals(n: int, taken: set[str] | frozenset[str]) -> list[str]:
    """``f1, f2, ...`` skipping names already in use."""
    out = []
    i = 1
    while len(out) < n:
        name = f"f{i}"
        if name not in taken:
            out.append(name)
        i += 1
    return out


def grounding_candidates(action: Action, kb: CcKB, extra_fresh: int = 0) -> list[str]:
    known = kb.model_nodes | kb.open_individuals
    return sorted(known) + fresh_individuals(action.arity + extra_fresh, kb.adom() | known)


def enumerate_groundings(action: Action, kb: CcKB, extra_fresh: int = 0) -> Iterator[dict[str, str]]:
    """All maps of the parameters into ``I^M ⊎ I^K`` plus ``ar(γ)`` fresh names, lexicographically."""
    candidates = grounding_candidates(action, kb, extra_fresh)
    for values in product(candidates, repeat=action.arity):
        yield dict(zip(action.params, values))


def _space(kb: CcKB, fresh: list[str], arity: int) -> list[tuple[str, ...]]:
    return list(product(sorted(kb.adom() | set(fresh)), repeat=arity))


def is_q_preserving(
    action: Action,
    query: Query,
    kb: CcKB,
    *,
    exhaustive: bool = False,
    extra_fresh: int = 0,
) -> PreservationVerdict:
    """Decide q-preservation of ``action`` over ``kb`` by grounding enumeration.

    Groundings that fail to apply or whose update is not fully satisfiable are
    skipped and reported.  The first counterexample found (lexicographic over
    groundings, then tuples) is returned; ``exhaustive`` collects all of them.
    """
    cln = negative_closure(kb.tbox, kb.sbox)
    if not fully_satisfiable(kb, cln):
        raise UnsatisfiableKBError("static verification needs a fully satisfiable KB")
    fresh = grounding_candidates(action, kb, extra_fresh)[len(kb.model_nodes | kb.open_individuals) :]
    space = _space(kb, fresh, query.arity)
    before_eval = MustMayEvaluator(kb, check=False)
    before = {t for t in space if before_eval.holds(query.formula, t)}

    skipped: list[SkippedGrounding] = []
    found: list[Counterexample] = []
    checked = 0
    for theta in enumerate_groundings(action, kb, extra_fresh):
        grounded = ground(action, theta)
        try:
            updated = apply(grounded, kb)
        except ActionError as e:
            skipped.append(SkippedGrounding(grounded.theta, f"apply error: {e}"))
            continue
        verdict = fully_satisfiable(updated, cln)
        if not verdict:
            what = "not core-complete" if not verdict.core_complete else "not open-consistent"
            skipped.append(SkippedGrounding(grounded.theta, what))
            continue
        checked += 1
        after_eval = MustMayEvaluator(updated, check=False)
        for t in space:
            was, now = t in before, after_eval.holds(query.formula, t)
            if was != now:
                found.append(Counterexample(grounded.theta, t, "gained" if now else "lost"))
                break
        if found and not exhaustive:
            break
    return PreservationVerdict(
        preserving=not found,
        counterexample=found[0] if found else None,
        skipped_groundings=tuple(skipped),
        groundings_checked=checked,
        all_counterexamples=tuple(found),
    )


def answer_difference(action: Action, query: Query, kb: CcKB, theta: dict[str, str], space_fresh: int = 0):
    """``(gained, lost)`` answer tuples of one grounding, over the verifier's tuple space."""
    fresh = grounding_candidates(action, kb, space_fresh)[len(kb.model_nodes | kb.open_individuals) :]
    space = _space(kb, fresh, query.arity)
    updated = apply(ground(action, theta), kb)
    before = MustMayEvaluator(kb)
    after = MustMayEvaluator(updated)
    gained = {t for t in space if after.holds(query.formula, t) and not before.holds(query.formula, t)}
    lost = {t for t in space if before.holds(query.formula, t) and not after.holds(query.formula, t)}
    return gained, lost
