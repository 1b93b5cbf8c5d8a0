"""Core-completeness, open-consistency and full satisfiability of a ccKB."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable

from .kb import (
    Axiom,
    BasicConcept,
    Bottom,
    CcKB,
    ConceptAssertion,
    Exists,
    Functionality,
    Named,
    NegativeInclusion,
    PositiveInclusion,
    sort_key,
)


class FactIndex:
    """Database view of a set of assertions, answering ``F ⊨ B(a)`` in O(1)."""

    def __init__(self, facts: Iterable):
        self.concepts: dict[str, set[str]] = defaultdict(set)
        self.succ: dict[str, dict[str, set[str]]] = defaultdict(lambda: defaultdict(set))
        self.pred: dict[str, dict[str, set[str]]] = defaultdict(lambda: defaultdict(set))
        for f in facts:
            self.add(f)

    def add(self, f) -> None:
        if isinstance(f, ConceptAssertion):
            self.concepts[f.concept].add(f.individual)
        else:
            self.succ[f.role][f.subject].add(f.object)
            self.pred[f.role][f.object].add(f.subject)

    def holds(self, b: BasicConcept, a: str) -> bool:
        if isinstance(b, Named):
            return a in self.concepts.get(b.name, ())
        if isinstance(b, Exists):
            side = self.pred if b.inverse else self.succ
            return bool(side.get(b.role, {}).get(a))
        return False

    def extension(self, b: BasicConcept) -> set[str]:
        """Individuals ``a`` with ``F ⊨ B(a)``."""
        if isinstance(b, Named):
            return set(self.concepts.get(b.name, ()))
        if isinstance(b, Exists):
            side = self.pred if b.inverse else self.succ
            return {a for a, others in side.get(b.role, {}).items() if others}
        return set()

    def neighbours(self, role: str, inverse: bool, a: str) -> set[str]:
        side = self.pred if inverse else self.succ
        return side.get(role, {}).get(a, set())


@dataclass(frozen=True)
class AxiomViolation:
    axiom: Axiom
    witnesses: tuple[str, ...]

    def to_json(self) -> dict:
        return {"axiom": str(self.axiom), "witnesses": list(self.witnesses)}


@dataclass(frozen=True)
class SatisfiabilityVerdict:
    core_complete: bool
    open_consistent: bool
    violations: tuple[AxiomViolation, ...] = field(default=())

    @property
    def fully_satisfiable(self) -> bool:
        return self.core_complete and self.open_consistent

    def __bool__(self) -> bool:
        return self.fully_satisfiable

    def to_json(self) -> dict:
        return {
            "core_complete": self.core_complete,
            "open_consistent": self.open_consistent,
            "fully_satisfiable": self.fully_satisfiable,
            "violations": [v.to_json() for v in self.violations],
        }


def _positive(axioms: Iterable[Axiom]) -> list[PositiveInclusion]:
    """PIs proper; ``⊥ ⊑ B`` is vacuous and ``B ⊑ ⊥`` is read as an NI."""
    return [
        ax
        for ax in axioms
        if isinstance(ax, PositiveInclusion)
        and not isinstance(ax.lhs, Bottom)
        and not isinstance(ax.rhs, Bottom)
    ]


def core_complete(kb: CcKB) -> tuple[bool, list[AxiomViolation]]:
    """Check every PI of S on every model node, reading M under the CWA."""
    index = FactIndex(kb.mbox.assertions())
    model = kb.model_nodes
    violations = []
    for ax in sorted(_positive(kb.sbox), key=sort_key):
        for a in sorted(index.extension(ax.lhs) & model):
            if not index.holds(ax.rhs, a):
                violations.append(AxiomViolation(ax, (a,)))
    return not violations, violations


def _ni(b1: BasicConcept, b2: BasicConcept) -> NegativeInclusion:
    # B ⊑ ¬B' and B' ⊑ ¬B are the same constraint; keep one orientation.
    lo, hi = sorted((b1, b2), key=sort_key)
    return NegativeInclusion(lo, hi)


def negative_closure(tbox: Iterable[Axiom], sbox: Iterable[Axiom]) -> frozenset[Axiom]:
    """Least set of NIs and functionality axioms closed under PI propagation.

    NIs are stored in one canonical orientation (disjointness is symmetric).
    Besides the two PI propagation rules, a role that must be empty in one
    direction (``∃P ⊑ ¬∃P``) must be empty in the other as well.
    """
    axioms = list(tbox) + list(sbox)
    pis = _positive(axioms)
    functs = {ax for ax in axioms if isinstance(ax, Functionality)}
    nis: set[NegativeInclusion] = set()
    for ax in axioms:
        if isinstance(ax, NegativeInclusion):
            if not isinstance(ax.lhs, Bottom) and not isinstance(ax.rhs, Bottom):
                nis.add(_ni(ax.lhs, ax.rhs))
        elif isinstance(ax, PositiveInclusion) and isinstance(ax.rhs, Bottom):
            if not isinstance(ax.lhs, Bottom):
                nis.add(_ni(ax.lhs, ax.lhs))

    frontier = list(nis)
    while frontier:
        ni = frontier.pop()
        derived = []
        for lhs, other in ((ni.lhs, ni.rhs), (ni.rhs, ni.lhs)):
            # B1 ⊑ B2 and B2 disjoint from B3  =>  B1 disjoint from B3
            for pi in pis:
                if pi.rhs == lhs:
                    derived.append(_ni(pi.lhs, other))
        if ni.lhs == ni.rhs and isinstance(ni.lhs, Exists):
            derived.append(_ni(Exists(ni.lhs.role, not ni.lhs.inverse), Exists(ni.lhs.role, not ni.lhs.inverse)))
        for d in derived:
            if d not in nis:
                nis.add(d)
                frontier.append(d)
    return frozenset(nis) | frozenset(functs)


def _consistency_violations(
    index: FactIndex, cln: Iterable[Axiom], only: set[str] | None = None
) -> list[AxiomViolation]:
    violations = []
    for ax in sorted(cln, key=sort_key):
        if isinstance(ax, NegativeInclusion):
            both = index.extension(ax.lhs) & index.extension(ax.rhs)
            if only is not None:
                both &= only
            for a in sorted(both):
                violations.append(AxiomViolation(ax, (a,)))
        elif isinstance(ax, Functionality):
            side = index.pred if ax.inverse else index.succ
            for a, others in sorted(side.get(ax.role, {}).items()):
                if len(others) > 1 and (only is None or a in only or others & only):
                    violations.append(AxiomViolation(ax, (a, *sorted(others))))
    return violations


def open_consistent(kb: CcKB, cln: frozenset[Axiom] | None = None) -> tuple[bool, list[AxiomViolation]]:
    """Evaluate the negative closure over ``A ∪ M`` as a database under UNA."""
    if cln is None:
        cln = negative_closure(kb.tbox, kb.sbox)
    violations = _consistency_violations(FactIndex(kb.facts()), cln)
    return not violations, violations


def fully_satisfiable(kb: CcKB, cln: frozenset[Axiom] | None = None) -> SatisfiabilityVerdict:
    cc, cc_violations = core_complete(kb)
    oc, oc_violations = open_consistent(kb, cln)
    return SatisfiabilityVerdict(cc, oc, tuple(cc_violations + oc_violations))


def consistent_with(kb: CcKB, extra: Iterable, cln: frozenset[Axiom] | None = None) -> bool:
    """Whether adding ``extra`` facts to an open-consistent KB keeps it open-consistent.

    Only violations touching an individual of ``extra`` can be new, so the
    check is restricted to those.
    """
    extra = list(extra)
    if cln is None:
        cln = negative_closure(kb.tbox, kb.sbox)
    touched = {i for f in extra for i in f.individuals()}
    index = FactIndex(kb.facts())
    for f in extra:
        index.add(f)
    return not _consistency_violations(index, cln, touched)
