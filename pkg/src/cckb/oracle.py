"""Brute-force small-model oracle.

Grounds the whole KB over a finite domain (its named individuals plus a few
anonymous elements) into propositional clauses and searches for models with a
plain DPLL.  It shares nothing with the reasoner or query engine beyond the
data types, which is the point: tests use it to cross-check them.

Semantics encoded here:

* UNA: every named individual and every anonymous element is a distinct element.
* T, S axioms hold on every element; A-assertions hold.
* CWA on the core: a closed concept on a model node, or a closed role on a
  pair with a model node on either side, is true iff the named assertion is
  in M (so a model node can never gain an anonymous closed-role neighbour).
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Iterable, Iterator, Sequence

from .kb import (
    BasicConcept,
    Bottom,
    CcKB,
    ConceptAssertion,
    Exists,
    Functionality,
    Named,
    NegativeInclusion,
    PositiveInclusion,
    RoleAssertion,
)


class BoundExceededError(RuntimeError):
    pass


MAX_ELEMENTS = 8
MAX_ATOMS = 4000


def dpll(clauses: Sequence[Sequence[int]], assumptions: Iterable[int] = ()) -> dict[int, bool] | None:
    """Return a satisfying partial assignment (unassigned vars are free) or None."""
    assign: dict[int, bool] = {}
    for lit in assumptions:
        if assign.get(abs(lit), lit > 0) != (lit > 0):
            return None
        assign[abs(lit)] = lit > 0
    return _dpll(list(clauses), assign)


def _propagate(clauses: list, assign: dict[int, bool]) -> list | None:
    while True:
        remaining = []
        unit = None
        for clause in clauses:
            open_lits = []
            satisfied = False
            for lit in clause:
                v = assign.get(abs(lit))
                if v is None:
                    open_lits.append(lit)
                elif v == (lit > 0):
                    satisfied = True
                    break
            if satisfied:
                continue
            if not open_lits:
                return None
            if len(open_lits) == 1 and unit is None:
                unit = open_lits[0]
            remaining.append(open_lits)
        if unit is None:
            return remaining
        assign[abs(unit)] = unit > 0
        clauses = remaining


def _dpll(clauses: list, assign: dict[int, bool]) -> dict[int, bool] | None:
    stack = [(clauses, assign)]
    while stack:
        clauses, assign = stack.pop()
        clauses = _propagate(clauses, assign)
        if clauses is None:
            continue
        if not clauses:
            return assign
        lit = min(clauses, key=len)[0]
        for value in (lit <= 0, lit > 0):  # pushed in reverse: try lit's polarity first
            trial = dict(assign)
            trial[abs(lit)] = value
            stack.append((clauses, trial))
    return None


@dataclass
class Grounding:
    """Propositional encoding of a KB over a finite domain."""

    domain: list[str]
    atoms: dict[tuple, int]
    clauses: list[list[int]]

    def var(self, atom: tuple) -> int:
        return self.atoms[atom]

    def decode(self, assignment: dict[int, bool]) -> frozenset:
        """Interpretation as a set of ground atoms (free vars read as false)."""
        out = []
        for atom, v in self.atoms.items():
            if assignment.get(v, False):
                if len(atom) == 2:
                    out.append(ConceptAssertion(*atom))
                else:
                    out.append(RoleAssertion(*atom))
        return frozenset(out)


def _anon(i: int, taken: set[str]) -> str:
    name = f"_anon{i}"
    while name in taken:
        name += "_"
    return name


def ground(kb: CcKB, domain_bound: int, extra_individuals: Iterable[str] = ()) -> Grounding:
    vocab = kb.vocabulary
    named = sorted(kb.adom() | set(extra_individuals))
    anon = []
    for i in range(domain_bound):
        anon.append(_anon(i, set(named) | set(anon)))
    domain = named + anon
    concepts = sorted(vocab.concepts)
    roles = sorted(vocab.roles)
    n_atoms = len(domain) * len(concepts) + len(domain) ** 2 * len(roles)
    if len(domain) > MAX_ELEMENTS or n_atoms > MAX_ATOMS:
        raise BoundExceededError(f"{len(domain)} elements / {n_atoms} atoms exceeds the oracle budget")

    atoms: dict[tuple, int] = {}
    for c in concepts:
        for d in domain:
            atoms[(c, d)] = len(atoms) + 1
    for r in roles:
        for d, e in product(domain, repeat=2):
            atoms[(r, d, e)] = len(atoms) + 1
    clauses: list[list[int]] = []

    model = kb.model_nodes
    m = kb.mbox.assertions()
    for c in vocab.closed_concepts:
        for d in model:
            v = atoms[(c, d)]
            clauses.append([v] if ConceptAssertion(c, d) in m else [-v])
    for r in vocab.closed_roles:
        for d, e in product(domain, repeat=2):
            if d in model or e in model:
                v = atoms[(r, d, e)]
                clauses.append([v] if RoleAssertion(r, d, e) in m else [-v])
    for a in kb.abox:
        clauses.append([atoms[tuple(a)]])

    def holds(b: BasicConcept, d: str) -> list[int] | None:
        """Literals whose disjunction is ``B(d)``; None for ⊥ (never holds)."""
        if isinstance(b, Named):
            return [atoms[(b.name, d)]]
        if isinstance(b, Exists):
            if b.inverse:
                return [atoms[(b.role, e, d)] for e in domain]
            return [atoms[(b.role, d, e)] for e in domain]
        return None

    for ax in list(kb.tbox) + list(kb.sbox):
        if isinstance(ax, Functionality):
            for d in domain:
                for e1, e2 in product(domain, repeat=2):
                    if e1 < e2:
                        if ax.inverse:
                            clauses.append([-atoms[(ax.role, e1, d)], -atoms[(ax.role, e2, d)]])
                        else:
                            clauses.append([-atoms[(ax.role, d, e1)], -atoms[(ax.role, d, e2)]])
            continue
        for d in domain:
            body = holds(ax.lhs, d)
            if body is None:
                continue
            if isinstance(ax, PositiveInclusion):
                head = holds(ax.rhs, d) or []
                for lit in body:
                    clauses.append([-lit] + head)
            elif isinstance(ax, NegativeInclusion):
                other = holds(ax.rhs, d)
                if other is None:
                    continue
                for l1 in body:
                    for l2 in other:
                        clauses.append([-l1, -l2])
    return Grounding(domain, atoms, clauses)


@dataclass
class OracleResult:
    satisfiable: bool
    models: list[frozenset]
    domain: list[str]


def brute_force_models(kb: CcKB, domain_bound: int = 2, max_models: int = 0) -> OracleResult:
    """Search for models of ``kb`` over its individuals plus ``domain_bound`` anonymous elements.

    With ``max_models > 0`` up to that many distinct models are enumerated
    (as sets of ground atoms); otherwise only existence is decided.
    """
    g = ground(kb, domain_bound)
    models: list[frozenset] = []
    clauses = list(g.clauses)
    all_vars = list(g.atoms.values())
    while True:
        assignment = dpll(clauses)
        if assignment is None:
            break
        full = {v: assignment.get(v, False) for v in all_vars}
        models.append(g.decode(full))
        if len(models) >= max(max_models, 1):
            break
        clauses.append([-v if val else v for v, val in full.items()])
    return OracleResult(bool(models), models, g.domain)


# --- query oracles --------------------------------------------------------------


def _cq_instances(cq, binding: dict[str, str], domain: list[str]) -> Iterator[tuple[list[tuple], bool]]:
    """Ground atoms of ``cq`` for every assignment of its existential variables."""
    ex = list(cq.existential_vars)
    for values in product(domain, repeat=len(ex)):
        env = dict(binding)
        env.update(zip(ex, values))
        atoms = [(a.predicate, *(env.get(t, t) for t in a.args)) for a in cq.atoms]
        ineq_ok = all(env.get(s, s) != env.get(t, t) for s, t in cq.inequalities)
        yield atoms, ineq_ok


def oracle_certain(kb: CcKB, ucq, answer: tuple[str, ...], domain_bound: int = 2) -> bool:
    """``answer`` holds in every model over the bounded domain."""
    g = ground(kb, domain_bound, answer)
    clauses = list(g.clauses)
    for cq in ucq.disjuncts:
        binding = dict(zip(cq.answer_vars, answer))
        for atoms, ineq_ok in _cq_instances(cq, binding, g.domain):
            if ineq_ok:
                clauses.append([-g.atoms[a] for a in atoms])
    return dpll(clauses) is None


def oracle_sat(kb: CcKB, ucq, answer: tuple[str, ...], domain_bound: int = 2) -> bool:
    """``answer`` holds in at least one model over the bounded domain."""
    g = ground(kb, domain_bound, answer)
    for cq in ucq.disjuncts:
        binding = dict(zip(cq.answer_vars, answer))
        for atoms, ineq_ok in _cq_instances(cq, binding, g.domain):
            if ineq_ok and dpll(g.clauses, [g.atoms[a] for a in atoms]) is not None:
                return True
    return False
