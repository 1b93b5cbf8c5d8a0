"""Query answering: action queries over M, and MUST/MAY queries over a ccKB.

MUST leaves are answered by certain answers (perfect rewriting with the PIs
of ``T ∪ S``, then evaluation over ``A ∪ M`` as a database).  MAY leaves are
answered by sat answers: a tuple is a sat answer when some assignment of the
existential variables, to known individuals or to fresh ones, is compatible
with the closed core and leaves the negative closure unviolated.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Iterator, NamedTuple, Union

from .kb import (
    CcKB,
    ConceptAssertion,
    Exists,
    MBox,
    Named,
    PositiveInclusion,
    RoleAssertion,
    active_domain,
)
from .reasoner import _consistency_violations, FactIndex, _positive, core_complete, negative_closure, open_consistent


class QueryError(ValueError):
    pass


class UnboundVariableError(QueryError):
    pass


class UnsafeNegationError(QueryError):
    pass


class ArityMismatchError(QueryError):
    pass


class UnsatisfiableKBError(QueryError):
    """Raised instead of returning the degenerate answers of an unsatisfiable KB."""


class QueryAtom(NamedTuple):
    predicate: str
    args: tuple[str, ...]

    def __str__(self) -> str:
        return f"{self.predicate}({', '.join(self.args)})"


def _ground_atom(atom: QueryAtom, env: dict[str, str]):
    args = [env.get(t, t) for t in atom.args]
    if len(args) == 1:
        return ConceptAssertion(atom.predicate, args[0])
    return RoleAssertion(atom.predicate, args[0], args[1])


# --- conjunctive queries ----------------------------------------------------------


@dataclass(frozen=True)
class ConjunctiveQuery:
    """``q[x⃗] = ∃y⃗. atoms ∧ inequalities``.

    Terms are plain strings; a term is a variable iff it is listed in
    ``answer_vars`` or ``existential_vars``, otherwise it is an individual.
    """

    answer_vars: tuple[str, ...]
    existential_vars: tuple[str, ...] = ()
    atoms: tuple[QueryAtom, ...] = ()
    inequalities: tuple[tuple[str, str], ...] = ()

    def __post_init__(self) -> None:
        used = {t for a in self.atoms for t in a.args}
        for v in self.answer_vars:
            if v not in used:
                raise QueryError(f"answer variable {v} does not occur in any atom")
        for s, t in self.inequalities:
            for term in (s, t):
                if self.is_var(term) and term not in used:
                    raise QueryError(f"inequality variable {term} does not occur in any atom")

    @property
    def variables(self) -> frozenset[str]:
        return frozenset(self.answer_vars) | frozenset(self.existential_vars)

    def is_var(self, term: str) -> bool:
        return term in self.answer_vars or term in self.existential_vars

    def __str__(self) -> str:
        body = [str(a) for a in self.atoms] + [f"{s} != {t}" for s, t in self.inequalities]
        prefix = f"exists {', '.join(self.existential_vars)} . " if self.existential_vars else ""
        return prefix + ", ".join(body)


@dataclass(frozen=True)
class UnionQuery:
    disjuncts: tuple[ConjunctiveQuery, ...]

    def __post_init__(self) -> None:
        if not self.disjuncts:
            raise QueryError("a union query needs at least one disjunct")
        arities = {len(cq.answer_vars) for cq in self.disjuncts}
        if len(arities) > 1:
            raise ArityMismatchError(f"disjuncts with different arities {sorted(arities)}")

    @property
    def arity(self) -> int:
        return len(self.disjuncts[0].answer_vars)

    @property
    def has_inequalities(self) -> bool:
        return any(cq.inequalities for cq in self.disjuncts)

    def __str__(self) -> str:
        return " | ".join(str(cq) for cq in self.disjuncts)


# --- MUST/MAY formulas ---------------------------------------------------------------


@dataclass(frozen=True)
class Must:
    query: UnionQuery

    def __post_init__(self) -> None:
        if self.query.has_inequalities:
            raise QueryError("inequalities are only allowed under MAY")

    def __str__(self) -> str:
        return f"MUST {{ {self.query} }}"


@dataclass(frozen=True)
class May:
    query: UnionQuery

    def __str__(self) -> str:
        return f"MAY {{ {self.query} }}"


@dataclass(frozen=True)
class Not:
    operand: "MustMayQuery"

    def __str__(self) -> str:
        return f"not ({self.operand})"


@dataclass(frozen=True)
class And:
    left: "MustMayQuery"
    right: "MustMayQuery"

    def __str__(self) -> str:
        return f"({self.left}) and ({self.right})"


@dataclass(frozen=True)
class Or:
    left: "MustMayQuery"
    right: "MustMayQuery"

    def __str__(self) -> str:
        return f"({self.left}) or ({self.right})"


MustMayQuery = Union[Must, May, Not, And, Or]


def leaves(psi: MustMayQuery) -> Iterator[Union[Must, May]]:
    if isinstance(psi, (Must, May)):
        yield psi
    elif isinstance(psi, Not):
        yield from leaves(psi.operand)
    else:
        yield from leaves(psi.left)
        yield from leaves(psi.right)


@dataclass(frozen=True)
class Query:
    """A named MUST/MAY query ``name[x⃗] = ψ``; every leaf uses ``x⃗`` as its answer variables."""

    answer_vars: tuple[str, ...]
    formula: MustMayQuery
    name: str = "q"

    def __post_init__(self) -> None:
        for leaf in leaves(self.formula):
            for cq in leaf.query.disjuncts:
                if cq.answer_vars != self.answer_vars:
                    raise ArityMismatchError(
                        f"leaf answer variables {cq.answer_vars} differ from {self.answer_vars}"
                    )

    @property
    def arity(self) -> int:
        return len(self.answer_vars)

    def __str__(self) -> str:
        return f"{self.name}[{', '.join(self.answer_vars)}] = {self.formula}"


# --- database evaluation ---------------------------------------------------------------


def _match(atoms: list[QueryAtom], variables: frozenset[str], index: FactIndex, env: dict[str, str]) -> Iterator[dict]:
    """Backtracking join of ``atoms`` against ``index``."""
    if not atoms:
        yield env
        return
    # most constrained atom first
    def bound(a: QueryAtom) -> int:
        return sum(1 for t in a.args if t not in variables or t in env)

    atom = max(atoms, key=bound)
    rest = list(atoms)
    rest.remove(atom)
    args = [env.get(t, t) if (t not in variables or t in env) else None for t in atom.args]
    if len(args) == 1:
        (a,) = args
        ext = index.concepts.get(atom.predicate, ())
        if a is not None:
            if a in ext:
                yield from _match(rest, variables, index, env)
            return
        for value in sorted(ext):
            yield from _match(rest, variables, index, {**env, atom.args[0]: value})
        return
    s, o = args
    succ = index.succ.get(atom.predicate, {})
    if s is not None:
        targets = succ.get(s, ())
        if o is not None:
            if o in targets:
                yield from _match(rest, variables, index, env)
            return
        for value in sorted(targets):
            if atom.args[0] == atom.args[1] and value != s:
                continue
            yield from _match(rest, variables, index, {**env, atom.args[1]: value})
        return
    if o is not None:
        for value in sorted(index.pred.get(atom.predicate, {}).get(o, ())):
            yield from _match(rest, variables, index, {**env, atom.args[0]: value})
        return
    for subj in sorted(succ):
        for obj in sorted(succ[subj]):
            if atom.args[0] == atom.args[1] and subj != obj:
                continue
            yield from _match(rest, variables, index, {**env, atom.args[0]: subj, atom.args[1]: obj})


# --- perfect rewriting ---------------------------------------------------------------


@dataclass(frozen=True)
class _RewriteCQ:
    """CQ under rewriting: head terms may become constants through unification."""

    head: tuple[str, ...]
    atoms: tuple[QueryAtom, ...]
    variables: frozenset[str]


def _canonical(q: _RewriteCQ) -> _RewriteCQ:
    """Rename body-only variables to ``_0, _1, ...`` in a deterministic order."""
    body_vars = q.variables - set(q.head)

    def key(a: QueryAtom) -> tuple:
        return (a.predicate, tuple("?" if t in body_vars else t for t in a.args))

    renaming: dict[str, str] = {}
    for atom in sorted(set(q.atoms), key=key):
        for t in atom.args:
            if t in body_vars and t not in renaming:
                renaming[t] = f"_{len(renaming)}"
    atoms = tuple(sorted({QueryAtom(a.predicate, tuple(renaming.get(t, t) for t in a.args)) for a in q.atoms}))
    return _RewriteCQ(q.head, atoms, frozenset(renaming.values()) | (q.variables & set(q.head)))


def _unbound(q: _RewriteCQ, term: str) -> bool:
    if term not in q.variables or term in q.head:
        return False
    return sum(a.args.count(term) for a in q.atoms) == 1


def _apply_pi(q: _RewriteCQ, atom: QueryAtom, pi: PositiveInclusion, fresh: str):
    """Replace ``atom`` by the body of ``pi`` when the PI is applicable, else None."""
    rhs, lhs = pi.rhs, pi.lhs
    if len(atom.args) == 1:
        if not (isinstance(rhs, Named) and rhs.name == atom.predicate):
            return None
        t = atom.args[0]
    else:
        if not (isinstance(rhs, Exists) and rhs.role == atom.predicate):
            return None
        s, o = atom.args
        if not rhs.inverse and _unbound(q, o):
            t = s
        elif rhs.inverse and _unbound(q, s):
            t = o
        else:
            return None
    if isinstance(lhs, Named):
        new = QueryAtom(lhs.name, (t,))
        new_vars = q.variables
    else:
        new = QueryAtom(lhs.role, (fresh, t) if lhs.inverse else (t, fresh))
        new_vars = q.variables | {fresh}
    atoms = list(q.atoms)
    atoms.remove(atom)
    atoms.append(new)
    dropped = {t for t in atom.args if t in q.variables and not any(t in a.args for a in atoms)}
    return _RewriteCQ(q.head, tuple(atoms), (new_vars - dropped))


def _unify(q: _RewriteCQ, a1: QueryAtom, a2: QueryAtom):
    if a1.predicate != a2.predicate or len(a1.args) != len(a2.args):
        return None
    subst: dict[str, str] = {}

    def walk(t: str) -> str:
        while t in subst:
            t = subst[t]
        return t

    for s, t in zip(a1.args, a2.args):
        s, t = walk(s), walk(t)
        if s == t:
            continue
        # keep head variables (and constants) as representatives
        if s in q.variables and s not in q.head:
            subst[s] = t
        elif t in q.variables and t not in q.head:
            subst[t] = s
        elif s in q.variables:
            subst[s] = t
        elif t in q.variables:
            subst[t] = s
        else:
            return None
    atoms = tuple({QueryAtom(a.predicate, tuple(walk(t) for t in a.args)) for a in q.atoms})
    head = tuple(walk(t) for t in q.head)
    remaining = {t for a in atoms for t in a.args} | set(head)
    return _RewriteCQ(head, atoms, frozenset(v for v in q.variables if v in remaining))


def perfect_rewriting(cq: ConjunctiveQuery, pis: Iterable[PositiveInclusion]) -> list[_RewriteCQ]:
    """Saturate ``cq`` by backward PI application and atom unification."""
    pis = list(pis)
    start = _canonical(_RewriteCQ(cq.answer_vars, cq.atoms, cq.variables))
    seen = {start}
    frontier = [start]
    counter = 0
    while frontier:
        q = frontier.pop()
        produced = []
        for atom in set(q.atoms):
            for pi in pis:
                counter += 1
                nq = _apply_pi(q, atom, pi, f"_n{counter}")
                if nq is not None:
                    produced.append(nq)
        atoms = sorted(set(q.atoms))
        for i, a1 in enumerate(atoms):
            for a2 in atoms[i + 1 :]:
                nq = _unify(q, a1, a2)
                if nq is not None:
                    produced.append(nq)
        for nq in produced:
            nq = _canonical(nq)
            if nq not in seen:
                seen.add(nq)
                frontier.append(nq)
    return sorted(seen, key=lambda q: (len(q.atoms), str(q)))


def _rewriting_pis(kb: CcKB) -> list[PositiveInclusion]:
    return _positive(list(kb.tbox) + list(kb.sbox))


def _require_satisfiable(kb: CcKB) -> None:
    if not core_complete(kb)[0] or not open_consistent(kb)[0]:
        raise UnsatisfiableKBError("query answering needs a fully satisfiable KB")


def certain_answers(ucq: UnionQuery, kb: CcKB, *, check: bool = True) -> set[tuple[str, ...]]:
    """Tuples over ``adom(kb)`` entailed by every model (MUST semantics)."""
    if check:
        _require_satisfiable(kb)
    index = FactIndex(kb.facts())
    pis = _rewriting_pis(kb)
    domain = kb.adom()
    out: set[tuple[str, ...]] = set()
    for cq in ucq.disjuncts:
        if len(cq.answer_vars) != len(set(cq.answer_vars)):
            raise QueryError("repeated answer variable")
        for rq in perfect_rewriting(cq, pis):
            for env in _match(list(rq.atoms), rq.variables, index, {}):
                t = tuple(env.get(h, h) for h in rq.head)
                if all(x in domain for x in t):
                    out.add(t)
    return out


def _fresh_names(n: int, taken: set[str]) -> list[str]:
    names = []
    i = 1
    while len(names) < n:
        name = f"_w{i}"
        if name not in taken:
            names.append(name)
        i += 1
    return names


class _SatContext:
    """Shared per-KB state for repeated sat-answer tests."""

    def __init__(self, kb: CcKB):
        self.kb = kb
        self.cln = negative_closure(kb.tbox, kb.sbox)
        self.facts = kb.facts()
        self.m = kb.mbox.assertions()
        self.model = kb.model_nodes
        self.closed = kb.vocabulary.is_closed
        self.domain = kb.adom()

    def admissible(self, atoms: list) -> bool:
        hyps = []
        for f in atoms:
            if self.closed(f.predicate) and any(i in self.model for i in f.individuals()):
                if f not in self.m:
                    return False
            elif f not in self.facts:
                hyps.append(f)
        if not hyps:
            return True
        touched = {i for f in hyps for i in f.individuals()}
        index = FactIndex(self.facts)
        for f in hyps:
            index.add(f)
        return not _consistency_violations(index, self.cln, touched)

    def holds(self, cq: ConjunctiveQuery, answer: tuple[str, ...]) -> bool:
        env0 = dict(zip(cq.answer_vars, answer))
        ex = list(cq.existential_vars)
        candidates = sorted(self.domain | set(answer)) + _fresh_names(len(ex), set(self.domain) | set(answer))
        for values in product(candidates, repeat=len(ex)):
            env = {**env0, **dict(zip(ex, values))}
            if any(env.get(s, s) == env.get(t, t) for s, t in cq.inequalities):
                continue
            if self.admissible([_ground_atom(a, env) for a in cq.atoms]):
                return True
        return False


def sat_answers(ucq: UnionQuery, kb: CcKB, *, check: bool = True) -> set[tuple[str, ...]]:
    """Tuples over ``adom(kb)`` satisfied by at least one model (MAY semantics)."""
    if check:
        _require_satisfiable(kb)
    ctx = _SatContext(kb)
    out = set()
    for t in product(sorted(ctx.domain), repeat=ucq.arity):
        if any(ctx.holds(cq, t) for cq in ucq.disjuncts):
            out.add(t)
    return out


# --- MUST/MAY evaluation -----------------------------------------------------------------


class MustMayEvaluator:
    """Tuple-wise evaluation of a MUST/MAY query over one KB, with per-leaf caching."""

    def __init__(self, kb: CcKB, *, check: bool = True):
        if check:
            _require_satisfiable(kb)
        self.kb = kb
        self.domain = kb.adom()
        self._certain: dict[UnionQuery, set] = {}
        self._sat: _SatContext | None = None
        self._sat_cache: dict[tuple, bool] = {}

    def leaf_holds(self, leaf: Union[Must, May], t: tuple[str, ...]) -> bool:
        if isinstance(leaf, Must):
            if leaf.query not in self._certain:
                self._certain[leaf.query] = certain_answers(leaf.query, self.kb, check=False)
            return t in self._certain[leaf.query]
        key = (leaf.query, t)
        if key not in self._sat_cache:
            if self._sat is None:
                self._sat = _SatContext(self.kb)
            self._sat_cache[key] = any(self._sat.holds(cq, t) for cq in leaf.query.disjuncts)
        return self._sat_cache[key]

    def holds(self, psi: MustMayQuery, t: tuple[str, ...]) -> bool:
        """``t ∈ ANS(ψ, K)``; tuples mentioning individuals outside the KB never qualify."""
        if not all(x in self.domain for x in t):
            return False
        return self._eval(psi, t)

    def _eval(self, psi: MustMayQuery, t: tuple[str, ...]) -> bool:
        if isinstance(psi, (Must, May)):
            return self.leaf_holds(psi, t)
        if isinstance(psi, Not):
            return not self._eval(psi.operand, t)
        if isinstance(psi, And):
            return self._eval(psi.left, t) and self._eval(psi.right, t)
        return self._eval(psi.left, t) or self._eval(psi.right, t)

    def answers(self, query: Query) -> set[tuple[str, ...]]:
        return {t for t in product(sorted(self.domain), repeat=query.arity) if self._eval(query.formula, t)}


def answers(query: Query, kb: CcKB, *, check: bool = True) -> set[tuple[str, ...]]:
    """``ANS(ψ, K)`` as a set of tuples over ``adom(K)``."""
    return MustMayEvaluator(kb, check=check).answers(query)


def eval_mustmay(query: Query, kb: CcKB) -> set[tuple[str, ...]] | bool:
    """Answers of ``query``; a boolean when it has no answer variables."""
    result = answers(query, kb)
    if query.arity == 0:
        return () in result
    return result


# --- action queries -----------------------------------------------------------------------


@dataclass(frozen=True)
class AQAtom:
    predicate: str
    args: tuple[str, ...]

    def __str__(self) -> str:
        return f"{self.predicate}({', '.join(self.args)})"


@dataclass(frozen=True)
class AQAnd:
    left: "ActionFormula"
    right: "ActionFormula"

    def __str__(self) -> str:
        return f"({self.left} and {self.right})"


@dataclass(frozen=True)
class AQOr:
    left: "ActionFormula"
    right: "ActionFormula"

    def __str__(self) -> str:
        return f"({self.left} or {self.right})"


@dataclass(frozen=True)
class AQNot:
    operand: "ActionFormula"

    def __str__(self) -> str:
        return f"not {self.operand}"


ActionFormula = Union[AQAtom, AQAnd, AQOr, AQNot]


def formula_terms(phi: ActionFormula) -> set[str]:
    if isinstance(phi, AQAtom):
        return set(phi.args)
    if isinstance(phi, AQNot):
        return formula_terms(phi.operand)
    return formula_terms(phi.left) | formula_terms(phi.right)


def _conjuncts(phi: ActionFormula) -> list[ActionFormula]:
    if isinstance(phi, AQAnd):
        return _conjuncts(phi.left) + _conjuncts(phi.right)
    return [phi]


def _positive_vars(phi: ActionFormula, variables: frozenset[str]) -> set[str]:
    """Variables certainly bound by a positive occurrence in ``phi``."""
    if isinstance(phi, AQAtom):
        return {t for t in phi.args if t in variables}
    if isinstance(phi, AQNot):
        return set()
    if isinstance(phi, AQAnd):
        return _positive_vars(phi.left, variables) | _positive_vars(phi.right, variables)
    return _positive_vars(phi.left, variables) & _positive_vars(phi.right, variables)


def check_safe(phi: ActionFormula, variables: frozenset[str], bound: frozenset[str] = frozenset()) -> None:
    """Every variable under a negation must be bound positively in the same conjunction."""
    if isinstance(phi, AQAtom):
        return
    if isinstance(phi, AQNot):
        free = (formula_terms(phi.operand) & variables) - bound
        if free:
            raise UnsafeNegationError(f"variables {sorted(free)} occur only under negation in {phi}")
        check_safe(phi.operand, variables, bound)
        return
    if isinstance(phi, AQOr):
        check_safe(phi.left, variables, bound)
        check_safe(phi.right, variables, bound)
        return
    parts = _conjuncts(phi)
    scope = bound | frozenset(v for p in parts for v in _positive_vars(p, variables))
    for p in parts:
        check_safe(p, variables, scope)


@dataclass(frozen=True)
class ActionQuery:
    """Closed-predicate formula with answer variables ``ys``; other variables come from ρ."""

    formula: ActionFormula
    answer_vars: tuple[str, ...] = ()
    parameters: frozenset[str] = field(default=frozenset())

    def __post_init__(self) -> None:
        check_safe(self.formula, self.variables, self.parameters)

    @property
    def variables(self) -> frozenset[str]:
        return frozenset(self.answer_vars) | self.parameters

    @property
    def arity(self) -> int:
        return len(self.answer_vars)

    def __str__(self) -> str:
        return f"[{', '.join(self.answer_vars)}] {self.formula}"


def _aq_eval(phi: ActionFormula, m: frozenset, adom: list[str], variables: frozenset[str], env: dict) -> Iterator[dict]:
    if isinstance(phi, AQAtom):
        free = [t for t in dict.fromkeys(phi.args) if t in variables and t not in env]
        for values in product(adom, repeat=len(free)):
            e = {**env, **dict(zip(free, values))}
            if _ground_atom(QueryAtom(phi.predicate, phi.args), e) in m:
                yield e
        return
    if isinstance(phi, AQNot):
        if not any(True for _ in _aq_eval(phi.operand, m, adom, variables, env)):
            yield env
        return
    if isinstance(phi, AQOr):
        seen = []
        for branch in (phi.left, phi.right):
            for e in _aq_eval(branch, m, adom, variables, env):
                if e not in seen:
                    seen.append(e)
                    yield e
        return
    parts = _conjuncts(phi)
    # negated conjuncts last, so that their variables are bound
    parts.sort(key=lambda p: isinstance(p, AQNot))
    yield from _aq_conj(parts, m, adom, variables, env)


def _aq_conj(parts, m, adom, variables, env) -> Iterator[dict]:
    if not parts:
        yield env
        return
    for e in _aq_eval(parts[0], m, adom, variables, env):
        yield from _aq_conj(parts[1:], m, adom, variables, e)


def eval_action_query(phi: ActionQuery, m: MBox, rho: dict[str, str]) -> bool | set[tuple[str, ...]]:
    """``ANS(φ, M)``: closed evaluation over M; ``tt``/``ff`` when φ has no answer variables."""
    missing = phi.parameters - set(rho)
    if missing:
        raise UnboundVariableError(f"unbound parameter(s) {sorted(missing)}")
    env = {v: rho[v] for v in phi.parameters}
    adom = sorted(active_domain(m))
    facts = m.assertions()
    out: set[tuple[str, ...]] = set()
    for e in _aq_eval(phi.formula, facts, adom, phi.variables, env):
        # answer variables unconstrained by a branch range over adom(M)
        free = [v for v in phi.answer_vars if v not in e]
        for values in product(adom, repeat=len(free)):
            full = {**e, **dict(zip(free, values))}
            out.add(tuple(full[v] for v in phi.answer_vars))
    if not phi.answer_vars:
        return bool(out)
    return out
