"""Seeded generator of small well-placed ccKBs and queries for oracle cross-checks."""

from __future__ import annotations

import random
from itertools import product

from cckb.kb import (
    BOTTOM,
    CcKB,
    ConceptAssertion,
    Exists,
    Functionality,
    MBox,
    Named,
    NegativeInclusion,
    PositiveInclusion,
    RoleAssertion,
    Vocabulary,
    validate_placement,
)
from cckb.queries import ConjunctiveQuery, QueryAtom, UnionQuery


def _basic(rng: random.Random, concepts: list[str], roles: list[str]):
    pick = rng.random()
    if roles and pick < 0.5:
        return Exists(rng.choice(roles), rng.random() < 0.5)
    if concepts:
        return Named(rng.choice(concepts))
    return Exists(rng.choice(roles), rng.random() < 0.5)


def _closed(b, vocab: Vocabulary) -> bool:
    return vocab.is_closed(b.name if isinstance(b, Named) else b.role)


def random_kb(rng: random.Random, max_individuals: int = 4, max_predicates: int = 6, max_axioms: int = 6) -> CcKB:
    """A random KB that passes placement validation."""
    n_pred = rng.randint(2, max_predicates)
    n_concepts = rng.randint(1, n_pred - 1)
    concepts = [f"C{i}" for i in range(n_concepts)]
    roles = [f"r{i}" for i in range(n_pred - n_concepts)]
    closed_c = {c for c in concepts if rng.random() < 0.5}
    closed_r = {r for r in roles if rng.random() < 0.5}
    n_ind = rng.randint(1, max_individuals)
    inds = [f"i{i}" for i in range(n_ind)]
    n_model = rng.randint(0, n_ind)
    model, opened = inds[:n_model], inds[n_model:]
    vocab = Vocabulary(
        closed_concepts=frozenset(closed_c),
        open_concepts=frozenset(set(concepts) - closed_c),
        closed_roles=frozenset(closed_r),
        open_roles=frozenset(set(roles) - closed_r),
        open_individuals=frozenset(opened),
        model_individuals=frozenset(model),
    )
    closed_concepts = [c for c in concepts if c in closed_c]
    closed_roles = [r for r in roles if r in closed_r]
    open_concepts = [c for c in concepts if c not in closed_c]
    open_roles = [r for r in roles if r not in closed_r]

    tbox, sbox = set(), set()
    for _ in range(rng.randint(0, max_axioms)):
        to_s = (closed_concepts or closed_roles) and rng.random() < 0.5
        kind = rng.random()
        if to_s:
            if kind < 0.15 and closed_roles:
                sbox.add(Functionality(rng.choice(closed_roles), rng.random() < 0.5))
                continue
            lhs, rhs = _basic(rng, closed_concepts, closed_roles), _basic(rng, closed_concepts, closed_roles)
            sbox.add(PositiveInclusion(lhs, rhs) if kind < 0.65 else NegativeInclusion(lhs, rhs))
        else:
            if kind < 0.15 and open_roles:
                tbox.add(Functionality(rng.choice(open_roles), rng.random() < 0.5))
                continue
            lhs = _basic(rng, concepts, roles)
            if not (open_concepts or open_roles):
                continue
            if kind < 0.6:
                tbox.add(PositiveInclusion(lhs, _basic(rng, open_concepts, open_roles)))
            else:
                rhs = _basic(rng, open_concepts, open_roles)
                tbox.add(NegativeInclusion(lhs, BOTTOM if rng.random() < 0.1 else rhs))

    abox = set()
    for _ in range(rng.randint(0, 3)):
        if not opened:
            break
        if open_concepts and rng.random() < 0.5:
            abox.add(ConceptAssertion(rng.choice(open_concepts), rng.choice(opened)))
        elif open_roles:
            abox.add(RoleAssertion(rng.choice(open_roles), rng.choice(opened), rng.choice(opened)))

    trees: dict[str, set] = {m: set() for m in model if rng.random() < 0.7 or m == model[0]}
    roots = sorted(trees)
    for _ in range(rng.randint(0, 5)):
        if not roots:
            break
        root = rng.choice(roots)
        if closed_concepts and rng.random() < 0.5:
            trees[root].add(ConceptAssertion(rng.choice(closed_concepts), rng.choice(model)))
        elif closed_roles:
            a, b = rng.choice(model), rng.choice(inds)
            if rng.random() < 0.5:
                a, b = b, a
            trees[root].add(RoleAssertion(rng.choice(closed_roles), a, b))
    mbox = MBox(trees)
    vocab = Vocabulary(**{**vocab.__dict__, "resource_nodes": mbox.roots})
    kb = CcKB(vocab, frozenset(tbox), frozenset(sbox), frozenset(abox), mbox)
    assert not validate_placement(kb), validate_placement(kb)
    return kb


def random_ucq(rng: random.Random, kb: CcKB, arity: int, allow_ineq: bool = False) -> UnionQuery:
    """A union of one or two CQs over the KB's vocabulary."""
    vocab = kb.vocabulary
    concepts, roles = sorted(vocab.concepts), sorted(vocab.roles)
    inds = sorted(kb.adom())
    answer_vars = tuple(f"x{i}" for i in range(arity))
    disjuncts = []
    for _ in range(rng.randint(1, 2)):
        terms = list(answer_vars) + ["y"]
        atoms = []
        for _ in range(rng.randint(1, 2)):
            pool = terms + (inds if rng.random() < 0.2 else [])
            if roles and (not concepts or rng.random() < 0.5):
                atoms.append(QueryAtom(rng.choice(roles), (rng.choice(pool), rng.choice(pool))))
            else:
                atoms.append(QueryAtom(rng.choice(concepts), (rng.choice(pool),)))
        used = {t for a in atoms for t in a.args}
        for v in answer_vars:
            if v not in used:
                atoms.append(QueryAtom(concepts[0], (v,)) if concepts else QueryAtom(roles[0], (v, "y")))
        ineqs = ()
        used = sorted({t for a in atoms for t in a.args if t in terms})
        if allow_ineq and len(used) >= 2 and rng.random() < 0.5:
            ineqs = ((used[0], used[1]),)
        ex = ("y",) if any("y" in a.args for a in atoms) else ()
        disjuncts.append(ConjunctiveQuery(answer_vars, ex, tuple(atoms), ineqs))
    return UnionQuery(tuple(disjuncts))


def tuples(kb: CcKB, arity: int):
    return list(product(sorted(kb.adom()), repeat=arity))


def escalating(check, kb: CcKB, want_true: bool, *args, start: int = 2) -> bool:
    """Run a bounded oracle check, widening the anonymous-element bound while the
    answer is still the one a larger domain could flip (``not want_true``).

    Bigger bounds only add models, so satisfiability-style answers can flip from
    False to True (and certainty from True to False) but never back.
    """
    from cckb.oracle import MAX_ELEMENTS, BoundExceededError

    named = len(kb.adom() | {t for a in args if isinstance(a, tuple) for t in a})
    bound = start
    result = check(kb, *args, domain_bound=bound)
    while result != want_true and named + bound < MAX_ELEMENTS:
        bound += 1
        try:
            result = check(kb, *args, domain_bound=bound)
        except BoundExceededError:
            break
    return result


_PLANNING_VOCAB = """VOCAB
closed concept A, B
closed role r
open concept P
open individual o
"""

_ACTION_TEMPLATES = [
    "action mk{i}(x) = new x {{ A(x) }} ; .",
    "action mkb{i}(x) = new x {{ A(x), B(x) }} ; .",
    "action rm{i}(x) = when A(x) -> drop x ; .",
    "action setb{i}(x) = add x {{ B(x) }} ; .",
    "action clrb{i}(x) = when B(x) -> del x {{ B(x) }} ; .",
    "action link{i}(x, y) = add x {{ r(x, y) }} ; .",
    "action unlink{i}(x) = when [y] r(x, y) -> del x {{ r(x, y) }} ; .",
    "action flip{i}(x) = when B(x) -> del x {{ B(x) }} ; when A(x) and not B(x) -> add x {{ B(x) }} ; .",
]

_SBOX_CHOICES = ["B <= A", "exists r <= A", "exists r- <= B", "funct r", "funct r-", "B <= exists r", "A <= not exists r-"]

_GOALS = [
    "goal b\nq[x] = MUST { B(x) }",
    "goal b\nq[x] = MUST { exists y . r(x, y) }",
    "goal b\nq[x] = MUST { A(x) } and not MAY { B(x) }",
    "goal o\nq[x] = MUST { exists y . r(y, x) }",
    "goal b\nq[x] = MUST { A(x) } and MAY { exists y . r(y, x) }",
]


def random_planning_texts(rng: random.Random) -> tuple[str, str, str]:
    """(kb, actions, goal) source texts of a small random planning problem."""
    sbox = sorted(set(rng.sample(_SBOX_CHOICES, rng.randint(0, 3))))
    tbox = ["exists r- <= P"] if rng.random() < 0.3 else []
    tree = rng.choice(["A(b)", "A(b), B(b)", "A(b), r(b, o)"])
    kb = _PLANNING_VOCAB + "TBOX\n" + "\n".join(tbox) + "\nSBOX\n" + "\n".join(sbox) + f"\nMBOX\ntree b {{ {tree} }}\n"
    picks = rng.sample(range(len(_ACTION_TEMPLATES)), rng.randint(1, 4))
    actions = "\n".join(_ACTION_TEMPLATES[j].format(i=i) for i, j in enumerate(sorted(picks)))
    return kb, actions, rng.choice(_GOALS)
