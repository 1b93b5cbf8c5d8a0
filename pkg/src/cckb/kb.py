"""Vocabulary, axioms, assertions and the core-closed knowledge base container.

A core-closed knowledge base (ccKB) is the tuple ``(T, A, S, M)``: an
open-world TBox/ABox pair plus a *core* made of structural axioms ``S`` and
closed-world assertions ``M``.  ``M`` is partitioned into trees, one per
resource node.

All values here are immutable; operations that "change" a KB return a new one.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator, Mapping, NamedTuple, Union

log = logging.getLogger(__name__)


class ConceptAssertion(NamedTuple):
    concept: str
    individual: str

    def individuals(self) -> tuple[str, ...]:
        return (self.individual,)

    @property
    def predicate(self) -> str:
        return self.concept

    def __str__(self) -> str:
        return f"{self.concept}({self.individual})"


class RoleAssertion(NamedTuple):
    role: str
    subject: str
    object: str

    def individuals(self) -> tuple[str, ...]:
        return (self.subject, self.object)

    @property
    def predicate(self) -> str:
        return self.role

    def __str__(self) -> str:
        return f"{self.role}({self.subject}, {self.object})"


Assertion = Union[ConceptAssertion, RoleAssertion]


def ind(assertions: Iterable[Assertion]) -> frozenset[str]:
    """Individuals occurring in ``assertions``."""
    out: set[str] = set()
    for a in assertions:
        out.update(a.individuals())
    return frozenset(out)


# --- basic concepts and axioms ------------------------------------------------


@dataclass(frozen=True, order=True)
class Bottom:
    def __str__(self) -> str:
        return "Bot"


@dataclass(frozen=True, order=True)
class Named:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True, order=True)
class Exists:
    """``∃r`` or, with ``inverse``, ``∃r⁻``."""

    role: str
    inverse: bool = False

    def __str__(self) -> str:
        return f"exists {self.role}{'-' if self.inverse else ''}"


BasicConcept = Union[Bottom, Named, Exists]
BOTTOM = Bottom()


@dataclass(frozen=True)
class PositiveInclusion:
    lhs: BasicConcept
    rhs: BasicConcept

    def __str__(self) -> str:
        return f"{self.lhs} <= {self.rhs}"


@dataclass(frozen=True)
class NegativeInclusion:
    lhs: BasicConcept
    rhs: BasicConcept

    def __str__(self) -> str:
        return f"{self.lhs} <= not {self.rhs}"


@dataclass(frozen=True)
class Functionality:
    role: str
    inverse: bool = False

    def __str__(self) -> str:
        return f"funct {self.role}{'-' if self.inverse else ''}"


Axiom = Union[PositiveInclusion, NegativeInclusion, Functionality]


def concept_predicates(b: BasicConcept) -> tuple[str, ...]:
    if isinstance(b, Named):
        return (b.name,)
    if isinstance(b, Exists):
        return (b.role,)
    return ()


def axiom_predicates(ax: Axiom) -> tuple[str, ...]:
    if isinstance(ax, Functionality):
        return (ax.role,)
    return concept_predicates(ax.lhs) + concept_predicates(ax.rhs)


def sort_key(obj: object) -> str:
    """Total order used for every deterministic listing of axioms/assertions."""
    return str(obj)


# --- vocabulary -----------------------------------------------------------------


class VocabularyError(ValueError):
    pass


@dataclass(frozen=True)
class Vocabulary:
    closed_concepts: frozenset[str] = frozenset()
    open_concepts: frozenset[str] = frozenset()
    closed_roles: frozenset[str] = frozenset()
    open_roles: frozenset[str] = frozenset()
    open_individuals: frozenset[str] = frozenset()
    model_individuals: frozenset[str] = frozenset()
    resource_nodes: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        for a, b, what in (
            (self.closed_concepts, self.open_concepts, "concept"),
            (self.closed_roles, self.open_roles, "role"),
            (self.open_individuals, self.model_individuals, "individual"),
        ):
            clash = a & b
            if clash:
                raise VocabularyError(f"{what} declared both open and closed/model: {sorted(clash)}")
        if (self.closed_concepts | self.open_concepts) & (self.closed_roles | self.open_roles):
            clash = (self.closed_concepts | self.open_concepts) & (self.closed_roles | self.open_roles)
            raise VocabularyError(f"name used as both concept and role: {sorted(clash)}")
        if not self.resource_nodes <= self.model_individuals:
            raise VocabularyError(
                f"resource nodes must be model individuals: {sorted(self.resource_nodes - self.model_individuals)}"
            )

    @property
    def concepts(self) -> frozenset[str]:
        return self.closed_concepts | self.open_concepts

    @property
    def roles(self) -> frozenset[str]:
        return self.closed_roles | self.open_roles

    @property
    def individuals(self) -> frozenset[str]:
        return self.open_individuals | self.model_individuals

    def is_closed(self, predicate: str) -> bool:
        return predicate in self.closed_concepts or predicate in self.closed_roles

    def is_open(self, predicate: str) -> bool:
        return predicate in self.open_concepts or predicate in self.open_roles

    def is_concept(self, name: str) -> bool:
        return name in self.closed_concepts or name in self.open_concepts

    def is_role(self, name: str) -> bool:
        return name in self.closed_roles or name in self.open_roles


# --- MBox ------------------------------------------------------------------------


class MBox(Mapping[str, frozenset]):
    """Closed-world assertions partitioned into trees keyed by resource node.

    Behaves as a read-only mapping ``root -> frozenset[Assertion]``.  Equality
    and hashing go through :meth:`canonical`, so two MBoxes with the same
    partitions compare equal regardless of construction order.
    """

    __slots__ = ("_trees", "_key", "_all")

    def __init__(self, trees: Mapping[str, Iterable[Assertion]] | None = None):
        self._trees: dict[str, frozenset] = {
            root: frozenset(assertions) for root, assertions in (trees or {}).items()
        }
        self._key: tuple | None = None
        self._all: frozenset | None = None

    def __getitem__(self, root: str) -> frozenset:
        return self._trees[root]

    def __iter__(self) -> Iterator[str]:
        return iter(self._trees)

    def __len__(self) -> int:
        return len(self._trees)

    @property
    def roots(self) -> frozenset[str]:
        return frozenset(self._trees)

    def assertions(self) -> frozenset:
        """Union of all trees."""
        if self._all is None:
            out: set = set()
            for tree in self._trees.values():
                out |= tree
            self._all = frozenset(out)
        return self._all

    def size(self) -> int:
        return sum(len(t) for t in self._trees.values())

    def canonical(self) -> tuple:
        """Sorted ``((root, (assertion, ...)), ...)`` used for identity."""
        if self._key is None:
            self._key = tuple(
                (root, tuple(sorted(self._trees[root], key=sort_key))) for root in sorted(self._trees)
            )
        return self._key

    def with_tree(self, root: str, assertions: Iterable[Assertion]) -> "MBox":
        trees = dict(self._trees)
        trees[root] = frozenset(assertions)
        return MBox(trees)

    def without_tree(self, root: str) -> "MBox":
        trees = dict(self._trees)
        del trees[root]
        return MBox(trees)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MBox):
            return NotImplemented
        return self.canonical() == other.canonical()

    def __hash__(self) -> int:
        return hash(self.canonical())

    def __repr__(self) -> str:
        inner = ", ".join(
            f"{root}: {{{', '.join(str(a) for a in tree)}}}" for root, tree in self.canonical()
        )
        return f"MBox({{{inner}}})"


def active_domain(m: MBox) -> frozenset[str]:
    """Individuals used in any assertion of ``m``."""
    return ind(m.assertions())


# --- the knowledge base ---------------------------------------------------------


@dataclass(frozen=True)
class CcKB:
    vocabulary: Vocabulary = field(default_factory=Vocabulary)
    tbox: frozenset = frozenset()
    sbox: frozenset = frozenset()
    abox: frozenset = frozenset()
    mbox: MBox = field(default_factory=MBox)

    @property
    def model_nodes(self) -> frozenset[str]:
        return self.vocabulary.model_individuals

    @property
    def open_individuals(self) -> frozenset[str]:
        """``I^K``: declared open individuals plus everything named in A."""
        return self.vocabulary.open_individuals | ind(self.abox)

    def facts(self) -> frozenset:
        """``A ∪ M`` read as a single fact base."""
        return self.abox | self.mbox.assertions()

    def adom(self) -> frozenset[str]:
        """All individuals of the KB: declared ones plus those used in A and M."""
        return self.vocabulary.individuals | ind(self.abox) | active_domain(self.mbox)

    def with_mbox(self, mbox: MBox) -> "CcKB":
        """Replace M and recompute the model-node bookkeeping."""
        vocab = replace(
            self.vocabulary,
            model_individuals=model_nodes_for(mbox, self.open_individuals),
            resource_nodes=mbox.roots,
        )
        return CcKB(vocab, self.tbox, self.sbox, self.abox, mbox)


def model_nodes_for(mbox: MBox, open_individuals: frozenset[str]) -> frozenset[str]:
    """Model nodes implied by ``mbox``: every root, plus every non-open individual it uses."""
    return mbox.roots | (active_domain(mbox) - open_individuals)


def boundary_nodes(kb: CcKB) -> frozenset[str]:
    """Individuals used in M that are owned by the open part (``adom(M) ∖ I^M``)."""
    return active_domain(kb.mbox) - kb.model_nodes


# --- placement ------------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    element: str
    expected: str
    reason: str


ValidationReport = list[Violation]


def _concept_closed(vocab: Vocabulary, b: BasicConcept) -> bool | None:
    """True/False for closed/open basic concepts, None for ⊥."""
    if isinstance(b, Bottom):
        return None
    name = b.name if isinstance(b, Named) else b.role
    return vocab.is_closed(name)


def _check_concept_declared(vocab: Vocabulary, b: BasicConcept) -> str | None:
    if isinstance(b, Named) and not vocab.is_concept(b.name):
        return f"undeclared concept {b.name}"
    if isinstance(b, Exists) and not vocab.is_role(b.role):
        return f"undeclared role {b.role}"
    return None


def _axiom_violation(vocab: Vocabulary, ax: Axiom, box: str) -> str | None:
    if isinstance(ax, Functionality):
        if not vocab.is_role(ax.role):
            return f"undeclared role {ax.role}"
        closed = vocab.is_closed(ax.role)
        if box == "S" and not closed:
            return f"functionality on open role {ax.role}"
        if box == "T" and closed:
            return f"functionality on closed role {ax.role} belongs in S"
        return None
    for b in (ax.lhs, ax.rhs):
        problem = _check_concept_declared(vocab, b)
        if problem:
            return problem
    if box == "S":
        for b in (ax.lhs, ax.rhs):
            if _concept_closed(vocab, b) is False:
                return f"S-axiom uses open predicate {concept_predicates(b)[0]}"
        return None
    if _concept_closed(vocab, ax.rhs) is True:
        return f"T-axiom right-hand side {ax.rhs} is closed"
    return None


def _abox_violation(vocab: Vocabulary, a: Assertion) -> str | None:
    if isinstance(a, ConceptAssertion) and not vocab.is_concept(a.concept):
        return f"undeclared concept {a.concept}"
    if isinstance(a, RoleAssertion) and not vocab.is_role(a.role):
        return f"undeclared role {a.role}"
    model = [i for i in a.individuals() if i in vocab.model_individuals]
    if model:
        return f"A-assertion mentions model node(s) {sorted(set(model))}"
    return None


def _mbox_violation(vocab: Vocabulary, a: Assertion) -> str | None:
    if isinstance(a, ConceptAssertion):
        if not vocab.is_concept(a.concept):
            return f"undeclared concept {a.concept}"
        if not vocab.is_closed(a.concept):
            return f"M-assertion uses open concept {a.concept}"
        if a.individual not in vocab.model_individuals:
            return f"concept M-assertion on non-model node {a.individual}"
        return None
    if not vocab.is_role(a.role):
        return f"undeclared role {a.role}"
    if not vocab.is_closed(a.role):
        return f"M-assertion uses open role {a.role}"
    if a.subject not in vocab.model_individuals and a.object not in vocab.model_individuals:
        return f"role M-assertion without a model node: {a}"
    return None


def validate_placement(kb: CcKB) -> ValidationReport:
    """Check every axiom and assertion against the shape of the box it sits in.

    Violations are returned as data; an empty list means the KB is well placed.
    """
    vocab = kb.vocabulary
    report: ValidationReport = []
    for box, axioms, expected in (
        ("T", kb.tbox, "T: B <= B_K | B <= not B_K | funct P_K"),
        ("S", kb.sbox, "S: B_S <= B_S | B_S <= not B_S | funct P_S"),
    ):
        for ax in sorted(axioms, key=sort_key):
            problem = _axiom_violation(vocab, ax, box)
            if problem:
                report.append(Violation(str(ax), expected, problem))
    for a in sorted(kb.abox, key=sort_key):
        problem = _abox_violation(vocab, a)
        if problem:
            report.append(Violation(str(a), "A: open individuals only", problem))
    for root, tree in kb.mbox.canonical():
        if root not in vocab.model_individuals:
            report.append(Violation(f"tree {root}", "resource node", "tree root is not a model node"))
        for a in tree:
            problem = _mbox_violation(vocab, a)
            if problem:
                report.append(Violation(str(a), "M: A_S(a_M) | R_S(a_M, a) | R_S(a, a_M)", problem))
    return report


def tree_shape_warnings(kb: CcKB) -> list[str]:
    """Trees whose assertions are not all reachable from the root over role edges."""
    warnings = []
    for root, tree in kb.mbox.canonical():
        if not tree:
            continue
        reached = {root}
        changed = True
        while changed:
            changed = False
            for a in tree:
                if isinstance(a, RoleAssertion) and (a.subject in reached) != (a.object in reached):
                    reached.update(a.individuals())
                    changed = True
        stray = [str(a) for a in tree if not set(a.individuals()) & reached]
        if root not in ind(tree):
            warnings.append(f"tree {root} does not mention its root")
        elif stray:
            warnings.append(f"tree {root}: unreachable assertions {stray}")
    for w in warnings:
        log.warning(w)
    return warnings
