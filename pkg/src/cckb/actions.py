"""Mutating actions: effect ASTs, substitutions, grounding and the update of M.

An action ``name(x⃗) = γ`` has a body that is a sequence of steps; each step
is either a basic effect or a guarded one ``[φ ⇝ β]`` whose action query φ
is evaluated over the current M.  Basic effects:

=============  ==========  =======================================
``add x S``    ``⊕_x S``   add the assertions S to the tree of x
``del x S``    ``⊖_x S``   remove the assertions S from the tree of x
``new x S``    ``⊙_x S``   create the tree of x with content S
``drop x``     ``⊖_x``     remove the tree of x entirely
=============  ==========  =======================================
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Union

from .kb import Assertion, CcKB, ConceptAssertion, MBox, RoleAssertion
from .queries import ActionQuery, eval_action_query


class ActionError(ValueError):
    pass


class BindingError(ActionError):
    pass


class MissingRootError(ActionError):
    pass


class ExistingRootError(ActionError):
    pass


class InvalidAssertionError(ActionError):
    pass


# --- AST -------------------------------------------------------------------------


@dataclass(frozen=True)
class AddTo:
    node: str
    assertions: tuple[Assertion, ...]

    def __str__(self) -> str:
        return f"add {self.node} {{ {', '.join(map(str, self.assertions))} }}"


@dataclass(frozen=True)
class RemoveFrom:
    node: str
    assertions: tuple[Assertion, ...]

    def __str__(self) -> str:
        return f"del {self.node} {{ {', '.join(map(str, self.assertions))} }}"


@dataclass(frozen=True)
class AddTree:
    node: str
    assertions: tuple[Assertion, ...]

    def __str__(self) -> str:
        return f"new {self.node} {{ {', '.join(map(str, self.assertions))} }}"


@dataclass(frozen=True)
class RemoveTree:
    node: str

    def __str__(self) -> str:
        return f"drop {self.node}"


BasicEffect = Union[AddTo, RemoveFrom, AddTree, RemoveTree]


@dataclass(frozen=True)
class Cond:
    query: ActionQuery
    effect: BasicEffect

    def __str__(self) -> str:
        return f"when {self.query} -> {self.effect}"


Step = Union[AddTo, RemoveFrom, AddTree, RemoveTree, Cond]


def effect_terms(step: Step) -> set[str]:
    if isinstance(step, Cond):
        return effect_terms(step.effect)
    terms = {step.node}
    if not isinstance(step, RemoveTree):
        for a in step.assertions:
            terms.update(a.individuals())
    return terms


@dataclass(frozen=True)
class Action:
    """``name(params) = steps``; an empty ``steps`` tuple is the empty effect ε."""

    name: str
    params: tuple[str, ...] = ()
    effect: tuple[Step, ...] = ()
    tags: tuple[str | None, ...] = field(default=(), compare=False)

    @property
    def arity(self) -> int:
        return len(self.params)

    def __str__(self) -> str:
        sig = ", ".join(p if not t else f"{p}: {t}" for p, t in zip(self.params, self.tags or [None] * self.arity))
        body = " ; ".join(str(s) for s in self.effect)
        return f"action {self.name}({sig}) = {body + ' ; ' if body else ''}."


# --- substitutions -----------------------------------------------------------------


Substitution = Mapping[str, str]


def compose(rho1: Substitution, rho2: Substitution) -> dict[str, str]:
    """Union of two substitutions with disjoint domains."""
    overlap = set(rho1) & set(rho2)
    if overlap:
        raise BindingError(f"substitutions overlap on {sorted(overlap)}")
    return {**rho1, **rho2}


@dataclass(frozen=True)
class GroundedAction:
    action: Action
    theta: tuple[tuple[str, str], ...]

    @property
    def bindings(self) -> dict[str, str]:
        return dict(self.theta)

    @property
    def label(self) -> str:
        return f"{self.action.name}({', '.join(v for _, v in self.theta)})"

    def __str__(self) -> str:
        return self.label


def ground(action: Action, theta: Substitution) -> GroundedAction:
    """Bind exactly the parameters of ``action``."""
    missing = [p for p in action.params if p not in theta]
    extra = sorted(set(theta) - set(action.params))
    if missing or extra:
        raise BindingError(f"{action.name}: missing {missing}, unexpected {extra}")
    return GroundedAction(action, tuple((p, theta[p]) for p in action.params))


# --- semantics ------------------------------------------------------------------------


def _subst(a: Assertion, rho: Mapping[str, str]) -> Assertion:
    if isinstance(a, ConceptAssertion):
        return ConceptAssertion(a.concept, rho.get(a.individual, a.individual))
    return RoleAssertion(a.role, rho.get(a.subject, a.subject), rho.get(a.object, a.object))


@dataclass
class _State:
    mbox: MBox
    open_individuals: frozenset[str]
    strict: bool

    def root(self, node: str) -> frozenset | None:
        tree = self.mbox.get(node)
        if tree is None and self.strict:
            raise MissingRootError(f"no tree rooted at {node}")
        return tree


def _check_m_shape(state: _State, assertions: list[Assertion]) -> None:
    for a in assertions:
        if all(i in state.open_individuals for i in a.individuals()):
            raise InvalidAssertionError(f"{a} has no model node and cannot be an M-assertion")


def _apply_basic(beta: BasicEffect, rho: Mapping[str, str], state: _State) -> None:
    node = rho.get(beta.node, beta.node)
    if isinstance(beta, RemoveTree):
        if state.root(node) is not None:
            state.mbox = state.mbox.without_tree(node)
        return
    new = [_subst(a, rho) for a in beta.assertions]
    if isinstance(beta, AddTree):
        if node in state.mbox:
            raise ExistingRootError(f"tree {node} already exists")
        if node in state.open_individuals:
            raise InvalidAssertionError(f"open individual {node} cannot become a resource node")
        _check_m_shape(state, new)
        state.mbox = state.mbox.with_tree(node, new)
        return
    tree = state.root(node)
    if tree is None:
        return
    if isinstance(beta, AddTo):
        _check_m_shape(state, new)
        state.mbox = state.mbox.with_tree(node, tree | frozenset(new))
    else:
        state.mbox = state.mbox.with_tree(node, tree - frozenset(new))


def apply_to_mbox(
    grounded: GroundedAction, mbox: MBox, open_individuals: frozenset[str], *, strict: bool = True
) -> MBox:
    """Run the transformation on M alone; model nodes are derived from the result."""
    state = _State(mbox, open_individuals, strict)
    rho = grounded.bindings
    for step in grounded.action.effect:
        if isinstance(step, Cond):
            result = eval_action_query(step.query, state.mbox, rho)
            if result is True:
                _apply_basic(step.effect, rho, state)
            elif result:
                # one application per answer tuple, in lexicographic order
                for t in sorted(result):
                    _apply_basic(step.effect, compose(rho, dict(zip(step.query.answer_vars, t))), state)
        else:
            _apply_basic(step, rho, state)
    return state.mbox


def apply(grounded: GroundedAction, kb: CcKB, *, strict: bool = True) -> CcKB:
    """``K^{γθ}``: new M and model nodes; T, A and S are untouched.

    Full satisfiability of the result is not checked here.  With
    ``strict=False``, effects addressing a missing tree are no-ops.
    """
    mbox = apply_to_mbox(grounded, kb.mbox, kb.open_individuals, strict=strict)
    return kb.with_mbox(mbox)

