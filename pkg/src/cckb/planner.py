"""Plan synthesis over the transition system induced by a ccKB and a set of actions.

States are fully satisfiable MBoxes over a fixed finite domain ``D``; a
transition applies one grounded action (parameters drawn from ``D``).  The
open part ``T, A, S`` never changes, so a state is identified by its MBox.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Sequence

from .actions import Action, ActionError, GroundedAction, apply_to_mbox, ground
from .kb import CcKB, MBox
from .queries import MustMayEvaluator, Query, UnsatisfiableKBError
from .reasoner import fully_satisfiable, negative_closure

DEFAULT_MAX_STATES = 100_000


class PlanningError(ValueError):
    pass


class BudgetExceededError(RuntimeError):
    def __init__(self, budget: int):
        self.budget = budget
        super().__init__(f"expanded-state budget of {budget} exceeded")


def default_budget() -> int:
    value = os.environ.get("CCKB_MAX_STATES")
    return int(value) if value else DEFAULT_MAX_STATES


@dataclass(frozen=True)
class PlanningProblem:
    kb: CcKB
    domain: tuple[str, ...]
    actions: tuple[Action, ...]
    goal_tuple: tuple[str, ...]
    query: Query

    def __post_init__(self) -> None:
        object.__setattr__(self, "domain", tuple(sorted(set(self.domain))))
        if len(self.goal_tuple) != self.query.arity:
            raise PlanningError(f"goal tuple arity {len(self.goal_tuple)} differs from query arity {self.query.arity}")
        outside = [t for t in self.goal_tuple if t not in self.kb.adom()]
        if outside:
            raise PlanningError(f"goal tuple mentions individuals outside adom(K): {outside}")
        missing = sorted(self.kb.adom() - set(self.domain))
        if missing:
            raise PlanningError(f"domain must contain adom(K); missing {missing}")


@dataclass(frozen=True)
class PlanStep:
    action: str
    bindings: tuple[tuple[str, str], ...]

    @classmethod
    def of(cls, grounded: GroundedAction) -> "PlanStep":
        return cls(grounded.action.name, grounded.theta)

    def __str__(self) -> str:
        return f"{self.action}({', '.join(v for _, v in self.bindings)})"

    def to_json(self) -> dict:
        return {"action": self.action, "bindings": dict(self.bindings)}


Plan = tuple[PlanStep, ...]


def plan_to_json(plan: Plan) -> list[dict]:
    return [s.to_json() for s in plan]


def plan_from_json(data: Sequence[dict]) -> Plan:
    return tuple(PlanStep(d["action"], tuple(d.get("bindings", {}).items())) for d in data)


@dataclass
class SearchStats:
    states_expanded: int = 0
    cache_hits: int = 0
    distinct_states: int = 0

    def to_json(self) -> dict:
        return {
            "states_expanded": self.states_expanded,
            "cache_hits": self.cache_hits,
            "distinct_states": self.distinct_states,
        }


class SuccessorCache:
    """``S[M]``: the fully satisfiable successors of each visited MBox."""

    def __init__(self, problem: PlanningProblem):
        self.problem = problem
        kb = problem.kb
        self._cln = negative_closure(kb.tbox, kb.sbox)
        self._groundings = [
            ground(a, dict(zip(a.params, values)))
            for a in problem.actions
            for values in product(problem.domain, repeat=a.arity)
        ]
        self._entries: dict[MBox, tuple[tuple[GroundedAction, MBox], ...]] = {}
        self._goal: dict[MBox, bool] = {}
        self.diagnostics: dict[MBox, list[tuple[str, str]]] = {}
        self.stats = SearchStats()

    def kb_for(self, m: MBox) -> CcKB:
        return self.problem.kb.with_mbox(m)

    def compute(self, m: MBox) -> tuple[tuple[GroundedAction, MBox], ...]:
        kb = self.problem.kb
        open_inds = kb.open_individuals
        out = []
        notes = []
        for g in self._groundings:
            try:
                m2 = apply_to_mbox(g, m, open_inds)
            except ActionError as e:
                notes.append((g.label, str(e)))
                continue
            if fully_satisfiable(kb.with_mbox(m2), self._cln):
                out.append((g, m2))
        self.diagnostics[m] = notes
        return tuple(out)

    def successors(self, m: MBox) -> tuple[tuple[GroundedAction, MBox], ...]:
        if m in self._entries:
            self.stats.cache_hits += 1
            return self._entries[m]
        result = self.compute(m)
        self._entries[m] = result
        self.stats.distinct_states = len(self._entries)
        return result

    def satisfies_goal(self, m: MBox) -> bool:
        if m not in self._goal:
            evaluator = MustMayEvaluator(self.kb_for(m), check=False)
            self._goal[m] = evaluator.holds(self.problem.query.formula, self.problem.goal_tuple)
        return self._goal[m]


def successors(m: MBox, problem: PlanningProblem, cache: SuccessorCache | None = None):
    cache = cache or SuccessorCache(problem)
    return cache.successors(m)


def _require_initial(problem: PlanningProblem) -> None:
    if not fully_satisfiable(problem.kb):
        raise UnsatisfiableKBError("the initial KB must be fully satisfiable")


@dataclass
class PlanSearchResult:
    plans: list[Plan]
    stats: SearchStats
    cache: SuccessorCache = field(repr=False)


def reachable_graph(cache: SuccessorCache, m0: MBox, budget: int) -> dict[MBox, tuple[MBox, ...]]:
    """Successor lists of every state reachable from ``m0`` (goal states are not expanded)."""
    graph: dict[MBox, tuple[MBox, ...]] = {}
    frontier = [m0]
    while frontier:
        m = frontier.pop()
        if m in graph:
            continue
        if len(graph) >= budget:
            raise BudgetExceededError(budget)
        if cache.satisfies_goal(m):
            graph[m] = ()
            continue
        graph[m] = tuple(m2 for _, m2 in cache.successors(m))
        frontier.extend(m2 for m2 in graph[m] if m2 not in graph)
    return graph


def live_states(cache: SuccessorCache, graph: dict[MBox, tuple[MBox, ...]]) -> set[MBox]:
    """States from which some goal state is reachable."""
    parents: dict[MBox, set[MBox]] = {}
    for m, succ in graph.items():
        for m2 in succ:
            parents.setdefault(m2, set()).add(m)
    live = {m for m in graph if cache.satisfies_goal(m)}
    frontier = list(live)
    while frontier:
        m = frontier.pop()
        for p in parents.get(m, ()):
            if p not in live:
                live.add(p)
                frontier.append(p)
    return live


def find_plans(
    problem: PlanningProblem, *, max_states: int | None = None, prune_dead: bool = True
) -> PlanSearchResult:
    """All minimal plans: DFS with a path-local visited set, stopping at goal states.

    With ``prune_dead`` the reachable graph is materialized first and the DFS
    never enters a state that cannot reach the goal.  Every state on a plan
    can reach the goal, so this leaves the returned set unchanged.
    """
    _require_initial(problem)
    budget = default_budget() if max_states is None else max_states
    cache = SuccessorCache(problem)
    stats = cache.stats
    plans: list[Plan] = []
    m0 = problem.kb.mbox
    live: set[MBox] | None = None
    if prune_dead:
        live = live_states(cache, reachable_graph(cache, m0, budget))
        if m0 not in live:
            return PlanSearchResult(plans, stats, cache)
    on_path: set[MBox] = set()
    path: list[PlanStep] = []

    # explicit stack rather than recursion: paths can be long
    stack: list[tuple[str, object]] = [("enter", (m0, None))]
    while stack:
        op, payload = stack.pop()
        if op == "leave":
            on_path.discard(payload)
            if path:
                path.pop()
            continue
        m, step = payload
        if m in on_path:
            continue
        if step is not None:
            path.append(step)
        stats.states_expanded += 1
        if stats.states_expanded > budget:
            raise BudgetExceededError(budget)
        if cache.satisfies_goal(m):
            plans.append(tuple(path))
            if path:
                path.pop()
            continue
        on_path.add(m)
        stack.append(("leave", m))
        for g, m2 in reversed(cache.successors(m)):
            if m2 not in on_path and (live is None or m2 in live):
                stack.append(("enter", (m2, PlanStep.of(g))))
    return PlanSearchResult(plans, stats, cache)


def find_plan(problem: PlanningProblem, *, max_states: int | None = None) -> Plan | None:
    """Some plan, or None; DFS with a global visited set, so not necessarily minimal."""
    return search_plan(problem, max_states=max_states)[0]


def search_plan(problem: PlanningProblem, *, max_states: int | None = None) -> tuple[Plan | None, SearchStats]:
    """:func:`find_plan` plus the search statistics."""
    _require_initial(problem)
    budget = default_budget() if max_states is None else max_states
    cache = SuccessorCache(problem)
    visited: set[MBox] = set()
    stack: list[tuple[MBox, Plan]] = [(problem.kb.mbox, ())]
    while stack:
        m, plan = stack.pop()
        if m in visited:
            continue
        visited.add(m)
        cache.stats.states_expanded += 1
        if cache.stats.states_expanded > budget:
            raise BudgetExceededError(budget)
        if cache.satisfies_goal(m):
            return plan, cache.stats
        for g, m2 in reversed(cache.successors(m)):
            if m2 not in visited:
                stack.append((m2, plan + (PlanStep.of(g),)))
    return None, cache.stats


def plan_exists(problem: PlanningProblem, *, max_states: int | None = None) -> bool:
    return find_plan(problem, max_states=max_states) is not None


@dataclass(frozen=True)
class PlanValidation:
    ok: bool
    run: tuple[MBox, ...]
    failed_step: int | None = None
    reason: str | None = None

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "run_length": len(self.run) - 1,
            "failed_step": self.failed_step,
            "reason": self.reason,
        }


def validate_plan(plan: Iterable[PlanStep], problem: PlanningProblem) -> PlanValidation:
    """Replay ``plan``; report the run, or the first failing step (0-based) and why."""
    kb = problem.kb
    actions = {a.name: a for a in problem.actions}
    cln = negative_closure(kb.tbox, kb.sbox)
    if not fully_satisfiable(kb, cln):
        return PlanValidation(False, (kb.mbox,), None, "initial state is not fully satisfiable")
    run = [kb.mbox]
    m = kb.mbox
    for i, step in enumerate(plan):
        action = actions.get(step.action)
        if action is None:
            return PlanValidation(False, tuple(run), i, f"unknown action {step.action}")
        try:
            g = ground(action, dict(step.bindings))
            m = apply_to_mbox(g, m, kb.open_individuals)
        except ActionError as e:
            return PlanValidation(False, tuple(run), i, f"apply error: {e}")
        verdict = fully_satisfiable(kb.with_mbox(m), cln)
        if not verdict:
            what = "not core-complete" if not verdict.core_complete else "not open-consistent"
            return PlanValidation(False, tuple(run), i, f"unsatisfiable state: {what}")
        run.append(m)
    final = MustMayEvaluator(kb.with_mbox(m), check=False)
    if not final.holds(problem.query.formula, problem.goal_tuple):
        return PlanValidation(False, tuple(run), len(run) - 1, "goal not met")
    return PlanValidation(True, tuple(run))
