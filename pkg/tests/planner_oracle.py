"""Naive plan enumerator used as an independent oracle for the planner.

It walks every loop-free run (without stopping at goal states, without any
cache or pruning) using only ``apply``, the satisfiability check and query
evaluation, then keeps the goal-reaching runs with no goal-reaching proper
prefix.
"""

from __future__ import annotations

from itertools import product

from cckb.actions import ActionError, apply, ground
from cckb.planner import PlanStep
from cckb.queries import MustMayEvaluator
from cckb.reasoner import fully_satisfiable


class TooBig(Exception):
    pass


def _goal(problem, kb) -> bool:
    return MustMayEvaluator(kb, check=False).holds(problem.query.formula, problem.goal_tuple)


def naive_minimal_plans(problem, limit: int = 200_000) -> set[tuple]:
    groundings = [
        ground(a, dict(zip(a.params, values)))
        for a in problem.actions
        for values in product(problem.domain, repeat=a.arity)
    ]
    runs: list[tuple[tuple, tuple[bool, ...]]] = []
    visits = 0
    moves: dict = {}
    goal_at: dict = {}

    def step(kb):
        if kb.mbox not in moves:
            out = []
            for g in groundings:
                try:
                    nxt = apply(g, kb)
                except ActionError:
                    continue
                if fully_satisfiable(nxt):
                    out.append((PlanStep.of(g), nxt))
            moves[kb.mbox] = out
            goal_at[kb.mbox] = _goal(problem, kb)
        return moves[kb.mbox]

    def walk(kb, path, seen, goals):
        nonlocal visits
        visits += 1
        if visits > limit:
            raise TooBig
        succ = step(kb)
        goals = goals + (goal_at[kb.mbox],)
        if goals[-1]:
            runs.append((tuple(path), goals))
        for s, nxt in succ:
            if nxt.mbox not in seen:
                walk(nxt, path + [s], seen | {nxt.mbox}, goals)

    walk(problem.kb, [], {problem.kb.mbox}, ())
    return {path for path, goals in runs if not any(goals[:-1])}


def reachable(problem) -> set:
    """All states reachable from the initial one, by plain BFS."""
    groundings = [
        ground(a, dict(zip(a.params, values)))
        for a in problem.actions
        for values in product(problem.domain, repeat=a.arity)
    ]
    seen = {problem.kb.mbox}
    frontier = [problem.kb]
    while frontier:
        kb = frontier.pop()
        for g in groundings:
            try:
                nxt = apply(g, kb)
            except ActionError:
                continue
            if nxt.mbox not in seen and fully_satisfiable(nxt):
                seen.add(nxt.mbox)
                frontier.append(nxt)
    return seen


def goal_reachable(problem) -> bool:
    return any(_goal(problem, problem.kb.with_mbox(m)) for m in reachable(problem))
