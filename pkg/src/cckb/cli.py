"""Command-line front end: ``cckb check|query|apply|verify|plan|validate-plan|ingest``.

Exit codes: 0 the property holds, 1 it fails (or the search gave up), 2 usage
or input errors.  JSON reports carry ``schema_version`` and sorted keys.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from .actions import ActionError, BindingError, apply, ground
from .ingest import IngestError, ingest_template
from .kb import CcKB, tree_shape_warnings
from .parsing import ParseError, check_query_vocabulary, parse_actions, parse_goal, parse_kb, parse_query, serialize_kb
from .planner import (
    BudgetExceededError,
    PlanningError,
    PlanningProblem,
    find_plans,
    plan_from_json,
    plan_to_json,
    search_plan,
    validate_plan,
)
from .queries import MustMayEvaluator, QueryError, UnsatisfiableKBError
from .reasoner import fully_satisfiable
from .verifier import is_q_preserving

SCHEMA_VERSION = 1

OK, FAILS, USAGE = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass
class Report:
    code: int
    data: dict
    text: str


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from e


def _load_kb(path: str) -> CcKB:
    return parse_kb(_read(path))


def _load_actions(path: str, kb: CcKB) -> dict:
    return parse_actions(_read(path), kb.vocabulary)


def _pick_action(actions: dict, name: str):
    if name not in actions:
        raise UsageError(f"unknown action {name}; defined: {', '.join(actions)}")
    return actions[name]


def _bindings(text: str | None) -> dict[str, str]:
    out: dict[str, str] = {}
    for part in filter(None, (text or "").split(",")):
        var, sep, value = part.partition("=")
        if not sep or not var.strip() or not value.strip():
            raise UsageError(f"bad binding {part!r}; expected var=value")
        out[var.strip()] = value.strip()
    return out


def _names(text: str | None) -> list[str]:
    return [n.strip() for n in (text or "").split(",") if n.strip()]


def _tuples(ts) -> list[list[str]]:
    return [list(t) for t in sorted(ts)]


# --- commands --------------------------------------------------------------------


def cmd_check(args) -> Report:
    kb = _load_kb(args.kb)
    verdict = fully_satisfiable(kb)
    warnings = tree_shape_warnings(kb)
    ok = verdict.fully_satisfiable and not (args.tree_shape == "error" and warnings)
    data = {**verdict.to_json(), "tree_shape_warnings": warnings}
    lines = [
        f"core_complete: {str(verdict.core_complete).lower()}",
        f"open_consistent: {str(verdict.open_consistent).lower()}",
    ]
    lines += [f"violation: {v.axiom} at {', '.join(v.witnesses)}" for v in verdict.violations]
    lines += [f"warning: {w}" for w in warnings]
    return Report(OK if ok else FAILS, data, "\n".join(lines))


def cmd_query(args) -> Report:
    kb = _load_kb(args.kb)
    query = parse_query(_read(args.query))
    check_query_vocabulary(query, kb.vocabulary)
    result = MustMayEvaluator(kb).answers(query)
    data = {"query": query.name, "arity": query.arity, "answers": _tuples(result)}
    if query.arity == 0:
        data["holds"] = () in result
        text = f"{query.name}: {str(() in result).lower()}"
    else:
        text = "\n".join(", ".join(t) for t in sorted(result)) or "(no answers)"
    return Report(OK, data, text)


def cmd_apply(args) -> Report:
    kb = _load_kb(args.kb)
    action = _pick_action(_load_actions(args.actions, kb), args.action)
    theta = _bindings(args.bind)
    grounded = ground(action, theta)
    try:
        updated = apply(grounded, kb, strict=not args.lenient)
    except BindingError:
        raise
    except ActionError as e:  # a well-formed grounding that is not executable here
        return Report(FAILS, {"applied": False, "action": grounded.label, "error": str(e)}, f"not applicable: {e}")
    verdict = fully_satisfiable(updated)
    kb_text = serialize_kb(updated)
    if args.out:
        Path(args.out).write_text(kb_text, encoding="utf-8")
    data = {"applied": True, "action": grounded.label, "kb": kb_text, **verdict.to_json()}
    text = kb_text + f"# fully_satisfiable: {str(verdict.fully_satisfiable).lower()}"
    return Report(OK if verdict.fully_satisfiable else FAILS, data, text)


def cmd_verify(args) -> Report:
    kb = _load_kb(args.kb)
    action = _pick_action(_load_actions(args.actions, kb), args.action)
    query = parse_query(_read(args.query))
    check_query_vocabulary(query, kb.vocabulary)
    verdict = is_q_preserving(action, query, kb, exhaustive=args.exhaustive, extra_fresh=args.extra_fresh)
    data = verdict.to_json()
    if args.exhaustive:
        data["counterexamples"] = [c.to_json() for c in verdict.all_counterexamples]
    if verdict.preserving:
        text = f"{action.name} preserves {query.name}"
    else:
        c = verdict.counterexample
        binds = ", ".join(f"{k}={v}" for k, v in c.theta)
        text = f"{action.name} does not preserve {query.name}: with {binds} the tuple ({', '.join(c.tuple)}) is {c.direction}"
    return Report(OK if verdict.preserving else FAILS, data, text)


def _problem(args) -> PlanningProblem:
    kb = _load_kb(args.kb)
    actions = _load_actions(args.actions, kb)
    goal = parse_goal(_read(args.goal))
    check_query_vocabulary(goal.query, kb.vocabulary)
    domain = tuple(kb.adom() | set(_names(args.domain)))
    return PlanningProblem(kb, domain, tuple(actions.values()), goal.tuple, goal.query)


def cmd_plan(args) -> Report:
    problem = _problem(args)
    try:
        if args.all:
            result = find_plans(problem, max_states=args.max_states)
            plans, stats = result.plans, result.stats
        else:
            plan, stats = search_plan(problem, max_states=args.max_states)
            plans = [] if plan is None else [plan]
    except BudgetExceededError as e:
        return Report(FAILS, {"plans": [], "error": str(e), "budget": e.budget}, f"gave up: {e}")
    data = {"plans": [plan_to_json(p) for p in plans], "stats": stats.to_json(), "domain": list(problem.domain)}
    text = "\n".join(" ; ".join(map(str, p)) or "(empty plan)" for p in plans) or "no plan"
    return Report(OK if plans else FAILS, data, text)


def cmd_validate_plan(args) -> Report:
    problem = _problem(args)
    try:
        raw = json.loads(_read(args.plan))
    except json.JSONDecodeError as e:
        raise UsageError(f"{args.plan}: malformed JSON: {e}") from e
    if isinstance(raw, dict) and "plan" in raw:
        raw = raw["plan"]
    elif isinstance(raw, dict) and raw.get("plans"):
        raw = raw["plans"][0]  # the output of `plan`
    if not isinstance(raw, list) or not all(isinstance(s, dict) and "action" in s for s in raw):
        raise UsageError(f"{args.plan}: expected a list of {{action, bindings}} objects")
    result = validate_plan(plan_from_json(raw), problem)
    text = "valid plan" if result.ok else f"invalid at step {result.failed_step}: {result.reason}"
    return Report(OK if result.ok else FAILS, result.to_json(), text)


def cmd_ingest(args) -> Report:
    result = ingest_template(_read(args.template), _read(args.profile), lenient=args.lenient)
    kb_text = serialize_kb(result.kb)
    if args.out:
        Path(args.out).write_text(kb_text, encoding="utf-8")
    data = {"kb": kb_text, "warnings": result.warnings, "trees": len(result.mbox)}
    text = kb_text + "".join(f"# warning: {w}\n" for w in result.warnings)
    return Report(OK, data, text.rstrip("\n"))


# --- wiring ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cckb", description="Core-closed knowledge base toolkit.")
    parser.add_argument("--format", choices=("json", "text"), default="json", help="report format (default json)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="core-completeness and open-consistency of a KB")
    p.add_argument("kb")
    p.add_argument("--tree-shape", choices=("warn", "error"), default="warn")
    p.set_defaults(run=cmd_check)

    p = sub.add_parser("query", help="answers of a MUST/MAY query")
    p.add_argument("kb")
    p.add_argument("query")
    p.set_defaults(run=cmd_query)

    p = sub.add_parser("apply", help="apply one grounded action")
    p.add_argument("kb")
    p.add_argument("actions")
    p.add_argument("action")
    p.add_argument("--bind", help="parameter bindings, e.g. x=DataBucket,y=Private")
    p.add_argument("--out", help="write the updated KB here")
    p.add_argument("--lenient", action="store_true", help="skip effects whose target root is missing")
    p.set_defaults(run=cmd_apply)

    p = sub.add_parser("verify", help="is an action query-preserving")
    p.add_argument("kb")
    p.add_argument("actions")
    p.add_argument("action")
    p.add_argument("query")
    p.add_argument("--exhaustive", action="store_true", help="collect every counterexample")
    p.add_argument("--extra-fresh", type=int, default=0, help="additional fresh individuals for groundings")
    p.set_defaults(run=cmd_verify)

    for name, run, text in (
        ("plan", cmd_plan, "search for plans reaching a goal"),
        ("validate-plan", cmd_validate_plan, "replay a plan and check it"),
    ):
        p = sub.add_parser(name, help=text)
        p.add_argument("kb")
        p.add_argument("actions")
        p.add_argument("goal")
        if name == "validate-plan":
            p.add_argument("plan", help="JSON list of {action, bindings}")
        p.add_argument("--domain", help="extra individuals for groundings, comma separated")
        if name == "plan":
            p.add_argument("--all", action="store_true", help="enumerate all minimal plans")
            p.add_argument("--max-states", type=int, help="expanded-state budget (default $CCKB_MAX_STATES or 100000)")
        p.set_defaults(run=run)

    p = sub.add_parser("ingest", help="turn a deployment template into an MBox")
    p.add_argument("template")
    p.add_argument("profile", help="JSON mapping profile")
    p.add_argument("--lenient", action="store_true", help="skip unmappable properties with a warning")
    p.add_argument("--out", help="write the KB here")
    p.set_defaults(run=cmd_ingest)
    return parser


def render(report: Report, fmt: str) -> str:
    if fmt == "text":
        return report.text
    return json.dumps({"schema_version": SCHEMA_VERSION, **report.data}, sort_keys=True, indent=2)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return USAGE if e.code else OK
    try:
        report = args.run(args)
    except UnsatisfiableKBError as e:
        report = Report(FAILS, {"error": str(e)}, f"error: {e}")
    except (UsageError, ParseError, QueryError, ActionError, PlanningError, IngestError) as e:
        print(f"cckb {args.command}: {e}", file=sys.stderr)
        return USAGE
    try:
        print(render(report, args.format), flush=True)
    except BrokenPipeError:  # reader went away, e.g. `| head`
        sys.stdout = open(os.devnull, "w")
    return report.code


if __name__ == "__main__":
    sys.exit(main())
