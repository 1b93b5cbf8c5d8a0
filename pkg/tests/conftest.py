from __future__ import annotations

import sys
from pathlib import Path

import pytest

from cckb.parsing import parse_actions, parse_goal, parse_kb, parse_query
from cckb.planner import PlanningProblem

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"
sys.path.insert(0, str(Path(__file__).resolve().parent))


def fixture_text(name: str) -> str:
    return (FIXTURES / name).read_text(encoding="utf-8")


def load_kb(name: str):
    return parse_kb(fixture_text(name))


def load_actions(name: str, kb):
    return parse_actions(fixture_text(name), kb.vocabulary)


def load_query(name: str):
    return parse_query(fixture_text(name))


def encryption_problem(kb_name: str = "encryption.kb", extra=("k1",)) -> PlanningProblem:
    kb = load_kb(kb_name)
    actions = load_actions("encryption.act", kb)
    goal = parse_goal(fixture_text("encryption.goal"))
    return PlanningProblem(kb, tuple(kb.adom() | set(extra)), tuple(actions.values()), goal.tuple, goal.query)


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
