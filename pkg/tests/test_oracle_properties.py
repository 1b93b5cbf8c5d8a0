"""Reasoner and query engine against the brute-force model oracle on a seeded random corpus."""

from __future__ import annotations

import random

import pytest

from cckb.oracle import brute_force_models, oracle_certain, oracle_sat
from cckb.queries import certain_answers, sat_answers
from cckb.reasoner import fully_satisfiable

from kbgen import escalating, random_kb, random_ucq, tuples

N_KBS = 600


def has_model(kb, domain_bound):
    return brute_force_models(kb, domain_bound).satisfiable


def corpus(n: int = N_KBS):
    for seed in range(n):
        rng = random.Random(seed)
        yield seed, rng, random_kb(rng)


def disagreements(n: int = N_KBS) -> tuple[list, dict]:
    out = []
    counts = {"kbs": 0, "satisfiable": 0, "query_checks": 0}
    for seed, rng, kb in corpus(n):
        counts["kbs"] += 1
        ours = fully_satisfiable(kb).fully_satisfiable
        if escalating(has_model, kb, ours) != ours:
            out.append(("satisfiable", seed))
            continue
        if not ours:
            continue
        counts["satisfiable"] += 1
        for arity in (0, 1):
            for kind, engine, oracle, ineq in (
                ("certain", certain_answers, oracle_certain, False),
                ("sat", sat_answers, oracle_sat, True),
            ):
                q = random_ucq(rng, kb, arity, ineq)
                got = engine(q, kb)
                for t in tuples(kb, arity):
                    counts["query_checks"] += 1
                    if escalating(oracle, kb, t in got, q, t) != (t in got):
                        out.append((kind, seed, str(q), t))
    return out, counts


@pytest.fixture(scope="module")
def scan():
    return disagreements()


def test_corpus_is_large_and_mixed(scan):
    _, counts = scan
    assert counts["kbs"] >= 500
    assert 0 < counts["satisfiable"] < counts["kbs"]
    assert counts["query_checks"] > 1000


def test_no_disagreements(scan):
    bad, _ = scan
    assert bad == []


def test_generator_respects_size_limits():
    for _, _, kb in corpus(100):
        v = kb.vocabulary
        assert len(v.individuals) <= 4
        assert len(v.concepts | v.roles) <= 6
        assert len(kb.tbox) + len(kb.sbox) <= 6
