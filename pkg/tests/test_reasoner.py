from __future__ import annotations

from cckb.actions import apply, ground
from cckb.kb import CcKB, Exists, Functionality, Named, NegativeInclusion, PositiveInclusion
from cckb.parsing import parse_kb
from cckb.reasoner import core_complete, fully_satisfiable, negative_closure, open_consistent

from conftest import load_actions, load_kb


def test_example1_not_core_complete():
    ok, violations = core_complete(load_kb("example1.kb"))
    assert not ok
    assert [(str(v.axiom), v.witnesses) for v in violations] == [("S3::Bucket <= exists loggingConfiguration", ("b",))]


def test_example3_start_is_core_complete():
    assert core_complete(load_kb("example3.kb"))[0]


def test_empty_sbox_is_core_complete():
    kb = parse_kb("VOCAB\nclosed concept A\nMBOX\ntree b { A(b) }\n")
    assert core_complete(kb) == (True, [])


def disjoint(cln, b1, b2) -> bool:
    return NegativeInclusion(b1, b2) in cln or NegativeInclusion(b2, b1) in cln


def test_closure_of_logging_axiom():
    ni = NegativeInclusion(Exists("loggingDestination", True), Named("PublicBucket"))
    cln = negative_closure({ni}, set())
    assert len(cln) == 1
    assert disjoint(cln, Named("PublicBucket"), Exists("loggingDestination", True))
    assert negative_closure(set(), {PositiveInclusion(Named("A"), Named("B"))}) == frozenset()


def test_closure_propagates_through_positive_inclusion():
    cln = negative_closure({PositiveInclusion(Named("A"), Named("B")), NegativeInclusion(Named("B"), Named("C"))}, set())
    assert disjoint(cln, Named("A"), Named("C"))


def test_example4_after_action_is_not_open_consistent():
    kb = load_kb("example4.kb")
    act = load_actions("example4.act", kb)["createBucketWithLogging"]
    after = apply(ground(act, {"x": "newBucket", "y": "b"}), kb)
    ok, violations = open_consistent(after)
    assert not ok
    assert {w for v in violations for w in v.witnesses} == {"b"}
    verdict = fully_satisfiable(after)
    assert (verdict.core_complete, verdict.open_consistent) == (True, False)


def test_example4_without_mbox_is_open_consistent():
    assert open_consistent(load_kb("example4.kb"))[0]


def test_functionality_violation():
    kb = parse_kb(
        "VOCAB\nclosed role bucketKey\nmodel individual k1, k2\nSBOX\nfunct bucketKey\n"
        "MBOX\ntree r { bucketKey(r, k1), bucketKey(r, k2) }\n"
    )
    ok, violations = open_consistent(kb)
    assert not ok
    assert violations[0].axiom == Functionality("bucketKey")


def test_verdicts_on_examples():
    v = fully_satisfiable(load_kb("example1.kb"))
    assert (v.core_complete, v.open_consistent, bool(v)) == (False, True, False)
    assert bool(fully_satisfiable(CcKB()))
    assert fully_satisfiable(load_kb("encryption.kb")).fully_satisfiable
