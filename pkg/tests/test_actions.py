from __future__ import annotations

import pytest

from cckb.actions import (
    Action,
    AddTree,
    BindingError,
    ExistingRootError,
    InvalidAssertionError,
    MissingRootError,
    apply,
    compose,
    ground,
)
from cckb.kb import ConceptAssertion, MBox, RoleAssertion
from cckb.parsing import parse_action
from cckb.reasoner import core_complete, fully_satisfiable, open_consistent

from conftest import load_actions, load_kb


def test_compose():
    assert compose({"x": "b"}, {"y": "k"}) == {"x": "b", "y": "k"}
    assert compose({"x": "b"}, {}) == {"x": "b"}
    with pytest.raises(BindingError):
        compose({"x": "b"}, {"x": "c"})


def test_ground():
    kb = load_kb("buckets.kb")
    act = load_actions("buckets.act", kb)["createBucket"]
    g = ground(act, {"x": "DataBucket", "y": "Private"})
    assert g.bindings == {"x": "DataBucket", "y": "Private"}
    assert g.label == "createBucket(DataBucket, Private)"
    assert ground(Action("nop"), {}).theta == ()
    with pytest.raises(BindingError):
        ground(act, {"x": "DataBucket"})


def test_create_bucket_tree():
    kb = load_kb("buckets.kb")
    act = load_actions("buckets.act", kb)["createBucket"]
    after = apply(ground(act, {"x": "DataBucket", "y": "Private"}), kb)
    assert after.mbox == MBox(
        {"DataBucket": {ConceptAssertion("S3::Bucket", "DataBucket"), RoleAssertion("accessControl", "DataBucket", "Private")}}
    )
    assert "DataBucket" in after.model_nodes
    assert fully_satisfiable(after)


def test_delete_logging_configuration():
    kb = load_kb("example3.kb")
    act = load_actions("example3.act", kb)["deleteLoggingConfiguration"]
    after = apply(ground(act, {"x": "b"}), kb)
    assert after.mbox.assertions() == {ConceptAssertion("S3::Bucket", "b")}
    assert not core_complete(after)[0]


def test_empty_effect_is_identity():
    kb = load_kb("encryption.kb")
    assert apply(ground(Action("nop"), {}), kb) == kb


def test_create_bucket_with_logging():
    kb = load_kb("example4.kb")
    act = load_actions("example4.act", kb)["createBucketWithLogging"]
    after = apply(ground(act, {"x": "newBucket", "y": "b"}), kb)
    assert after.mbox["newBucket"] == {
        ConceptAssertion("S3::Bucket", "newBucket"),
        RoleAssertion("loggingDestination", "newBucket", "b"),
    }
    assert not open_consistent(after)[0]


def test_new_tree_errors():
    kb = load_kb("example3.kb")
    act = Action("mk", ("x",), (AddTree("x", (ConceptAssertion("S3::Bucket", "x"),)),))
    with pytest.raises(ExistingRootError):
        apply(ground(act, {"x": "b"}), kb)
    kb4 = load_kb("example4.kb")
    with pytest.raises(InvalidAssertionError):
        apply(ground(act, {"x": "b"}), kb4)


def test_missing_root():
    kb = load_kb("buckets.kb")
    act = parse_action("action a(x) = add x { S3::Bucket(x) } ; .")
    with pytest.raises(MissingRootError):
        apply(ground(act, {"x": "nobody"}), kb)
    assert apply(ground(act, {"x": "nobody"}), kb, strict=False) == kb


def test_drop_tree_and_recompute_model_nodes():
    kb = load_kb("encryption.kb")
    act = load_actions("encryption.act", kb)["deleteKey"]
    after = apply(ground(act, {"x": "k"}), kb)
    assert "k" not in after.mbox
    # k is still referenced by b's rule, so it stays a model node
    assert "k" in after.model_nodes


def test_conditional_flip():
    kb = load_kb("encryption.kb")
    act = load_actions("encryption.act", kb)["enableKeyRotation"]
    after = apply(ground(act, {"x": "k"}), kb)
    assert after.mbox["k"] == {ConceptAssertion("KMS::Key", "k"), RoleAssertion("enableKeyRotation", "k", "true")}
    # a node that is not a key: both conditions fail and nothing changes
    assert apply(ground(act, {"x": "b"}), kb) == kb
