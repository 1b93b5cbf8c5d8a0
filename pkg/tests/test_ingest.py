from __future__ import annotations

import pytest

from cckb.kb import ConceptAssertion, MBox, RoleAssertion, boundary_nodes, validate_placement
from cckb.ingest import IngestError, MappingProfile, ingest_template
from cckb.parsing import parse_kb, serialize_kb

from conftest import FIXTURES, fixture_text

PROFILE = fixture_text("templates/profile.json")


def ingest(name: str, **kw):
    return ingest_template(fixture_text(f"templates/{name}.json"), PROFILE, **kw)


def test_one_bucket_matches_create_bucket_tree():
    result = ingest("one_bucket")
    assert result.mbox == MBox(
        {"DataBucket": {ConceptAssertion("S3::Bucket", "DataBucket"), RoleAssertion("accessControl", "DataBucket", "Private")}}
    )
    assert result.vocabulary.open_individuals == {"Private"}


def test_empty_resource_map():
    assert len(ingest("empty").mbox) == 0


def test_cross_reference_links_roots():
    result = ingest("logging")
    assert result.mbox.roots == {"AppBucket", "LogBucket"}
    assert RoleAssertion("loggingDestination", "AppBucket", "LogBucket") in result.mbox["AppBucket"]
    assert boundary_nodes(result.kb) == {"Private", "LogDeliveryWrite"}


def test_nested_objects_become_intermediate_nodes():
    result = ingest("bucket_key")
    tree = result.mbox["LogBucket"]
    node = "LogBucket_BucketEncryption"
    assert RoleAssertion("bucketEncryption", "LogBucket", node) in tree
    assert node in result.vocabulary.model_individuals
    assert any(a.predicate == "bucketKey" and a.individuals()[1] == "LogKey" for a in tree)
    assert RoleAssertion("enableKeyRotation", "LogKey", "false") in result.mbox["LogKey"]


@pytest.mark.parametrize("name", sorted(p.stem for p in (FIXTURES / "templates").glob("*.json") if p.stem not in ("profile", "bad")))
def test_serialize_parse_round_trip_passes_placement(name):
    result = ingest(name)
    kb = parse_kb(serialize_kb(result.kb))
    assert validate_placement(kb) == []
    assert kb.mbox == result.mbox


def test_unmappable_property_is_an_error_unless_lenient():
    with pytest.raises(IngestError, match="unmapped"):
        ingest("bad")
    result = ingest("bad", lenient=True)
    assert len(result.warnings) == 3
    assert result.mbox["Bucket"] == {ConceptAssertion("S3::Bucket", "Bucket"), RoleAssertion("accessControl", "Bucket", "Private")}


def test_malformed_input():
    with pytest.raises(IngestError, match="malformed"):
        ingest_template("{", PROFILE)
    with pytest.raises(IngestError):
        ingest_template("[]", PROFILE)
    with pytest.raises(IngestError):
        MappingProfile.from_json('{"properties": {"X": {"role": "x", "value": "weird"}}}')
    with pytest.raises(IngestError):
        MappingProfile.from_json('{"properties": {"X": {"value": "node"}}}')


def test_reference_to_unknown_resource():
    text = '{"Resources": {"B": {"Type": "AWS::S3::Bucket", "Properties": {"LoggingConfiguration": {"DestinationBucketName": {"Ref": "Nope"}}}}}}'
    with pytest.raises(IngestError, match="unknown resource"):
        ingest_template(text, PROFILE)
