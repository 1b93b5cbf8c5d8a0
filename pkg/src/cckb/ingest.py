"""Turn a deployment template (CloudFormation-like JSON) into MBox trees.

The mapping is driven by a declarative profile::

    {
      "types": {"AWS::S3::Bucket": "S3::Bucket"},
      "properties": {
        "AccessControl": {"role": "accessControl", "value": "open"},
        "BucketEncryption": {"role": "bucketEncryption", "value": "node"}
      }
    }

``value`` says how the property value becomes the target of the role edge:
``open`` (scalar names an open individual, the default for scalars),
``model`` (scalar names a model node), ``node`` (object becomes an
intermediate model node whose own properties are mapped recursively, the
default for objects), ``inline`` (object whose properties attach to the
current node; no role needed) or ``skip``.  ``{"Ref": name}`` always becomes an edge to
the root of resource ``name``.  Lists map element-wise.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Any

from .kb import CcKB, ConceptAssertion, MBox, RoleAssertion, Vocabulary

VALUE_MODES = ("open", "model", "node", "inline", "skip")


class IngestError(ValueError):
    pass


@dataclass(frozen=True)
class PropertyMapping:
    role: str | None
    value: str | None = None  # None: decide from the JSON value


@dataclass(frozen=True)
class MappingProfile:
    types: dict[str, str]
    properties: dict[str, PropertyMapping]

    @classmethod
    def from_json(cls, text: str | dict) -> "MappingProfile":
        data = json.loads(text) if isinstance(text, str) else text
        if not isinstance(data, dict):
            raise IngestError("mapping profile must be a JSON object")
        props = {}
        for name, spec in data.get("properties", {}).items():
            if isinstance(spec, str):
                spec = {"role": spec}
            mode = spec.get("value")
            if mode is not None and mode not in VALUE_MODES:
                raise IngestError(f"property {name}: unknown value mode {mode!r}")
            if spec.get("role") is None and mode not in ("inline", "skip"):
                raise IngestError(f"property {name}: a role is required")
            props[name] = PropertyMapping(spec.get("role"), mode)
        return cls(dict(data.get("types", {})), props)


@dataclass
class IngestResult:
    mbox: MBox
    vocabulary: Vocabulary
    warnings: list[str] = field(default_factory=list)

    @property
    def kb(self) -> CcKB:
        return CcKB(self.vocabulary, mbox=self.mbox)


def _name(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    text = re.sub(r"[^A-Za-z0-9_]+", "_", str(value)).strip("_")
    if not text:
        raise IngestError(f"value {value!r} does not yield an individual name")
    return text


class _Builder:
    def __init__(self, profile: MappingProfile, resources: dict, lenient: bool):
        self.profile = profile
        self.resources = resources
        self.lenient = lenient
        self.warnings: list[str] = []
        self.concepts: set[str] = set()
        self.roles: set[str] = set()
        self.open: set[str] = set()
        self.model: set[str] = set()

    def problem(self, message: str) -> None:
        if not self.lenient:
            raise IngestError(message)
        self.warnings.append(message)

    def tree(self, root: str, resource: Any) -> set:
        if not isinstance(resource, dict) or "Type" not in resource:
            self.problem(f"resource {root}: expected an object with a Type")
            return set()
        out: set = set()
        concept = self.profile.types.get(resource["Type"])
        if concept is None:
            self.problem(f"resource {root}: unmapped type {resource['Type']}")
        else:
            self.concepts.add(concept)
            out.add(ConceptAssertion(concept, root))
        self.properties(root, root, resource.get("Properties", {}), out)
        return out

    def properties(self, node: str, path: str, props: Any, out: set) -> None:
        if not isinstance(props, dict):
            self.problem(f"{path}: properties must be an object")
            return
        for key in sorted(props):
            mapping = self.profile.properties.get(key)
            if mapping is None:
                self.problem(f"{path}.{key}: unmapped property")
                continue
            values = props[key] if isinstance(props[key], list) else [props[key]]
            for i, value in enumerate(values):
                suffix = f"_{i}" if isinstance(props[key], list) else ""
                self.edge(node, f"{path}_{_name(key)}{suffix}", key, mapping, value, out)

    def edge(self, node: str, child: str, key: str, mapping: PropertyMapping, value: Any, out: set) -> None:
        if isinstance(value, dict) and set(value) == {"Ref"}:
            target = value["Ref"]
            if target not in self.resources:
                self.problem(f"{child}: reference to unknown resource {target}")
                return
            self.roles.add(mapping.role)
            out.add(RoleAssertion(mapping.role, node, _name(target)))
            return
        mode = mapping.value or ("node" if isinstance(value, dict) else "open")
        if mode == "skip":
            return
        if mode == "inline":
            if not isinstance(value, dict):
                self.problem(f"{child}: property {key} is inlined but has a scalar value")
                return
            self.properties(node, child, value, out)
            return
        if mode == "node":
            if not isinstance(value, dict):
                self.problem(f"{child}: property {key} maps to a node but has a scalar value")
                return
            self.roles.add(mapping.role)
            self.model.add(child)
            out.add(RoleAssertion(mapping.role, node, child))
            self.properties(child, child, value, out)
            return
        if isinstance(value, (dict, list)) or value is None:
            self.problem(f"{child}: property {key} expects a scalar value")
            return
        target = _name(value)
        self.roles.add(mapping.role)
        (self.open if mode == "open" else self.model).add(target)
        out.add(RoleAssertion(mapping.role, node, target))


def ingest_template(json_text: str, profile: MappingProfile | str | dict, *, lenient: bool = False) -> IngestResult:
    """One MBox tree per resource, rooted at the resource's logical name."""
    try:
        data = json.loads(json_text)
    except json.JSONDecodeError as e:
        raise IngestError(f"malformed JSON: {e}") from e
    if not isinstance(profile, MappingProfile):
        profile = MappingProfile.from_json(profile)
    if not isinstance(data, dict):
        raise IngestError("template must be a JSON object")
    resources = data.get("Resources", {})
    if not isinstance(resources, dict):
        raise IngestError("Resources must be an object")
    builder = _Builder(profile, resources, lenient)
    trees = {_name(name): builder.tree(_name(name), res) for name, res in sorted(resources.items())}
    mbox = MBox(trees)
    open_inds = frozenset(builder.open - set(trees) - builder.model)
    vocab = Vocabulary(
        closed_concepts=frozenset(builder.concepts),
        closed_roles=frozenset(builder.roles),
        open_individuals=open_inds,
        model_individuals=frozenset(builder.model | set(trees)) - open_inds,
        resource_nodes=mbox.roots,
    )
    return IngestResult(mbox, vocab, builder.warnings)
