"""Simplified cloud-IAM document ingestion.

Accepts one JSON document describing users, roles (with assume-role trust
lists), permission policies, and resources, and lowers it onto the policy
hypergraph: trust relations become assignment hyperedges, each policy entry
becomes one association per (role, resource type, policy class), and action
strings map onto the fixed permission universe through a static table.
Unknown actions are hard errors; silently dropping a permission would
corrupt every downstream detection.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Optional

from .core import PolicyHypergraph, VertexKind
from .errors import ParseError, SchemaError, UnknownAction, UnresolvedReference
from .serialize import constraint_from_obj

MAX_DOCUMENT_BYTES = 64 * 1024 * 1024

# AWS-style action names to universe permissions; canonical names pass through.
ACTION_MAP = {
    "s3:GetObject": "Read",
    "s3:ListBucket": "List",
    "s3:PutObject": "Write",
    "s3:DeleteObject": "Delete",
    "ec2:DescribeInstances": "List",
    "ec2:StartInstances": "Execute",
    "ec2:RunInstances": "RunInstances",
    "ec2:TerminateInstances": "Delete",
    "rds:DescribeDBInstances": "List",
    "rds:ExecuteStatement": "Execute",
    "dynamodb:GetItem": "Read",
    "dynamodb:PutItem": "Write",
    "lambda:InvokeFunction": "Execute",
    "iam:PassRole": "PassRole",
    "sts:AssumeRole": "AssumeRole",
}


@dataclass(frozen=True)
class IamUser:
    name: str
    account: str = ""
    tags: dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class IamRole:
    name: str
    account: str = ""
    assumable_by: tuple[str, ...] = ()
    tags: dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class IamResource:
    name: str
    account: str = ""
    type: str = ""
    tags: dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class IamPolicyEntry:
    role: str
    actions: tuple[str, ...]
    resources: tuple[str, ...]
    policy_class: str = "aws"
    constraints: tuple = ()


@dataclass(frozen=True)
class IamDocument:
    users: tuple[IamUser, ...]
    roles: tuple[IamRole, ...]
    policies: tuple[IamPolicyEntry, ...]
    resources: tuple[IamResource, ...]


def _str_field(obj: dict, key: str, where: str, default: Optional[str] = None) -> str:
    if key not in obj:
        if default is not None:
            return default
        raise SchemaError(f"{where}: missing required field {key!r}")
    v = obj[key]
    if not isinstance(v, str):
        raise SchemaError(f"{where}.{key}: wrong type {type(v).__name__}")
    return v


def _tags_field(obj: dict, where: str) -> dict[str, str]:
    tags = obj.get("tags", {})
    if not isinstance(tags, dict) or not all(
        isinstance(k, str) and isinstance(v, str) for k, v in tags.items()
    ):
        raise SchemaError(f"{where}.tags: must map strings to strings")
    return dict(tags)


def _str_list(obj: dict, key: str, where: str, default=None) -> tuple[str, ...]:
    if key not in obj:
        if default is not None:
            return tuple(default)
        raise SchemaError(f"{where}: missing required field {key!r}")
    v = obj[key]
    if not isinstance(v, list) or not all(isinstance(x, str) for x in v):
        raise SchemaError(f"{where}.{key}: must be a list of strings")
    return tuple(v)


def parse_iam(data: bytes | str) -> IamDocument:
    """Parse and structurally validate an IAM document."""
    raw = data.encode("utf-8") if isinstance(data, str) else data
    if len(raw) > MAX_DOCUMENT_BYTES:
        raise ParseError(
            f"document is {len(raw)} bytes; the ingest limit is {MAX_DOCUMENT_BYTES}"
        )
    try:
        obj = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ParseError(f"invalid JSON document: {exc}") from None
    if not isinstance(obj, dict):
        raise SchemaError("$: document root must be an object")
    for key in ("users", "roles", "policies", "resources"):
        if key not in obj:
            raise SchemaError(f"$: missing required field {key!r}")
        if not isinstance(obj[key], list):
            raise SchemaError(f"$.{key}: must be a list")

    users = tuple(
        IamUser(
            _str_field(u, "name", f"$.users[{i}]"),
            _str_field(u, "account", f"$.users[{i}]", ""),
            _tags_field(u, f"$.users[{i}]"),
        )
        for i, u in enumerate(obj["users"])
    )
    roles = tuple(
        IamRole(
            _str_field(r, "name", f"$.roles[{i}]"),
            _str_field(r, "account", f"$.roles[{i}]", ""),
            _str_list(r, "assumable_by", f"$.roles[{i}]", ()),
            _tags_field(r, f"$.roles[{i}]"),
        )
        for i, r in enumerate(obj["roles"])
    )
    resources = tuple(
        IamResource(
            _str_field(r, "name", f"$.resources[{i}]"),
            _str_field(r, "account", f"$.resources[{i}]", ""),
            _str_field(r, "type", f"$.resources[{i}]"),
            _tags_field(r, f"$.resources[{i}]"),
        )
        for i, r in enumerate(obj["resources"])
    )
    policies = []
    for i, p in enumerate(obj["policies"]):
        where = f"$.policies[{i}]"
        constraints = p.get("constraints", [])
        if not isinstance(constraints, list):
            raise SchemaError(f"{where}.constraints: must be a list")
        policies.append(
            IamPolicyEntry(
                _str_field(p, "role", where),
                _str_list(p, "actions", where),
                _str_list(p, "resources", where),
                _str_field(p, "policy_class", where, "aws"),
                tuple(
                    constraint_from_obj(c, f"{where}.constraints[{j}]")
                    for j, c in enumerate(constraints)
                ),
            )
        )
    return IamDocument(users, roles, tuple(policies), resources)


def _match_pattern(pattern: str, name: str) -> bool:
    # exact names or a trailing-star prefix; nothing fancier
    if pattern.endswith("*"):
        return name.startswith(pattern[:-1])
    return name == pattern


def map_action(action: str, universe) -> str:
    if action in ACTION_MAP:
        return ACTION_MAP[action]
    if action in universe:
        return action
    raise UnknownAction(f"no mapping for action {action!r}")


def to_hypergraph(doc: IamDocument) -> PolicyHypergraph:
    """Lower a parsed document onto a policy hypergraph."""
    policy = PolicyHypergraph()

    users: dict[str, int] = {}
    for u in doc.users:
        users[u.name] = policy.add_vertex(VertexKind.USER, u.name, u.account, u.tags)

    roles: dict[str, int] = {}
    for r in doc.roles:
        roles[r.name] = policy.add_vertex(VertexKind.USER_ATTR, r.name, r.account, r.tags)

    type_ids: dict[str, int] = {}
    resources: dict[str, int] = {}
    res_type: dict[str, str] = {}
    for r in doc.resources:
        if not r.type:
            raise UnresolvedReference(f"resource {r.name!r} has no type")
        if r.type not in type_ids:
            type_ids[r.type] = policy.add_vertex(
                VertexKind.RESOURCE_ATTR, r.type, r.account, {}
            )
        rid = policy.add_vertex(VertexKind.RESOURCE, r.name, r.account, r.tags)
        policy.add_assignment(rid, type_ids[r.type])
        resources[r.name] = rid
        res_type[r.name] = r.type

    for r in doc.roles:
        for principal in r.assumable_by:
            if principal == r.name:
                raise UnresolvedReference(
                    f"role {r.name!r} cannot be assumable by itself"
                )
            if principal in users:
                policy.add_assignment(users[principal], roles[r.name])
            elif principal in roles:
                policy.add_assignment(roles[principal], roles[r.name])
            else:
                raise UnresolvedReference(
                    f"role {r.name!r} trusts unknown principal {principal!r}"
                )

    pcs: dict[str, int] = {}
    for entry in doc.policies:
        if entry.role not in roles:
            raise UnresolvedReference(f"policy names unknown role {entry.role!r}")
        if entry.policy_class not in pcs:
            pcs[entry.policy_class] = policy.add_vertex(
                VertexKind.POLICY_CLASS, entry.policy_class
            )
        perms = sorted({map_action(a, policy.universe) for a in entry.actions})
        matched_types: set[str] = set()
        for pattern in entry.resources:
            hits = [name for name in resources if _match_pattern(pattern, name)]
            if not hits:
                raise UnresolvedReference(
                    f"policy for role {entry.role!r}: pattern {pattern!r} "
                    f"matches no declared resource"
                )
            matched_types.update(res_type[name] for name in hits)
        for type_name in sorted(matched_types):
            policy.add_association(
                [roles[entry.role]],
                [type_ids[type_name]],
                pcs[entry.policy_class],
                perms,
                entry.constraints,
            )

    violations = policy.validate()
    if violations:  # pragma: no cover - construction should preclude this
        raise UnresolvedReference(
            "lowered policy is invalid: " + "; ".join(map(str, violations[:5]))
        )
    return policy
