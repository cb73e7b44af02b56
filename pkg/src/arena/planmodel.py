"""Physical plan trees, canonical serialization, and plan digests.

A digest precomputes everything the distance metrics need so that plan
trees are walked once, not once per comparison:

* a content-blind multiset of rooted-subtree shapes (for the subtree
  kernel),
* the preorder token sequence, one token per node, scans rendered as
  ``Operator[table]`` (for the edit distance),
* the total cost (for cost normalization).

Shape hashes are keyed purely on arity structure; renaming operators or
tables never changes them. Child order does not change shapes either,
only tokens, which is what lets the metrics tell join orders apart by
content while treating them as structurally identical.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

__all__ = [
    "PhysicalPlan",
    "PlanDigest",
    "PlanFormatError",
    "PlanNode",
    "digest",
    "parse_plan",
    "parse_plan_lines",
    "serialize_plan",
    "serialize_plan_lines",
    "shape_hash",
]

SCAN_OPERATORS = frozenset({"SeqScan", "IndexScan"})
JOIN_OPERATORS = frozenset({"HashJoin", "MergeJoin", "NestedLoop"})


class PlanFormatError(ValueError):
    """Plan document rejected."""


@dataclass(frozen=True)
class PlanNode:
    operator: str
    table: str | None = None
    est_cost: float = 0.0
    est_rows: float = 0.0
    children: tuple["PlanNode", ...] = ()

    @property
    def token(self) -> str:
        return f"{self.operator}[{self.table}]" if self.table is not None else self.operator


@dataclass(frozen=True)
class PhysicalPlan:
    plan_id: int
    root: PlanNode
    total_cost: float

    @classmethod
    def from_root(cls, plan_id: int, root: PlanNode) -> "PhysicalPlan":
        return cls(plan_id=plan_id, root=root, total_cost=_subtree_cost(root))


def _subtree_cost(node: PlanNode) -> float:
    total = node.est_cost
    for child in node.children:
        total += _subtree_cost(child)
    return total


# ----------------------------------------------------------------------
# Shape hashing and digests
# ----------------------------------------------------------------------

_DIGEST_SIZE = 12  # 96-bit shape keys; collision-free at any realistic scale


def shape_hash(child_hashes: Sequence[bytes]) -> bytes:
    """Canonical hash of a subtree shape given its children's hashes."""
    h = hashlib.blake2b(digest_size=_DIGEST_SIZE)
    h.update(len(child_hashes).to_bytes(4, "big"))
    for ch in child_hashes:
        h.update(ch)
    return h.digest()


@dataclass(frozen=True)
class PlanDigest:
    structure_multiset: Mapping[bytes, int]
    token_sequence: tuple[str, ...]
    total_cost: float
    self_kernel: int
    root_shape: bytes = field(compare=False)

    @property
    def node_count(self) -> int:
        return sum(self.structure_multiset.values())


def digest(plan: PhysicalPlan) -> PlanDigest:
    """Precompute the structure multiset, token sequence, and self kernel."""
    counts: dict[bytes, int] = {}
    tokens: list[str] = []

    def walk(node: PlanNode) -> bytes:
        tokens.append(node.token)
        child_hashes = [walk(c) for c in node.children]
        key = shape_hash(child_hashes)
        counts[key] = counts.get(key, 0) + 1
        return key

    root_shape = walk(plan.root)
    return PlanDigest(
        structure_multiset=counts,
        token_sequence=tuple(tokens),
        total_cost=plan.total_cost,
        self_kernel=sum(c * c for c in counts.values()),
        root_shape=root_shape,
    )


# ----------------------------------------------------------------------
# Canonical JSON serialization
# ----------------------------------------------------------------------


def _node_to_obj(node: PlanNode) -> dict:
    obj: dict = {"op": node.operator}
    if node.table is not None:
        obj["table"] = node.table
    obj["cost"] = node.est_cost
    obj["rows"] = node.est_rows
    obj["children"] = [_node_to_obj(c) for c in node.children]
    return obj


def serialize_plan(plan: PhysicalPlan) -> str:
    """One-line canonical JSON; byte equality holds exactly for equal plans."""
    obj = {"id": plan.plan_id, "cost": plan.total_cost, "root": _node_to_obj(plan.root)}
    return json.dumps(obj, separators=(",", ":"))


def _number(value: object, what: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise PlanFormatError(f"malformed plan document: {what} must be a number")
    return float(value)


def _node_from_obj(obj: object) -> PlanNode:
    if not isinstance(obj, Mapping):
        raise PlanFormatError("malformed plan document: node must be an object")
    op = obj.get("op")
    if not isinstance(op, str) or not op:
        raise PlanFormatError("malformed plan document: node missing 'op'")
    table = obj.get("table")
    if table is not None and not isinstance(table, str):
        raise PlanFormatError("malformed plan document: 'table' must be a string")
    cost = _number(obj.get("cost", 0.0), "node cost")
    if cost < 0:
        raise PlanFormatError(f"negative cost on node '{op}'")
    rows = _number(obj.get("rows", 0.0), "node rows")
    if rows < 0:
        raise PlanFormatError(f"negative rows on node '{op}'")
    children = obj.get("children", [])
    if not isinstance(children, list):
        raise PlanFormatError("malformed plan document: 'children' must be a list")
    return PlanNode(
        operator=op,
        table=table,
        est_cost=cost,
        est_rows=rows,
        children=tuple(_node_from_obj(c) for c in children),
    )


def parse_plan(document: str | Mapping) -> PhysicalPlan:
    """Parse one canonical plan document (text or decoded object)."""
    if isinstance(document, str):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise PlanFormatError(f"malformed plan document: {exc}") from None
    if not isinstance(document, Mapping):
        raise PlanFormatError("malformed plan document: expected a JSON object")
    plan_id = document.get("id")
    if isinstance(plan_id, bool) or not isinstance(plan_id, int):
        raise PlanFormatError("malformed plan document: 'id' must be an integer")
    if "root" not in document:
        raise PlanFormatError("malformed plan document: missing 'root'")
    root = _node_from_obj(document["root"])
    stated = _number(document.get("cost", 0.0), "total cost")
    if stated < 0:
        raise PlanFormatError("negative cost in plan document")
    computed = _subtree_cost(root)
    if abs(stated - computed) > 1e-6 * max(1.0, abs(computed)):
        raise PlanFormatError(
            f"total cost {stated} does not match sum of node costs {computed}"
        )
    return PhysicalPlan(plan_id=plan_id, root=root, total_cost=computed)


def serialize_plan_lines(plans: Iterable[PhysicalPlan]) -> str:
    """Newline-delimited JSON, one plan per line."""
    return "\n".join(serialize_plan(p) for p in plans)


def parse_plan_lines(text: str) -> list[PhysicalPlan]:
    """Parse a newline-delimited plan list; plan ids must be unique."""
    plans: list[PhysicalPlan] = []
    seen: set[int] = set()
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        plan = parse_plan(line)
        if plan.plan_id in seen:
            raise PlanFormatError(f"duplicate plan id {plan.plan_id} in plan list")
        seen.add(plan.plan_id)
        plans.append(plan)
    return plans
