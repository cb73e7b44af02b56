"""Cascades-style MEMO over a query graph.

One group per connected relation subset, one expression per physical
operator choice.  The memo supports exact plan counting, rank/unrank
bijections over the full plan space, QEP extraction, a structure
forest of group-id trees, and structure/cost pruning of candidates.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, replace
from typing import Iterable, Optional, Sequence

from .catalog import Catalog, estimate_selectivity
from .metrics import CostBounds, cost_dist, s_dist
from .planmodel import PhysicalPlan, PlanDigest, PlanNode, digest as plan_digest, shape_hash
from .sqlfront import QueryGraph

__all__ = [
    "PlanSpaceError",
    "ShapeGuardExceeded",
    "GroupExpression",
    "Group",
    "Memo",
    "GroupTree",
    "ShapeInfo",
    "GroupForest",
    "PruneThresholds",
    "MemoPlanSource",
    "build_memo",
    "cost_expression",
    "qep",
    "count_plans",
    "unrank",
    "build_group_forest",
    "gfp_prune",
    "GROUP_LIMIT",
    "SHAPE_LIMIT",
]

# Hard ceiling on memo size; beyond this the query is rejected.
GROUP_LIMIT = 1 << 20
# Per-group ceiling on distinct group-id tree shapes.
SHAPE_LIMIT = 10**5


class PlanSpaceError(ValueError):
    """Raised for malformed memos, oversized queries, or bad plan ids."""


class ShapeGuardExceeded(PlanSpaceError):
    """Raised when a group's structure shape count passes the guard."""


@dataclass(frozen=True)
class GroupExpression:
    """One physical operator choice within a group.

    ``table`` is the real catalog table (scans only) while ``alias``
    labels emitted plan nodes; ``selectivity`` and ``child_rows`` carry
    the cardinality inputs the cost formulas need.
    """

    group_id: int
    ordinal: int
    operator: str
    child_groups: tuple[int, ...]
    table: Optional[str] = None
    alias: Optional[str] = None
    selectivity: float = 1.0
    child_rows: tuple[float, ...] = ()
    est_rows: float = 0.0
    local_cost: float = 0.0
    alt_count: int = 0
    best_total_cost: float = 0.0

    @property
    def id(self) -> str:
        return f"{self.group_id}.{self.ordinal}"


@dataclass(frozen=True)
class Group:
    group_id: int
    relations: frozenset[str]
    expressions: tuple[GroupExpression, ...]


@dataclass(frozen=True)
class Memo:
    groups: tuple[Group, ...]
    root_group: int
    totals: tuple[int, ...]

    @classmethod
    def build(cls, groups: Sequence[Group], root_group: int) -> "Memo":
        """Validate raw groups and fill in alt counts and best totals.

        Groups must arrive in construction order with children pointing
        at earlier groups only; counts and costs propagate bottom-up.
        """
        finalized: list[Group] = []
        totals: list[int] = []
        best: list[float] = []
        for idx, group in enumerate(groups):
            if group.group_id != idx:
                raise PlanSpaceError(
                    f"group ids must be consecutive, found {group.group_id} at {idx}"
                )
            if not group.expressions:
                raise PlanSpaceError(f"group {idx} has no expressions")
            new_exprs: list[GroupExpression] = []
            group_total = 0
            group_best = math.inf
            for k, e in enumerate(group.expressions):
                if len(e.child_groups) not in (0, 2):
                    raise PlanSpaceError(
                        f"expression {idx}.{k} must have 0 or 2 children"
                    )
                if any(not (0 <= c < idx) for c in e.child_groups):
                    raise PlanSpaceError(
                        f"expression {idx}.{k} references a non-earlier group"
                    )
                alt = 1
                total_cost = e.local_cost
                for c in e.child_groups:
                    alt *= totals[c]
                    total_cost += best[c]
                new_exprs.append(
                    replace(e, ordinal=k, alt_count=alt, best_total_cost=total_cost)
                )
                group_total += alt
                group_best = min(group_best, total_cost)
            finalized.append(Group(idx, group.relations, tuple(new_exprs)))
            totals.append(group_total)
            best.append(group_best)
        if not (0 <= root_group < len(finalized)):
            raise PlanSpaceError(f"root group {root_group} out of range")
        return cls(
            groups=tuple(finalized), root_group=root_group, totals=tuple(totals)
        )


# ----------------------------------------------------------------------
# Cost model (non-normative; constants keep the space cost-diverse)
# ----------------------------------------------------------------------


def cost_expression(e: GroupExpression, cat: Catalog) -> float:
    """Local cost of one expression given its cardinality inputs."""
    op = e.operator
    if op == "SeqScan":
        return float(cat.table(e.table).page_count)
    if op == "IndexScan":
        return e.selectivity * cat.table(e.table).row_count * 2.0 + 1.0
    if len(e.child_rows) != 2:
        raise PlanSpaceError(f"join expression {e.id} lacks child cardinalities")
    left, right = e.child_rows
    if op == "HashJoin":
        return 1.2 * (left + right) + 0.1 * left
    if op == "MergeJoin":
        return left + right + 0.3 * (
            left * math.log2(max(left, 1.0)) + right * math.log2(max(right, 1.0))
        )
    if op == "NestedLoop":
        return left * max(1.0, 0.01 * right)
    raise PlanSpaceError(f"unknown operator '{op}'")


# ----------------------------------------------------------------------
# Memo construction
# ----------------------------------------------------------------------


def _connected_subsets(n: int, adjacency: list[int], limit: int) -> list[int]:
    """All connected vertex subsets as bitmasks, each exactly once."""
    out: list[int] = []

    def emit(mask: int) -> None:
        out.append(mask)
        if len(out) > limit:
            raise PlanSpaceError("query too large")

    def neighborhood(mask: int) -> int:
        nb = 0
        m = mask
        while m:
            low = m & -m
            nb |= adjacency[low.bit_length() - 1]
            m ^= low
        return nb & ~mask

    def grow(mask: int, forbidden: int) -> None:
        nb = neighborhood(mask) & ~forbidden
        sub = nb
        while sub:
            emit(mask | sub)
            sub = (sub - 1) & nb
        sub = nb
        while sub:
            grow(mask | sub, forbidden | nb)
            sub = (sub - 1) & nb

    for v in range(n - 1, -1, -1):
        emit(1 << v)
        grow(1 << v, (1 << (v + 1)) - 1)
    return out


def build_memo(q: QueryGraph, cat: Catalog, group_limit: int = GROUP_LIMIT) -> Memo:
    """Enumerate the physical plan space of a connected query graph."""
    aliases = [alias for alias, _ in q.relations]
    table_of = q.alias_map
    index = {a: i for i, a in enumerate(aliases)}
    n = len(aliases)

    filter_sel = {}
    for a in aliases:
        sel = 1.0
        for f in q.filters_for(a):
            sel *= estimate_selectivity(f, cat)
        filter_sel[a] = sel
    scan_rows = {
        a: cat.table(table_of[a]).row_count * filter_sel[a] for a in aliases
    }

    adjacency = [0] * n
    edges: list[tuple[int, int, float]] = []
    for pred in dict.fromkeys(q.join_edges):
        u = index[pred.target.alias]
        v = index[pred.operand.alias]
        adjacency[u] |= 1 << v
        adjacency[v] |= 1 << u
        edges.append((1 << u, 1 << v, estimate_selectivity(pred, cat)))

    masks = _connected_subsets(n, adjacency, group_limit)

    def members(mask: int) -> tuple[str, ...]:
        return tuple(aliases[i] for i in range(n) if mask >> i & 1)

    masks.sort(key=lambda m: (bin(m).count("1"), members(m)))
    gid_of = {mask: i for i, mask in enumerate(masks)}

    rows: dict[int, float] = {}
    for mask in masks:
        card = 1.0
        for a in members(mask):
            card *= scan_rows[a]
        for mu, mv, sel in edges:
            if mu & mask and mv & mask:
                card *= sel
        rows[mask] = card

    def crosses(left: int, right: int) -> bool:
        return any(
            (mu & left and mv & right) or (mu & right and mv & left)
            for mu, mv, _ in edges
        )

    groups: list[Group] = []
    for gid, mask in enumerate(masks):
        names = members(mask)
        exprs: list[GroupExpression] = []
        if len(names) == 1:
            alias = names[0]
            stats = cat.table(table_of[alias])
            choices = ["SeqScan"]
            if any(
                f.target.column in stats.indexed_columns
                for f in q.filters_for(alias)
            ):
                choices.append("IndexScan")
            for op in choices:
                raw = GroupExpression(
                    group_id=gid,
                    ordinal=len(exprs),
                    operator=op,
                    child_groups=(),
                    table=stats.name,
                    alias=alias,
                    selectivity=filter_sel[alias],
                    est_rows=rows[mask],
                )
                exprs.append(replace(raw, local_cost=cost_expression(raw, cat)))
        else:
            partitions: list[tuple[int, int]] = []
            sub = (mask - 1) & mask
            while sub:
                rest = mask ^ sub
                if sub in gid_of and rest in gid_of and crosses(sub, rest):
                    partitions.append((sub, rest))
                sub = (sub - 1) & mask
            partitions.sort(key=lambda p: members(p[0]))
            for left, right in partitions:
                for op in ("HashJoin", "MergeJoin", "NestedLoop"):
                    raw = GroupExpression(
                        group_id=gid,
                        ordinal=len(exprs),
                        operator=op,
                        child_groups=(gid_of[left], gid_of[right]),
                        child_rows=(rows[left], rows[right]),
                        est_rows=rows[mask],
                    )
                    exprs.append(replace(raw, local_cost=cost_expression(raw, cat)))
        groups.append(Group(gid, frozenset(names), tuple(exprs)))

    return Memo.build(groups, root_group=len(masks) - 1)


# ----------------------------------------------------------------------
# QEP, counting, unranking
# ----------------------------------------------------------------------


def count_plans(m: Memo) -> int:
    return m.totals[m.root_group]


def _node_for(e: GroupExpression, children: tuple[PlanNode, ...]) -> PlanNode:
    return PlanNode(
        operator=e.operator,
        table=e.alias,
        est_cost=e.local_cost,
        est_rows=e.est_rows,
        children=children,
    )


def qep(m: Memo) -> PhysicalPlan:
    """Cheapest plan: per-group argmin, ties to the lowest ordinal."""
    choice: list[int] = []
    for group in m.groups:
        best = min(
            range(len(group.expressions)),
            key=lambda i: group.expressions[i].best_total_cost,
        )
        choice.append(best)

    def build(gid: int) -> PlanNode:
        e = m.groups[gid].expressions[choice[gid]]
        return _node_for(e, tuple(build(c) for c in e.child_groups))

    def rank(gid: int) -> int:
        group = m.groups[gid]
        k = choice[gid]
        offset = sum(group.expressions[j].alt_count for j in range(k))
        e = group.expressions[k]
        if not e.child_groups:
            return offset
        g1, g2 = e.child_groups
        return offset + rank(g1) * m.totals[g2] + rank(g2)

    return PhysicalPlan.from_root(rank(m.root_group), build(m.root_group))


def unrank(m: Memo, plan_id: int) -> PhysicalPlan:
    """Mixed-radix inverse of the counting order; bijective over ids."""
    total = count_plans(m)
    if not (0 <= plan_id < total):
        raise PlanSpaceError(f"plan id {plan_id} out of range [0, {total})")

    def build(gid: int, r: int) -> PlanNode:
        for e in m.groups[gid].expressions:
            if r < e.alt_count:
                break
            r -= e.alt_count
        if not e.child_groups:
            return _node_for(e, ())
        g1, g2 = e.child_groups
        t2 = m.totals[g2]
        return _node_for(e, (build(g1, r // t2), build(g2, r % t2)))

    return PhysicalPlan.from_root(plan_id, build(m.root_group, plan_id))


# ----------------------------------------------------------------------
# Group forest
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class GroupTree:
    group_id: int
    children: tuple["GroupTree", ...]


@dataclass(frozen=True)
class ShapeInfo:
    tree: GroupTree
    labeled_key: bytes
    unlabeled_key: bytes
    member_count: int


@dataclass(frozen=True)
class GroupForest:
    shapes: tuple[ShapeInfo, ...]
    per_group: tuple[tuple[ShapeInfo, ...], ...]


def _labeled_hash(group_id: int, child_keys: Sequence[bytes]) -> bytes:
    h = hashlib.blake2b(digest_size=12)
    h.update(group_id.to_bytes(4, "big"))
    h.update(len(child_keys).to_bytes(4, "big"))
    for key in child_keys:
        h.update(key)
    return h.digest()


def build_group_forest(m: Memo, shape_limit: int = SHAPE_LIMIT) -> GroupForest:
    """Distinct group-id tree shapes per group, bottom-up."""
    per_group: list[tuple[ShapeInfo, ...]] = []
    for group in m.groups:
        table: dict[bytes, list] = {}

        def add(tree: GroupTree, labeled: bytes, unlabeled: bytes, count: int):
            entry = table.get(labeled)
            if entry is None:
                table[labeled] = [tree, unlabeled, count]
                if len(table) > shape_limit:
                    raise ShapeGuardExceeded(
                        f"group {group.group_id} exceeds {shape_limit} shapes"
                    )
            else:
                entry[2] += count

        for e in group.expressions:
            if not e.child_groups:
                add(
                    GroupTree(group.group_id, ()),
                    _labeled_hash(group.group_id, ()),
                    shape_hash([]),
                    1,
                )
                continue
            g1, g2 = e.child_groups
            for s1 in per_group[g1]:
                for s2 in per_group[g2]:
                    add(
                        GroupTree(group.group_id, (s1.tree, s2.tree)),
                        _labeled_hash(
                            group.group_id, (s1.labeled_key, s2.labeled_key)
                        ),
                        shape_hash((s1.unlabeled_key, s2.unlabeled_key)),
                        s1.member_count * s2.member_count,
                    )
        per_group.append(
            tuple(
                ShapeInfo(tree=v[0], labeled_key=k, unlabeled_key=v[1], member_count=v[2])
                for k, v in table.items()
            )
        )
    return GroupForest(shapes=per_group[m.root_group], per_group=tuple(per_group))


def _member_ids(m: Memo, gid: int, tree: GroupTree, cache: dict) -> list[int]:
    # Ranks within group gid of exactly the plans shaped like `tree`.
    key = (gid, tree)
    cached = cache.get(key)
    if cached is not None:
        return cached
    group = m.groups[gid]
    out: list[int] = []
    offset = 0
    for e in group.expressions:
        if not e.child_groups:
            if not tree.children:
                out.extend(range(offset, offset + e.alt_count))
        elif len(tree.children) == 2:
            g1, g2 = e.child_groups
            c1, c2 = tree.children
            if c1.group_id == g1 and c2.group_id == g2:
                left = _member_ids(m, g1, c1, cache)
                right = _member_ids(m, g2, c2, cache)
                t2 = m.totals[g2]
                for r1 in left:
                    base = offset + r1 * t2
                    out.extend(base + r2 for r2 in right)
        offset += e.alt_count
    cache[key] = out
    return out


# ----------------------------------------------------------------------
# Plan source and pruning
# ----------------------------------------------------------------------


class MemoPlanSource:
    """Random access into a memo's plan space with digest caching."""

    def __init__(self, memo: Memo, shape_limit: int = SHAPE_LIMIT):
        self._memo = memo
        self._shape_limit = shape_limit
        self._digests: dict[int, PlanDigest] = {}
        self._forest: Optional[GroupForest] = None
        self._member_cache: dict = {}
        self._qep: Optional[PhysicalPlan] = None

    @property
    def memo(self) -> Memo:
        return self._memo

    def count(self) -> int:
        return count_plans(self._memo)

    def all_ids(self) -> range:
        return range(self.count())

    def sample_ids(self, n: int, rng) -> list[int]:
        if n >= self.count():
            return list(self.all_ids())
        return rng.sample(range(self.count()), n)

    def plan(self, plan_id: int) -> PhysicalPlan:
        return unrank(self._memo, plan_id)

    def digest(self, plan_id: int) -> PlanDigest:
        d = self._digests.get(plan_id)
        if d is None:
            d = plan_digest(self.plan(plan_id))
            self._digests[plan_id] = d
        return d

    def cost(self, plan_id: int) -> float:
        return self.digest(plan_id).total_cost

    def structure_key(self, plan_id: int) -> bytes:
        return self.digest(plan_id).root_shape

    def qep(self) -> PhysicalPlan:
        if self._qep is None:
            self._qep = qep(self._memo)
        return self._qep

    def forest(self) -> GroupForest:
        if self._forest is None:
            self._forest = build_group_forest(self._memo, self._shape_limit)
        return self._forest

    def ids_with_structure(self, key: bytes) -> tuple[int, ...]:
        """Plan ids whose unlabeled structure equals `key`.

        Raises ShapeGuardExceeded when the forest is too large to build;
        callers fall back to scanning digests.
        """
        forest = self.forest()
        ids: set[int] = set()
        for shape in forest.shapes:
            if shape.unlabeled_key == key:
                ids.update(
                    _member_ids(
                        self._memo, self._memo.root_group, shape.tree,
                        self._member_cache,
                    )
                )
        return tuple(sorted(ids))


@dataclass(frozen=True)
class PruneThresholds:
    """Structure/cost cutoffs; values above 1 disable a condition."""

    tau_d: float = 0.5
    tau_c: float = 0.5

    def __post_init__(self) -> None:
        if self.tau_d < 0 or self.tau_c < 0:
            raise ValueError("prune thresholds must be non-negative")


def gfp_prune(
    plans: Iterable[int],
    qep_plan: PhysicalPlan,
    t: PruneThresholds,
    m: Optional[Memo] = None,
    bounds: Optional[CostBounds] = None,
    cache: Optional[dict] = None,
    source=None,
) -> set[int]:
    """Drop plans that are both structurally and cost-wise far from the QEP.

    A plan is removed only when its structural distance exceeds tau_d
    AND its cost distance exceeds tau_c; the QEP itself always stays.
    Structural distances are computed once per distinct structure shape.
    Accepts any plan source in place of the memo.
    """
    if source is None:
        if m is None:
            raise PlanSpaceError("gfp_prune needs a memo or a plan source")
        source = MemoPlanSource(m)
    ids = set(plans)
    if bounds is None:
        costs = [source.cost(i) for i in ids]
        costs.append(qep_plan.total_cost)
        bounds = CostBounds.from_costs(costs)
    qdigest = plan_digest(qep_plan)
    structure_cache = {} if cache is None else cache
    kept: set[int] = set()
    for pid in ids:
        if pid == qep_plan.plan_id:
            kept.add(pid)
            continue
        d = source.digest(pid)
        key = d.root_shape
        s_value = structure_cache.get(key)
        if s_value is None:
            s_value = s_dist(d, qdigest)
            structure_cache[key] = s_value
        if s_value > t.tau_d and cost_dist(d, qdigest, bounds) > t.tau_c:
            continue
        kept.add(pid)
    return kept
