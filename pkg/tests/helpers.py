"""Shared test oracles and random-instance generators.

Everything here is deliberately naive: the oracles recompute results by
brute force (pairwise shape comparison, full-matrix edit distance,
exhaustive enumeration) so the fast implementations in the package have
an independent reference to be checked against.
"""
from __future__ import annotations

import random
from typing import Sequence

from arena.catalog import load_catalog
from arena.planmodel import PlanNode
from arena.planspace import build_memo, count_plans
from arena.sqlfront import parse_query

SCAN_OPS = ("SeqScan", "IndexScan")
JOIN_OPS = ("HashJoin", "MergeJoin", "NestedLoop")


# ----------------------------------------------------------------------
# Oracle: naive subtree kernel
# ----------------------------------------------------------------------

def same_shape(a: PlanNode, b: PlanNode) -> bool:
    """Content-blind rooted-subtree equality: arity must match at every level."""
    if len(a.children) != len(b.children):
        return False
    return all(same_shape(x, y) for x, y in zip(a.children, b.children))


def collect_nodes(root: PlanNode) -> list[PlanNode]:
    out = [root]
    for child in root.children:
        out.extend(collect_nodes(child))
    return out


def naive_subtree_kernel(a: PlanNode, b: PlanNode) -> int:
    """O(n^2) kernel: count node pairs rooting identical shapes."""
    total = 0
    for x in collect_nodes(a):
        for y in collect_nodes(b):
            if same_shape(x, y):
                total += 1
    return total


# ----------------------------------------------------------------------
# Oracle: full-matrix token Levenshtein
# ----------------------------------------------------------------------

def levenshtein_oracle(xs: Sequence[str], ys: Sequence[str]) -> int:
    """Textbook full-matrix DP with unit insert/delete/substitute costs."""
    n, m = len(xs), len(ys)
    table = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n + 1):
        table[i][0] = i
    for j in range(m + 1):
        table[0][j] = j
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            sub = 0 if xs[i - 1] == ys[j - 1] else 1
            table[i][j] = min(
                table[i - 1][j] + 1,
                table[i][j - 1] + 1,
                table[i - 1][j - 1] + sub,
            )
    return table[n][m]


# ----------------------------------------------------------------------
# Random plan trees and digests
# ----------------------------------------------------------------------

def random_tree(rng: random.Random, max_nodes: int = 12, max_arity: int = 3) -> PlanNode:
    """Random operator tree with arbitrary arities; costs and rows randomized."""
    budget = rng.randint(1, max_nodes)

    def grow(remaining: list[int]) -> PlanNode:
        remaining[0] -= 1
        arity = rng.randint(0, max_arity) if remaining[0] > 0 else 0
        children = []
        for _ in range(arity):
            if remaining[0] <= 0:
                break
            children.append(grow(remaining))
        op = rng.choice(JOIN_OPS) if children else rng.choice(SCAN_OPS)
        table = None if children else rng.choice(("t", "s", "r", "u"))
        return PlanNode(
            operator=op,
            table=table,
            est_cost=round(rng.uniform(0.0, 100.0), 3),
            est_rows=round(rng.uniform(1.0, 1000.0), 3),
            children=tuple(children),
        )

    return grow([budget])


def random_binary_tree(rng: random.Random, leaves: int) -> PlanNode:
    """Random bushy join tree with the given number of scan leaves."""
    nodes = [
        PlanNode(
            operator=rng.choice(SCAN_OPS),
            table=rng.choice(("t", "s", "r", "u", "v")),
            est_cost=round(rng.uniform(1.0, 50.0), 3),
            est_rows=round(rng.uniform(1.0, 500.0), 3),
        )
        for _ in range(leaves)
    ]
    while len(nodes) > 1:
        i = rng.randrange(len(nodes))
        left = nodes.pop(i)
        j = rng.randrange(len(nodes))
        right = nodes.pop(j)
        nodes.append(
            PlanNode(
                operator=rng.choice(JOIN_OPS),
                est_cost=round(rng.uniform(1.0, 200.0), 3),
                est_rows=round(rng.uniform(1.0, 1000.0), 3),
                children=(left, right),
            )
        )
    return nodes[0]


# ----------------------------------------------------------------------
# Random catalogs and queries (always rendered through SQL text so the
# parser participates in every generated instance)
# ----------------------------------------------------------------------

COLUMNS = ("id", "a", "b", "c", "d")


def random_catalog_doc(rng: random.Random, n_tables: int) -> dict:
    tables = []
    for i in range(n_tables):
        rows = rng.randint(10, 5000)
        distinct = {}
        for col in COLUMNS:
            distinct[col] = rng.randint(1, rows)
        indexes = rng.sample(COLUMNS, rng.randint(0, 2))
        tables.append(
            {
                "name": f"tab{i}",
                "rows": rows,
                "pages": max(1, rows // rng.randint(20, 80)),
                "indexes": indexes,
                "distinct": distinct,
            }
        )
    return {"tables": tables}


def build_random_memo(rng: random.Random, n_tables=3, n_relations=3, max_plans=3000):
    """Random memo small enough for exhaustive checks."""
    while True:
        doc = random_catalog_doc(rng, n_tables)
        sql = random_query_sql(rng, n_tables, n_relations)
        memo = build_memo(parse_query(sql), load_catalog(doc))
        if count_plans(memo) <= max_plans:
            return memo


def random_query_sql(rng: random.Random, n_tables: int, n_relations: int) -> str:
    """Random connected comma-join query over tab0..tab{n_tables-1}."""
    aliases = [f"r{i}" for i in range(n_relations)]
    rels = [(a, f"tab{rng.randrange(n_tables)}") for a in aliases]

    conjuncts = []
    # random spanning tree keeps the join graph connected
    for i in range(1, n_relations):
        j = rng.randrange(i)
        conjuncts.append(
            f"{aliases[i]}.{rng.choice(COLUMNS)} = {aliases[j]}.{rng.choice(COLUMNS)}"
        )
    # occasional extra edge (redundant or cyclic edges are legal)
    if n_relations > 2 and rng.random() < 0.4:
        a, b = rng.sample(aliases, 2)
        conjuncts.append(f"{a}.{rng.choice(COLUMNS)} = {b}.{rng.choice(COLUMNS)}")
    # random filters
    for a in aliases:
        if rng.random() < 0.6:
            col = rng.choice(COLUMNS)
            if rng.random() < 0.5:
                conjuncts.append(f"{a}.{col} = {rng.randint(0, 99)}")
            else:
                op = rng.choice(("<", ">", "<=", ">="))
                conjuncts.append(f"{a}.{col} {op} {rng.randint(0, 99)}")

    froms = ", ".join(f"{t} AS {a}" for a, t in rels)
    sql = f"SELECT {aliases[0]}.{rng.choice(COLUMNS)} FROM {froms}"
    if conjuncts:
        sql += " WHERE " + " AND ".join(conjuncts)
    return sql
