"""Table statistics and selectivity estimation.

A catalog is a flat collection of per-table statistics (row count, page
count, indexed columns, per-column distinct counts) loaded from a JSON
document. Selectivity estimation follows the classic textbook rules:

    equality on c        1 / distinct(c)
    range                1/3
    join edge a = b      1 / max(distinct(a), distinct(b))
    missing statistics   1/10
    no predicate         1.0

Cardinalities derived from these stay real-valued; rounding would
flatten cost differences between plans that the distance metrics need.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterator, Mapping

from arena.sqlfront import ColumnRef, Predicate, PredicateKind

__all__ = [
    "Catalog",
    "CatalogError",
    "TableStats",
    "estimate_selectivity",
    "load_catalog",
    "RANGE_SELECTIVITY",
    "MISSING_STATS_SELECTIVITY",
]

RANGE_SELECTIVITY = 1.0 / 3.0
MISSING_STATS_SELECTIVITY = 1.0 / 10.0


class CatalogError(ValueError):
    """Malformed catalog document or unknown table/column lookup."""


@dataclass(frozen=True)
class TableStats:
    name: str
    row_count: int
    page_count: int
    indexed_columns: frozenset[str] = frozenset()
    distinct_counts: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if self.row_count < 0:
            raise CatalogError(f"negative row_count for table '{self.name}'")
        if self.page_count < 1:
            raise CatalogError(f"page_count must be >= 1 for table '{self.name}'")
        for col, count in self.distinct_counts.items():
            if count < 1:
                raise CatalogError(
                    f"distinct count for column '{col}' of table '{self.name}' must be >= 1"
                )
            if self.row_count > 0 and count > self.row_count:
                raise CatalogError(
                    f"distinct count for column '{col}' of table '{self.name}' exceeds row_count"
                )

    def knows_column(self, column: str) -> bool:
        column = column.lower()
        return column in self.distinct_counts or column in self.indexed_columns

    def distinct_for(self, column: str) -> int | None:
        return self.distinct_counts.get(column.lower())

    def has_index(self, column: str) -> bool:
        return column.lower() in self.indexed_columns


@dataclass(frozen=True)
class Catalog:
    tables: Mapping[str, TableStats]

    def __len__(self) -> int:
        return len(self.tables)

    def __iter__(self) -> Iterator[TableStats]:
        return iter(self.tables.values())

    def __contains__(self, name: str) -> bool:
        return name.lower() in self.tables

    def table(self, name: str) -> TableStats:
        try:
            return self.tables[name.lower()]
        except KeyError:
            raise CatalogError(f"unknown table '{name}'") from None


def _as_int(value: object, what: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise CatalogError(f"malformed catalog document: {what} must be an integer")
    return value


def load_catalog(document: str | Mapping) -> Catalog:
    """Load a catalog from JSON text or an already-parsed mapping.

    The expected document shape is
    ``{"tables": [{"name", "rows", "pages", "indexes": [...], "distinct": {...}}]}``
    where ``indexes`` and ``distinct`` are optional per table.

    Raises
    ------
    CatalogError
        For malformed documents, duplicate table names, negative row
        counts, and out-of-range statistics.
    """
    if isinstance(document, str):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise CatalogError(f"malformed catalog document: {exc}") from None
    if not isinstance(document, Mapping):
        raise CatalogError("malformed catalog document: expected a JSON object")
    entries = document.get("tables")
    if not isinstance(entries, list):
        raise CatalogError("malformed catalog document: missing 'tables' list")

    tables: dict[str, TableStats] = {}
    for entry in entries:
        if not isinstance(entry, Mapping):
            raise CatalogError("malformed catalog document: table entry must be an object")
        name = entry.get("name")
        if not isinstance(name, str) or not name:
            raise CatalogError("malformed catalog document: table entry missing 'name'")
        name = name.lower()
        if name in tables:
            raise CatalogError(f"duplicate table name '{name}'")
        rows = _as_int(entry.get("rows"), f"rows of table '{name}'")
        pages = _as_int(entry.get("pages"), f"pages of table '{name}'")
        indexes = entry.get("indexes", [])
        if not isinstance(indexes, list) or not all(isinstance(c, str) for c in indexes):
            raise CatalogError(f"malformed catalog document: indexes of table '{name}'")
        distinct_raw = entry.get("distinct", {})
        if not isinstance(distinct_raw, Mapping):
            raise CatalogError(f"malformed catalog document: distinct of table '{name}'")
        distinct = {
            str(col).lower(): _as_int(cnt, f"distinct count of '{name}.{col}'")
            for col, cnt in distinct_raw.items()
        }
        tables[name] = TableStats(
            name=name,
            row_count=rows,
            page_count=pages,
            indexed_columns=frozenset(c.lower() for c in indexes),
            distinct_counts=distinct,
        )
    return Catalog(tables=tables)


def _distinct_or_none(catalog: Catalog, ref: ColumnRef) -> int | None:
    stats = catalog.table(ref.table)
    if not stats.knows_column(ref.column):
        raise CatalogError(f"unknown column '{ref.column}' of table '{stats.name}'")
    return stats.distinct_for(ref.column)


def estimate_selectivity(predicate: Predicate | None, catalog: Catalog) -> float:
    """Estimated fraction of rows surviving ``predicate``.

    ``None`` stands for the tautology (no predicate) and yields 1.0.

    Raises
    ------
    CatalogError
        If the predicate references a table or column the catalog does
        not know about.
    """
    if predicate is None:
        return 1.0
    if predicate.kind is PredicateKind.JOIN:
        left = _distinct_or_none(catalog, predicate.target)
        right = _distinct_or_none(catalog, predicate.operand)
        if left is None or right is None:
            return MISSING_STATS_SELECTIVITY
        return 1.0 / max(left, right)
    if predicate.kind is PredicateKind.RANGE:
        _distinct_or_none(catalog, predicate.target)
        return RANGE_SELECTIVITY
    distinct = _distinct_or_none(catalog, predicate.target)
    if distinct is None:
        return MISSING_STATS_SELECTIVITY
    return 1.0 / distinct
