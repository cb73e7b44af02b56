"""Parser for a comma-join select-project-join SQL subset.

Supported grammar (keywords case-insensitive, identifiers folded to
lower case)::

    query       := SELECT proj (',' proj)* FROM rel (',' rel)*
                   [WHERE comparison (AND comparison)*] [';']
    proj        := ident '.' ident [AS ident]
    rel         := ident [[AS] ident]
    comparison  := operand op operand          op: = < > <= >=
    operand     := ident '.' ident | number | string

Column-to-column equalities become join edges, everything else becomes
a filter predicate. Anything outside the subset (OR, GROUP BY,
subqueries, explicit JOIN syntax, ...) is rejected by name so callers
can tell "typo" from "unsupported".
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Union

__all__ = [
    "ColumnRef",
    "ParseError",
    "Predicate",
    "PredicateKind",
    "QueryGraph",
    "parse_query",
    "render_query",
]

Literal = Union[int, float, str]


class ParseError(ValueError):
    """Query text rejected; carries the 1-based source position."""

    def __init__(self, message: str, line: int = 1, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class PredicateKind(Enum):
    EQUALITY = "equality-constant"
    RANGE = "range"
    JOIN = "equijoin"


@dataclass(frozen=True)
class ColumnRef:
    """A column reference with its alias resolved to a base table."""

    alias: str
    column: str
    table: str = ""

    def render(self) -> str:
        return f"{self.alias}.{self.column}"


@dataclass(frozen=True)
class Predicate:
    kind: PredicateKind
    target: ColumnRef
    op: str
    operand: Union[ColumnRef, Literal]

    def __post_init__(self):
        # kind JOIN is exactly the column-operand case
        if (self.kind is PredicateKind.JOIN) != isinstance(self.operand, ColumnRef):
            raise ValueError("join predicates and only join predicates take a column operand")


@dataclass(frozen=True)
class QueryGraph:
    """Canonical form of a parsed query.

    relations are sorted by alias and join edges / filters are stored in
    a canonical order, so two queries that differ only in clause order
    parse to equal graphs.
    """

    relations: tuple[tuple[str, str], ...]
    join_edges: tuple[Predicate, ...]
    filters: tuple[Predicate, ...]
    projections: tuple[ColumnRef, ...]

    @property
    def alias_map(self) -> dict[str, str]:
        return dict(self.relations)

    def filters_for(self, alias: str) -> tuple[Predicate, ...]:
        return tuple(p for p in self.filters if p.target.alias == alias)


# ----------------------------------------------------------------------
# Tokenizer
# ----------------------------------------------------------------------

_PUNCT = {",", ".", "(", ")", ";", "*"}
_OPS = {"=", "<", ">", "<=", ">=", "<>", "!="}

# statement-level constructs we refuse, reported by name
_UNSUPPORTED = {
    "OR", "NOT", "IN", "LIKE", "BETWEEN", "EXISTS", "DISTINCT", "UNION",
    "JOIN", "INNER", "LEFT", "RIGHT", "OUTER", "CROSS", "ON",
    "GROUP", "ORDER", "HAVING", "LIMIT", "OFFSET",
}
_RESERVED = _UNSUPPORTED | {"SELECT", "FROM", "WHERE", "AS", "AND", "BY"}


@dataclass(frozen=True)
class _Token:
    kind: str  # IDENT NUMBER STRING OP PUNCT EOF
    text: str
    value: Literal | None
    line: int
    column: int


def _tokenize(text: str) -> Iterator[_Token]:
    line, col = 1, 1
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch.isspace():
            i += 1
            col += 1
            continue
        start_line, start_col = line, col
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            yield _Token("IDENT", word, None, start_line, start_col)
            col += j - i
            i = j
            continue
        if ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            if j < n and text[j] == "." and j + 1 < n and text[j + 1].isdigit():
                j += 1
                while j < n and text[j].isdigit():
                    j += 1
                value: Literal = float(text[i:j])
            else:
                value = int(text[i:j])
            yield _Token("NUMBER", text[i:j], value, start_line, start_col)
            col += j - i
            i = j
            continue
        if ch == "'":
            j = i + 1
            buf = []
            while True:
                if j >= n:
                    raise ParseError("unterminated string literal", start_line, start_col)
                if text[j] == "'":
                    if j + 1 < n and text[j + 1] == "'":
                        buf.append("'")
                        j += 2
                        continue
                    j += 1
                    break
                if text[j] == "\n":
                    raise ParseError("unterminated string literal", start_line, start_col)
                buf.append(text[j])
                j += 1
            yield _Token("STRING", text[i:j], "".join(buf), start_line, start_col)
            col += j - i
            i = j
            continue
        two = text[i : i + 2]
        if two in _OPS:
            yield _Token("OP", two, None, start_line, start_col)
            i += 2
            col += 2
            continue
        if ch in _OPS:
            yield _Token("OP", ch, None, start_line, start_col)
            i += 1
            col += 1
            continue
        if ch in _PUNCT:
            yield _Token("PUNCT", ch, None, start_line, start_col)
            i += 1
            col += 1
            continue
        raise ParseError(f"unexpected character {ch!r}", start_line, start_col)
    yield _Token("EOF", "", None, line, col)


# ----------------------------------------------------------------------
# Parser
# ----------------------------------------------------------------------


@dataclass
class _RawRef:
    alias: str
    column: str
    line: int
    column_no: int


class _Parser:
    def __init__(self, text: str):
        self.tokens = list(_tokenize(text))
        self.pos = 0

    # -- token plumbing ------------------------------------------------

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def error(self, message: str, tok: _Token | None = None) -> ParseError:
        tok = tok or self.peek()
        return ParseError(message, tok.line, tok.column)

    def at_keyword(self, word: str) -> bool:
        tok = self.peek()
        return tok.kind == "IDENT" and tok.text.upper() == word

    def expect_keyword(self, word: str) -> _Token:
        if not self.at_keyword(word):
            raise self.error(f"expected {word}")
        return self.advance()

    def expect_punct(self, ch: str) -> _Token:
        tok = self.peek()
        if tok.kind != "PUNCT" or tok.text != ch:
            raise self.error(f"expected '{ch}'")
        return self.advance()

    def reject_unsupported(self, tok: _Token):
        word = tok.text.upper()
        if word in ("GROUP", "ORDER") and self.at_keyword("BY"):
            raise ParseError(f"unsupported construct: {word} BY", tok.line, tok.column)
        raise ParseError(f"unsupported construct: {word}", tok.line, tok.column)

    def ident(self, what: str) -> _Token:
        tok = self.peek()
        if tok.kind != "IDENT":
            raise self.error(f"expected {what}")
        if tok.text.upper() in _UNSUPPORTED:
            self.advance()
            self.reject_unsupported(tok)
        return self.advance()

    # -- grammar productions --------------------------------------------

    def parse(self) -> QueryGraph:
        self.expect_keyword("SELECT")
        projections = self.parse_projections()
        self.expect_keyword("FROM")
        relations = self.parse_relations()
        comparisons: list[tuple[object, str, object, _Token]] = []
        if self.at_keyword("WHERE"):
            self.advance()
            comparisons = self.parse_conjunction()
        if self.peek().kind == "PUNCT" and self.peek().text == ";":
            self.advance()
        tok = self.peek()
        if tok.kind != "EOF":
            if tok.kind == "IDENT" and tok.text.upper() in _UNSUPPORTED:
                self.advance()
                self.reject_unsupported(tok)
            raise self.error(f"unexpected {tok.text!r} after end of query")
        return _assemble(relations, projections, comparisons)

    def parse_projections(self) -> list[_RawRef]:
        out = []
        while True:
            tok = self.peek()
            if tok.kind == "PUNCT" and tok.text == "*":
                raise self.error("unsupported construct: star projection")
            out.append(self.column_ref())
            if self.at_keyword("AS"):
                self.advance()
                self.ident("output alias")
            if self.peek().kind == "PUNCT" and self.peek().text == ",":
                self.advance()
                continue
            return out

    def column_ref(self) -> _RawRef:
        tok = self.ident("column reference")
        dot = self.peek()
        if dot.kind != "PUNCT" or dot.text != ".":
            raise self.error(
                f"expected '.' after identifier {tok.text!r} (columns must be alias-qualified)"
            )
        self.advance()
        col = self.ident("column name")
        return _RawRef(tok.text.lower(), col.text.lower(), tok.line, tok.column)

    def parse_relations(self) -> list[tuple[str, str, _Token]]:
        out = []
        while True:
            tok = self.peek()
            if tok.kind == "PUNCT" and tok.text == "(":
                nxt = self.tokens[self.pos + 1]
                if nxt.kind == "IDENT" and nxt.text.upper() == "SELECT":
                    raise self.error("unsupported construct: subquery")
                raise self.error("unexpected '('")
            name_tok = self.ident("table name")
            alias = name_tok.text.lower()
            if self.at_keyword("AS"):
                self.advance()
                alias = self.ident("alias").text.lower()
            elif self.peek().kind == "IDENT" and self.peek().text.upper() not in _RESERVED:
                alias = self.advance().text.lower()
            out.append((alias, name_tok.text.lower(), name_tok))
            if self.peek().kind == "PUNCT" and self.peek().text == ",":
                self.advance()
                continue
            return out

    def parse_conjunction(self) -> list[tuple[object, str, object, _Token]]:
        out = []
        while True:
            out.append(self.parse_comparison())
            if self.at_keyword("AND"):
                self.advance()
                continue
            return out

    def parse_comparison(self) -> tuple[object, str, object, _Token]:
        anchor = self.peek()
        left = self.parse_operand()
        op_tok = self.peek()
        if op_tok.kind == "IDENT" and op_tok.text.upper() in _UNSUPPORTED:
            self.advance()
            self.reject_unsupported(op_tok)
        if op_tok.kind != "OP":
            raise self.error("expected comparison operator")
        self.advance()
        if op_tok.text in ("<>", "!="):
            raise ParseError(
                f"unsupported construct: {op_tok.text} comparison", op_tok.line, op_tok.column
            )
        right = self.parse_operand()
        return (left, op_tok.text, right, anchor)

    def parse_operand(self) -> object:
        tok = self.peek()
        if tok.kind == "PUNCT" and tok.text == "(":
            nxt = self.tokens[self.pos + 1]
            if nxt.kind == "IDENT" and nxt.text.upper() == "SELECT":
                raise self.error("unsupported construct: subquery")
            raise self.error("unexpected '('")
        if tok.kind == "NUMBER" or tok.kind == "STRING":
            self.advance()
            return tok.value
        if tok.kind == "OP":
            raise self.error("expected column reference or literal")
        return self.column_ref()


_FLIP = {"<": ">", ">": "<", "<=": ">=", ">=": "<=", "=": "="}


def _assemble(
    relations: list[tuple[str, str, _Token]],
    projections: list[_RawRef],
    comparisons: list[tuple[object, str, object, _Token]],
) -> QueryGraph:
    alias_map: dict[str, str] = {}
    for alias, table, tok in relations:
        if alias in alias_map:
            raise ParseError(f"duplicate alias '{alias}'", tok.line, tok.column)
        alias_map[alias] = table

    def resolve(raw: _RawRef) -> ColumnRef:
        if raw.alias not in alias_map:
            raise ParseError(f"unknown alias '{raw.alias}'", raw.line, raw.column_no)
        return ColumnRef(alias=raw.alias, column=raw.column, table=alias_map[raw.alias])

    proj = tuple(resolve(r) for r in projections)

    edges: list[Predicate] = []
    filters: list[Predicate] = []
    for left, op, right, anchor in comparisons:
        left_is_col = isinstance(left, _RawRef)
        right_is_col = isinstance(right, _RawRef)
        if left_is_col and right_is_col:
            a, b = resolve(left), resolve(right)
            if a.alias == b.alias:
                raise ParseError(
                    f"self-join edge on alias '{a.alias}' is not supported",
                    anchor.line,
                    anchor.column,
                )
            if op != "=":
                raise ParseError(
                    "unsupported construct: non-equijoin column comparison",
                    anchor.line,
                    anchor.column,
                )
            if (b.alias, b.column) < (a.alias, a.column):
                a, b = b, a
            edges.append(Predicate(kind=PredicateKind.JOIN, target=a, op="=", operand=b))
            continue
        if not left_is_col and not right_is_col:
            raise ParseError(
                "unsupported construct: constant comparison", anchor.line, anchor.column
            )
        if left_is_col:
            ref, literal = resolve(left), right
        else:
            ref, literal, op = resolve(right), left, _FLIP[op]
        kind = PredicateKind.EQUALITY if op == "=" else PredicateKind.RANGE
        filters.append(Predicate(kind=kind, target=ref, op=op, operand=literal))

    _check_connected(alias_map, edges)

    edges.sort(
        key=lambda p: (p.target.alias, p.target.column, p.operand.alias, p.operand.column)
    )
    filters.sort(
        key=lambda p: (
            p.target.alias,
            p.target.column,
            p.op,
            type(p.operand).__name__,
            repr(p.operand),
        )
    )
    rels = tuple(sorted((a, t) for a, (t) in alias_map.items()))
    return QueryGraph(
        relations=rels, join_edges=tuple(edges), filters=tuple(filters), projections=proj
    )


def _check_connected(alias_map: dict[str, str], edges: list[Predicate]):
    if len(alias_map) <= 1:
        return
    adj: dict[str, set[str]] = {a: set() for a in alias_map}
    for e in edges:
        adj[e.target.alias].add(e.operand.alias)
        adj[e.operand.alias].add(e.target.alias)
    start = next(iter(alias_map))
    seen = {start}
    frontier = [start]
    while frontier:
        cur = frontier.pop()
        for nxt in adj[cur]:
            if nxt not in seen:
                seen.add(nxt)
                frontier.append(nxt)
    missing = sorted(set(alias_map) - seen)
    if missing:
        raise ParseError(
            "disconnected join graph: no join path reaches "
            + ", ".join(f"'{a}'" for a in missing)
        )


def parse_query(text: str) -> QueryGraph:
    """Parse query text into a canonical QueryGraph.

    Parameters
    ----------
    text : str
        UTF-8 query text in the supported subset.

    Returns
    -------
    QueryGraph

    Raises
    ------
    ParseError
        On syntax errors (with line/column), unsupported constructs
        (reported by name), unknown or duplicate aliases, self-join
        edges, and disconnected join graphs.
    """
    return _Parser(text).parse()


def _render_literal(value: Literal) -> str:
    if isinstance(value, str):
        return "'" + value.replace("'", "''") + "'"
    return repr(value)


def render_query(g: QueryGraph) -> str:
    """Render a QueryGraph back to canonical SQL text.

    Parsing the rendered text yields a graph equal to ``g``.
    """
    parts = ["SELECT ", ", ".join(r.render() for r in g.projections)]
    parts.append(" FROM ")
    parts.append(", ".join(f"{table} AS {alias}" for alias, table in g.relations))
    conjuncts = [f"{e.target.render()} = {e.operand.render()}" for e in g.join_edges]
    conjuncts.extend(
        f"{p.target.render()} {p.op} {_render_literal(p.operand)}" for p in g.filters
    )
    if conjuncts:
        parts.append(" WHERE ")
        parts.append(" AND ".join(conjuncts))
    return "".join(parts)
