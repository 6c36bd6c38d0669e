"""Clause-level SQL token extraction.

Only the clauses that feed categorical features are understood: function
calls in SELECT lists, relations in FROM lists (comma joins, JOIN chains and
derived tables), and GROUP BY / ORDER BY column lists.  Everything else is
skimmed with a parenthesis-aware scanner that still descends into nested
subqueries, so relations and function calls are collected from every
(sub-)query block of the statement.

Case is normalized: function names upper case, relation and column names
lower case.  Quoted identifiers keep their spelling.  Aliases are not
resolved.  An unqualified GROUP BY / ORDER BY column in a block that reads
from exactly one table is qualified with that table's name.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field

from ..errors import ParseError

FUNCTION_CALL = "function_call"
TABLE_REFERENCE = "table_reference"
GROUP_BY = "group_by"
ORDER_BY = "order_by"
SQL_FEATURES = (FUNCTION_CALL, TABLE_REFERENCE, GROUP_BY, ORDER_BY)

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>--[^\n]*|/\*.*?\*/)
  | (?P<str>'(?:[^']|'')*')
  | (?P<qident>"(?:[^"]|"")*"|`[^`]*`|\[[^\]]*\])
  | (?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_$]*)
  | (?P<param>[:@$?][A-Za-z0-9_]*)
  | (?P<op><>|!=|<=|>=|\|\||::|[-+*/%=<>(),.;:!~^&|])
    """,
    re.VERBOSE | re.DOTALL,
)

KEYWORDS = frozenset(
    """
    ALL AND ANY AS ASC BETWEEN BY CASE CROSS CURRENT DATE DESC DISTINCT ELSE END ESCAPE
    EXCEPT EXISTS FALSE FETCH FILTER FIRST FOLLOWING FOR FROM FULL GROUP GROUPING HAVING
    ILIKE IN INNER INTERSECT INTERVAL INTO IS JOIN LAST LATERAL LEFT LIKE LIMIT NATURAL
    NEXT NOT NULL NULLS OFFSET ON ONLY OR ORDER OUTER OVER PARTITION PRECEDING QUALIFY
    RANGE RECURSIVE RIGHT ROW ROWS SELECT SETS SOME THEN TIES TIME TIMESTAMP TOP TRUE
    UNBOUNDED UNION UNKNOWN USING VALUES WHEN WHERE WINDOW WITH WITHIN ROLLUP CUBE
    """.split()
)

_CLAUSE_START = frozenset({"FROM", "WHERE", "GROUP", "HAVING", "ORDER", "LIMIT", "OFFSET", "FETCH",
                           "WINDOW", "QUALIFY", "UNION", "INTERSECT", "EXCEPT"})
_JOIN_MODIFIERS = frozenset({"INNER", "LEFT", "RIGHT", "FULL", "OUTER", "CROSS", "NATURAL"})


@dataclass(slots=True)
class _Tok:
    kind: str
    text: str

    @property
    def upper(self) -> str:
        return self.text.upper() if self.kind == "ident" else ""

    def is_kw(self, *words: str) -> bool:
        return self.kind == "ident" and self.text.upper() in words


def tokenize(sql: str) -> list[_Tok]:
    toks = []
    pos = 0
    n = len(sql)
    while pos < n:
        if sql.startswith("/*", pos) and sql.find("*/", pos + 2) < 0:
            raise ParseError(f"unterminated comment at offset {pos}")
        m = _TOKEN_RE.match(sql, pos)
        if m is None:
            ch = sql[pos]
            if ch in "'\"`[":
                raise ParseError(f"unterminated literal or identifier at offset {pos}")
            raise ParseError(f"unexpected character {ch!r} at offset {pos}")
        kind = m.lastgroup
        if kind not in ("ws", "comment"):
            toks.append(_Tok(kind, m.group()))
        pos = m.end()
    return toks


@dataclass
class SqlFeatures:
    function_call: Counter = field(default_factory=Counter)
    table_reference: Counter = field(default_factory=Counter)
    group_by: Counter = field(default_factory=Counter)
    order_by: Counter = field(default_factory=Counter)
    # relation count of every block that has a FROM clause
    block_relations: list[int] = field(default_factory=list)

    def as_dict(self) -> dict[str, Counter]:
        return {f: getattr(self, f) for f in SQL_FEATURES}

    @property
    def num_joins(self) -> int:
        return max(0, sum(self.block_relations) - len(self.block_relations))


def _ident_name(tok: _Tok, lower: bool = True) -> str:
    if tok.kind == "qident":
        return tok.text[1:-1]
    return tok.text.lower() if lower else tok.text.upper()


class _Parser:
    def __init__(self, toks: list[_Tok]):
        self.toks = toks
        self.i = 0
        self.out = SqlFeatures()

    # -- helpers -------------------------------------------------------
    def peek(self, k: int = 0) -> _Tok | None:
        j = self.i + k
        return self.toks[j] if j < len(self.toks) else None

    def at_end(self) -> bool:
        return self.i >= len(self.toks)

    def _opens_subquery(self) -> bool:
        t, nxt = self.peek(), self.peek(1)
        return t is not None and t.text == "(" and nxt is not None and nxt.is_kw("SELECT", "WITH")

    def _dotted_name(self) -> tuple[str, bool]:
        """Consume ``a.b.c``; return the normalized name and whether it was qualified."""
        parts = [_ident_name(self.toks[self.i])]
        self.i += 1
        while self.peek() is not None and self.peek().text == "." and self.peek(1) is not None \
                and self.peek(1).kind in ("ident", "qident"):
            parts.append(_ident_name(self.toks[self.i + 1]))
            self.i += 2
        return ".".join(parts), len(parts) > 1

    def _dotted_upper(self) -> str:
        parts = [_ident_name(self.toks[self.i], lower=False)]
        self.i += 1
        while self.peek() is not None and self.peek().text == "." and self.peek(1) is not None \
                and self.peek(1).kind in ("ident", "qident"):
            parts.append(_ident_name(self.toks[self.i + 1], lower=False))
            self.i += 2
        return ".".join(parts)

    # -- statements ----------------------------------------------------
    def statement(self) -> SqlFeatures:
        if self.at_end():
            raise ParseError("empty statement")
        self.query()
        while self.peek() is not None and self.peek().text == ";":
            self.i += 1
        if not self.at_end():
            raise ParseError(f"unexpected trailing token {self.peek().text!r}")
        return self.out

    def query(self) -> None:
        t = self.peek()
        if t is not None and t.is_kw("WITH"):
            self.i += 1
            if self.peek() is not None and self.peek().is_kw("RECURSIVE"):
                self.i += 1
            while True:
                if self.peek() is None or self.peek().kind not in ("ident", "qident"):
                    raise ParseError("expected a CTE name after WITH")
                self.i += 1
                if self.peek() is not None and self.peek().text == "(":
                    self._skip_group(collect=None)
                if self.peek() is None or not self.peek().is_kw("AS"):
                    raise ParseError("expected AS in WITH clause")
                self.i += 1
                if not self._opens_subquery():
                    raise ParseError("expected a parenthesized query in WITH clause")
                self._subquery()
                if self.peek() is not None and self.peek().text == ",":
                    self.i += 1
                    continue
                break
        self.compound()

    def compound(self) -> None:
        self.core()
        while self.peek() is not None and self.peek().is_kw("UNION", "INTERSECT", "EXCEPT"):
            self.i += 1
            if self.peek() is not None and self.peek().is_kw("ALL", "DISTINCT"):
                self.i += 1
            self.core()

    def core(self) -> None:
        t = self.peek()
        if t is not None and t.text == "(":
            self.i += 1
            self.query()
            self._expect(")")
            self._tail_clauses(tables=[], aliases=set())
            return
        if t is None or not t.is_kw("SELECT"):
            raise ParseError(f"expected SELECT, found {t.text if t else 'end of input'!r}")
        self.i += 1
        while self.peek() is not None and self.peek().is_kw("DISTINCT", "ALL"):
            self.i += 1
        if self.peek() is not None and self.peek().is_kw("TOP"):
            self.i += 2
        aliases: set[str] = set()
        self._scan_expr(self.out.function_call, aliases=aliases)
        tables: list[tuple[str, bool]] = []
        if self.peek() is not None and self.peek().is_kw("FROM"):
            self.i += 1
            tables = self._from_list()
            self.out.block_relations.append(len(tables))
        self._tail_clauses(tables, aliases)

    def _tail_clauses(self, tables, aliases) -> None:
        plain = [name for name, is_table in tables if is_table]
        qualifier = plain[0] if len(tables) == 1 and plain else None
        while True:
            t = self.peek()
            if t is None:
                return
            if t.is_kw("WHERE", "HAVING", "QUALIFY"):
                self.i += 1
                self._scan_expr(None)
            elif t.is_kw("GROUP"):
                self._expect_kw("GROUP")
                self._expect_kw("BY")
                self._column_list(self.out.group_by, qualifier, aliases)
            elif t.is_kw("ORDER"):
                self._expect_kw("ORDER")
                self._expect_kw("BY")
                self._column_list(self.out.order_by, qualifier, aliases)
            elif t.is_kw("LIMIT", "OFFSET", "FETCH", "WINDOW"):
                self.i += 1
                self._scan_expr(None)
            else:
                return

    # -- FROM ------------------------------------------------------------
    def _from_list(self) -> list[tuple[str, bool]]:
        tables = [self._relation()]
        while True:
            t = self.peek()
            if t is None:
                break
            if t.text == ",":
                self.i += 1
                tables.append(self._relation())
            elif t.is_kw("JOIN") or t.upper in _JOIN_MODIFIERS:
                while self.peek() is not None and self.peek().upper in _JOIN_MODIFIERS:
                    self.i += 1
                self._expect_kw("JOIN")
                tables.append(self._relation())
                if self.peek() is not None and self.peek().is_kw("ON"):
                    self.i += 1
                    self._scan_expr(None, stop_at_join=True)
                elif self.peek() is not None and self.peek().is_kw("USING"):
                    self.i += 1
                    self._skip_group(collect=None)
            else:
                break
        return tables

    def _relation(self) -> tuple[str, bool]:
        t = self.peek()
        if t is None:
            raise ParseError("expected a relation in FROM clause")
        if t.is_kw("LATERAL"):
            self.i += 1
            t = self.peek()
        name, is_table = "", False
        if self._opens_subquery():
            self._subquery()
        elif t is not None and t.text == "(":
            # parenthesized join expression
            self.i += 1
            inner = self._from_list()
            self._expect(")")
            # joins inside the parentheses count like a block of their own
            self.out.block_relations.append(len(inner))
        elif t is not None and t.kind in ("ident", "qident") and not (t.kind == "ident" and t.upper in KEYWORDS):
            name, _ = self._dotted_name()
            is_table = True
            if self.peek() is not None and self.peek().text == "(":
                # table-valued function
                self._skip_group(collect=None)
            self.out.table_reference[name] += 1
        else:
            raise ParseError(f"expected a relation, found {t.text if t else 'end of input'!r}")
        self._alias()
        return name, is_table

    def _alias(self) -> None:
        t = self.peek()
        if t is not None and t.is_kw("AS"):
            self.i += 1
            t = self.peek()
            if t is None or t.kind not in ("ident", "qident"):
                raise ParseError("expected alias after AS")
        if t is not None and (t.kind == "qident" or (t.kind == "ident" and t.upper not in KEYWORDS)):
            self.i += 1
            if self.peek() is not None and self.peek().text == "(":
                self._skip_group(collect=None)

    # -- expressions -----------------------------------------------------
    def _subquery(self) -> None:
        self._expect("(")
        self.query()
        self._expect(")")

    def _skip_group(self, collect) -> None:
        """Consume a balanced ``( ... )`` group, descending into subqueries."""
        self._expect("(")
        self._scan_expr(collect, nested=True)
        self._expect(")")

    def _scan_expr(self, functions: Counter | None, *, nested: bool = False, stop_at_join: bool = False,
                   aliases: set | None = None) -> None:
        """Walk an expression up to the next clause boundary at depth 0.

        Function names are counted into ``functions`` when given.
        """
        while True:
            t = self.peek()
            if t is None:
                return
            if t.text == ")" or t.text == ";":
                return
            if not nested:
                if t.kind == "ident" and t.upper in _CLAUSE_START:
                    return
                if t.text == ",":
                    if stop_at_join:
                        return
            if stop_at_join and (t.is_kw("JOIN") or t.upper in _JOIN_MODIFIERS):
                return
            if t.text == "(":
                if self._opens_subquery():
                    self._subquery()
                else:
                    self._skip_group(functions)
                continue
            if t.kind in ("ident", "qident"):
                start = self.i
                if t.kind == "ident" and t.upper in KEYWORDS:
                    self.i += 1
                    if t.upper == "AS" and aliases is not None and self.peek() is not None \
                            and self.peek().kind in ("ident", "qident"):
                        aliases.add(_ident_name(self.peek()))
                        self.i += 1
                    continue
                fname = self._dotted_upper()
                if self.peek() is not None and self.peek().text == "(":
                    if functions is not None:
                        functions[fname] += 1
                    continue
                if aliases is not None and self.peek() is not None and self.peek().kind in ("ident", "qident") \
                        and not (self.peek().kind == "ident" and self.peek().upper in KEYWORDS):
                    # implicit alias: ``expr name``
                    aliases.add(_ident_name(self.peek()))
                    self.i += 1
                assert self.i > start
                continue
            self.i += 1

    def _column_list(self, sink: Counter, qualifier: str | None, aliases: set) -> None:
        while True:
            self._column_expr(sink, qualifier, aliases, depth=0)
            if self.peek() is not None and self.peek().text == ",":
                self.i += 1
                continue
            return

    def _column_expr(self, sink: Counter, qualifier, aliases, depth: int) -> None:
        while True:
            t = self.peek()
            if t is None or t.text in (")", ";"):
                return
            if depth == 0 and (t.text == "," or (t.kind == "ident" and t.upper in _CLAUSE_START)):
                return
            if t.text == "(":
                if self._opens_subquery():
                    self._subquery()
                else:
                    self.i += 1
                    while True:
                        self._column_expr(sink, qualifier, aliases, depth + 1)
                        if self.peek() is not None and self.peek().text == ",":
                            self.i += 1
                            continue
                        break
                    self._expect(")")
                continue
            if t.kind in ("ident", "qident"):
                if t.kind == "ident" and t.upper in KEYWORDS:
                    self.i += 1
                    continue
                name, qualified = self._dotted_name()
                if self.peek() is not None and self.peek().text == "(":
                    continue  # function name, arguments follow
                if not qualified and qualifier is not None and name not in aliases:
                    name = f"{qualifier}.{name}"
                sink[name] += 1
                continue
            self.i += 1

    # -- token expectations ----------------------------------------------
    def _expect(self, text: str) -> None:
        t = self.peek()
        if t is None or t.text != text:
            raise ParseError(f"expected {text!r}, found {t.text if t else 'end of input'!r}")
        self.i += 1

    def _expect_kw(self, word: str) -> None:
        t = self.peek()
        if t is None or not t.is_kw(word):
            raise ParseError(f"expected {word}, found {t.text if t else 'end of input'!r}")
        self.i += 1


def parse(sql: str) -> SqlFeatures:
    """Parse one statement; raise ``ParseError`` when it is malformed."""
    toks = tokenize(sql)
    depth = 0
    for t in toks:
        if t.text == "(":
            depth += 1
        elif t.text == ")":
            depth -= 1
            if depth < 0:
                raise ParseError("unbalanced parentheses")
    if depth:
        raise ParseError("unbalanced parentheses")
    return _Parser(toks).statement()


def extract_categorical(sql: str) -> dict[str, Counter]:
    """Token multisets of the four SQL-derived categorical features."""
    if not sql or not sql.strip():
        raise ParseError("empty SQL text")
    return parse(sql).as_dict()
