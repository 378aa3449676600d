"""Query evaluation over prepared tables.

Pure: identical inputs yield identical results. The predicate compiles to
closures over per-row context dicts; ``delta`` values that reach back past
the stream's start are undefined, and any comparison touching an undefined
value is false (use stream_seq guards to be explicit about boundaries).
"""
from __future__ import annotations

import operator
from typing import Callable, List, Optional, Sequence

from ..errors import QueryTypeError
from ..model import MacAddress, Message
from ..rules.specs import SystemFrequency
from .ast import (
    And,
    Cmp,
    Delta,
    Field,
    Not,
    Num,
    Offset,
    Or,
    Projection,
    Query,
    QueryResult,
    Str,
    WindowCount,
)
from .parser import FIELD_CATALOG
from .tables import PreparedTable, prepare_table

_OPS = {
    "=": operator.eq, "!=": operator.ne, "<": operator.lt,
    "<=": operator.le, ">": operator.gt, ">=": operator.ge,
}


class _Compiler:
    """Compiles a predicate into row -> bool over a prepared table."""

    def __init__(self, prep: PreparedTable):
        self.prep = prep
        self.fields = FIELD_CATALOG[prep.protocol]

    def atom(self, node, other=None) -> Callable[[dict], object]:
        if isinstance(node, Num):
            value = node.value
            return lambda ctx: value
        if isinstance(node, Str):
            value: object = node.value
            if isinstance(other, Field) and self.fields.get(other.name) == "mac":
                value = MacAddress.from_text(
                    node.value,
                    multicast_pad=other.name in ("dm", "ref_dm")).octets
            return lambda ctx: value
        if isinstance(node, Field):
            name = node.name
            return lambda ctx: ctx[name]
        if isinstance(node, Delta):
            lag = node.lag
            times = self.prep.times

            def delta(ctx):
                pos = ctx["__pos"]
                if pos < lag:
                    return None
                series = times[ctx["__stream"]]
                return series[pos] - series[pos - lag]
            return delta
        if isinstance(node, Offset):
            base = self.atom(node.base)
            amount = node.amount

            def offset(ctx):
                v = base(ctx)
                return None if v is None else v + amount
            return offset
        if isinstance(node, WindowCount):
            counts = self._window_counts(node)
            return lambda ctx: counts[ctx["__row"]]
        raise QueryTypeError("unsupported value", repr(node))

    def _window_counts(self, node: WindowCount) -> List[int]:
        pred = self.expr(node.predicate)
        counts = [0] * len(self.prep.rows)
        n = node.n
        for rows in self.prep.stream_rows:
            hits: List[int] = []
            running = 0
            for local, row in enumerate(rows):
                ctx = self.prep.ctx[row]
                ctx["__row"] = row
                hit = 1 if pred(ctx) else 0
                hits.append(hit)
                running += hit
                if local >= n:
                    running -= hits[local - n]
                counts[row] = running
        return counts

    def expr(self, node) -> Callable[[dict], bool]:
        if isinstance(node, Cmp):
            left = self.atom(node.left, other=node.right)
            right = self.atom(node.right, other=node.left)
            op = _OPS[node.op]

            def cmp(ctx):
                lv = left(ctx)
                rv = right(ctx)
                if lv is None or rv is None:
                    return False
                return op(lv, rv)
            return cmp
        if isinstance(node, And):
            parts = [self.expr(e) for e in node.items]
            return lambda ctx: all(p(ctx) for p in parts)
        if isinstance(node, Or):
            parts = [self.expr(e) for e in node.items]
            return lambda ctx: any(p(ctx) for p in parts)
        if isinstance(node, Not):
            inner = self.expr(node.item)
            return lambda ctx: not inner(ctx)
        raise QueryTypeError("not a boolean expression", repr(node))


def run_prepared(query: Query, prep: PreparedTable) -> QueryResult:
    if prep.protocol is not query.source:
        raise QueryTypeError("query source does not match the prepared table",
                             query.source.value)
    pred = _Compiler(prep).expr(query.predicate)
    matches = []
    for row, ctx in enumerate(prep.ctx):
        ctx["__row"] = row
        if pred(ctx):
            matches.append(ctx["seq_index"])
    if query.projection is Projection.ROWS:
        return QueryResult(Projection.ROWS, rows=tuple(matches))
    return QueryResult(Projection.COUNT, count=len(matches))


def run_query(query: Query, table: Sequence[Message],
              freq: SystemFrequency = SystemFrequency.F60,
              prep: Optional[PreparedTable] = None) -> QueryResult:
    """Run a query over an ordered message table.

    The table may mix protocols; the query's FROM clause selects its own.
    Pass a PreparedTable to amortize preparation across queries.
    """
    if prep is None:
        prep = prepare_table(table, query.source, freq)
    return run_prepared(query, prep)
