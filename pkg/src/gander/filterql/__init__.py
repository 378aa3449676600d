"""A minimal filter-query language over message tables: parser, planner,
and evaluator, plus the rule-to-query compiler used by the validation
stage."""

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
    render_expr,
)
from .parser import parse_query
from .rulequeries import compile_rule, queries_for_protocol
from .runtime import run_prepared, run_query
from .tables import PreparedTable, prepare_table

__all__ = [
    "And", "Cmp", "Delta", "Field", "Not", "Num", "Offset", "Or",
    "Projection", "Query", "QueryResult", "Str", "WindowCount",
    "render_expr", "parse_query", "compile_rule", "queries_for_protocol",
    "run_prepared", "run_query", "PreparedTable", "prepare_table",
]
