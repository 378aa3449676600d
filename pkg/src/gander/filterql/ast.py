"""Filter-query AST nodes and the canonical printer.

The language is deliberately small: field/literal comparisons, boolean
connectives, consecutive-row time deltas (optionally lagged), and windowed
predicate counts, all implicitly partitioned per stream.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Tuple, Union

from ..model import Protocol

_UNIT_SCALE = {"us": 1, "ms": 1_000, "s": 1_000_000}


class Projection(enum.Enum):
    ROWS = "ROWS"
    COUNT = "COUNT"


@dataclass(frozen=True)
class Field:
    name: str

    def render(self) -> str:
        return self.name


@dataclass(frozen=True)
class Num:
    magnitude: int
    unit: Optional[str] = None  # None, "us", "ms", or "s"

    @property
    def value(self) -> int:
        return self.magnitude * _UNIT_SCALE[self.unit] if self.unit else self.magnitude

    def render(self) -> str:
        return f"{self.magnitude}{self.unit or ''}"


@dataclass(frozen=True)
class Str:
    value: str

    def render(self) -> str:
        escaped = self.value.replace("\\", "\\\\").replace("'", "\\'")
        return f"'{escaped}'"


@dataclass(frozen=True)
class Delta:
    lag: int = 1

    def render(self) -> str:
        return "delta(time)" if self.lag == 1 else f"delta(time, {self.lag})"


@dataclass(frozen=True)
class Offset:
    """A numeric atom plus or minus an integer constant."""

    base: Union[Field, Delta]
    amount: int

    def render(self) -> str:
        sign = "+" if self.amount >= 0 else "-"
        return f"{self.base.render()} {sign} {abs(self.amount)}"


@dataclass(frozen=True)
class WindowCount:
    """Count of the last ``n`` same-stream rows (current included) whose
    predicate holds."""

    n: int
    predicate: "Expr"

    def render(self) -> str:
        return f"window_count({self.n}, {render_expr(self.predicate)})"


Atom = Union[Field, Num, Str, Delta, Offset, WindowCount]


@dataclass(frozen=True)
class Cmp:
    op: str  # = != < <= > >=
    left: Atom
    right: Atom


@dataclass(frozen=True)
class And:
    items: Tuple["Expr", ...]


@dataclass(frozen=True)
class Or:
    items: Tuple["Expr", ...]


@dataclass(frozen=True)
class Not:
    item: "Expr"


Expr = Union[Cmp, And, Or, Not]


@dataclass(frozen=True)
class Query:
    source: Protocol
    projection: Projection
    predicate: Expr

    def render(self) -> str:
        return (f"SELECT {self.projection.value} FROM {self.source.value} "
                f"WHERE {render_expr(self.predicate)}")


def render_expr(expr: Expr) -> str:
    if isinstance(expr, Cmp):
        return f"{expr.left.render()} {expr.op} {expr.right.render()}"
    if isinstance(expr, And):
        return " AND ".join(_grouped(e, inside="and") for e in expr.items)
    if isinstance(expr, Or):
        return " OR ".join(_grouped(e, inside="or") for e in expr.items)
    if isinstance(expr, Not):
        return f"NOT ({render_expr(expr.item)})"
    raise TypeError(f"not an expression: {expr!r}")


def _grouped(expr: Expr, inside: str) -> str:
    text = render_expr(expr)
    if inside == "and" and isinstance(expr, Or):
        return f"({text})"
    if inside == "or" and isinstance(expr, And):
        return f"({text})"
    return text


@dataclass(frozen=True)
class QueryResult:
    projection: Projection
    rows: Optional[Tuple[int, ...]] = None
    count: Optional[int] = None

    def __post_init__(self):
        if self.projection is Projection.ROWS:
            assert self.rows is not None and self.count is None
        else:
            assert self.count is not None and self.rows is None
