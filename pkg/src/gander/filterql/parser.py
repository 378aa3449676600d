"""Tokenizer, recursive-descent parser, and type checker for filter queries.

Grammar (keywords case-insensitive):

    query      := SELECT (ROWS|COUNT) FROM (goose|sv) WHERE expr
    expr       := and_expr (OR and_expr)*
    and_expr   := unary (AND unary)*
    unary      := NOT unary | '(' expr ')' | comparison
    comparison := atom cmp_op atom
    atom       := value (('+'|'-') INT)?
    value      := INT | DURATION | STRING | IDENT
                | delta '(' time [',' INT] ')'
                | window_count '(' INT ',' expr ')'

INT is decimal or 0x-hex; DURATION is an INT with a us/ms/s suffix.
"""
from __future__ import annotations

import re
from typing import Optional

from ..errors import QuerySyntaxError, QueryTypeError
from ..model import MacAddress, Protocol
from .ast import (
    And,
    Atom,
    Cmp,
    Delta,
    Expr,
    Field,
    Not,
    Num,
    Offset,
    Or,
    Projection,
    Query,
    Str,
    WindowCount,
)

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<hexnum>0[xX][0-9a-fA-F]+)
  | (?P<num>\d+)(?P<unit>us|ms|s)?
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<str>'(?:\\.|[^'\\])*'|"(?:\\.|[^"\\])*")
  | (?P<op><=|>=|!=|=|<|>)
  | (?P<punct>[(),+-])
""", re.VERBOSE)

_KEYWORDS = {"select", "rows", "count", "from", "where", "and", "or", "not",
             "delta", "window_count", "goose", "sv", "time"}


class _Token:
    __slots__ = ("kind", "text", "pos", "value", "unit")

    def __init__(self, kind, text, pos, value=None, unit=None):
        self.kind = kind
        self.text = text
        self.pos = pos
        self.value = value
        self.unit = unit


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise QuerySyntaxError(f"unexpected character {text[pos]!r}", pos)
        if m.lastgroup != "ws":
            if m.group("hexnum"):
                tokens.append(_Token("num", m.group(), pos,
                                     value=int(m.group(), 16)))
            elif m.group("num"):
                tokens.append(_Token("num", m.group(), pos,
                                     value=int(m.group("num")),
                                     unit=m.group("unit")))
            elif m.group("ident"):
                word = m.group().lower()
                kind = word if word in _KEYWORDS else "ident"
                tokens.append(_Token(kind, word, pos))
            elif m.group("str"):
                raw = m.group()[1:-1]
                value = re.sub(r"\\(.)", r"\1", raw)
                tokens.append(_Token("str", m.group(), pos, value=value))
            elif m.group("op"):
                tokens.append(_Token("op", m.group(), pos))
            else:
                tokens.append(_Token(m.group(), m.group(), pos))
        pos = m.end()
    tokens.append(_Token("eof", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self) -> _Token:
        return self.tokens[self.i]

    def next(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, kind: str) -> _Token:
        tok = self.next()
        if tok.kind != kind:
            raise QuerySyntaxError(
                f"expected {kind.upper()}, found {tok.text or 'end of input'!r}",
                tok.pos)
        return tok

    def parse_query(self) -> Query:
        self.expect("select")
        proj_tok = self.next()
        if proj_tok.kind == "rows":
            projection = Projection.ROWS
        elif proj_tok.kind == "count":
            projection = Projection.COUNT
        else:
            raise QuerySyntaxError("expected ROWS or COUNT", proj_tok.pos)
        self.expect("from")
        src_tok = self.next()
        if src_tok.kind == "goose":
            source = Protocol.GOOSE
        elif src_tok.kind == "sv":
            source = Protocol.SV
        else:
            raise QuerySyntaxError("expected goose or sv", src_tok.pos)
        self.expect("where")
        predicate = self.parse_expr()
        tail = self.next()
        if tail.kind != "eof":
            raise QuerySyntaxError(f"trailing input {tail.text!r}", tail.pos)
        return Query(source, projection, predicate)

    def parse_expr(self) -> Expr:
        # nested same-connective groups flatten, so the AST is canonical
        # under associativity and render/parse round-trips exactly
        items = []
        first = self.parse_and()
        items.extend(first.items if isinstance(first, Or) else (first,))
        while self.peek().kind == "or":
            self.next()
            nxt = self.parse_and()
            items.extend(nxt.items if isinstance(nxt, Or) else (nxt,))
        return items[0] if len(items) == 1 else Or(tuple(items))

    def parse_and(self) -> Expr:
        items = []
        first = self.parse_unary()
        items.extend(first.items if isinstance(first, And) else (first,))
        while self.peek().kind == "and":
            self.next()
            nxt = self.parse_unary()
            items.extend(nxt.items if isinstance(nxt, And) else (nxt,))
        return items[0] if len(items) == 1 else And(tuple(items))

    def parse_unary(self) -> Expr:
        tok = self.peek()
        if tok.kind == "not":
            self.next()
            return Not(self.parse_unary())
        if tok.kind == "(":
            self.next()
            inner = self.parse_expr()
            self.expect(")")
            return inner
        return self.parse_comparison()

    def parse_comparison(self) -> Expr:
        left = self.parse_atom()
        op = self.next()
        if op.kind != "op":
            raise QuerySyntaxError(
                f"expected a comparison operator, found "
                f"{op.text or 'end of input'!r}", op.pos)
        right = self.parse_atom()
        return Cmp(op.text, left, right)

    def parse_atom(self) -> Atom:
        base = self.parse_value()
        tok = self.peek()
        if tok.kind in ("+", "-"):
            self.next()
            amount_tok = self.expect("num")
            if amount_tok.unit:
                raise QuerySyntaxError("offsets are plain integers",
                                       amount_tok.pos)
            amount = amount_tok.value if tok.kind == "+" else -amount_tok.value
            if not isinstance(base, (Field, Delta)):
                raise QuerySyntaxError("offset applies to fields or delta()",
                                       tok.pos)
            return Offset(base, amount)
        return base

    def parse_value(self) -> Atom:
        tok = self.next()
        if tok.kind == "num":
            return Num(tok.value, tok.unit)
        if tok.kind == "str":
            return Str(tok.value)
        if tok.kind == "delta":
            self.expect("(")
            self.expect("time")
            lag = 1
            if self.peek().kind == ",":
                self.next()
                lag_tok = self.expect("num")
                if lag_tok.unit or lag_tok.value < 1:
                    raise QuerySyntaxError("delta lag must be a positive "
                                           "integer", lag_tok.pos)
                lag = lag_tok.value
            self.expect(")")
            return Delta(lag)
        if tok.kind == "window_count":
            self.expect("(")
            n_tok = self.expect("num")
            if n_tok.unit or n_tok.value < 1:
                raise QuerySyntaxError("window size must be a positive "
                                       "integer", n_tok.pos)
            self.expect(",")
            pred = self.parse_expr()
            self.expect(")")
            return WindowCount(n_tok.value, pred)
        if tok.kind == "ident":
            return Field(tok.text)
        raise QuerySyntaxError(
            f"expected a value, found {tok.text or 'end of input'!r}", tok.pos)


# --- type checking -----------------------------------------------------

_GOOSE_FIELDS = {
    "appid": "num", "type": "num", "stnum": "num", "sqnum": "num",
    "data1": "num", "data2": "num", "seq_index": "num", "stream_seq": "num",
    "valid_stnum": "num", "valid_sqnum": "num", "valid_data1": "num",
    "valid_data2": "num", "max_stnum": "num", "time_format_digits": "num",
    "ref_type": "num", "ref_appid": "num",
    "dataset": "text", "goid": "text", "ref_dataset": "text",
    "ref_goid": "text",
    "dm": "mac", "sm": "mac", "ref_dm": "mac", "ref_sm": "mac",
}
_SV_FIELDS = {
    "appid": "num", "type": "num", "smpcnt": "num", "seq_index": "num",
    "stream_seq": "num", "valid_smpcnt": "num", "time_format_digits": "num",
    "ref_type": "num", "ref_appid": "num",
    "svid": "text", "ref_svid": "text",
    "dm": "mac", "sm": "mac", "ref_dm": "mac", "ref_sm": "mac",
}

FIELD_CATALOG = {Protocol.GOOSE: _GOOSE_FIELDS, Protocol.SV: _SV_FIELDS}


def _atom_type(atom: Atom, fields, in_window: bool) -> str:
    if isinstance(atom, Num):
        return "num"
    if isinstance(atom, Str):
        return "text_or_mac"
    if isinstance(atom, Delta):
        return "num"
    if isinstance(atom, Offset):
        if _atom_type(atom.base, fields, in_window) != "num":
            raise QueryTypeError("offset on a non-numeric value",
                                 atom.render())
        return "num"
    if isinstance(atom, WindowCount):
        if in_window:
            raise QueryTypeError("window_count cannot nest", atom.render())
        _check_expr(atom.predicate, fields, in_window=True)
        return "num"
    if isinstance(atom, Field):
        ftype = fields.get(atom.name)
        if ftype is None:
            raise QueryTypeError("unknown field", atom.name)
        return ftype
    raise QueryTypeError("unsupported value", repr(atom))


def _check_cmp(cmp: Cmp, fields, in_window: bool) -> None:
    lt = _atom_type(cmp.left, fields, in_window)
    rt = _atom_type(cmp.right, fields, in_window)
    pair = {lt, rt}
    rendered = f"{cmp.left.render()} {cmp.op} {cmp.right.render()}"
    if "text_or_mac" in pair:
        other = (pair - {"text_or_mac"}).pop() if len(pair) == 2 else "text"
        if other == "num":
            raise QueryTypeError("string literal compared to a number",
                                 rendered)
        pair = {other}
    if pair == {"num"}:
        return
    if pair <= {"text"} or pair <= {"mac"}:
        if cmp.op not in ("=", "!="):
            raise QueryTypeError("ordering comparison on a non-numeric field",
                                 rendered)
        if isinstance(cmp.left, Str) and isinstance(cmp.right, Str):
            return
        # validate mac literals eagerly
        for side, other_side in ((cmp.left, cmp.right), (cmp.right, cmp.left)):
            if isinstance(side, Str) and isinstance(other_side, Field):
                if fields.get(other_side.name) == "mac":
                    try:
                        MacAddress.from_text(
                            side.value,
                            multicast_pad=other_side.name in ("dm", "ref_dm"))
                    except Exception:
                        raise QueryTypeError("not a MAC address literal",
                                             side.value) from None
        return
    raise QueryTypeError("mismatched comparison operand types", rendered)


def _check_expr(expr: Expr, fields, in_window: bool = False) -> None:
    if isinstance(expr, Cmp):
        _check_cmp(expr, fields, in_window)
    elif isinstance(expr, (And, Or)):
        for item in expr.items:
            _check_expr(item, fields, in_window)
    elif isinstance(expr, Not):
        _check_expr(expr.item, fields, in_window)
    else:
        raise QueryTypeError("not a boolean expression", repr(expr))


def check_types(query: Query) -> None:
    _check_expr(query.predicate, FIELD_CATALOG[query.source])


def parse_query(text: str) -> Query:
    """Parse and type-check a filter query."""
    query = _Parser(text).parse_query()
    check_types(query)
    return query
