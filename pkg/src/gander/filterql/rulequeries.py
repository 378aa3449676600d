"""Compilation of the sixteen rules into filter queries.

Each compiled query selects exactly the packets the rule engine marks
anomalous (not-applicable packets are excluded via stream_seq guards); the
equivalence is property-tested against the engine on randomized tables.
"""
from __future__ import annotations

from ..errors import UsageError
from ..model import Protocol, RuleId
from ..rules.specs import (
    GOOSE_FLOOD_GAP_US,
    GOOSE_TIME_DIGITS,
    SV_FLOOD_SPAN_US,
    SV_INTERVAL_MAX_US,
    SV_INTERVAL_MIN_US,
    SV_TIME_DIGITS,
    SystemFrequency,
)
from .ast import Query
from .parser import parse_query


def _identity_clause(fields) -> str:
    return " AND ".join(f"{f} = ref_{f}" for f in fields)


def compile_rule(rule_id: RuleId,
                 freq: SystemFrequency = SystemFrequency.F60) -> Query:
    """Return the query selecting the packets ``rule_id`` flags."""
    cnt_max = freq.smpcnt_max
    texts = {
        RuleId.GR1: (
            "SELECT ROWS FROM goose WHERE stream_seq >= 1"
            " AND data1 = valid_data1 AND data2 = valid_data2"
            " AND sqnum != valid_sqnum + 1"),
        RuleId.GR2: (
            "SELECT ROWS FROM goose WHERE stream_seq >= 1"
            " AND NOT (data1 = valid_data1 AND data2 = valid_data2)"
            " AND NOT (stnum = valid_stnum + 1 AND sqnum = 0)"),
        RuleId.GR3: (
            "SELECT ROWS FROM goose WHERE stream_seq >= 1"
            " AND stnum < max_stnum"),
        RuleId.GR4: (
            "SELECT ROWS FROM goose WHERE stream_seq >= 1 AND NOT ("
            + _identity_clause(("dm", "sm", "type", "appid", "dataset",
                                "goid")) + ")"),
        RuleId.GR5: (
            f"SELECT ROWS FROM goose WHERE time_format_digits !="
            f" {GOOSE_TIME_DIGITS}"),
        RuleId.GR6: (
            f"SELECT ROWS FROM goose WHERE stream_seq >= 9 AND"
            f" window_count(9, delta(time) <= {GOOSE_FLOOD_GAP_US}us) >= 9"),
        RuleId.GR7: (
            "SELECT ROWS FROM goose WHERE stream_seq >= 1"
            " AND delta(time) > 10s"),
        RuleId.GR8: (
            "SELECT ROWS FROM goose WHERE stream_seq >= 1"
            " AND NOT (data1 = valid_data1 AND data2 = valid_data2)"
            " AND stnum = valid_stnum AND sqnum > valid_sqnum"),
        RuleId.SR1: (
            f"SELECT ROWS FROM sv WHERE smpcnt > {cnt_max}"),
        RuleId.SR2: (
            f"SELECT ROWS FROM sv WHERE stream_seq >= 1 AND NOT ("
            f"(smpcnt > valid_smpcnt AND smpcnt <= {cnt_max})"
            f" OR (smpcnt = 0 AND valid_smpcnt = {cnt_max}))"),
        RuleId.SR3: (
            f"SELECT ROWS FROM sv WHERE stream_seq >= 1 AND NOT ("
            f"smpcnt >= valid_smpcnt"
            f" OR (smpcnt = 0 AND valid_smpcnt = {cnt_max}))"),
        RuleId.SR4: (
            "SELECT ROWS FROM sv WHERE stream_seq >= 1 AND NOT ("
            + _identity_clause(("dm", "sm", "type", "appid", "svid")) + ")"),
        RuleId.SR5: (
            f"SELECT ROWS FROM sv WHERE time_format_digits !="
            f" {SV_TIME_DIGITS}"),
        RuleId.SR6: (
            f"SELECT ROWS FROM sv WHERE stream_seq >= 1 AND NOT ("
            f"delta(time) >= {SV_INTERVAL_MIN_US}us"
            f" AND delta(time) <= {SV_INTERVAL_MAX_US}us)"),
        RuleId.SR7: (
            f"SELECT ROWS FROM sv WHERE stream_seq >= 11"
            f" AND delta(time, 11) <= {SV_FLOOD_SPAN_US}us"),
        RuleId.SR8: (
            f"SELECT ROWS FROM sv WHERE stream_seq >= 1 AND NOT ("
            f"smpcnt = valid_smpcnt + 1"
            f" OR (smpcnt = 0 AND valid_smpcnt = {cnt_max}))"),
    }
    text = texts.get(rule_id)
    if text is None:
        raise UsageError(f"unknown rule {rule_id!r}")
    return parse_query(text)


def queries_for_protocol(protocol: Protocol,
                         freq: SystemFrequency = SystemFrequency.F60) -> dict:
    """All compiled rule queries for one protocol, keyed by RuleId."""
    return {r: compile_rule(r, freq) for r in RuleId if r.protocol is protocol}
