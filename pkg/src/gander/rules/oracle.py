"""Brute-force re-implementation of all sixteen rules.

Works on a fully materialized message list with per-packet prefix scans and
no shared state machinery; exists purely as a differential check against
the streaming engine. Keep this file boring and literal.
"""
from __future__ import annotations

from typing import List, Sequence

from ..model import (
    GooseMessage,
    Message,
    Outcome,
    PacketVerdict,
    Protocol,
    RuleId,
    RuleVerdict,
)
from .specs import (
    GOOSE_FLOOD_GAP_US,
    GOOSE_MAX_GAP_US,
    GOOSE_TIME_DIGITS,
    SV_FLOOD_SPAN_US,
    SV_INTERVAL_MAX_US,
    SV_INTERVAL_MIN_US,
    SV_TIME_DIGITS,
    SystemFrequency,
    TrainingLevel,
)

C = Outcome.COMPLIANT
A = Outcome.ANOMALOUS
NA = Outcome.NOT_APPLICABLE


def _split_streams(messages: Sequence[Message]) -> List[List[int]]:
    """Group message indices into streams: exact (protocol, DM, SM, appid)
    match first, then earliest stream with the same goid/svid, else new."""
    streams: List[List[int]] = []
    by_key = {}
    by_sec = {}
    for idx, m in enumerate(messages):
        proto = Protocol.GOOSE if isinstance(m, GooseMessage) else Protocol.SV
        key = (proto, m.dm.octets, m.sm.octets, m.appid)
        sec = (proto, m.goid if proto is Protocol.GOOSE else m.svid)
        sid = by_key.get(key)
        if sid is None:
            sid = by_sec.get(sec)
        if sid is None:
            sid = len(streams)
            streams.append([])
            by_key[key] = sid
            by_sec[sec] = sid
        streams[sid].append(idx)
    return streams


def _goose_ident(m: GooseMessage) -> tuple:
    return (m.dm.octets, m.sm.octets, m.ethertype, m.appid, m.dataset, m.goid)


def _sv_ident(m) -> tuple:
    return (m.dm.octets, m.sm.octets, m.ethertype, m.appid, m.svid)


def _goose_accepted_before(pkts: Sequence[GooseMessage]) -> List[tuple]:
    """Accepted (stnum, sqnum, data1, data2) in force when judging index i.

    A transition is accepted when the counter rules raise no objection:
    unchanged data must carry sqnum+1; changed data must carry stnum+1 and
    sqnum 0 and must not mimic a retransmission; stnum must not fall below
    the historical maximum.
    """
    out: List[tuple] = []
    acc = None
    mx = 0
    for i, m in enumerate(pkts):
        out.append(acc)
        if i == 0:
            acc = (m.stnum, m.sqnum, m.data1, m.data2)
            mx = m.stnum
            continue
        st, sq, d1, d2 = acc
        regress = m.stnum < mx
        if m.data1 == d1 and m.data2 == d2:
            bad = m.sqnum != sq + 1 or regress
        else:
            gr2_bad = not (m.stnum == st + 1 and m.sqnum == 0)
            gr8_bad = m.stnum == st and m.sqnum > sq
            bad = gr2_bad or gr8_bad or regress
        if not bad:
            acc = (m.stnum, m.sqnum, m.data1, m.data2)
        if m.stnum > mx:
            mx = m.stnum
    return out


def _sv_accepted_before(pkts, cnt_max: int) -> List[int]:
    out: List[int] = []
    acc = None
    for i, m in enumerate(pkts):
        out.append(acc)
        if i == 0 or m.smpcnt == acc + 1 or (m.smpcnt == 0 and acc == cnt_max):
            acc = m.smpcnt
    return out


def _goose_rule_at(rule: RuleId, pkts: Sequence[GooseMessage], i: int,
                   acc_before: List[tuple]) -> Outcome:
    m = pkts[i]
    if rule is RuleId.GR5:
        ok = m.time.wellformed and m.time.fractional_digits == GOOSE_TIME_DIGITS
        return C if ok else A
    if i == 0:
        return NA
    if rule is RuleId.GR1:
        st, sq, d1, d2 = acc_before[i]
        if m.data1 != d1 or m.data2 != d2:
            return NA
        return C if m.sqnum == sq + 1 else A
    if rule is RuleId.GR2:
        st, sq, d1, d2 = acc_before[i]
        if m.data1 == d1 and m.data2 == d2:
            return NA
        return C if (m.stnum == st + 1 and m.sqnum == 0) else A
    if rule is RuleId.GR3:
        mx = max(p.stnum for p in pkts[:i])
        return A if m.stnum < mx else C
    if rule is RuleId.GR4:
        return C if _goose_ident(m) == _goose_ident(pkts[0]) else A
    if rule is RuleId.GR6:
        if i < 9:
            return NA
        flood = all(
            pkts[j + 1].time.micros - pkts[j].time.micros <= GOOSE_FLOOD_GAP_US
            for j in range(i - 9, i)
        )
        return A if flood else C
    if rule is RuleId.GR7:
        delta = m.time.micros - pkts[i - 1].time.micros
        return C if delta <= GOOSE_MAX_GAP_US else A
    if rule is RuleId.GR8:
        st, sq, d1, d2 = acc_before[i]
        if m.data1 == d1 and m.data2 == d2:
            return NA
        return A if (m.stnum == st and m.sqnum > sq) else C
    raise AssertionError(rule)


def _sv_rule_at(rule: RuleId, pkts, i: int, acc_before: List[int],
                cnt_max: int) -> Outcome:
    m = pkts[i]
    if rule is RuleId.SR1:
        return C if 0 <= m.smpcnt <= cnt_max else A
    if rule is RuleId.SR5:
        ok = m.time.wellformed and m.time.fractional_digits == SV_TIME_DIGITS
        return C if ok else A
    if i == 0:
        return NA
    if rule is RuleId.SR2:
        prev = acc_before[i]
        ok = (m.smpcnt > prev and m.smpcnt <= cnt_max) or (
            m.smpcnt == 0 and prev == cnt_max)
        return C if ok else A
    if rule is RuleId.SR3:
        prev = acc_before[i]
        ok = m.smpcnt >= prev or (m.smpcnt == 0 and prev == cnt_max)
        return C if ok else A
    if rule is RuleId.SR4:
        return C if _sv_ident(m) == _sv_ident(pkts[0]) else A
    if rule is RuleId.SR6:
        delta = m.time.micros - pkts[i - 1].time.micros
        return C if SV_INTERVAL_MIN_US <= delta <= SV_INTERVAL_MAX_US else A
    if rule is RuleId.SR7:
        if i < 11:
            return NA
        span = m.time.micros - pkts[i - 11].time.micros
        return A if span <= SV_FLOOD_SPAN_US else C
    if rule is RuleId.SR8:
        prev = acc_before[i]
        ok = m.smpcnt == prev + 1 or (m.smpcnt == 0 and prev == cnt_max)
        return C if ok else A
    raise AssertionError(rule)


def oracle_evaluate(messages: Sequence[Message], level: TrainingLevel,
                    freq: SystemFrequency = SystemFrequency.F60,
                    ) -> List[PacketVerdict]:
    """Evaluate a materialized list; must agree with evaluate_stream."""
    goose_rules = level.rules_for(Protocol.GOOSE)
    sv_rules = level.rules_for(Protocol.SV)
    results: List[PacketVerdict] = [None] * len(messages)  # type: ignore
    for indices in _split_streams(messages):
        pkts = [messages[i] for i in indices]
        if isinstance(pkts[0], GooseMessage):
            acc_before = _goose_accepted_before(pkts)
            for pos, idx in enumerate(indices):
                per_rule = tuple(
                    RuleVerdict(r, _goose_rule_at(r, pkts, pos, acc_before))
                    for r in goose_rules
                )
                anomalous = any(v.outcome is A for v in per_rule)
                results[idx] = PacketVerdict(messages[idx].seq_index,
                                             per_rule, anomalous)
        else:
            cnt_max = freq.smpcnt_max
            acc_before = _sv_accepted_before(pkts, cnt_max)
            for pos, idx in enumerate(indices):
                per_rule = tuple(
                    RuleVerdict(r, _sv_rule_at(r, pkts, pos, acc_before, cnt_max))
                    for r in sv_rules
                )
                anomalous = any(v.outcome is A for v in per_rule)
                results[idx] = PacketVerdict(messages[idx].seq_index,
                                             per_rule, anomalous)
    return results
