"""Streaming rule evaluation with per-stream state.

``eval_goose_rule``/``eval_sv_rule`` are pure given (message, state); the
``StreamEvaluator`` owns routing and state updates and carries an inlined
evaluation path sized for ~10^5 messages/s. Distinct streams may be
evaluated in parallel by independent evaluator instances; one evaluator is
strictly sequential.
"""
from __future__ import annotations

import warnings
from typing import Iterable, Iterator, List

from ..errors import MonotonicityWarning, UsageError
from ..model import (
    GooseMessage,
    Message,
    Outcome,
    PacketVerdict,
    Protocol,
    RuleId,
    RuleVerdict,
    StreamKey,
    SvMessage,
)
from .specs import (
    GOOSE_FLOOD_GAP_US,
    GOOSE_MAX_GAP_US,
    GOOSE_TIME_DIGITS,
    SV_FLOOD_SPAN_US,
    SV_INTERVAL_MAX_US,
    SV_INTERVAL_MIN_US,
    SV_TIME_DIGITS,
    StreamState,
    SystemFrequency,
    TrainingLevel,
    goose_identity,
    secondary_identity,
    sv_identity,
)

_COMPLIANT = Outcome.COMPLIANT
_ANOMALOUS = Outcome.ANOMALOUS
_NA = Outcome.NOT_APPLICABLE

# Verdicts are value objects from a tiny domain; interning them keeps the
# hot loop allocation-free.
_V = {
    r: {o: RuleVerdict(r, o) for o in Outcome}
    for r in RuleId
}


def _goose_outcome(rule_id: RuleId, cur: GooseMessage, state: StreamState) -> Outcome:
    n = state.count
    if rule_id is RuleId.GR5:
        ts = cur.time
        ok = ts.wellformed and ts.fractional_digits == GOOSE_TIME_DIGITS
        return _COMPLIANT if ok else _ANOMALOUS
    if n == 0:
        return _NA
    if rule_id is RuleId.GR1:
        if cur.data1 != state.accepted_data1 or cur.data2 != state.accepted_data2:
            return _NA  # a data change is GR2's transition, not a repeat
        return _COMPLIANT if cur.sqnum == state.accepted_sqnum + 1 else _ANOMALOUS
    if rule_id is RuleId.GR2:
        if cur.data1 == state.accepted_data1 and cur.data2 == state.accepted_data2:
            return _NA
        ok = cur.stnum == state.accepted_stnum + 1 and cur.sqnum == 0
        return _COMPLIANT if ok else _ANOMALOUS
    if rule_id is RuleId.GR3:
        return _ANOMALOUS if cur.stnum < state.max_stnum_seen else _COMPLIANT
    if rule_id is RuleId.GR4:
        ok = goose_identity(cur) == state.identity_ref
        return _COMPLIANT if ok else _ANOMALOUS
    if rule_id is RuleId.GR6:
        if n < 9:
            return _NA
        times = list(state.recent_times)[-9:]
        times.append(cur.time.micros)
        prev = times[0]
        for t in times[1:]:
            if t - prev > GOOSE_FLOOD_GAP_US:
                return _COMPLIANT
            prev = t
        return _ANOMALOUS
    if rule_id is RuleId.GR7:
        delta = cur.time.micros - state.recent_times[-1]
        return _COMPLIANT if delta <= GOOSE_MAX_GAP_US else _ANOMALOUS
    if rule_id is RuleId.GR8:
        if cur.data1 == state.accepted_data1 and cur.data2 == state.accepted_data2:
            return _NA
        bad = cur.stnum == state.accepted_stnum and cur.sqnum > state.accepted_sqnum
        return _ANOMALOUS if bad else _COMPLIANT
    raise UsageError(f"{rule_id.value} is not a GOOSE rule")


def _sv_outcome(rule_id: RuleId, cur: SvMessage, state: StreamState,
                freq: SystemFrequency) -> Outcome:
    n = state.count
    cnt_max = freq.smpcnt_max
    if rule_id is RuleId.SR1:
        ok = 0 <= cur.smpcnt <= cnt_max
        return _COMPLIANT if ok else _ANOMALOUS
    if rule_id is RuleId.SR5:
        ts = cur.time
        ok = ts.wellformed and ts.fractional_digits == SV_TIME_DIGITS
        return _COMPLIANT if ok else _ANOMALOUS
    if n == 0:
        return _NA
    if rule_id is RuleId.SR2:
        prev = state.accepted_smpcnt
        ok = (prev < cur.smpcnt <= cnt_max) or (cur.smpcnt == 0 and prev == cnt_max)
        return _COMPLIANT if ok else _ANOMALOUS
    if rule_id is RuleId.SR3:
        prev = state.accepted_smpcnt
        ok = cur.smpcnt >= prev or (cur.smpcnt == 0 and prev == cnt_max)
        return _COMPLIANT if ok else _ANOMALOUS
    if rule_id is RuleId.SR4:
        ok = sv_identity(cur) == state.identity_ref
        return _COMPLIANT if ok else _ANOMALOUS
    if rule_id is RuleId.SR6:
        delta = cur.time.micros - state.recent_times[-1]
        ok = SV_INTERVAL_MIN_US <= delta <= SV_INTERVAL_MAX_US
        return _COMPLIANT if ok else _ANOMALOUS
    if rule_id is RuleId.SR7:
        if n < 11:
            return _NA
        span = cur.time.micros - state.recent_times[-11]
        return _ANOMALOUS if span <= SV_FLOOD_SPAN_US else _COMPLIANT
    if rule_id is RuleId.SR8:
        prev = state.accepted_smpcnt
        ok = cur.smpcnt == prev + 1 or (cur.smpcnt == 0 and prev == cnt_max)
        return _COMPLIANT if ok else _ANOMALOUS
    raise UsageError(f"{rule_id.value} is not an SV rule")


def eval_goose_rule(rule_id: RuleId, current: GooseMessage,
                    state: StreamState) -> RuleVerdict:
    """Evaluate one GOOSE rule against a stream's accumulated state.

    Does not mutate ``state``; the caller is responsible for feeding the
    packet into the state afterwards (see StreamEvaluator).
    """
    if rule_id.protocol is not Protocol.GOOSE:
        raise UsageError(f"{rule_id.value} is not a GOOSE rule")
    return _V[rule_id][_goose_outcome(rule_id, current, state)]


def eval_sv_rule(rule_id: RuleId, current: SvMessage, state: StreamState,
                 freq: SystemFrequency) -> RuleVerdict:
    """Evaluate one SV rule; SR1's bound is selected by ``freq``."""
    if rule_id.protocol is not Protocol.SV:
        raise UsageError(f"{rule_id.value} is not an SV rule")
    return _V[rule_id][_sv_outcome(rule_id, current, state, freq)]


class StreamEvaluator:
    """Routes messages to per-stream state and evaluates the enabled rules.

    Routing is by (DM, SM, appid); a packet whose key is unknown is
    attributed to the earliest-created stream with the same goid/svid, so a
    single tampered routing field does not orphan the packet. Only a packet
    matching nothing on either level starts a new stream.

    The accepted counters advance only on transitions the counter rules do
    not object to, regardless of training level: a rejected packet must not
    become the baseline its genuine successor is judged against.
    """

    def __init__(self, level: TrainingLevel,
                 freq: SystemFrequency = SystemFrequency.F60):
        self.level = level
        self.freq = freq
        self._streams = {}
        self._by_secondary = {}
        self._nmax = level.max_rule_number

    def state_for(self, msg: Message) -> StreamState:
        protocol = Protocol.GOOSE if isinstance(msg, GooseMessage) else Protocol.SV
        key = (protocol, StreamKey.of(msg))
        state = self._streams.get(key)
        if state is not None:
            return state
        sec = (protocol, secondary_identity(msg))
        state = self._by_secondary.get(sec)
        if state is not None:
            return state
        state = StreamState(key[1], protocol)
        state.secondary = sec[1]
        self._streams[key] = state
        self._by_secondary[sec] = state
        return state

    def push(self, msg: Message) -> PacketVerdict:
        if isinstance(msg, GooseMessage):
            return self._push_goose(msg)
        return self._push_sv(msg)

    # The two push paths inline all eight predicates; eval_goose_rule /
    # eval_sv_rule stay the readable per-rule reference and the test suite
    # pins the two paths together.

    def _push_goose(self, msg: GooseMessage) -> PacketVerdict:
        state = self.state_for(msg)
        nmax = self._nmax
        n = state.count
        t = msg.time.micros
        verdicts = []
        append = verdicts.append
        anomalous = False

        if n == 0:
            first = True
            data_changed = False
            gr1 = gr2 = gr3 = gr7 = gr8 = _NA
            accept = True
        else:
            first = False
            data_changed = (msg.data1 != state.accepted_data1
                            or msg.data2 != state.accepted_data2)
            if data_changed:
                gr1 = _NA
                gr2 = (_COMPLIANT
                       if msg.stnum == state.accepted_stnum + 1 and msg.sqnum == 0
                       else _ANOMALOUS)
                gr8 = (_ANOMALOUS
                       if msg.stnum == state.accepted_stnum
                       and msg.sqnum > state.accepted_sqnum
                       else _COMPLIANT)
            else:
                gr1 = (_COMPLIANT
                       if msg.sqnum == state.accepted_sqnum + 1
                       else _ANOMALOUS)
                gr2 = gr8 = _NA
            gr3 = _ANOMALOUS if msg.stnum < state.max_stnum_seen else _COMPLIANT
            accept = (gr1 is not _ANOMALOUS and gr2 is not _ANOMALOUS
                      and gr3 is not _ANOMALOUS and gr8 is not _ANOMALOUS)

        if nmax:
            ts = msg.time
            gr5 = (_COMPLIANT
                   if ts.wellformed and ts.fractional_digits == GOOSE_TIME_DIGITS
                   else _ANOMALOUS)
            if first:
                gr4 = _NA
            else:
                gr4 = (_COMPLIANT
                       if (msg.dm.octets, msg.sm.octets, msg.ethertype,
                           msg.appid, msg.dataset, msg.goid) == state.identity_ref
                       else _ANOMALOUS)
            append(_V[RuleId.GR1][gr1])
            append(_V[RuleId.GR2][gr2])
            append(_V[RuleId.GR3][gr3])
            append(_V[RuleId.GR4][gr4])
            append(_V[RuleId.GR5][gr5])
            anomalous = (gr1 is _ANOMALOUS or gr2 is _ANOMALOUS
                         or gr3 is _ANOMALOUS or gr4 is _ANOMALOUS
                         or gr5 is _ANOMALOUS)
            if nmax == 8:
                if n < 9:
                    gr6 = _NA
                else:
                    times = list(state.recent_times)[-9:]
                    times.append(t)
                    gr6 = _ANOMALOUS
                    prev = times[0]
                    for tt in times[1:]:
                        if tt - prev > GOOSE_FLOOD_GAP_US:
                            gr6 = _COMPLIANT
                            break
                        prev = tt
                if first:
                    gr7 = _NA
                else:
                    gr7 = (_COMPLIANT
                           if t - state.recent_times[-1] <= GOOSE_MAX_GAP_US
                           else _ANOMALOUS)
                append(_V[RuleId.GR6][gr6])
                append(_V[RuleId.GR7][gr7])
                append(_V[RuleId.GR8][gr8])
                if gr6 is _ANOMALOUS or gr7 is _ANOMALOUS or gr8 is _ANOMALOUS:
                    anomalous = True

        # state update
        if first:
            state.first_seen = msg.time
            state.identity_ref = goose_identity(msg)
            state.max_stnum_seen = msg.stnum
        else:
            if t < state.recent_times[-1]:
                warnings.warn(
                    f"timestamp went backwards at seq_index {msg.seq_index}",
                    MonotonicityWarning, stacklevel=2)
            if msg.stnum > state.max_stnum_seen:
                state.max_stnum_seen = msg.stnum
        if accept:
            state.accepted_stnum = msg.stnum
            state.accepted_sqnum = msg.sqnum
            state.accepted_data1 = msg.data1
            state.accepted_data2 = msg.data2
        state.recent_times.append(t)
        state.last_msg = msg
        state.count = n + 1
        return PacketVerdict(msg.seq_index, tuple(verdicts), anomalous)

    def _push_sv(self, msg: SvMessage) -> PacketVerdict:
        state = self.state_for(msg)
        nmax = self._nmax
        n = state.count
        t = msg.time.micros
        cnt = msg.smpcnt
        cnt_max = self.freq.smpcnt_max
        verdicts = []
        append = verdicts.append
        anomalous = False

        if n == 0:
            first = True
            sr8 = _NA
            accept = True
        else:
            first = False
            prev_cnt = state.accepted_smpcnt
            sr8 = (_COMPLIANT
                   if cnt == prev_cnt + 1 or (cnt == 0 and prev_cnt == cnt_max)
                   else _ANOMALOUS)
            accept = sr8 is _COMPLIANT

        if nmax:
            sr1 = _COMPLIANT if 0 <= cnt <= cnt_max else _ANOMALOUS
            ts = msg.time
            sr5 = (_COMPLIANT
                   if ts.wellformed and ts.fractional_digits == SV_TIME_DIGITS
                   else _ANOMALOUS)
            if first:
                sr2 = sr3 = sr4 = _NA
            else:
                prev = state.accepted_smpcnt
                sr2 = (_COMPLIANT
                       if (prev < cnt <= cnt_max) or (cnt == 0 and prev == cnt_max)
                       else _ANOMALOUS)
                sr3 = (_COMPLIANT
                       if cnt >= prev or (cnt == 0 and prev == cnt_max)
                       else _ANOMALOUS)
                sr4 = (_COMPLIANT
                       if (msg.dm.octets, msg.sm.octets, msg.ethertype,
                           msg.appid, msg.svid) == state.identity_ref
                       else _ANOMALOUS)
            append(_V[RuleId.SR1][sr1])
            append(_V[RuleId.SR2][sr2])
            append(_V[RuleId.SR3][sr3])
            append(_V[RuleId.SR4][sr4])
            append(_V[RuleId.SR5][sr5])
            anomalous = (sr1 is _ANOMALOUS or sr2 is _ANOMALOUS
                         or sr3 is _ANOMALOUS or sr4 is _ANOMALOUS
                         or sr5 is _ANOMALOUS)
            if nmax == 8:
                if first:
                    sr6 = _NA
                else:
                    delta = t - state.recent_times[-1]
                    sr6 = (_COMPLIANT
                           if SV_INTERVAL_MIN_US <= delta <= SV_INTERVAL_MAX_US
                           else _ANOMALOUS)
                if n < 11:
                    sr7 = _NA
                else:
                    sr7 = (_ANOMALOUS
                           if t - state.recent_times[-11] <= SV_FLOOD_SPAN_US
                           else _COMPLIANT)
                append(_V[RuleId.SR6][sr6])
                append(_V[RuleId.SR7][sr7])
                append(_V[RuleId.SR8][sr8])
                if sr6 is _ANOMALOUS or sr7 is _ANOMALOUS or sr8 is _ANOMALOUS:
                    anomalous = True

        if first:
            state.first_seen = msg.time
            state.identity_ref = sv_identity(msg)
        elif t < state.recent_times[-1]:
            warnings.warn(
                f"timestamp went backwards at seq_index {msg.seq_index}",
                MonotonicityWarning, stacklevel=2)
        if accept:
            state.accepted_smpcnt = cnt
        state.recent_times.append(t)
        state.last_msg = msg
        state.count = n + 1
        return PacketVerdict(msg.seq_index, tuple(verdicts), anomalous)


def evaluate_stream(messages: Iterable[Message], level: TrainingLevel,
                    freq: SystemFrequency = SystemFrequency.F60,
                    ) -> Iterator[PacketVerdict]:
    """Evaluate an ordered message stream, one PacketVerdict per message.

    GOOSE and SV messages may be mixed; each protocol is judged by its own
    rules over its own streams.
    """
    evaluator = StreamEvaluator(level, freq)
    push = evaluator.push
    for msg in messages:
        yield push(msg)


def evaluate_list(messages: Iterable[Message], level: TrainingLevel,
                  freq: SystemFrequency = SystemFrequency.F60,
                  ) -> List[PacketVerdict]:
    return list(evaluate_stream(messages, level, freq))
