"""Rule metadata: polarity table, windows, training levels, stream state.

Each of the sixteen compliance rules is a predicate over a message and its
stream history. Predicates differ in polarity (for most rules a true
predicate means the packet is compliant; for the flood rules a true
predicate *is* the anomaly), so every rule's verdict is normalized to
compliant / anomalous / not-applicable before leaving this package. The
full table is exported as a machine-readable manifest for audit.
"""
from __future__ import annotations

import enum
from collections import deque
from typing import Optional, Tuple

from ..model import (
    GOOSE_RULES,
    SV_RULES,
    GooseMessage,
    Message,
    Protocol,
    RuleId,
    StreamKey,
)

# Timing bounds, all in integer microseconds.
GOOSE_FLOOD_GAP_US = 10           # GR6: per-gap bound inside the flood window
GOOSE_MAX_GAP_US = 10_000_000     # GR7: transmission gap ceiling, 10 s
SV_INTERVAL_MIN_US = 200          # SR6 lower bound
SV_INTERVAL_MAX_US = 215          # SR6 upper bound
SV_FLOOD_SPAN_US = 2083           # SR7: 12-packet span bound, 2.083 ms

GOOSE_FLOOD_WINDOW = 10           # packets covered by GR6
SV_FLOOD_WINDOW = 12              # packets covered by SR7
RING_CAPACITY = 12                # recent-times ring; enough for both windows

# Required fractional digits in the time field. The GOOSE format is
# microsecond-precision by definition; the SV prose also demands
# microsecond precision, which is what makes the 200-215 us interval rule
# checkable at all, so both validators require six digits.
GOOSE_TIME_DIGITS = 6
SV_TIME_DIGITS = 6


class SystemFrequency(enum.Enum):
    """Nominal system frequency; fixes the SV sample-counter period."""

    F60 = 60
    F50 = 50

    @property
    def hertz(self) -> int:
        return self.value

    @property
    def smpcnt_max(self) -> int:
        # 80 samples per cycle: counter runs [0, 80*f - 1] then wraps.
        return 80 * self.value - 1


class TrainingLevel(enum.Enum):
    """Which rules are active: none (WT), #1-#5 (PT), or all eight (FT)."""

    WT = "WT"
    PT = "PT"
    FT = "FT"

    @property
    def max_rule_number(self) -> int:
        return {"WT": 0, "PT": 5, "FT": 8}[self.value]

    def rules_for(self, protocol: Protocol) -> Tuple[RuleId, ...]:
        pool = GOOSE_RULES if protocol is Protocol.GOOSE else SV_RULES
        return tuple(r for r in pool if r.number <= self.max_rule_number)

    @property
    def enabled_rules(self) -> frozenset:
        return frozenset(
            self.rules_for(Protocol.GOOSE) + self.rules_for(Protocol.SV)
        )


class Polarity(enum.Enum):
    PREDICATE_TRUE_MEANS_COMPLIANT = "predicate_true_means_compliant"
    PREDICATE_TRUE_MEANS_ANOMALOUS = "predicate_true_means_anomalous"


class RuleSpec:
    """Static description of one rule, used for audit and query compilation."""

    __slots__ = ("rule_id", "polarity", "trigger", "window", "summarizes_history")

    def __init__(self, rule_id, polarity, trigger, window, summarizes_history=False):
        self.rule_id = rule_id
        self.polarity = polarity
        self.trigger = trigger
        self.window = window
        self.summarizes_history = summarizes_history


_COMPLIANT = Polarity.PREDICATE_TRUE_MEANS_COMPLIANT
_ANOMALOUS = Polarity.PREDICATE_TRUE_MEANS_ANOMALOUS

RULE_SPECS = {
    RuleId.GR1: RuleSpec(
        RuleId.GR1, _COMPLIANT,
        "previous packet in stream exists and data1/data2 unchanged", 2),
    RuleId.GR2: RuleSpec(
        RuleId.GR2, _COMPLIANT,
        "previous packet in stream exists and data1/data2 changed", 2),
    RuleId.GR3: RuleSpec(
        RuleId.GR3, _COMPLIANT,
        "previous packet in stream exists", 2, summarizes_history=True),
    RuleId.GR4: RuleSpec(
        RuleId.GR4, _COMPLIANT,
        "stream identity reference established (non-first packet)", 2),
    RuleId.GR5: RuleSpec(RuleId.GR5, _COMPLIANT, "always", 1),
    RuleId.GR6: RuleSpec(
        RuleId.GR6, _ANOMALOUS,
        "at least 9 prior packets in stream", GOOSE_FLOOD_WINDOW),
    RuleId.GR7: RuleSpec(
        RuleId.GR7, _COMPLIANT, "previous packet in stream exists", 2),
    RuleId.GR8: RuleSpec(
        RuleId.GR8, _ANOMALOUS,
        "previous packet in stream exists and data1/data2 changed", 2),
    RuleId.SR1: RuleSpec(RuleId.SR1, _COMPLIANT, "always", 1),
    RuleId.SR2: RuleSpec(
        RuleId.SR2, _COMPLIANT, "previous packet in stream exists", 2),
    RuleId.SR3: RuleSpec(
        RuleId.SR3, _COMPLIANT, "previous packet in stream exists", 2),
    RuleId.SR4: RuleSpec(
        RuleId.SR4, _COMPLIANT,
        "stream identity reference established (non-first packet)", 2),
    RuleId.SR5: RuleSpec(RuleId.SR5, _COMPLIANT, "always", 1),
    RuleId.SR6: RuleSpec(
        RuleId.SR6, _COMPLIANT, "previous packet in stream exists", 2),
    RuleId.SR7: RuleSpec(
        RuleId.SR7, _ANOMALOUS,
        "at least 11 prior packets in stream", SV_FLOOD_WINDOW),
    RuleId.SR8: RuleSpec(
        RuleId.SR8, _COMPLIANT, "previous packet in stream exists", 2),
}

_RULE_CHECKS = {
    RuleId.GR1: "sequence counter advances by exactly one between repeats",
    RuleId.GR2: "a data change carries state+1 and a sequence reset to 0",
    RuleId.GR3: "state counter never falls below the stream's historical maximum",
    RuleId.GR4: "DM/SM/type/appid/dataset/goid match the stream's established identity",
    RuleId.GR5: "time text is strict HH:MM:SS with exactly 6 fractional digits",
    RuleId.GR6: "9 consecutive inter-arrival gaps of at most 10us flag a flood",
    RuleId.GR7: "inter-arrival gap stays at or below 10s",
    RuleId.GR8: "a data change with frozen state counter and advancing sequence is flagged",
    RuleId.SR1: "sample counter stays within [0, 80*f-1]",
    RuleId.SR2: "sample counter increases, or wraps max->0",
    RuleId.SR3: "sample counter is non-decreasing, or wraps max->0",
    RuleId.SR4: "DM/SM/type/appid/svid match the stream's established identity",
    RuleId.SR5: "time text is strict HH:MM:SS with exactly 6 fractional digits",
    RuleId.SR6: "inter-arrival gap lies within [200us, 215us]",
    RuleId.SR7: "12 packets inside a 2.083ms span flag a flood",
    RuleId.SR8: "sample counter advances by exactly one, wrapping max->0",
}


def rules_manifest() -> dict:
    """Machine-readable polarity/window/level table for audit."""
    levels = {}
    for level in TrainingLevel:
        levels[level.value] = sorted(r.value for r in level.enabled_rules)
    rules = []
    for rule_id in RuleId:
        spec = RULE_SPECS[rule_id]
        rules.append({
            "id": rule_id.value,
            "protocol": rule_id.protocol.value,
            "number": rule_id.number,
            "polarity": spec.polarity.value,
            "trigger": spec.trigger,
            "window": spec.window,
            "summarizes_history": spec.summarizes_history,
            "checks": _RULE_CHECKS[rule_id],
        })
    return {"schema_version": 1, "levels": levels, "rules": rules}


def goose_identity(msg: GooseMessage) -> tuple:
    return (msg.dm.octets, msg.sm.octets, msg.ethertype, msg.appid,
            msg.dataset, msg.goid)


def sv_identity(msg) -> tuple:
    return (msg.dm.octets, msg.sm.octets, msg.ethertype, msg.appid, msg.svid)


def secondary_identity(msg: Message) -> str:
    """Application-level stream identity used when L2 routing fields are
    untrustworthy (a tampered key field must not orphan the packet)."""
    return msg.goid if isinstance(msg, GooseMessage) else msg.svid


class StreamState:
    """Accumulated per-stream history feeding the rule predicates.

    ``last_msg``/``recent_times``/``max_stnum_seen`` advance with every
    packet. The accepted counters advance only when the counter state
    machine acknowledged the transition (a rejected packet must not become
    the baseline the next packet is judged against, or a single bogus
    packet would make its genuine successor look anomalous too).
    """

    __slots__ = (
        "key", "protocol", "count", "first_seen", "last_msg",
        "recent_times", "max_stnum_seen", "identity_ref",
        "accepted_stnum", "accepted_sqnum", "accepted_data1",
        "accepted_data2", "accepted_smpcnt", "secondary",
    )

    def __init__(self, key: StreamKey, protocol: Protocol):
        self.key = key
        self.protocol = protocol
        self.count = 0
        self.first_seen = None
        self.last_msg: Optional[Message] = None
        self.recent_times = deque(maxlen=RING_CAPACITY)
        self.max_stnum_seen = 0
        self.identity_ref: Optional[tuple] = None
        self.accepted_stnum = 0
        self.accepted_sqnum = 0
        self.accepted_data1 = 0
        self.accepted_data2 = 0
        self.accepted_smpcnt = 0
        self.secondary = ""
