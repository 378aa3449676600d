"""Canonical domain types for GOOSE and SV messages.

All types here are immutable value types; they can be shared freely across
threads and processes. Messages carry a time-of-day timestamp only (no date):
substation captures are assumed not to cross midnight.
"""
from __future__ import annotations

import enum
from typing import NamedTuple, Optional, Union

from .errors import FormatError

ETHERTYPE_GOOSE = 0x88B8
ETHERTYPE_SV = 0x88BA

MICROS_PER_DAY = 86_400_000_000


class Protocol(enum.Enum):
    GOOSE = "goose"
    SV = "sv"


class Timestamp(NamedTuple):
    """Time of day in microseconds, plus the capture text it came from.

    ``wellformed`` is true when ``raw_text`` is strictly HH:MM:SS with
    two-digit fields and a 1-6 digit fraction. The parser is deliberately
    more lenient than that (it accepts extra or missing zero padding) so
    that malformed-but-readable capture text survives ingestion and can be
    judged by the format rules instead of being dropped.
    """

    micros: int
    raw_text: str
    fractional_digits: int
    wellformed: bool

    def render(self, digits: int) -> str:
        """Format as HH:MM:SS with ``digits`` fractional digits (truncating)."""
        if not 0 <= digits <= 6:
            raise ValueError(f"digits must be in [0, 6], got {digits}")
        total = self.micros
        h, rem = divmod(total, 3_600_000_000)
        m, rem = divmod(rem, 60_000_000)
        s, us = divmod(rem, 1_000_000)
        base = f"{h:02d}:{m:02d}:{s:02d}"
        if digits == 0:
            return base
        return f"{base}.{us:06d}"[: len(base) + 1 + digits]


def parse_timestamp(text: str) -> Timestamp:
    """Parse an HH:MM:SS[.ffffff] time-of-day string.

    Raises FormatError for non-numeric fields, out-of-range values, or more
    than six fractional digits. Zero-padding irregularities (e.g. a
    single-digit hour) parse fine but mark the timestamp as not wellformed.
    """
    head, dot, frac = text.partition(".")
    parts = head.split(":")
    if len(parts) != 3:
        raise FormatError(f"expected HH:MM:SS[.ffffff], got {text!r}", text)
    hh, mm, ss = parts
    if not (hh.isdigit() and mm.isdigit() and ss.isdigit()):
        raise FormatError(f"non-numeric time field in {text!r}", text)
    h, m, s = int(hh), int(mm), int(ss)
    if h > 23:
        raise FormatError(f"hour out of range in {text!r}", text)
    if m > 59:
        raise FormatError(f"minute out of range in {text!r}", text)
    if s > 59:
        raise FormatError(f"second out of range in {text!r}", text)
    digits = 0
    us = 0
    if dot:
        if not frac.isdigit():
            raise FormatError(f"non-numeric fraction in {text!r}", text)
        digits = len(frac)
        if digits > 6:
            raise FormatError(f"more than 6 fractional digits in {text!r}", text)
        us = int(frac) * 10 ** (6 - digits)
    micros = (h * 3600 + m * 60 + s) * 1_000_000 + us
    wellformed = (
        len(hh) == 2 and len(mm) == 2 and len(ss) == 2 and 1 <= digits <= 6
    )
    return Timestamp(micros, text, digits, wellformed)


def format_timestamp(ts: Timestamp, digits: int) -> str:
    """Inverse of parse_timestamp at the given fractional precision."""
    return ts.render(digits)


def make_timestamp(micros: int, digits: int = 6) -> Timestamp:
    """Build a wellformed Timestamp from a microsecond count."""
    if not 0 <= micros < MICROS_PER_DAY:
        raise ValueError(f"micros out of range: {micros}")
    stub = Timestamp(micros, "", digits, True)
    return Timestamp(micros, stub.render(digits), digits, True)


class MacAddress:
    """A six-octet hardware address.

    Equality and hashing use the octets only; the original capture text, if
    any, is kept for display. Truncated paper-style three-octet forms are
    left-padded on ingestion (see ``from_text``).
    """

    __slots__ = ("octets", "raw_text")

    # IEC 61850 multicast group prefixes for destination addresses.
    _GOOSE_DST_PREFIX = bytes((0x01, 0x0C, 0xCD))
    _ZERO_PREFIX = bytes(3)

    def __init__(self, octets: bytes, raw_text: Optional[str] = None):
        if len(octets) != 6:
            raise FormatError(f"MAC must be 6 octets, got {len(octets)}")
        self.octets = bytes(octets)
        self.raw_text = raw_text

    @classmethod
    def from_text(cls, text: str, multicast_pad: bool = False) -> "MacAddress":
        """Parse a colon-, dash-, or space-separated hex MAC.

        Three-octet truncated forms are left-padded: with the IEC 61850
        multicast prefix 01:0C:CD when ``multicast_pad`` is set (destination
        columns), with zero octets otherwise.
        """
        cleaned = text.strip().replace("-", ":").replace(" ", ":")
        parts = [p for p in cleaned.split(":") if p]
        try:
            octets = bytes(int(p, 16) for p in parts)
        except ValueError:
            raise FormatError(f"bad MAC address {text!r}", text) from None
        if any(len(p) > 2 for p in parts):
            raise FormatError(f"bad MAC address {text!r}", text)
        if len(octets) == 6:
            return cls(octets, text)
        if len(octets) == 3:
            prefix = cls._GOOSE_DST_PREFIX if multicast_pad else cls._ZERO_PREFIX
            return cls(prefix + octets, text)
        raise FormatError(f"MAC must have 3 or 6 octets, got {len(octets)}", text)

    def display(self) -> str:
        return ":".join(f"{b:02X}" for b in self.octets)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, MacAddress) and self.octets == other.octets

    def __hash__(self) -> int:
        return hash(self.octets)

    def __repr__(self) -> str:
        return f"MacAddress({self.display()})"


class GooseMessage(NamedTuple):
    """One decoded GOOSE message (the G feature tuple plus capture position)."""

    time: Timestamp
    dm: MacAddress
    sm: MacAddress
    ethertype: int
    appid: int
    dataset: str
    goid: str
    stnum: int
    sqnum: int
    data1: int
    data2: int
    seq_index: int


class SvMessage(NamedTuple):
    """One decoded SV message (the S feature tuple plus capture position)."""

    time: Timestamp
    dm: MacAddress
    sm: MacAddress
    ethertype: int
    appid: int
    svid: str
    smpcnt: int
    seq_index: int


Message = Union[GooseMessage, SvMessage]


def protocol_of(msg: Message) -> Protocol:
    return Protocol.GOOSE if isinstance(msg, GooseMessage) else Protocol.SV


class StreamKey(NamedTuple):
    """Identity used to shard per-stream rule state."""

    dm: bytes
    sm: bytes
    appid: int

    @classmethod
    def of(cls, msg: Message) -> "StreamKey":
        return cls(msg.dm.octets, msg.sm.octets, msg.appid)


class RuleId(enum.Enum):
    GR1 = "GR1"
    GR2 = "GR2"
    GR3 = "GR3"
    GR4 = "GR4"
    GR5 = "GR5"
    GR6 = "GR6"
    GR7 = "GR7"
    GR8 = "GR8"
    SR1 = "SR1"
    SR2 = "SR2"
    SR3 = "SR3"
    SR4 = "SR4"
    SR5 = "SR5"
    SR6 = "SR6"
    SR7 = "SR7"
    SR8 = "SR8"

    @property
    def protocol(self) -> Protocol:
        return Protocol.GOOSE if self.value.startswith("G") else Protocol.SV

    @property
    def number(self) -> int:
        return int(self.value[2])


GOOSE_RULES = tuple(r for r in RuleId if r.protocol is Protocol.GOOSE)
SV_RULES = tuple(r for r in RuleId if r.protocol is Protocol.SV)


class Outcome(enum.Enum):
    COMPLIANT = "compliant"
    ANOMALOUS = "anomalous"
    NOT_APPLICABLE = "not_applicable"


class RuleVerdict(NamedTuple):
    rule_id: RuleId
    outcome: Outcome


class PacketVerdict(NamedTuple):
    seq_index: int
    per_rule: tuple
    anomalous: bool

    def outcome_of(self, rule_id: RuleId) -> Optional[Outcome]:
        for rv in self.per_rule:
            if rv.rule_id is rule_id:
                return rv.outcome
        return None


class Label(enum.Enum):
    NORMAL = "normal"
    ANOMALOUS = "anomalous"


class LabeledRecord(NamedTuple):
    """A message with ground truth, the unit of evaluation datasets."""

    message: Message
    label: Label
    attack_tag: Optional[str]

    @classmethod
    def normal(cls, message: Message) -> "LabeledRecord":
        return cls(message, Label.NORMAL, None)

    @classmethod
    def attack(cls, message: Message, tag: str) -> "LabeledRecord":
        return cls(message, Label.ANOMALOUS, tag)
