"""Analyst actions and the pluggable backends that choose them.

The rule-oracle backend is a codified policy table (fully deterministic);
the scripted backend replays a recorded session verbatim; the remote-chat
backend forwards a structured prompt to an HTTP JSON endpoint and parses
the reply, strictly.
"""
from __future__ import annotations

import enum
import json
import os
import urllib.request
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from ..errors import BackendProtocolError, ConfigError
from ..model import Protocol, RuleId
from ..rules.specs import TrainingLevel

ENDPOINT_ENV = "GANDER_CHAT_ENDPOINT"
API_KEY_ENV = "GANDER_CHAT_API_KEY"


class ActionKind(enum.Enum):
    CONFIRM_ANOMALY = "confirm_anomaly"
    REQUEST_MORE_PACKETS = "request_more_packets"
    PROPOSE_RULE_ENABLEMENT = "propose_rule_enablement"
    EMIT_REPORT = "emit_report"


@dataclass(frozen=True)
class Action:
    kind: ActionKind
    seq_indices: Tuple[int, ...] = ()
    packet_count: int = 0
    rule_ids: Tuple[RuleId, ...] = ()

    def to_dict(self) -> dict:
        payload = {"kind": self.kind.value}
        if self.kind is ActionKind.CONFIRM_ANOMALY:
            payload["seq_indices"] = list(self.seq_indices)
        elif self.kind is ActionKind.REQUEST_MORE_PACKETS:
            payload["packet_count"] = self.packet_count
        elif self.kind is ActionKind.PROPOSE_RULE_ENABLEMENT:
            payload["rule_ids"] = [r.value for r in self.rule_ids]
        return payload

    @classmethod
    def from_dict(cls, data: dict) -> "Action":
        try:
            kind = ActionKind(data["kind"])
            if kind is ActionKind.CONFIRM_ANOMALY:
                return cls(kind, seq_indices=tuple(
                    int(i) for i in data["seq_indices"]))
            if kind is ActionKind.REQUEST_MORE_PACKETS:
                return cls(kind, packet_count=int(data["packet_count"]))
            if kind is ActionKind.PROPOSE_RULE_ENABLEMENT:
                return cls(kind, rule_ids=tuple(
                    RuleId(r) for r in data["rule_ids"]))
            return cls(kind)
        except (KeyError, ValueError, TypeError) as exc:
            raise BackendProtocolError(f"bad action record {data!r}: {exc}")


def parse_actions(payload: object, enabled_rules=frozenset()) -> List[Action]:
    """Parse a backend reply of the form {"actions": [...]}; rejects
    anything malformed, including proposals for already-enabled rules."""
    if not isinstance(payload, dict) or "actions" not in payload:
        raise BackendProtocolError(f"reply has no actions list: {payload!r}")
    actions_raw = payload["actions"]
    if not isinstance(actions_raw, list) or not actions_raw:
        raise BackendProtocolError("actions must be a non-empty list")
    actions = [Action.from_dict(a) for a in actions_raw]
    for action in actions:
        if action.kind is ActionKind.PROPOSE_RULE_ENABLEMENT:
            overlap = set(action.rule_ids) & set(enabled_rules)
            if overlap:
                raise BackendProtocolError(
                    f"proposal names already-enabled rules "
                    f"{sorted(r.value for r in overlap)}")
    return actions


@dataclass
class TurnView:
    """What a backend gets to see when choosing actions for a turn."""

    protocol: Protocol
    level: TrainingLevel
    turn: int
    batch_size: int
    confirmed_seq: Tuple[int, ...]
    suspect_count: int
    oob_stats: dict  # disabled-rule query hit counts, by rule id string


class RuleOracleBackend:
    """Deterministic policy table standing in for a generative analyst."""

    kind = "rule_oracle"

    def decide(self, view: TurnView) -> List[Action]:
        if view.confirmed_seq:
            return [
                Action(ActionKind.CONFIRM_ANOMALY,
                       seq_indices=view.confirmed_seq),
                Action(ActionKind.EMIT_REPORT),
            ]
        if (view.level is TrainingLevel.PT
                and any(view.oob_stats.values())):
            proposal = tuple(
                r for r in RuleId
                if r.protocol is view.protocol and r.number > 5)
            return [Action(ActionKind.PROPOSE_RULE_ENABLEMENT,
                           rule_ids=proposal)]
        return [Action(ActionKind.REQUEST_MORE_PACKETS,
                       packet_count=view.batch_size)]


class ScriptedBackend:
    """Replays the continuous-learning actions of a recorded transcript."""

    kind = "scripted"

    def __init__(self, turns: Sequence[List[Action]]):
        self._turns = list(turns)
        self._next = 0

    @classmethod
    def from_transcript_file(cls, path) -> "ScriptedBackend":
        from .transcript import read_transcript_actions
        return cls(read_transcript_actions(path))

    def decide(self, view: TurnView) -> List[Action]:
        if self._next >= len(self._turns):
            raise BackendProtocolError(
                f"recorded session ended at turn {self._next}, "
                f"input kept going")
        actions = self._turns[self._next]
        self._next += 1
        return actions


class RemoteChatBackend:
    """Thin HTTP JSON client; excluded from the deterministic test suite."""

    kind = "remote_chat"

    def __init__(self, endpoint: Optional[str] = None,
                 api_key: Optional[str] = None, timeout: float = 30.0,
                 audit=None):
        self.endpoint = endpoint or os.environ.get(ENDPOINT_ENV)
        self.api_key = api_key or os.environ.get(API_KEY_ENV)
        self.timeout = timeout
        self.audit = audit
        if not self.endpoint:
            raise ConfigError(
                f"remote chat backend needs {ENDPOINT_ENV} set")

    def _prompt(self, view: TurnView) -> str:
        lines = [
            f"Protocol {view.protocol.value}, training level "
            f"{view.level.value}, turn {view.turn}.",
            f"Confirmed anomalies at packets: "
            f"{list(view.confirmed_seq) or 'none'}.",
            f"Open suspects: {view.suspect_count}.",
            f"Out-of-band statistics: {json.dumps(view.oob_stats, sort_keys=True)}.",
            "Reply with JSON {\"actions\": [...]} using kinds "
            "confirm_anomaly, request_more_packets, "
            "propose_rule_enablement, emit_report.",
        ]
        return "\n".join(lines)

    def _call(self, body: dict) -> dict:
        request = urllib.request.Request(
            self.endpoint,
            data=json.dumps(body).encode("utf-8"),
            headers={"Content-Type": "application/json",
                     **({"Authorization": f"Bearer {self.api_key}"}
                        if self.api_key else {})},
            method="POST")
        with urllib.request.urlopen(request, timeout=self.timeout) as resp:
            text = resp.read().decode("utf-8")
        if self.audit is not None:
            self.audit.event("backend_reply", reply=text)
        return json.loads(text)

    def decide(self, view: TurnView) -> List[Action]:
        enabled = view.level.rules_for(view.protocol)
        body = {
            "prompt": self._prompt(view),
            "context": {
                "protocol": view.protocol.value,
                "level": view.level.value,
                "turn": view.turn,
                "confirmed_seq": list(view.confirmed_seq),
                "suspect_count": view.suspect_count,
                "oob_stats": view.oob_stats,
            },
        }
        if self.audit is not None:
            self.audit.event("backend_request",
                             request=json.dumps(body, sort_keys=True))
        last_error = None
        for _attempt in range(2):  # one retry on an unparseable reply
            try:
                reply = self._call(body)
                return parse_actions(reply, frozenset(enabled))
            except BackendProtocolError as exc:
                last_error = exc
            except (OSError, ValueError) as exc:
                raise BackendProtocolError(f"backend call failed: {exc}")
        raise last_error
