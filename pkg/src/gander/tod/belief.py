"""Belief state: accumulated per-stream evidence and anomaly candidates.

Candidates enter as suspects during automated analysis and are promoted to
confirmed only by dynamic validation (re-derivation on a local context
window through the compiled rule queries); there is no other path to
confirmed, which keeps every confirmation traceable to rule evidence.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from ..filterql import Query, compile_rule, prepare_table, run_prepared
from ..model import Message, Outcome, PacketVerdict, Protocol, RuleId
from ..rules.specs import SystemFrequency


class Confidence(enum.Enum):
    SUSPECT = "suspect"
    CONFIRMED = "confirmed"


@dataclass(frozen=True)
class Candidate:
    seq_index: int
    rule_id: RuleId
    confidence: Confidence


@dataclass
class ValidationConditions:
    """Compiled queries plus per-query count thresholds for one turn."""

    queries: Dict[RuleId, Query]
    thresholds: Dict[RuleId, int]
    context_window: int = 20

    @classmethod
    def for_rules(cls, rules: Sequence[RuleId],
                  freq: SystemFrequency = SystemFrequency.F60,
                  context_window: int = 20) -> "ValidationConditions":
        return cls(queries={r: compile_rule(r, freq) for r in rules},
                   thresholds={r: 1 for r in rules},
                   context_window=context_window)


class BeliefState:
    """Dialogue-state tracking for one session."""

    def __init__(self):
        self.tallies: Dict[RuleId, Dict[str, int]] = {}
        self.candidates: Dict[Tuple[int, RuleId], Confidence] = {}
        self.stream_summaries: Dict[str, dict] = {}
        self.demotions: List[Tuple[int, RuleId]] = []

    # -- updates ----------------------------------------------------------

    def absorb_verdict(self, verdict: PacketVerdict) -> List[Candidate]:
        """Record one packet's verdicts; returns newly created suspects."""
        new = []
        for rv in verdict.per_rule:
            tally = self.tallies.setdefault(
                rv.rule_id, {"compliant": 0, "anomalous": 0,
                             "not_applicable": 0})
            tally[rv.outcome.value] += 1
            if rv.outcome is Outcome.ANOMALOUS:
                key = (verdict.seq_index, rv.rule_id)
                if key not in self.candidates:
                    self.candidates[key] = Confidence.SUSPECT
                    new.append(Candidate(*key, Confidence.SUSPECT))
        return new

    def update_streams(self, evaluator) -> None:
        for (protocol, key), state in evaluator._streams.items():
            name = f"{protocol.value}:{key.dm.hex()}:{key.sm.hex()}:{key.appid}"
            summary = {
                "count": state.count,
                "secondary": state.secondary,
            }
            if protocol is Protocol.GOOSE:
                summary["max_stnum"] = state.max_stnum_seen
                summary["accepted_stnum"] = state.accepted_stnum
                summary["accepted_sqnum"] = state.accepted_sqnum
            else:
                summary["accepted_smpcnt"] = state.accepted_smpcnt
            self.stream_summaries[name] = summary

    # -- views ------------------------------------------------------------

    def suspects(self) -> List[Candidate]:
        return sorted(
            (Candidate(seq, rule, conf)
             for (seq, rule), conf in self.candidates.items()
             if conf is Confidence.SUSPECT),
            key=lambda c: (c.seq_index, c.rule_id.value))

    def confirmed(self) -> List[Candidate]:
        return sorted(
            (Candidate(seq, rule, conf)
             for (seq, rule), conf in self.candidates.items()
             if conf is Confidence.CONFIRMED),
            key=lambda c: (c.seq_index, c.rule_id.value))

    def confirmed_seq_indices(self) -> Tuple[int, ...]:
        return tuple(sorted({seq for (seq, _), conf in self.candidates.items()
                             if conf is Confidence.CONFIRMED}))

    def to_dict(self) -> dict:
        return {
            "tallies": {r.value: dict(t) for r, t in
                        sorted(self.tallies.items(), key=lambda kv: kv[0].value)},
            "candidates": [
                {"seq_index": seq, "rule": rule.value, "confidence": conf.value}
                for (seq, rule), conf in sorted(
                    self.candidates.items(),
                    key=lambda kv: (kv[0][0], kv[0][1].value))
            ],
            "streams": {k: self.stream_summaries[k]
                        for k in sorted(self.stream_summaries)},
            "demotions": [[seq, rule.value] for seq, rule in self.demotions],
        }


def validate_candidates(belief: BeliefState,
                        conditions: ValidationConditions,
                        table: Sequence[Message],
                        freq: SystemFrequency = SystemFrequency.F60,
                        ) -> BeliefState:
    """Promote suspects the compiled queries re-select on a local context
    window; demote the rest. Returns the (mutated) belief."""
    k = conditions.context_window
    promoted: List[Candidate] = []
    for cand in belief.suspects():
        query = conditions.queries.get(cand.rule_id)
        if query is None:
            continue  # not under validation this turn; stays suspect
        lo = max(0, cand.seq_index - k)
        window = table[lo:cand.seq_index + 1]
        prep = prepare_table(window, query.source, freq)
        result = run_prepared(query, prep)
        threshold = conditions.thresholds.get(cand.rule_id, 1)
        hits = result.rows
        if cand.seq_index in hits and len(hits) >= threshold:
            belief.candidates[(cand.seq_index, cand.rule_id)] = \
                Confidence.CONFIRMED
            promoted.append(cand)
        else:
            del belief.candidates[(cand.seq_index, cand.rule_id)]
            belief.demotions.append((cand.seq_index, cand.rule_id))
    return belief
