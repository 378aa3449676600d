"""The five-stage dialogue session over a message stream.

Each turn consumes one batch of packets and walks the stages in order:
structured input, automated analysis (rule evaluation into suspects),
dynamic validation (query re-derivation promotes or demotes suspects),
continuous learning (the analyst backend chooses actions), and adaptive
response (the turn summary). Sessions with a deterministic backend are
bit-identical across runs.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, List, Optional

from ..errors import BackendProtocolError, GanderError, UsageError
from ..filterql import compile_rule, prepare_table, run_prepared
from ..model import GooseMessage, Message, Protocol, RuleId
from ..rules.engine import StreamEvaluator
from ..rules.specs import SystemFrequency, TrainingLevel
from .actions import Action, ActionKind, TurnView
from .belief import BeliefState, ValidationConditions, validate_candidates
from .transcript import AuditLog, SessionTranscript

DEFAULT_TURN_BATCH = 100
DEFAULT_CONTEXT_WINDOW = 20


class SessionAborted(GanderError):
    def __init__(self, reason: str, transcript: SessionTranscript):
        super().__init__(reason)
        self.transcript = transcript


@dataclass
class DialogueContext:
    """Structured input accumulated across turns."""

    protocol: Protocol
    level: TrainingLevel
    packets: List[Message] = field(default_factory=list)
    turn_bounds: List[int] = field(default_factory=list)  # packets per turn


def _batched(iterable: Iterable[Message], size: int):
    iterator = iter(iterable)
    while True:
        batch = list(itertools.islice(iterator, size))
        if not batch:
            return
        yield batch


def run_session(source: Iterable[Message], level: TrainingLevel,
                backend, freq: SystemFrequency = SystemFrequency.F60,
                turn_batch: int = DEFAULT_TURN_BATCH,
                context_window: int = DEFAULT_CONTEXT_WINDOW,
                transcript_path=None,
                audit: Optional[AuditLog] = None) -> SessionTranscript:
    """Run a full session; raises SessionAborted (with the partial
    transcript persisted) if the backend fails."""
    if audit is None:
        audit = AuditLog()
    batches = _batched(source, turn_batch)
    try:
        first_batch = next(batches)
    except StopIteration:
        raise UsageError("session needs a non-empty message stream") from None
    protocol = (Protocol.GOOSE if isinstance(first_batch[0], GooseMessage)
                else Protocol.SV)

    transcript = SessionTranscript(
        header={
            "protocol": protocol.value,
            "level": level.value,
            "freq": freq.hertz,
            "turn_batch": turn_batch,
            "context_window": context_window,
            "backend": getattr(backend, "kind", type(backend).__name__),
        },
        sink_path=transcript_path)
    audit.event("session_start", protocol=protocol.value, level=level.value,
                backend=getattr(backend, "kind", "?"))

    context = DialogueContext(protocol, level)
    belief = BeliefState()
    evaluator = StreamEvaluator(level, freq)
    enabled = level.rules_for(protocol)
    disabled_learnable = tuple(r for r in RuleId
                               if r.protocol is protocol and r.number > 5
                               and r not in enabled)
    all_actions: List[Action] = []

    try:
        for turn, batch in enumerate(itertools.chain([first_batch], batches)):
            for msg in batch:
                if (isinstance(msg, GooseMessage)
                        != (protocol is Protocol.GOOSE)):
                    raise UsageError(
                        "session streams are single-protocol; run one "
                        "session per protocol")

            # 1. structured input
            context.packets.extend(batch)
            context.turn_bounds.append(len(batch))
            transcript.add_stage(turn, "structured_input", {
                "batch_size": len(batch),
                "total_packets": len(context.packets),
                "first_seq": batch[0].seq_index,
                "last_seq": batch[-1].seq_index,
            })

            # 2. automated analysis
            new_suspects = []
            for msg in batch:
                verdict = evaluator.push(msg)
                new_suspects.extend(belief.absorb_verdict(verdict))
            belief.update_streams(evaluator)
            transcript.add_stage(turn, "automated_analysis", {
                "new_suspects": [
                    {"seq_index": c.seq_index, "rule": c.rule_id.value}
                    for c in new_suspects],
                "belief": belief.to_dict(),
            })

            # 3. dynamic validation
            suspect_rules = sorted({c.rule_id for c in belief.suspects()},
                                   key=lambda r: r.value)
            conditions = ValidationConditions.for_rules(
                suspect_rules, freq, context_window)
            before = {(c.seq_index, c.rule_id) for c in belief.suspects()}
            validate_candidates(belief, conditions, context.packets, freq)
            confirmed_now = [(seq, rule) for (seq, rule) in before
                             if belief.candidates.get((seq, rule))]
            demoted_now = [(seq, rule) for (seq, rule) in before
                           if (seq, rule) not in belief.candidates]
            for seq, rule in demoted_now:
                audit.event("suspect_demoted", seq_index=seq, rule=rule.value)
            oob_stats = {}
            if level is TrainingLevel.PT and disabled_learnable:
                prep = prepare_table(context.packets, protocol, freq)
                for rule in disabled_learnable:
                    result = run_prepared(compile_rule(rule, freq), prep)
                    oob_stats[rule.value] = len(result.rows)
            transcript.add_stage(turn, "dynamic_validation", {
                "validated_rules": [r.value for r in suspect_rules],
                "promoted": sorted(
                    [[seq, rule.value] for seq, rule in confirmed_now]),
                "demoted": sorted(
                    [[seq, rule.value] for seq, rule in demoted_now]),
                "oob_stats": oob_stats,
            })

            # 4. continuous learning
            view = TurnView(
                protocol=protocol, level=level, turn=turn,
                batch_size=turn_batch,
                confirmed_seq=belief.confirmed_seq_indices(),
                suspect_count=len(belief.suspects()),
                oob_stats=oob_stats,
            )
            actions = backend.decide(view)
            all_actions.extend(actions)
            for action in actions:
                audit.event("action", kind=action.kind.value)
            transcript.add_stage(turn, "continuous_learning", {
                "actions": [a.to_dict() for a in actions],
            })

            # 5. adaptive response
            transcript.add_stage(turn, "adaptive_response", {
                "response": _turn_response(turn, level, belief, actions),
            })
    except BackendProtocolError as exc:
        audit.event("session_abort", reason=str(exc))
        transcript.abort(str(exc))
        raise SessionAborted(str(exc), transcript) from exc

    summary = _final_summary(context, level, belief, all_actions, enabled)
    transcript.finish(summary)
    audit.event("session_end", confirmed=len(belief.confirmed()))
    return transcript


def _turn_response(turn: int, level: TrainingLevel, belief: BeliefState,
                   actions: List[Action]) -> dict:
    confirmed = belief.confirmed_seq_indices()
    kinds = [a.kind.value for a in actions]
    if confirmed:
        text = (f"turn {turn}: {len(confirmed)} confirmed anomalous "
                f"packet(s) so far; actions: {', '.join(kinds)}")
    elif level is TrainingLevel.WT:
        text = (f"turn {turn}: no rules enabled at level WT; "
                f"actions: {', '.join(kinds)}")
    else:
        text = f"turn {turn}: no confirmed anomalies; actions: {', '.join(kinds)}"
    return {"text": text, "confirmed_total": len(confirmed),
            "open_suspects": len(belief.suspects())}


def _final_summary(context: DialogueContext, level: TrainingLevel,
                   belief: BeliefState, actions: List[Action],
                   enabled) -> dict:
    proposals = sorted({
        r.value for a in actions
        if a.kind is ActionKind.PROPOSE_RULE_ENABLEMENT for r in a.rule_ids})
    confirmed = belief.confirmed_seq_indices()
    if level is TrainingLevel.WT:
        text = ("no rules enabled at level WT; nothing was flagged "
                f"({len(context.packets)} packets seen)")
    elif confirmed:
        text = (f"{len(confirmed)} anomalous packet(s) confirmed over "
                f"{len(context.packets)} packets at level {level.value}")
    elif proposals:
        text = ("no anomalies confirmed; proposing additional rules: "
                + ", ".join(proposals))
    else:
        text = (f"no anomalies confirmed over {len(context.packets)} "
                f"packets at level {level.value}")
    return {
        "protocol": context.protocol.value,
        "level": level.value,
        "enabled_rules": sorted(r.value for r in enabled),
        "packets": len(context.packets),
        "turns": len(context.turn_bounds),
        "confirmed_seq_indices": list(confirmed),
        "confirmed": [
            {"seq_index": c.seq_index, "rule": c.rule_id.value}
            for c in belief.confirmed()],
        "proposals": proposals,
        "belief": belief.to_dict(),
        "text": text,
    }
