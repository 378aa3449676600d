"""Five-stage dialogue pipeline: belief tracking, dynamic validation,
action prediction behind pluggable analyst backends, and replayable
transcripts."""

from .actions import (
    Action,
    ActionKind,
    RemoteChatBackend,
    RuleOracleBackend,
    ScriptedBackend,
    TurnView,
    parse_actions,
)
from .belief import (
    BeliefState,
    Candidate,
    Confidence,
    ValidationConditions,
    validate_candidates,
)
from .session import (
    DEFAULT_CONTEXT_WINDOW,
    DEFAULT_TURN_BATCH,
    DialogueContext,
    SessionAborted,
    run_session,
)
from .transcript import (
    AuditLog,
    SessionTranscript,
    read_transcript,
    read_transcript_actions,
)

__all__ = [
    "Action", "ActionKind", "RemoteChatBackend", "RuleOracleBackend",
    "ScriptedBackend", "TurnView", "parse_actions",
    "BeliefState", "Candidate", "Confidence", "ValidationConditions",
    "validate_candidates",
    "DEFAULT_CONTEXT_WINDOW", "DEFAULT_TURN_BATCH", "DialogueContext",
    "SessionAborted", "run_session",
    "AuditLog", "SessionTranscript", "read_transcript",
    "read_transcript_actions",
]
