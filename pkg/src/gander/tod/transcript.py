"""Session transcripts (line-delimited JSON, schema versioned) and the
append-only audit log.

Transcript stage records are fully deterministic for deterministic
backends; wall-clock time goes only to the audit log, never the
transcript.
"""
from __future__ import annotations

import datetime
import json
from pathlib import Path
from typing import List, Optional

from ..errors import SchemaError
from .actions import Action

SCHEMA_VERSION = 1

STAGES = (
    "structured_input",
    "automated_analysis",
    "dynamic_validation",
    "continuous_learning",
    "adaptive_response",
)


class SessionTranscript:
    """Ordered stage snapshots plus a final summary; replayable."""

    def __init__(self, header: dict, sink_path: Optional[Path] = None):
        self.header = dict(header)
        self.records: List[dict] = []
        self.summary: Optional[dict] = None
        self._sink = open(sink_path, "w", encoding="utf-8") if sink_path else None
        self._emit({"schema_version": SCHEMA_VERSION, "kind": "header",
                    **self.header})

    def _emit(self, record: dict) -> None:
        if self._sink is not None:
            self._sink.write(json.dumps(record, sort_keys=True) + "\n")
            self._sink.flush()

    def add_stage(self, turn: int, stage: str, payload: dict) -> None:
        assert stage in STAGES, stage
        record = {"kind": "stage", "turn": turn, "stage": stage,
                  "payload": payload}
        self.records.append(record)
        self._emit(record)

    def finish(self, summary: dict) -> None:
        self.summary = summary
        self._emit({"kind": "summary", "payload": summary})
        if self._sink is not None:
            self._sink.close()
            self._sink = None

    def abort(self, reason: str) -> None:
        record = {"kind": "aborted", "reason": reason}
        self.records.append(record)
        self._emit(record)
        if self._sink is not None:
            self._sink.close()
            self._sink = None

    def stage_records(self) -> List[dict]:
        return [r for r in self.records if r.get("kind") == "stage"]

    def stage_lines(self) -> str:
        """Canonical serialization of the stage records (replay-comparable:
        excludes the header, which names the backend)."""
        return "\n".join(json.dumps(r, sort_keys=True)
                         for r in self.stage_records())

    def actions_by_turn(self) -> List[List[Action]]:
        turns: List[List[Action]] = []
        for record in self.stage_records():
            if record["stage"] == "continuous_learning":
                turns.append([Action.from_dict(a)
                              for a in record["payload"]["actions"]])
        return turns


def read_transcript(path) -> List[dict]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise SchemaError(f"{path}:{line_no}: bad transcript line: "
                                  f"{exc}") from None
    if not records or records[0].get("kind") != "header":
        raise SchemaError(f"{path}: not a session transcript")
    if records[0].get("schema_version") != SCHEMA_VERSION:
        raise SchemaError(f"{path}: unsupported transcript schema")
    return records


def read_transcript_actions(path) -> List[List[Action]]:
    turns = []
    for record in read_transcript(path):
        if (record.get("kind") == "stage"
                and record.get("stage") == "continuous_learning"):
            turns.append([Action.from_dict(a)
                          for a in record["payload"]["actions"]])
    return turns


class AuditLog:
    """Append-only operational log; carries wall-clock timestamps and the
    verbatim backend request/reply traffic."""

    def __init__(self, path: Optional[Path] = None):
        self.path = Path(path) if path else None
        self.events: List[dict] = []

    def event(self, event_type: str, **details) -> None:
        record = {
            "ts": datetime.datetime.now(datetime.timezone.utc).isoformat(),
            "event": event_type,
            **details,
        }
        self.events.append(record)
        if self.path is not None:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(record, sort_keys=True) + "\n")
