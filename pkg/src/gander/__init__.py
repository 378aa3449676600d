"""gander: streaming anomaly detection for IEC 61850 GOOSE/SV traffic."""

__version__ = "0.1.0"

from .model import (
    GooseMessage,
    Label,
    LabeledRecord,
    MacAddress,
    Outcome,
    PacketVerdict,
    Protocol,
    RuleId,
    RuleVerdict,
    StreamKey,
    SvMessage,
    Timestamp,
    format_timestamp,
    make_timestamp,
    parse_timestamp,
)
from .rules import (
    StreamEvaluator,
    SystemFrequency,
    TrainingLevel,
    evaluate_stream,
    oracle_evaluate,
)

__all__ = [
    "__version__",
    "GooseMessage",
    "Label",
    "LabeledRecord",
    "MacAddress",
    "Outcome",
    "PacketVerdict",
    "Protocol",
    "RuleId",
    "RuleVerdict",
    "StreamKey",
    "SvMessage",
    "Timestamp",
    "format_timestamp",
    "make_timestamp",
    "parse_timestamp",
    "StreamEvaluator",
    "SystemFrequency",
    "TrainingLevel",
    "evaluate_stream",
    "oracle_evaluate",
]
