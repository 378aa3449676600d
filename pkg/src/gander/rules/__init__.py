"""Streaming GOOSE/SV compliance rules, training levels, and the
brute-force differential oracle."""

from .engine import (
    StreamEvaluator,
    eval_goose_rule,
    eval_sv_rule,
    evaluate_list,
    evaluate_stream,
)
from .oracle import oracle_evaluate
from .specs import (
    RULE_SPECS,
    Polarity,
    RuleSpec,
    StreamState,
    SystemFrequency,
    TrainingLevel,
    rules_manifest,
)

__all__ = [
    "StreamEvaluator",
    "eval_goose_rule",
    "eval_sv_rule",
    "evaluate_list",
    "evaluate_stream",
    "oracle_evaluate",
    "RULE_SPECS",
    "Polarity",
    "RuleSpec",
    "StreamState",
    "SystemFrequency",
    "TrainingLevel",
    "rules_manifest",
]
