"""Confusion-matrix construction and the four headline detector metrics.

Positive class is Anomalous throughout. Any rate with a zero denominator
contributes 0, and a zero product under the MCC root makes MCC 0; this is
what turns an all-negative prediction into the all-zero metric row rather
than a division error.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .errors import UsageError
from .model import Label, LabeledRecord, PacketVerdict


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def scaled(self, k: int) -> "ConfusionMatrix":
        return ConfusionMatrix(self.tp * k, self.fp * k, self.tn * k,
                               self.fn * k)

    def swapped_classes(self) -> "ConfusionMatrix":
        return ConfusionMatrix(tp=self.tn, fp=self.fn, tn=self.tp, fn=self.fp)


@dataclass(frozen=True)
class MetricSet:
    informedness: float
    markedness: float
    mcc: float
    gm: float
    accuracy: Optional[float]  # unknown for shipped fixture rows

    def as_dict(self) -> dict:
        return {
            "informedness": self.informedness,
            "markedness": self.markedness,
            "mcc": self.mcc,
            "gm": self.gm,
            "accuracy": self.accuracy,
        }


def confusion(predicted: Sequence[PacketVerdict],
              truth: Sequence[LabeledRecord]) -> ConfusionMatrix:
    """Count TP/FP/TN/FN from aligned verdicts and ground truth."""
    if len(predicted) != len(truth):
        raise UsageError(
            f"{len(predicted)} verdicts vs {len(truth)} labels")
    tp = fp = tn = fn = 0
    for verdict, record in zip(predicted, truth):
        if verdict.seq_index != record.message.seq_index:
            raise UsageError(
                f"misaligned seq_index {verdict.seq_index} vs "
                f"{record.message.seq_index}")
        anomalous = record.label is Label.ANOMALOUS
        if verdict.anomalous:
            if anomalous:
                tp += 1
            else:
                fp += 1
        elif anomalous:
            fn += 1
        else:
            tn += 1
    return ConfusionMatrix(tp, fp, tn, fn)


def _rate(num: int, den: int) -> float:
    return num / den if den else 0.0


def metrics(cm: ConfusionMatrix) -> MetricSet:
    """informedness = TPR+TNR-1, markedness = PPV+NPV-1, MCC, GM, accuracy."""
    if cm.total <= 0:
        raise UsageError("empty confusion matrix")
    tp, fp, tn, fn = cm.tp, cm.fp, cm.tn, cm.fn
    tpr = _rate(tp, tp + fn)
    tnr = _rate(tn, tn + fp)
    ppv = _rate(tp, tp + fp)
    npv = _rate(tn, tn + fn)
    denom_sq = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    if denom_sq == 0:
        mcc = 0.0
    else:
        root = math.isqrt(denom_sq)
        denom = float(root) if root * root == denom_sq else math.sqrt(denom_sq)
        mcc = (tp * tn - fp * fn) / denom
    return MetricSet(
        informedness=tpr + tnr - 1.0,
        markedness=ppv + npv - 1.0,
        mcc=mcc,
        gm=math.sqrt(tpr * tnr),
        accuracy=(tp + tn) / cm.total,
    )
