"""Metric formulas against an independent test-side oracle, plus the
report fixtures and serializations."""
import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gander.errors import UsageError
from gander.metrics import ConfusionMatrix, MetricSet, confusion, metrics
from gander.model import Label, LabeledRecord, PacketVerdict, Protocol
from gander.report import (
    ComparisonReport,
    FIXTURE_SOURCE,
    computed_cell,
    fixture_cells,
    load_report,
    render_report,
)
from gander.rules import TrainingLevel
from support import g


def oracle_metrics(tp, fp, tn, fn):
    """Straight transcription of the metric definitions, kept separate from
    the implementation on purpose."""
    def rate(n, d):
        return n / d if d else 0.0
    tpr, tnr = rate(tp, tp + fn), rate(tn, tn + fp)
    ppv, npv = rate(tp, tp + fp), rate(tn, tn + fn)
    d = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    mcc = (tp * tn - fp * fn) / math.sqrt(d) if d else 0.0
    return (tpr + tnr - 1, ppv + npv - 1, mcc, math.sqrt(tpr * tnr),
            (tp + tn) / (tp + fp + tn + fn))


# 20+ matrices, including every degenerate zero-column shape
ORACLE_CASES = [
    (90, 20, 80, 10),
    (50, 0, 50, 0),      # perfect
    (0, 0, 50, 50),      # never predicts positive
    (50, 50, 0, 0),      # never predicts negative
    (0, 50, 0, 50),      # always wrong
    (0, 0, 100, 0),      # no positives anywhere
    (100, 0, 0, 0),      # no negatives anywhere
    (1, 0, 0, 1),
    (0, 1, 1, 0),
    (1, 1, 1, 1),
    (3, 1, 4, 1),
    (5, 9, 2, 6),
    (10, 0, 90, 5),
    (250, 3, 747, 0),
    (7, 7, 7, 7),
    (1, 2, 3, 4),
    (1000, 1, 1000, 1),
    (12, 0, 0, 34),
    (0, 12, 34, 0),
    (99, 1, 0, 0),
    (2, 0, 9998, 0),
    (480, 20, 9000, 500),
]


class TestMetrics:
    @pytest.mark.parametrize("tp,fp,tn,fn", ORACLE_CASES)
    def test_matches_oracle(self, tp, fp, tn, fn):
        got = metrics(ConfusionMatrix(tp, fp, tn, fn))
        want = oracle_metrics(tp, fp, tn, fn)
        for a, b in zip((got.informedness, got.markedness, got.mcc, got.gm,
                         got.accuracy), want):
            assert abs(a - b) <= 1e-12

    def test_worked_example(self):
        m = metrics(ConfusionMatrix(tp=90, fn=10, tn=80, fp=20))
        assert abs(m.informedness - 0.7) <= 1e-12
        assert abs(m.gm - math.sqrt(0.72)) <= 1e-4 and round(m.gm, 4) == 0.8485
        assert round(m.mcc, 4) == 0.7035

    def test_perfect_detector_is_exactly_one(self):
        m = metrics(ConfusionMatrix(tp=5000, fp=0, tn=95000, fn=0))
        assert (m.informedness, m.markedness, m.mcc, m.gm) == (1.0, 1.0, 1.0, 1.0)

    def test_degenerate_all_negative_prediction(self):
        m = metrics(ConfusionMatrix(tp=0, fp=0, tn=50, fn=50))
        # zeroed degenerate columns: TPR and PPV terms vanish
        assert (m.informedness, m.mcc, m.gm) == (0.0, 0.0, 0.0)
        assert m.markedness == -0.5  # NPV alone: 0 + 0.5 - 1

    def test_empty_matrix_rejected(self):
        with pytest.raises(UsageError):
            metrics(ConfusionMatrix(0, 0, 0, 0))

    @given(st.integers(0, 10_000), st.integers(0, 10_000),
           st.integers(0, 10_000), st.integers(0, 10_000))
    @settings(max_examples=400)
    def test_properties(self, tp, fp, tn, fn):
        cm = ConfusionMatrix(tp, fp, tn, fn)
        if cm.total == 0:
            return
        m = metrics(cm)
        # documented ranges
        assert -1 <= m.informedness <= 1 and -1 <= m.markedness <= 1
        assert -1 - 1e-12 <= m.mcc <= 1 + 1e-12
        assert 0 <= m.gm <= 1 and 0 <= m.accuracy <= 1
        # class swap: informedness/markedness/gm/mcc all invariant
        sw = metrics(cm.swapped_classes())
        assert abs(sw.informedness - m.informedness) <= 1e-12
        assert abs(sw.markedness - m.markedness) <= 1e-12
        assert abs(abs(sw.mcc) - abs(m.mcc)) <= 1e-12
        assert abs(sw.gm - m.gm) <= 1e-12
        # scaling invariance
        sc = metrics(cm.scaled(7))
        for key in ("informedness", "markedness", "mcc", "gm", "accuracy"):
            assert abs(getattr(sc, key) - getattr(m, key)) <= 1e-9
        # perfect fixed point
        if fp == 0 and fn == 0 and tp and tn:
            assert (m.informedness, m.markedness, m.mcc, m.gm) == (1, 1, 1, 1)


def _labeled(i, anomalous):
    msg = g(i, i * 1_000_000, sqnum=i)
    return (LabeledRecord.attack(msg, "x") if anomalous
            else LabeledRecord.normal(msg))


def _verdict(i, anomalous):
    return PacketVerdict(i, (), anomalous)


class TestConfusion:
    def test_perfect_split(self):
        truth = [_labeled(i, i < 50) for i in range(100)]
        pred = [_verdict(i, i < 50) for i in range(100)]
        assert confusion(pred, truth) == ConfusionMatrix(50, 0, 50, 0)

    def test_all_normal_prediction(self):
        truth = [_labeled(i, i < 50) for i in range(100)]
        pred = [_verdict(i, False) for i in range(100)]
        assert confusion(pred, truth) == ConfusionMatrix(0, 0, 50, 50)

    def test_length_mismatch(self):
        with pytest.raises(UsageError):
            confusion([_verdict(0, False)], [])

    def test_misaligned_indices(self):
        truth = [_labeled(0, False)]
        pred = [_verdict(3, False)]
        with pytest.raises(UsageError):
            confusion(pred, truth)


class TestReport:
    def test_fixture_cells_verbatim(self):
        report = ComparisonReport(fixture_cells())
        c = report.cell(Protocol.GOOSE, "ToD", TrainingLevel.FT)
        assert (c.metrics.informedness, c.metrics.markedness,
                c.metrics.mcc, c.metrics.gm) == (0.9492, 0.9492, 0.9491,
                                                 0.9746)
        c = report.cell(Protocol.SV, "HITL", TrainingLevel.WT)
        assert (c.metrics.informedness, c.metrics.markedness,
                c.metrics.mcc, c.metrics.gm) == (0.0, 0.0, 0.0, 0.5)
        assert c.provenance == "fixture" and c.source == FIXTURE_SOURCE
        assert c.metrics.accuracy is None
        assert len(report.cells) == 12

    def test_render_and_reload(self, tmp_path):
        m = metrics(ConfusionMatrix(480, 20, 9000, 500))
        cells = fixture_cells() + [
            computed_cell(Protocol.SV, TrainingLevel.FT, m, "run-1")]
        written = render_report(cells, tmp_path, with_figures=False)
        assert set(written) == {"report.md", "report.csv", "report.json",
                                "accuracy_by_level.csv"}
        back = load_report(tmp_path / "report.json")
        assert len(back.cells) == 13
        got = back.cell(Protocol.SV, "ToD", TrainingLevel.FT)
        assert got.provenance == "computed"
        assert abs(got.metrics.mcc - m.mcc) < 1e-12
        text = (tmp_path / "report.md").read_text()
        assert "0.9746*" in text  # fixture mark

    def test_accuracy_rows_have_differentials(self):
        cells = []
        rng = random.Random(1)
        for level, acc_counts in zip(TrainingLevel, ((5, 95), (50, 50),
                                                     (95, 5))):
            tp, fn = acc_counts
            cells.append(computed_cell(
                Protocol.GOOSE, level,
                metrics(ConfusionMatrix(tp, 0, 100, fn)), "run-x"))
        rows = ComparisonReport(cells).accuracy_rows()
        assert [r["level"] for r in rows] == ["WT", "PT", "FT"]
        assert rows[0]["delta_vs_previous_level"] is None
        assert rows[1]["delta_vs_previous_level"] == pytest.approx(
            rows[1]["accuracy"] - rows[0]["accuracy"])

    def test_figures_rendered(self, tmp_path):
        m = metrics(ConfusionMatrix(480, 20, 9000, 500))
        cells = fixture_cells() + [
            computed_cell(Protocol.SV, TrainingLevel.FT, m, "run-1")]
        written = render_report(cells, tmp_path, with_figures=True)
        assert "metrics_by_level_goose.png" in written
        assert "metrics_by_level_sv.png" in written
        assert "accuracy_by_level.png" in written
        for name in written:
            assert (tmp_path / name).stat().st_size > 0
