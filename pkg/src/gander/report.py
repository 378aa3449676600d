"""Comparison reports: method x training-level metric tables plus
accuracy-by-level data with incremental differentials.

Cells are either computed from a local run or shipped fixtures. The
fixture rows are reference results for the HITL and ToD analyst workflows
measured against a proprietary conversational model; they are reproduced
verbatim for side-by-side display and are not regenerable locally.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import List, Optional

from .metrics import MetricSet
from .model import Protocol
from .rules.specs import TrainingLevel

SCHEMA_VERSION = 1

FIXTURE_SOURCE = "reference-benchmark"

_METRIC_KEYS = ("informedness", "markedness", "mcc", "gm")

# protocol -> method -> metric -> (WT, PT, FT)
_FIXTURES = {
    "goose": {
        "HITL": {
            "informedness": (0.22, 0.3964, 0.5709),
            "markedness": (0.233, 0.416, 0.599),
            "mcc": (0.0247, 0.2054, 0.4142),
            "gm": (0.5865, 0.6844, 0.7784),
        },
        "ToD": {
            "informedness": (0.825, 0.8998, 0.9492),
            "markedness": (0.8296, 0.8998, 0.9492),
            "mcc": (0.822, 0.8997, 0.9491),
            "gm": (0.9105, 0.9512, 0.9746),
        },
    },
    "sv": {
        "HITL": {
            "informedness": (0.0, 0.5, 0.8833),
            "markedness": (0.0, 0.3836, 0.7407),
            "mcc": (0.0, 0.3713, 0.8432),
            "gm": (0.5, 0.7483, 0.9397),
        },
        "ToD": {
            "informedness": (0.8296, 0.8968, 0.9467),
            "markedness": (0.825, 0.8968, 0.9467),
            "mcc": (0.823, 0.8966, 0.9466),
            "gm": (0.9143, 0.9484, 0.9733),
        },
    },
}

_LEVELS = (TrainingLevel.WT, TrainingLevel.PT, TrainingLevel.FT)


@dataclass(frozen=True)
class ReportCell:
    protocol: Protocol
    method: str            # "HITL" | "ToD"
    level: TrainingLevel
    metrics: MetricSet
    provenance: str        # "computed" | "fixture"
    source: str            # dataset id or fixture tag

    def as_dict(self) -> dict:
        return {
            "protocol": self.protocol.value,
            "method": self.method,
            "level": self.level.value,
            "metrics": self.metrics.as_dict(),
            "provenance": self.provenance,
            "source": self.source,
        }


def fixture_cells() -> List[ReportCell]:
    """The shipped reference table, one cell per protocol/method/level."""
    cells = []
    for proto_name, methods in _FIXTURES.items():
        protocol = Protocol(proto_name)
        for method, table in methods.items():
            for i, level in enumerate(_LEVELS):
                cells.append(ReportCell(
                    protocol, method, level,
                    MetricSet(
                        informedness=table["informedness"][i],
                        markedness=table["markedness"][i],
                        mcc=table["mcc"][i],
                        gm=table["gm"][i],
                        accuracy=None,
                    ),
                    provenance="fixture",
                    source=FIXTURE_SOURCE,
                ))
    return cells


def computed_cell(protocol: Protocol, level: TrainingLevel,
                  metric_set: MetricSet, source: str,
                  method: str = "ToD") -> ReportCell:
    return ReportCell(protocol, method, level, metric_set, "computed", source)


@dataclass
class ComparisonReport:
    cells: List[ReportCell]

    def for_protocol(self, protocol: Protocol) -> List[ReportCell]:
        return [c for c in self.cells if c.protocol is protocol]

    def cell(self, protocol: Protocol, method: str, level: TrainingLevel,
             provenance: Optional[str] = None) -> Optional[ReportCell]:
        """Find a cell; with no provenance given, computed cells win over
        fixture cells at the same coordinates."""
        found = None
        for c in self.cells:
            if (c.protocol is protocol and c.method == method
                    and c.level is level):
                if provenance is None:
                    if c.provenance == "computed":
                        return c
                    found = c
                elif c.provenance == provenance:
                    return c
        return None if provenance else found

    def _columns(self, cells: List[ReportCell]) -> List[tuple]:
        columns = []
        for c in cells:
            key = (c.method, c.provenance)
            if key not in columns:
                columns.append(key)
        return columns

    # -- serializations ---------------------------------------------------

    def to_json(self) -> str:
        payload = {
            "schema_version": SCHEMA_VERSION,
            "cells": [c.as_dict() for c in self.cells],
            "accuracy_by_level": self.accuracy_rows(),
        }
        return json.dumps(payload, indent=2, sort_keys=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["protocol", "method", "level", "informedness",
                         "markedness", "mcc", "gm", "accuracy",
                         "provenance", "source"])
        for c in self.cells:
            m = c.metrics
            writer.writerow([
                c.protocol.value, c.method, c.level.value,
                m.informedness, m.markedness, m.mcc, m.gm,
                "" if m.accuracy is None else m.accuracy,
                c.provenance, c.source])
        return buf.getvalue()

    def to_markdown(self) -> str:
        lines = ["# Detection comparison by training level", ""]
        for protocol in (Protocol.GOOSE, Protocol.SV):
            cells = self.for_protocol(protocol)
            if not cells:
                continue
            columns = self._columns(cells)
            lines.append(f"## {protocol.value.upper()}")
            lines.append("")
            header = ["Metric"]
            for method, provenance in columns:
                mark = "*" if provenance == "fixture" else ""
                for level in _LEVELS:
                    header.append(f"{method}{mark} {level.value}")
            lines.append("| " + " | ".join(header) + " |")
            lines.append("|" + "---|" * len(header))
            for key in _METRIC_KEYS + ("accuracy",):
                row = [key]
                for method, provenance in columns:
                    mark = "*" if provenance == "fixture" else ""
                    for level in _LEVELS:
                        c = self.cell(protocol, method, level, provenance)
                        value = getattr(c.metrics, key) if c else None
                        row.append("-" if value is None
                                   else f"{value:.4f}{mark}")
                lines.append("| " + " | ".join(row) + " |")
            lines.append("")
        lines.append("`*` fixture provenance (shipped reference results, "
                     "not computed locally)")
        lines.append("")
        return "\n".join(lines)

    def accuracy_rows(self) -> List[dict]:
        """Accuracy per level with level-to-level differentials, for the
        computed cells that carry an accuracy value."""
        rows = []
        pairs = {(c.protocol, c.method) for c in self.cells}
        for protocol, method in sorted(pairs,
                                       key=lambda p: (p[0].value, p[1])):
            prev = None
            for level in _LEVELS:
                c = self.cell(protocol, method, level)
                if c is None or c.metrics.accuracy is None:
                    continue
                acc = c.metrics.accuracy
                rows.append({
                    "protocol": protocol.value,
                    "method": method,
                    "level": level.value,
                    "accuracy": acc,
                    "delta_vs_previous_level":
                        None if prev is None else acc - prev,
                })
                prev = acc
        return rows

    def accuracy_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["protocol", "method", "level", "accuracy",
                         "delta_vs_previous_level"])
        for row in self.accuracy_rows():
            delta = row["delta_vs_previous_level"]
            writer.writerow([row["protocol"], row["method"], row["level"],
                             row["accuracy"],
                             "" if delta is None else delta])
        return buf.getvalue()


def render_report(cells: List[ReportCell], out_dir,
                  with_figures: bool = True) -> List[str]:
    """Write report.md/report.csv/report.json/accuracy_by_level.csv (and
    figures) under ``out_dir``; returns the written file names."""
    from pathlib import Path

    if not cells:
        raise ValueError("report needs at least one cell")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = ComparisonReport(cells)
    written = []
    for name, text in (("report.md", report.to_markdown()),
                       ("report.csv", report.to_csv()),
                       ("report.json", report.to_json()),
                       ("accuracy_by_level.csv", report.accuracy_csv())):
        (out / name).write_text(text, encoding="utf-8")
        written.append(name)
    if with_figures:
        from .figures import render_figures
        written.extend(render_figures(report, out))
    return written


def load_report(path) -> ComparisonReport:
    """Rebuild a ComparisonReport from a written report.json."""
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    cells = []
    for c in payload["cells"]:
        m = c["metrics"]
        cells.append(ReportCell(
            Protocol(c["protocol"]), c["method"],
            TrainingLevel(c["level"]),
            MetricSet(m["informedness"], m["markedness"], m["mcc"],
                      m["gm"], m["accuracy"]),
            c["provenance"], c["source"]))
    return ComparisonReport(cells)
