"""Figure rendering for the report path.

Renders the comparison table and the accuracy-by-level data to PNG files
next to the delimited outputs. Everything here is presentation only; the
numbers come straight from the ComparisonReport.
"""
from __future__ import annotations

from pathlib import Path
from typing import List

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .model import Protocol  # noqa: E402
from .rules.specs import TrainingLevel  # noqa: E402

_LEVELS = (TrainingLevel.WT, TrainingLevel.PT, TrainingLevel.FT)
_METRICS = ("informedness", "markedness", "mcc", "gm")
_METHOD_COLORS = {"HITL": "#d95f02", "ToD": "#1b9e77"}


def _metrics_figure(report, protocol: Protocol, path: Path) -> bool:
    cells = report.for_protocol(protocol)
    if not cells:
        return False
    columns = report._columns(cells)
    fig, axes = plt.subplots(2, 2, figsize=(9, 6), sharey=True)
    x = range(len(_LEVELS))
    width = 0.8 / max(1, len(columns))
    for ax, metric in zip(axes.flat, _METRICS):
        for mi, (method, provenance) in enumerate(columns):
            values = []
            for level in _LEVELS:
                cell = report.cell(protocol, method, level, provenance)
                value = getattr(cell.metrics, metric) if cell else None
                values.append(0.0 if value is None else value)
            offs = [xi + (mi - (len(columns) - 1) / 2) * width for xi in x]
            label = method + (" (fixture)" if provenance == "fixture" else "")
            bars = ax.bar(offs, values, width,
                          label=label,
                          color=_METHOD_COLORS.get(method, "#7570b3"),
                          edgecolor="black", linewidth=0.4)
            if provenance == "fixture":
                for bar in bars:
                    bar.set_hatch("//")
        ax.set_title(metric)
        ax.set_xticks(list(x))
        ax.set_xticklabels([lv.value for lv in _LEVELS])
        ax.set_ylim(-0.05, 1.05)
        ax.grid(axis="y", alpha=0.3)
    axes.flat[0].legend(loc="lower right", fontsize=8)
    fig.suptitle(f"{protocol.value.upper()} detection metrics by training "
                 f"level (hatched = shipped fixture)")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return True


def _accuracy_figure(report, path: Path) -> bool:
    rows = report.accuracy_rows()
    if not rows:
        return False
    fig, (ax_acc, ax_delta) = plt.subplots(1, 2, figsize=(9, 3.5))
    series = {}
    for row in rows:
        series.setdefault((row["protocol"], row["method"]), []).append(row)
    for (protocol, method), items in sorted(series.items()):
        levels = [r["level"] for r in items]
        accs = [r["accuracy"] for r in items]
        label = f"{method} ({protocol})"
        ax_acc.plot(levels, accs, marker="o", label=label)
        deltas = [r["delta_vs_previous_level"] for r in items]
        xs = [i for i, d in enumerate(deltas) if d is not None]
        ax_delta.bar([f"{levels[i]} ({protocol})" for i in xs],
                     [deltas[i] for i in xs], alpha=0.7, label=label)
    ax_acc.set_title("accuracy by training level")
    ax_acc.set_ylim(0, 1.05)
    ax_acc.grid(alpha=0.3)
    ax_acc.legend(fontsize=8)
    ax_delta.set_title("incremental accuracy gain")
    ax_delta.grid(axis="y", alpha=0.3)
    ax_delta.tick_params(axis="x", labelsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return True


def render_figures(report, out_dir) -> List[str]:
    """Render all applicable figures; returns the written file names."""
    out = Path(out_dir)
    written = []
    for protocol in (Protocol.GOOSE, Protocol.SV):
        name = f"metrics_by_level_{protocol.value}.png"
        if _metrics_figure(report, protocol, out / name):
            written.append(name)
    if _accuracy_figure(report, out / "accuracy_by_level.png"):
        written.append("accuracy_by_level.png")
    return written
