"""Command-line entry point: generate, detect, session, eval, report.

Exit codes: 0 clean, 1 anomalies found (detect/query), 2 error. All
outputs carry schema_version fields; rerunning a command with the same
config and seed reproduces the same files.
"""
from __future__ import annotations

import functools
import json
import sys
from pathlib import Path
from typing import List, Optional

import click

from . import __version__
from .capture import CaptureSource, FrameDecodeStats, ProtocolHint, read_capture
from .config import RunConfig, load_scenario_spec, parse_freq, parse_level
from .errors import GanderError
from .filterql import Projection, parse_query, run_query
from .metrics import ConfusionMatrix, metrics
from .model import (
    GooseMessage,
    Label,
    Outcome,
    PacketVerdict,
    Protocol,
    RuleId,
    RuleVerdict,
)
from .report import computed_cell, fixture_cells, load_report, render_report
from .rules import StreamEvaluator, rules_manifest
from .scenario import export, generate, read_labels, sidecar_path
from .tod import (
    AuditLog,
    RemoteChatBackend,
    RuleOracleBackend,
    ScriptedBackend,
    SessionAborted,
    run_session,
)

VERDICTS_SCHEMA_VERSION = 1


def fail(message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(2)


def guarded(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except GanderError as exc:
            fail(str(exc))
        except OSError as exc:
            fail(f"{exc.filename or ''}: {exc.strerror or exc}")
    return wrapper


def _load_config(config_path: Optional[str]) -> RunConfig:
    return RunConfig.load(config_path) if config_path else RunConfig()


def _hint(text: str) -> ProtocolHint:
    try:
        return ProtocolHint(text.lower())
    except ValueError:
        fail(f"unknown protocol {text!r} (expected goose, sv, or auto)")


def _read_messages(cfg: RunConfig, stats: FrameDecodeStats) -> list:
    if cfg.input_kind == "scenario":
        spec = load_scenario_spec(cfg.input_path)
        return [rec.message for rec in generate(spec)]
    if cfg.input_kind == "pcap":
        source = CaptureSource.pcap(cfg.input_path, _hint(cfg.protocol_hint))
    else:
        source = CaptureSource.csv(cfg.input_path, _hint(cfg.protocol_hint))
    return list(read_capture(source, stats=stats))


def _apply_input_flags(cfg: RunConfig, input_path, input_kind, protocol,
                       level, freq, out) -> RunConfig:
    if input_path:
        cfg.input_path = Path(input_path)
        cfg.input_kind = input_kind or _infer_kind(cfg.input_path)
    if protocol:
        cfg.protocol_hint = protocol
    if level:
        cfg.level = parse_level(level)
    if freq:
        cfg.freq = parse_freq(freq)
    if out:
        cfg.output_dir = Path(out)
    if cfg.input_path is None:
        fail("no input given (use --input or a config [input] section)")
    return cfg


def _infer_kind(path: Path) -> str:
    suffix = path.suffix.lower()
    if suffix in (".pcap", ".pcapng", ".cap"):
        return "pcap"
    if suffix == ".toml":
        return "scenario"
    return "csv"


@click.group()
@click.version_option(__version__)
def main():
    """Streaming anomaly detection for GOOSE/SV substation traffic."""


# --- generate ------------------------------------------------------------

@main.command(name="generate")
@click.option("--spec", "spec_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Scenario spec (TOML).")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False),
              help="Output directory.")
@click.option("--seed", type=int, default=None,
              help="Override the spec's seed.")
@click.option("--format", "fmt", type=click.Choice(["csv", "pcap", "both"]),
              default="both", show_default=True)
@guarded
def generate_cmd(spec_path, out_dir, seed, fmt):
    """Generate a labeled dataset from a scenario spec."""
    spec = load_scenario_spec(spec_path)
    if seed is not None:
        spec.seed = seed
    records = generate(spec)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    base = Path(spec_path).stem
    written: List[Path] = []
    if fmt in ("csv", "both"):
        written.extend(export(records, "csv", out / f"{base}.csv"))
    if fmt in ("pcap", "both"):
        written.extend(export(records, "pcap", out / f"{base}.pcap"))
    by_tag = {}
    for rec in records:
        if rec.attack_tag:
            by_tag[rec.attack_tag] = by_tag.get(rec.attack_tag, 0) + 1
    normal = sum(1 for r in records if r.label is Label.NORMAL)
    click.echo(f"{len(records)} packets ({normal} normal, "
               f"{len(records) - normal} anomalous)")
    for tag in sorted(by_tag):
        click.echo(f"  {tag}: {by_tag[tag]}")
    for path in dict.fromkeys(written):
        click.echo(f"wrote {path}")


# --- detect ---------------------------------------------------------------

def _verdict_line(verdict: PacketVerdict) -> str:
    rules = {rv.rule_id.value: rv.outcome.value for rv in verdict.per_rule}
    return json.dumps({
        "schema_version": VERDICTS_SCHEMA_VERSION,
        "seq_index": verdict.seq_index,
        "anomalous": verdict.anomalous,
        "rules": rules,
    }, sort_keys=True)


def read_verdicts(path) -> List[PacketVerdict]:
    verdicts = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            data = json.loads(line)
            per_rule = tuple(
                RuleVerdict(RuleId(r), Outcome(o))
                for r, o in sorted(data.get("rules", {}).items()))
            verdicts.append(PacketVerdict(data["seq_index"], per_rule,
                                          data["anomalous"]))
    return verdicts


@main.command()
@click.option("--config", "config_path",
              type=click.Path(exists=True, dir_okay=False))
@click.option("--input", "input_path", type=click.Path(exists=True))
@click.option("--input-kind", type=click.Choice(["csv", "pcap", "scenario"]))
@click.option("--protocol", type=click.Choice(["goose", "sv", "auto"]))
@click.option("--level", type=str, help="WT, PT, or FT.")
@click.option("--freq", type=int, help="50 or 60.")
@click.option("--out", type=click.Path(file_okay=False))
@click.option("--query", "query_text",
              help="Run a raw filter query instead of the rule set.")
@guarded
def detect(config_path, input_path, input_kind, protocol, level, freq, out,
           query_text):
    """Evaluate the enabled rules (or one query) over a capture."""
    cfg = _apply_input_flags(_load_config(config_path), input_path,
                             input_kind, protocol, level, freq, out)
    stats = FrameDecodeStats()
    messages = _read_messages(cfg, stats)

    if query_text:
        query = parse_query(query_text)
        result = run_query(query, messages, cfg.freq)
        if result.projection is Projection.COUNT:
            click.echo(str(result.count))
            sys.exit(1 if result.count else 0)
        click.echo(" ".join(str(i) for i in result.rows))
        sys.exit(1 if result.rows else 0)

    evaluator = StreamEvaluator(cfg.level, cfg.freq)
    out_dir = cfg.output_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    rule_counts = {}
    anomalies = 0
    verdict_path = out_dir / "verdicts.jsonl"
    with open(verdict_path, "w", encoding="utf-8") as fh:
        for msg in messages:
            verdict = evaluator.push(msg)
            if verdict.anomalous:
                anomalies += 1
                for rv in verdict.per_rule:
                    if rv.outcome is Outcome.ANOMALOUS:
                        rule_counts[rv.rule_id.value] = \
                            rule_counts.get(rv.rule_id.value, 0) + 1
            fh.write(_verdict_line(verdict) + "\n")
    summary = {
        "schema_version": VERDICTS_SCHEMA_VERSION,
        "level": cfg.level.value,
        "freq": cfg.freq.hertz,
        "packets": len(messages),
        "anomalous_packets": anomalies,
        "per_rule_anomalies": dict(sorted(rule_counts.items())),
        "decode": {
            "frames_total": stats.frames_total,
            "frames_decoded": stats.frames_decoded,
            "frames_skipped": stats.frames_skipped,
            "decode_errors": stats.decode_errors,
        },
    }
    (out_dir / "detect_summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True), encoding="utf-8")
    click.echo(f"{len(messages)} packets, {anomalies} anomalous "
               f"(level {cfg.level.value})")
    for rule, count in sorted(rule_counts.items()):
        click.echo(f"  {rule}: {count}")
    click.echo(f"wrote {verdict_path}")
    sys.exit(1 if anomalies else 0)


# --- session ---------------------------------------------------------------

def _make_backend(cfg: RunConfig, audit: AuditLog):
    if cfg.backend == "rule_oracle":
        return RuleOracleBackend()
    if cfg.backend == "scripted":
        if not cfg.scripted_path:
            fail("scripted backend needs run.scripted_path "
                 "or --scripted PATH")
        return ScriptedBackend.from_transcript_file(cfg.scripted_path)
    if cfg.backend == "remote_chat":
        return RemoteChatBackend(audit=audit)
    fail(f"unknown backend {cfg.backend!r}")


@main.command()
@click.option("--config", "config_path",
              type=click.Path(exists=True, dir_okay=False))
@click.option("--input", "input_path", type=click.Path(exists=True))
@click.option("--input-kind", type=click.Choice(["csv", "pcap", "scenario"]))
@click.option("--protocol", type=click.Choice(["goose", "sv", "auto"]))
@click.option("--level", type=str)
@click.option("--freq", type=int)
@click.option("--out", type=click.Path(file_okay=False))
@click.option("--backend", type=click.Choice(["rule_oracle", "scripted",
                                              "remote_chat"]))
@click.option("--scripted", "scripted_path",
              type=click.Path(exists=True, dir_okay=False),
              help="Recorded transcript for the scripted backend.")
@click.option("--batch", type=int, help="Packets per dialogue turn.")
@click.option("--window", type=int, help="Validation context window.")
@click.option("--labels", "labels_path", type=click.Path(exists=True),
              help="Label sidecar for metric computation.")
@guarded
def session(config_path, input_path, input_kind, protocol, level, freq, out,
            backend, scripted_path, batch, window, labels_path):
    """Run a dialogue session over a capture and persist the transcript."""
    cfg = _apply_input_flags(_load_config(config_path), input_path,
                             input_kind, protocol, level, freq, out)
    if backend:
        cfg.backend = backend
    if scripted_path:
        cfg.scripted_path = Path(scripted_path)
    if batch:
        cfg.turn_batch = batch
    if window:
        cfg.context_window = window
    out_dir = cfg.output_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    audit = AuditLog(out_dir / "audit.log")
    chosen = _make_backend(cfg, audit)
    stats = FrameDecodeStats()
    messages = _read_messages(cfg, stats)
    transcript_path = out_dir / "transcript.jsonl"
    try:
        transcript = run_session(
            iter(messages), cfg.level, chosen, cfg.freq,
            turn_batch=cfg.turn_batch, context_window=cfg.context_window,
            transcript_path=transcript_path, audit=audit)
    except SessionAborted as exc:
        click.echo(f"session aborted: {exc} (partial transcript at "
                   f"{transcript_path})", err=True)
        sys.exit(2)
    summary = transcript.summary
    (out_dir / "session_summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True), encoding="utf-8")
    click.echo(summary["text"])
    click.echo(f"wrote {transcript_path}")

    labels_file = Path(labels_path) if labels_path else (
        sidecar_path(cfg.input_path) if cfg.input_kind in ("csv", "pcap")
        else None)
    if labels_file and labels_file.exists():
        truth = read_labels(labels_file)
        confirmed = set(summary["confirmed_seq_indices"])
        pred = {idx: idx in confirmed for idx, _, _ in truth}
        actual = {idx: label is Label.ANOMALOUS for idx, label, _ in truth}
        cm = _confusion_from_maps(pred, actual)
        cell = computed_cell(
            Protocol(summary["protocol"]), cfg.level, metrics(cm),
            source=str(labels_file.name))
        written = render_report([cell], out_dir)
        click.echo("wrote " + ", ".join(written))


def _confusion_from_maps(pred, truth) -> ConfusionMatrix:
    tp = fp = tn = fn = 0
    for idx, anomalous in truth.items():
        positive = pred.get(idx, False)
        if positive and anomalous:
            tp += 1
        elif positive:
            fp += 1
        elif anomalous:
            fn += 1
        else:
            tn += 1
    return ConfusionMatrix(tp, fp, tn, fn)


# --- eval -------------------------------------------------------------------

@main.command(name="eval")
@click.option("--verdicts", "verdicts_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--labels", "labels_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--protocol", type=click.Choice(["goose", "sv"]),
              default="goose", show_default=True)
@click.option("--level", type=str, default="FT", show_default=True)
@click.option("--out", "out_dir", required=True,
              type=click.Path(file_okay=False))
@click.option("--with-fixtures", is_flag=True,
              help="Merge the shipped reference cells for side-by-side "
                   "display.")
@click.option("--dataset-id", default=None,
              help="Provenance tag for the computed cells.")
@click.option("--no-figures", is_flag=True)
@guarded
def eval_cmd(verdicts_path, labels_path, protocol, level, out_dir,
             with_fixtures, dataset_id, no_figures):
    """Score a verdicts file against ground-truth labels."""
    verdicts = read_verdicts(verdicts_path)
    truth = read_labels(labels_path)
    if not truth:
        fail(f"{labels_path}: no labels")
    if len(verdicts) != len(truth):
        fail(f"misaligned inputs: {len(verdicts)} verdicts vs "
             f"{len(truth)} labels")
    pred = {}
    actual = {}
    for verdict, (idx, lab, _tag) in zip(verdicts, truth):
        if verdict.seq_index != idx:
            fail(f"misaligned seq_index {verdict.seq_index} vs {idx}")
        pred[idx] = verdict.anomalous
        actual[idx] = lab is Label.ANOMALOUS
    cm = _confusion_from_maps(pred, actual)
    cell = computed_cell(Protocol(protocol), parse_level(level), metrics(cm),
                         source=dataset_id or Path(labels_path).name)
    cells = [cell]
    if with_fixtures:
        cells = fixture_cells() + cells
    written = render_report(cells, out_dir, with_figures=not no_figures)
    m = cell.metrics
    click.echo(f"tp={cm.tp} fp={cm.fp} tn={cm.tn} fn={cm.fn}")
    click.echo(f"informedness={m.informedness:.4f} "
               f"markedness={m.markedness:.4f} mcc={m.mcc:.4f} "
               f"gm={m.gm:.4f} accuracy={m.accuracy:.4f}")
    click.echo("wrote " + ", ".join(written))


# --- report -------------------------------------------------------------------

@main.command(name="report")
@click.option("--from", "report_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="A previously written report.json.")
@click.option("--out", "out_dir", required=True,
              type=click.Path(file_okay=False))
@click.option("--with-fixtures", is_flag=True)
@click.option("--no-figures", is_flag=True)
@click.option("--rules-manifest", "manifest_path",
              type=click.Path(dir_okay=False),
              help="Also write the machine-readable rule manifest here.")
@guarded
def report_cmd(report_path, out_dir, with_fixtures, no_figures,
               manifest_path):
    """Re-render report tables and figures from a report.json."""
    report = load_report(report_path)
    cells = list(report.cells)
    if with_fixtures:
        have = {(c.protocol, c.method, c.level, c.provenance)
                for c in cells}
        for cell in fixture_cells():
            if (cell.protocol, cell.method, cell.level,
                    "fixture") not in have:
                cells.append(cell)
    written = render_report(cells, out_dir, with_figures=not no_figures)
    if manifest_path:
        Path(manifest_path).write_text(
            json.dumps(rules_manifest(), indent=2, sort_keys=True),
            encoding="utf-8")
        written.append(str(manifest_path))
    click.echo("wrote " + ", ".join(written))


if __name__ == "__main__":
    main()
