"""Declarative run configuration (TOML file, flag-overridable).

Secrets never live in the config file: the remote-chat endpoint and key
come from environment variables only.
"""
from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError
from .rules.specs import SystemFrequency, TrainingLevel
from .tod.session import DEFAULT_CONTEXT_WINDOW, DEFAULT_TURN_BATCH


def parse_level(text: str) -> TrainingLevel:
    try:
        return TrainingLevel(text.upper())
    except ValueError:
        raise ConfigError(f"unknown training level {text!r} "
                          f"(expected WT, PT, or FT)") from None


def parse_freq(value) -> SystemFrequency:
    try:
        return SystemFrequency(int(value))
    except (ValueError, TypeError):
        raise ConfigError(f"unknown system frequency {value!r} "
                          f"(expected 50 or 60)") from None


@dataclass
class RunConfig:
    level: TrainingLevel = TrainingLevel.FT
    freq: SystemFrequency = SystemFrequency.F60
    backend: str = "rule_oracle"      # rule_oracle | scripted | remote_chat
    scripted_path: Optional[Path] = None
    seed: int = 0
    turn_batch: int = DEFAULT_TURN_BATCH
    context_window: int = DEFAULT_CONTEXT_WINDOW
    input_kind: Optional[str] = None  # csv | pcap | scenario
    input_path: Optional[Path] = None
    protocol_hint: str = "auto"
    output_dir: Path = field(default_factory=lambda: Path("."))

    @classmethod
    def load(cls, path) -> "RunConfig":
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
        cfg = cls()
        run = data.get("run", {})
        if "level" in run:
            cfg.level = parse_level(run["level"])
        if "freq" in run:
            cfg.freq = parse_freq(run["freq"])
        if "backend" in run:
            cfg.backend = str(run["backend"])
        if "scripted_path" in run:
            cfg.scripted_path = Path(run["scripted_path"])
        for key in ("seed", "turn_batch", "context_window"):
            if key in run:
                setattr(cfg, key, int(run[key]))
        inp = data.get("input", {})
        if inp:
            cfg.input_kind = inp.get("kind")
            if cfg.input_kind not in ("csv", "pcap", "scenario"):
                raise ConfigError(
                    f"input.kind must be csv, pcap, or scenario, "
                    f"got {cfg.input_kind!r}")
            if "path" not in inp:
                raise ConfigError("input.path is required")
            cfg.input_path = Path(inp["path"])
            cfg.protocol_hint = inp.get("protocol", "auto")
        out = data.get("output", {})
        if "dir" in out:
            cfg.output_dir = Path(out["dir"])
        known = {"run", "input", "output"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config sections {sorted(unknown)}")
        return cfg


def load_scenario_spec(path):
    from .scenario import ScenarioSpec

    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    return ScenarioSpec.from_dict(data)
