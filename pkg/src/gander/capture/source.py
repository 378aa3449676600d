"""Capture source descriptors and decode accounting."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Optional

from ..model import Message


class ProtocolHint(enum.Enum):
    GOOSE = "goose"
    SV = "sv"
    AUTO = "auto"


class SourceKind(enum.Enum):
    CSV_FILE = "csv"
    PCAP_FILE = "pcap"


@dataclass
class CaptureSource:
    kind: SourceKind
    path: Path
    protocol_hint: ProtocolHint = ProtocolHint.AUTO

    @classmethod
    def csv(cls, path, hint: ProtocolHint = ProtocolHint.AUTO) -> "CaptureSource":
        return cls(SourceKind.CSV_FILE, Path(path), hint)

    @classmethod
    def pcap(cls, path, hint: ProtocolHint = ProtocolHint.AUTO) -> "CaptureSource":
        return cls(SourceKind.PCAP_FILE, Path(path), hint)


@dataclass
class FrameDecodeStats:
    """Accounting for one reader run; total = decoded + skipped + errors."""

    frames_total: int = 0
    frames_decoded: int = 0
    frames_skipped: int = 0
    decode_errors: int = 0
    error_details: list = field(default_factory=list)

    def record_error(self, where: str, exc: Exception) -> None:
        self.decode_errors += 1
        if len(self.error_details) < 100:
            self.error_details.append(f"{where}: {exc}")

    def consistent(self) -> bool:
        return self.frames_total == (
            self.frames_decoded + self.frames_skipped + self.decode_errors
        )


def read_capture(source: CaptureSource,
                 stats: Optional[FrameDecodeStats] = None,
                 **kwargs) -> Iterator[Message]:
    """Dispatch to the CSV or pcap reader based on the source kind."""
    from .csvio import read_csv
    from .pcapio import read_pcap

    if source.kind is SourceKind.CSV_FILE:
        return read_csv(source, stats=stats, **kwargs)
    return read_pcap(source, stats=stats, **kwargs)
