"""Ingestion and export of GOOSE/SV messages.

Two lanes: CSV feature tables (the faithful lane, carrying timestamp text
verbatim) and raw packet captures (classic pcap and pcapng containers,
Ethernet link type, with the minimal TLV codec for the modeled fields).
"""

from .csvio import (
    CANONICAL_GOOSE_COLUMNS,
    CANONICAL_SV_COLUMNS,
    read_csv,
    write_csv,
)
from .frames import DecodeError, decode_frame, encode_frame
from .pcapio import read_pcap, write_pcap
from .source import CaptureSource, FrameDecodeStats, ProtocolHint, read_capture

__all__ = [
    "CANONICAL_GOOSE_COLUMNS",
    "CANONICAL_SV_COLUMNS",
    "CaptureSource",
    "DecodeError",
    "FrameDecodeStats",
    "ProtocolHint",
    "decode_frame",
    "encode_frame",
    "read_capture",
    "read_csv",
    "read_pcap",
    "write_csv",
    "write_pcap",
]
