"""Packet-capture container reading (classic pcap and pcapng) and classic
pcap writing. Ethernet link type only; capture timestamps are reduced to
time-of-day microseconds."""
from __future__ import annotations

import struct
from typing import Iterator, Optional

from ..errors import SchemaError
from ..model import GooseMessage, MICROS_PER_DAY, Message, SvMessage
from .frames import DecodeError, decode_frame, encode_frame
from .source import CaptureSource, FrameDecodeStats, ProtocolHint

_MAGIC_US_LE = 0xA1B2C3D4
_MAGIC_NS_LE = 0xA1B23C4D
_PCAPNG_SHB = 0x0A0D0D0A
_PCAPNG_BYTE_ORDER = 0x1A2B3C4D
_LINKTYPE_ETHERNET = 1


def _hint_accepts(hint: ProtocolHint, msg: Message) -> bool:
    if hint is ProtocolHint.AUTO:
        return True
    if hint is ProtocolHint.GOOSE:
        return isinstance(msg, GooseMessage)
    return isinstance(msg, SvMessage)


def _iter_classic(data: bytes):
    magic_le = struct.unpack_from("<I", data, 0)[0]
    magic_be = struct.unpack_from(">I", data, 0)[0]
    if magic_le in (_MAGIC_US_LE, _MAGIC_NS_LE):
        endian, magic = "<", magic_le
    elif magic_be in (_MAGIC_US_LE, _MAGIC_NS_LE):
        endian, magic = ">", magic_be
    else:
        raise SchemaError("not a classic pcap file")
    ns = magic == _MAGIC_NS_LE
    if len(data) < 24:
        raise SchemaError("truncated pcap global header")
    linktype = struct.unpack_from(endian + "I", data, 20)[0]
    if linktype != _LINKTYPE_ETHERNET:
        raise SchemaError(f"unsupported link type {linktype} (Ethernet only)")
    rec = struct.Struct(endian + "IIII")
    offset = 24
    while offset + 16 <= len(data):
        ts_sec, ts_frac, incl, _orig = rec.unpack_from(data, offset)
        offset += 16
        if offset + incl > len(data):
            break  # truncated trailing record
        frac_us = ts_frac // 1000 if ns else ts_frac
        micros = (ts_sec * 1_000_000 + frac_us) % MICROS_PER_DAY
        yield micros, data[offset:offset + incl]
        offset += incl


def _pcapng_tsresol(options: bytes, endian: str) -> int:
    """Ticks per second from an options blob (default microseconds)."""
    offset = 0
    while offset + 4 <= len(options):
        code, length = struct.unpack_from(endian + "HH", options, offset)
        offset += 4
        if code == 0:
            break
        value = options[offset:offset + length]
        offset += (length + 3) & ~3
        if code == 9 and length == 1:
            v = value[0]
            if v & 0x80:
                return 2 ** (v & 0x7F)
            return 10 ** v
    return 1_000_000


def _iter_pcapng(data: bytes):
    if len(data) < 12:
        raise SchemaError("truncated pcapng file")
    endian = None
    offset = 0
    ifaces = []  # ticks-per-second per interface, section-local
    while offset + 12 <= len(data):
        # block type is endian-sensitive except for the SHB marker
        raw_type = data[offset:offset + 4]
        if raw_type == b"\x0a\x0d\x0d\x0a":
            bo = struct.unpack_from("<I", data, offset + 8)[0]
            endian = "<" if bo == _PCAPNG_BYTE_ORDER else ">"
            if struct.unpack_from(endian + "I", data, offset + 8)[0] != _PCAPNG_BYTE_ORDER:
                raise SchemaError("bad pcapng byte-order magic")
            total = struct.unpack_from(endian + "I", data, offset + 4)[0]
            ifaces = []
        elif endian is None:
            raise SchemaError("pcapng data before section header")
        else:
            btype, total = struct.unpack_from(endian + "II", data, offset)
            if total < 12 or offset + total > len(data):
                break  # truncated trailing block
            body = data[offset + 8:offset + total - 4]
            if btype == 0x00000001:  # interface description
                if len(body) < 8:
                    raise SchemaError("short interface description block")
                linktype = struct.unpack_from(endian + "H", body, 0)[0]
                if linktype != _LINKTYPE_ETHERNET:
                    raise SchemaError(
                        f"unsupported link type {linktype} (Ethernet only)")
                ifaces.append(_pcapng_tsresol(body[8:], endian))
            elif btype == 0x00000006:  # enhanced packet
                if len(body) < 20:
                    raise SchemaError("short enhanced packet block")
                iface, ts_high, ts_low, caplen, _orig = struct.unpack_from(
                    endian + "IIIII", body, 0)
                frame = body[20:20 + caplen]
                resol = ifaces[iface] if iface < len(ifaces) else 1_000_000
                ticks = (ts_high << 32) | ts_low
                micros = (ticks * 1_000_000 // resol) % MICROS_PER_DAY
                yield micros, frame
            # all other block types: skipped by length
        if total < 12 or (total & 3):
            break
        offset += total


def read_pcap(source: CaptureSource,
              stats: Optional[FrameDecodeStats] = None) -> Iterator[Message]:
    """Yield decoded messages from a classic pcap or pcapng file."""
    if stats is None:
        stats = FrameDecodeStats()
    data = source.path.read_bytes()
    if len(data) >= 4 and data[:4] == b"\x0a\x0d\x0d\x0a":
        frames = _iter_pcapng(data)
    else:
        frames = _iter_classic(data)
    hint = source.protocol_hint
    seq = 0
    for micros, frame in frames:
        stats.frames_total += 1
        try:
            msg = decode_frame(frame, micros, seq)
        except DecodeError as exc:
            stats.record_error(str(source.path), exc)
            continue
        if msg is None or not _hint_accepts(hint, msg):
            stats.frames_skipped += 1
            continue
        stats.frames_decoded += 1
        seq += 1
        yield msg


def write_pcap(messages, path, include_vlan: bool = False) -> int:
    """Write messages as a classic little-endian microsecond pcap."""
    count = 0
    with open(path, "wb") as fh:
        fh.write(struct.pack("<IHHiIII", _MAGIC_US_LE, 2, 4, 0, 0, 65535,
                             _LINKTYPE_ETHERNET))
        for m in messages:
            frame = encode_frame(m, include_vlan=include_vlan)
            micros = m.time.micros
            fh.write(struct.pack("<IIII", micros // 1_000_000,
                                 micros % 1_000_000, len(frame), len(frame)))
            fh.write(frame)
            count += 1
    return count
