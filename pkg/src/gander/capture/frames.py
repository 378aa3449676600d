"""Ethernet frame codec for the modeled GOOSE/SV fields.

Encodes/decodes the minimal BER-TLV subset the rules touch; unknown TLVs
inside an APDU are skipped by length. One optional 802.1Q VLAN tag layer is
understood. The decoder is defensive: any malformed input yields
DecodeError or a skip, never an uncaught exception.
"""
from __future__ import annotations

from typing import Optional, Tuple

from ..errors import EncodeError, GanderError
from ..model import (
    ETHERTYPE_GOOSE,
    ETHERTYPE_SV,
    GooseMessage,
    MacAddress,
    Message,
    SvMessage,
    make_timestamp,
)

ETHERTYPE_VLAN = 0x8100

# Context tag numbers inside the GOOSE APDU (tag 0x61).
_G_DATSET = 2
_G_GOID = 3
_G_STNUM = 5
_G_SQNUM = 6
_G_ALLDATA = 11
_G_BOOLEAN = 3          # Data CHOICE: boolean

# Context tag numbers inside the SV APDU (tag 0x60).
_S_NOASDU = 0
_S_SEQOFASDU = 2
_S_ASDU_SEQ = 0x30      # universal SEQUENCE wrapping one ASDU
_S_SVID = 0
_S_SMPCNT = 2


class DecodeError(GanderError):
    """Frame matched our ethertype but its structure is unusable."""


def _tlv_len(length: int) -> bytes:
    if length < 0x80:
        return bytes((length,))
    body = length.to_bytes((length.bit_length() + 7) // 8, "big")
    return bytes((0x80 | len(body),)) + body


def _tlv(tag: int, value: bytes) -> bytes:
    return bytes((tag,)) + _tlv_len(len(value)) + value


def _uint(value: int, name: str, width: Optional[int] = None) -> bytes:
    if value < 0:
        raise EncodeError(f"{name} must be non-negative, got {value}")
    if width is not None:
        if value >> (8 * width):
            raise EncodeError(f"{name}={value} exceeds {width} bytes")
        return value.to_bytes(width, "big")
    return value.to_bytes(max(1, (value.bit_length() + 7) // 8), "big")


def _text(value: str, name: str) -> bytes:
    try:
        return value.encode("ascii")
    except UnicodeEncodeError:
        raise EncodeError(f"{name} is not ASCII-encodable: {value!r}") from None


def encode_frame(msg: Message, include_vlan: bool = False,
                 vlan_tci: int = 0x8000) -> bytes:
    """Render a message as an Ethernet frame; decode_frame inverts it."""
    if isinstance(msg, GooseMessage):
        all_data = (_tlv(0x80 | _G_BOOLEAN, bytes((1 if msg.data1 else 0,)))
                    + _tlv(0x80 | _G_BOOLEAN, bytes((1 if msg.data2 else 0,))))
        apdu_body = (
            _tlv(0x80 | _G_DATSET, _text(msg.dataset, "dataset"))
            + _tlv(0x80 | _G_GOID, _text(msg.goid, "goid"))
            + _tlv(0x80 | _G_STNUM, _uint(msg.stnum, "stnum"))
            + _tlv(0x80 | _G_SQNUM, _uint(msg.sqnum, "sqnum"))
            + _tlv(0xA0 | _G_ALLDATA, all_data)
        )
        apdu = _tlv(0x61, apdu_body)
        ethertype = msg.ethertype
    else:
        asdu = (_tlv(0x80 | _S_SVID, _text(msg.svid, "svid"))
                + _tlv(0x80 | _S_SMPCNT, _uint(msg.smpcnt, "smpcnt", width=2)))
        apdu_body = (
            _tlv(0x80 | _S_NOASDU, b"\x01")
            + _tlv(0xA0 | _S_SEQOFASDU, _tlv(_S_ASDU_SEQ, asdu))
        )
        apdu = _tlv(0x60, apdu_body)
        ethertype = msg.ethertype

    session = (_uint(msg.appid, "appid", width=2)
               + _uint(8 + len(apdu), "length", width=2)
               + b"\x00\x00\x00\x00"
               + apdu)
    header = msg.dm.octets + msg.sm.octets
    if include_vlan:
        header += ETHERTYPE_VLAN.to_bytes(2, "big") + _uint(vlan_tci, "vlan", 2)
    header += _uint(ethertype, "ethertype", width=2)
    return header + session


def _read_tlv(data: bytes, offset: int, end: int) -> Optional[Tuple[int, int, int]]:
    """Return (tag, value_start, value_end) or None at a clean end; raise
    DecodeError on structural garbage."""
    if offset >= end:
        return None
    tag = data[offset]
    offset += 1
    if offset >= end:
        raise DecodeError("truncated TLV header")
    first = data[offset]
    offset += 1
    if first & 0x80:
        n = first & 0x7F
        if n == 0 or n > 4 or offset + n > end:
            raise DecodeError("bad TLV length octets")
        length = int.from_bytes(data[offset:offset + n], "big")
        offset += n
    else:
        length = first
    if offset + length > end:
        raise DecodeError("TLV value runs past the frame")
    return tag, offset, offset + length


def _decode_goose_apdu(data: bytes, start: int, end: int) -> dict:
    fields = {"dataset": "", "goid": "", "stnum": 0, "sqnum": 0,
              "data1": 0, "data2": 0}
    offset = start
    while True:
        tlv = _read_tlv(data, offset, end)
        if tlv is None:
            break
        tag, vs, ve = tlv
        offset = ve
        if tag == 0x80 | _G_DATSET:
            fields["dataset"] = data[vs:ve].decode("ascii", errors="replace")
        elif tag == 0x80 | _G_GOID:
            fields["goid"] = data[vs:ve].decode("ascii", errors="replace")
        elif tag == 0x80 | _G_STNUM:
            fields["stnum"] = int.from_bytes(data[vs:ve], "big")
        elif tag == 0x80 | _G_SQNUM:
            fields["sqnum"] = int.from_bytes(data[vs:ve], "big")
        elif tag == 0xA0 | _G_ALLDATA:
            bools = []
            inner = vs
            while True:
                item = _read_tlv(data, inner, ve)
                if item is None:
                    break
                itag, ivs, ive = item
                inner = ive
                if itag == 0x80 | _G_BOOLEAN:
                    bools.append(0 if data[ivs:ive] == b"\x00" else 1)
            if bools:
                fields["data1"] = bools[0]
            if len(bools) > 1:
                fields["data2"] = bools[1]
        # other tags: skipped by length
    return fields


def _decode_sv_apdu(data: bytes, start: int, end: int) -> dict:
    fields = {"svid": "", "smpcnt": 0}
    offset = start
    while True:
        tlv = _read_tlv(data, offset, end)
        if tlv is None:
            break
        tag, vs, ve = tlv
        offset = ve
        if tag == 0xA0 | _S_SEQOFASDU:
            seq = _read_tlv(data, vs, ve)
            if seq is None or seq[0] != _S_ASDU_SEQ:
                raise DecodeError("seqOfASDU without an ASDU sequence")
            inner = seq[1]
            inner_end = seq[2]
            while True:
                item = _read_tlv(data, inner, inner_end)
                if item is None:
                    break
                itag, ivs, ive = item
                inner = ive
                if itag == 0x80 | _S_SVID:
                    fields["svid"] = data[ivs:ive].decode("ascii",
                                                          errors="replace")
                elif itag == 0x80 | _S_SMPCNT:
                    fields["smpcnt"] = int.from_bytes(data[ivs:ive], "big")
    return fields


def decode_frame(data: bytes, micros: int, seq_index: int) -> Optional[Message]:
    """Decode one Ethernet frame.

    Returns None for frames that are not GOOSE/SV (wrong ethertype); raises
    DecodeError for matching frames with broken structure. ``micros`` is
    the capture timestamp reduced to time-of-day.
    """
    if len(data) < 14:
        return None
    dm = data[0:6]
    sm = data[6:12]
    ethertype = int.from_bytes(data[12:14], "big")
    payload_at = 14
    if ethertype == ETHERTYPE_VLAN:
        if len(data) < 18:
            return None
        ethertype = int.from_bytes(data[16:18], "big")
        payload_at = 18
    if ethertype not in (ETHERTYPE_GOOSE, ETHERTYPE_SV):
        return None
    if len(data) < payload_at + 8:
        raise DecodeError("truncated session header")
    appid = int.from_bytes(data[payload_at:payload_at + 2], "big")
    length = int.from_bytes(data[payload_at + 2:payload_at + 4], "big")
    apdu_at = payload_at + 8
    apdu_end = payload_at + length
    if length < 8 or apdu_end > len(data):
        raise DecodeError("session length field inconsistent with frame")
    tlv = _read_tlv(data, apdu_at, apdu_end)
    if tlv is None:
        raise DecodeError("empty APDU")
    tag, vs, ve = tlv
    ts = make_timestamp(micros)
    if ethertype == ETHERTYPE_GOOSE:
        if tag != 0x61:
            raise DecodeError(f"unexpected GOOSE APDU tag 0x{tag:02x}")
        f = _decode_goose_apdu(data, vs, ve)
        return GooseMessage(ts, MacAddress(dm), MacAddress(sm), ethertype,
                            appid, f["dataset"], f["goid"], f["stnum"],
                            f["sqnum"], f["data1"], f["data2"], seq_index)
    if tag != 0x60:
        raise DecodeError(f"unexpected SV APDU tag 0x{tag:02x}")
    f = _decode_sv_apdu(data, vs, ve)
    return SvMessage(ts, MacAddress(dm), MacAddress(sm), ethertype, appid,
                     f["svid"], f["smpcnt"], seq_index)
