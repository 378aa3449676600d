"""CSV feature-table ingestion and export.

The canonical column sets follow the capture-tool export convention:

    GOOSE: time, DM, SM, type, appid, dataset, goid, stnum, sqnum, data1, data2
    SV:    time, DM, SM, type, appid, svid, smpcnt

Header matching is case-insensitive and remappable via ``column_map``.
``type`` (the ethertype) is read as hex; every other numeric column is
decimal by default, overridable per column via ``radix``. Truncated
three-octet MAC forms are left-padded (multicast prefix for DM, zeros
otherwise). Unparseable cells fail the row, not the stream.
"""
from __future__ import annotations

import csv
from typing import Dict, Iterator, Optional

from ..errors import FormatError, SchemaError
from ..model import (
    ETHERTYPE_GOOSE,
    ETHERTYPE_SV,
    GooseMessage,
    MacAddress,
    Message,
    SvMessage,
    parse_timestamp,
)
from .source import CaptureSource, FrameDecodeStats, ProtocolHint

CANONICAL_GOOSE_COLUMNS = (
    "time", "DM", "SM", "type", "appid", "dataset", "goid",
    "stnum", "sqnum", "data1", "data2",
)
CANONICAL_SV_COLUMNS = (
    "time", "DM", "SM", "type", "appid", "svid", "smpcnt",
)

_GOOSE_REQUIRED = ("time", "dm", "sm", "appid", "dataset", "goid",
                   "stnum", "sqnum", "data1", "data2")
_SV_REQUIRED = ("time", "dm", "sm", "appid", "svid", "smpcnt")

DEFAULT_RADIX = {"type": 16}


def _resolve_columns(header, column_map: Optional[Dict[str, str]]):
    """Map canonical (lowercased) names to column indices."""
    remap = {k.lower(): v.lower() for k, v in (column_map or {}).items()}
    index = {}
    for pos, name in enumerate(header):
        index.setdefault(name.strip().lower(), pos)
    resolved = {}
    for logical in ("time", "dm", "sm", "type", "appid", "dataset", "goid",
                    "stnum", "sqnum", "data1", "data2", "svid", "smpcnt"):
        actual = remap.get(logical, logical)
        if actual in index:
            resolved[logical] = index[actual]
    return resolved


def _check_required(cols, names, path):
    missing = [n for n in names if n not in cols]
    if missing:
        raise SchemaError(f"{path}: missing mandatory column(s) {missing}")


def read_csv(source: CaptureSource,
             stats: Optional[FrameDecodeStats] = None,
             column_map: Optional[Dict[str, str]] = None,
             radix: Optional[Dict[str, int]] = None) -> Iterator[Message]:
    """Yield messages in file order; seq_index runs 0,1,2,... over the
    successfully parsed rows. Row-level failures are counted in ``stats``."""
    if stats is None:
        stats = FrameDecodeStats()
    radixes = dict(DEFAULT_RADIX)
    radixes.update(radix or {})
    hint = source.protocol_hint
    with open(source.path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{source.path}: empty file (no header)") from None
        cols = _resolve_columns(header, column_map)
        if "time" not in cols:
            raise SchemaError(f"{source.path}: missing mandatory column(s) ['time']")
        if hint is ProtocolHint.GOOSE:
            _check_required(cols, _GOOSE_REQUIRED, source.path)
        elif hint is ProtocolHint.SV:
            _check_required(cols, _SV_REQUIRED, source.path)
        else:
            if "type" not in cols:
                raise SchemaError(
                    f"{source.path}: protocol_hint=auto needs a 'type' column")
            if "smpcnt" in cols:
                _check_required(cols, ("dm", "sm", "appid"), source.path)
            else:
                _check_required(cols, _GOOSE_REQUIRED, source.path)

        r_appid = radixes.get("appid", 10)
        r_type = radixes.get("type", 16)
        ci = cols.get
        c_time, c_dm, c_sm = ci("time"), ci("dm"), ci("sm")
        c_type, c_appid = ci("type"), ci("appid")
        c_dataset, c_goid = ci("dataset"), ci("goid")
        c_stnum, c_sqnum = ci("stnum"), ci("sqnum")
        c_d1, c_d2 = ci("data1"), ci("data2")
        c_svid, c_smpcnt = ci("svid"), ci("smpcnt")

        mac_cache: Dict[tuple, MacAddress] = {}
        seq = 0
        for row_no, row in enumerate(reader, start=2):
            if not row:
                continue
            stats.frames_total += 1
            try:
                ts = parse_timestamp(row[c_time])
                if c_type is not None:
                    ethertype = int(row[c_type], r_type)
                else:
                    ethertype = (ETHERTYPE_GOOSE if hint is ProtocolHint.GOOSE
                                 else ETHERTYPE_SV)
                if hint is ProtocolHint.AUTO:
                    if ethertype == ETHERTYPE_GOOSE:
                        is_goose = True
                    elif ethertype == ETHERTYPE_SV:
                        is_goose = False
                    else:
                        stats.frames_skipped += 1
                        continue
                else:
                    is_goose = hint is ProtocolHint.GOOSE

                dm_key = (row[c_dm], True)
                dm = mac_cache.get(dm_key)
                if dm is None:
                    dm = MacAddress.from_text(row[c_dm], multicast_pad=True)
                    mac_cache[dm_key] = dm
                sm_key = (row[c_sm], False)
                sm = mac_cache.get(sm_key)
                if sm is None:
                    sm = MacAddress.from_text(row[c_sm])
                    mac_cache[sm_key] = sm
                appid = int(row[c_appid], r_appid)

                if is_goose:
                    if c_stnum is None:
                        raise FormatError("GOOSE row in an SV-shaped file")
                    msg: Message = GooseMessage(
                        ts, dm, sm, ethertype, appid,
                        row[c_dataset], row[c_goid],
                        int(row[c_stnum]), int(row[c_sqnum]),
                        int(row[c_d1]), int(row[c_d2]), seq)
                else:
                    if c_smpcnt is None:
                        raise FormatError("SV row in a GOOSE-shaped file")
                    msg = SvMessage(ts, dm, sm, ethertype, appid,
                                    row[c_svid], int(row[c_smpcnt]), seq)
            except (FormatError, ValueError, IndexError) as exc:
                stats.record_error(f"{source.path}:{row_no}", exc)
                continue
            stats.frames_decoded += 1
            seq += 1
            yield msg


def _mac_text(mac: MacAddress) -> str:
    return mac.display()


def write_csv(messages, path, protocol=None) -> int:
    """Write messages using the canonical column set; returns the row count.

    All messages must share one protocol (a mixed capture exports as two
    files, one per protocol).
    """
    messages = list(messages)
    if not messages:
        raise ValueError("nothing to write")
    is_goose = isinstance(messages[0], GooseMessage)
    columns = CANONICAL_GOOSE_COLUMNS if is_goose else CANONICAL_SV_COLUMNS
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for m in messages:
            if isinstance(m, GooseMessage) != is_goose:
                raise ValueError("mixed protocols in one CSV export")
            if is_goose:
                writer.writerow((
                    m.time.raw_text, _mac_text(m.dm), _mac_text(m.sm),
                    f"{m.ethertype:04x}", m.appid, m.dataset, m.goid,
                    m.stnum, m.sqnum, m.data1, m.data2))
            else:
                writer.writerow((
                    m.time.raw_text, _mac_text(m.dm), _mac_text(m.sm),
                    f"{m.ethertype:04x}", m.appid, m.svid, m.smpcnt))
    return len(messages)
