"""Row-context preparation for query evaluation.

Queries see the raw message fields plus derived columns computed here in a
single forward pass per stream:

    stream_seq            position within the routed stream (0-based)
    valid_*               last counter state the stream's state machine
                          accepted before this row
    max_stnum             highest stnum over the stream's earlier rows
    ref_*                 identity fields of the stream's first row
    time_format_digits    fractional digits when the time text is strict
                          HH:MM:SS, else -1
    delta(time[, lag])    time difference to the lag-th earlier row

This is intentionally a separate transcription of the stream semantics the
rule engine implements; the equivalence test suite holds the two together.
"""
from __future__ import annotations

from typing import Dict, List, Sequence

from ..model import GooseMessage, Message, Protocol
from ..rules.specs import SystemFrequency


class PreparedTable:
    __slots__ = ("protocol", "rows", "ctx", "stream_rows", "stream_pos",
                 "times")

    def __init__(self, protocol: Protocol):
        self.protocol = protocol
        self.rows: List[Message] = []
        self.ctx: List[dict] = []
        self.stream_rows: List[List[int]] = []
        self.stream_pos: List[int] = []
        self.times: List[List[int]] = []


def _digits(msg: Message) -> int:
    ts = msg.time
    return ts.fractional_digits if ts.wellformed else -1


def prepare_table(table: Sequence[Message], protocol: Protocol,
                  freq: SystemFrequency = SystemFrequency.F60) -> PreparedTable:
    prep = PreparedTable(protocol)
    by_key: Dict[tuple, int] = {}
    by_sec: Dict[str, int] = {}
    goose = protocol is Protocol.GOOSE
    cnt_max = freq.smpcnt_max
    # per-stream running state for the derived columns
    valid: List[tuple] = []
    maxes: List[int] = []
    refs: List[dict] = []

    for msg in table:
        if isinstance(msg, GooseMessage) != goose:
            continue
        key = (msg.dm.octets, msg.sm.octets, msg.appid)
        sid = by_key.get(key)
        if sid is None:
            sec = msg.goid if goose else msg.svid
            sid = by_sec.get(sec)
            if sid is None:
                sid = len(prep.stream_rows)
                prep.stream_rows.append([])
                prep.times.append([])
                by_key[key] = sid
                by_sec[sec] = sid
                valid.append(None)
                maxes.append(0)
                refs.append(None)

        pos = len(prep.stream_rows[sid])
        row = len(prep.rows)
        if goose:
            ref = refs[sid]
            if ref is None:
                ref = refs[sid] = {
                    "ref_dm": msg.dm.octets, "ref_sm": msg.sm.octets,
                    "ref_type": msg.ethertype, "ref_appid": msg.appid,
                    "ref_dataset": msg.dataset, "ref_goid": msg.goid,
                }
            vst, vsq, vd1, vd2 = valid[sid] or (0, 0, 0, 0)
            ctx = {
                "seq_index": msg.seq_index, "stream_seq": pos,
                "time": msg.time.micros,
                "dm": msg.dm.octets, "sm": msg.sm.octets,
                "type": msg.ethertype, "appid": msg.appid,
                "dataset": msg.dataset, "goid": msg.goid,
                "stnum": msg.stnum, "sqnum": msg.sqnum,
                "data1": msg.data1, "data2": msg.data2,
                "valid_stnum": vst, "valid_sqnum": vsq,
                "valid_data1": vd1, "valid_data2": vd2,
                "max_stnum": maxes[sid] if pos else 0,
                "time_format_digits": _digits(msg),
            }
            ctx.update(ref)
            # advance the stream's accepted state
            if pos == 0:
                valid[sid] = (msg.stnum, msg.sqnum, msg.data1, msg.data2)
                maxes[sid] = msg.stnum
            else:
                regress = msg.stnum < maxes[sid]
                if msg.data1 == vd1 and msg.data2 == vd2:
                    bad = msg.sqnum != vsq + 1 or regress
                else:
                    bad = (not (msg.stnum == vst + 1 and msg.sqnum == 0)
                           or (msg.stnum == vst and msg.sqnum > vsq)
                           or regress)
                if not bad:
                    valid[sid] = (msg.stnum, msg.sqnum, msg.data1, msg.data2)
                if msg.stnum > maxes[sid]:
                    maxes[sid] = msg.stnum
        else:
            ref = refs[sid]
            if ref is None:
                ref = refs[sid] = {
                    "ref_dm": msg.dm.octets, "ref_sm": msg.sm.octets,
                    "ref_type": msg.ethertype, "ref_appid": msg.appid,
                    "ref_svid": msg.svid,
                }
            vcnt = valid[sid] if valid[sid] is not None else 0
            ctx = {
                "seq_index": msg.seq_index, "stream_seq": pos,
                "time": msg.time.micros,
                "dm": msg.dm.octets, "sm": msg.sm.octets,
                "type": msg.ethertype, "appid": msg.appid,
                "svid": msg.svid, "smpcnt": msg.smpcnt,
                "valid_smpcnt": vcnt,
                "time_format_digits": _digits(msg),
            }
            ctx.update(ref)
            if (pos == 0 or msg.smpcnt == vcnt + 1
                    or (msg.smpcnt == 0 and vcnt == cnt_max)):
                valid[sid] = msg.smpcnt

        prep.rows.append(msg)
        prep.ctx.append(ctx)
        prep.stream_rows[sid].append(row)
        prep.stream_pos.append(pos)
        prep.times[sid].append(msg.time.micros)
        ctx["__stream"] = sid
        ctx["__pos"] = pos
    return prep
