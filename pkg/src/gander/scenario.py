"""Synthetic GOOSE/SV traffic generation with labeled attack injections.

The baseline streams are compliant under every rule by construction; each
injection produces packets (or a gap) whose labels coincide exactly with
what the full rule set flags, which is what makes the generated datasets
usable as ground truth.

Attack models and their catching rules (full-training level):

    replay_stnum_regression  insert old-state packets       GR3 (+GR1/GR2)
    sqnum_skip               insert repeat with skipped sq  GR1
    data_change_spoof        insert change dressed as a
                             retransmission                 GR2 + GR8
    field_tamper             rewrite one identity field     GR4 / SR4
    flood                    burst of replayed packets      GR1+GR6 / SR2+SR6+SR7+SR8
    suppression              publisher silence gap          GR7
    timestamp_malformat      zero-pad the hour digit        GR5 / SR5
    smpcnt_jump              counter desync to capture end  SR8
    smpcnt_out_of_range      counter overflow to capture
                             end                            SR1 (+SR2, SR8)
    interval_drift           cadence drifts out of bounds   SR6

Injectors that need preconditions (an established state number, a
state-change-free window) nudge their placement forward to the first
eligible packet at or after the requested offset.
"""
from __future__ import annotations

import enum
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

from .capture import write_csv, write_pcap
from .errors import SpecError
from .model import (
    ETHERTYPE_GOOSE,
    ETHERTYPE_SV,
    GooseMessage,
    Label,
    LabeledRecord,
    MacAddress,
    Message,
    SvMessage,
    make_timestamp,
)
from .rules.specs import SystemFrequency


class Attack(enum.Enum):
    REPLAY_STNUM_REGRESSION = "replay_stnum_regression"
    SQNUM_SKIP = "sqnum_skip"
    DATA_CHANGE_SPOOF = "data_change_spoof"
    FIELD_TAMPER = "field_tamper"
    FLOOD = "flood"
    SUPPRESSION = "suppression"
    TIMESTAMP_MALFORMAT = "timestamp_malformat"
    SMPCNT_JUMP = "smpcnt_jump"
    SMPCNT_OUT_OF_RANGE = "smpcnt_out_of_range"
    INTERVAL_DRIFT = "interval_drift"


GOOSE_ATTACKS = frozenset({
    Attack.REPLAY_STNUM_REGRESSION, Attack.SQNUM_SKIP,
    Attack.DATA_CHANGE_SPOOF, Attack.FIELD_TAMPER, Attack.FLOOD,
    Attack.SUPPRESSION, Attack.TIMESTAMP_MALFORMAT,
})
SV_ATTACKS = frozenset({
    Attack.FIELD_TAMPER, Attack.FLOOD, Attack.TIMESTAMP_MALFORMAT,
    Attack.SMPCNT_JUMP, Attack.SMPCNT_OUT_OF_RANGE, Attack.INTERVAL_DRIFT,
})


@dataclass(frozen=True)
class InjectionSpec:
    attack: Attack
    at_s: float
    magnitude: Optional[int] = None   # run/burst length, skip, gap seconds...
    tamper_field: Optional[str] = None  # field_tamper only

    def tag(self) -> str:
        return self.attack.value


@dataclass
class ScenarioSpec:
    protocol: str                     # "goose" | "sv"
    duration_s: float
    freq: SystemFrequency = SystemFrequency.F60
    seed: int = 0
    injections: List[InjectionSpec] = field(default_factory=list)
    start_time: str = "10:00:00"
    # SV cadence: uniform jitter within the compliant interval bounds
    jitter_us: Tuple[int, int] = (200, 215)
    # GOOSE cadence
    heartbeat_s: float = 1.0
    heartbeat_jitter_us: int = 5_000
    state_change_every: int = 30      # packets per state-change epoch
    # identities
    dm: str = ""
    sm: str = ""
    appid: int = 0
    dataset: str = "SEL_421_1CFG/LLN0$Goose"
    goid: str = "SEL_421_1"
    svid: str = "4000"

    def __post_init__(self):
        if self.protocol not in ("goose", "sv"):
            raise SpecError(f"unknown protocol {self.protocol!r}")
        if not self.dm:
            self.dm = ("01:0C:CD:01:00:03" if self.protocol == "goose"
                       else "01:0C:CD:04:00:01")
        if not self.sm:
            self.sm = ("00:00:00:27:34:31" if self.protocol == "goose"
                       else "00:00:00:27:22:13")
        if not self.appid:
            self.appid = 3 if self.protocol == "goose" else 40

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioSpec":
        data = dict(data)
        freq = data.pop("freq", 60)
        if isinstance(freq, int):
            freq = SystemFrequency.F60 if freq == 60 else SystemFrequency.F50
        injections = []
        for inj in data.pop("injections", []):
            inj = dict(inj)
            attack = Attack(inj.pop("attack"))
            injections.append(InjectionSpec(
                attack, float(inj.pop("at_s")),
                magnitude=inj.pop("magnitude", None),
                tamper_field=inj.pop("tamper_field", None)))
            if inj:
                raise SpecError(f"unknown injection keys {sorted(inj)}")
        jitter = data.pop("jitter_us", (200, 215))
        spec = cls(protocol=data.pop("protocol"),
                   duration_s=float(data.pop("duration_s")),
                   freq=freq, injections=injections,
                   jitter_us=(int(jitter[0]), int(jitter[1])), **data)
        return spec


def _parse_start(text: str) -> int:
    h, m, s = text.split(":")
    return (int(h) * 3600 + int(m) * 60 + int(s)) * 1_000_000


def _baseline_goose(spec: ScenarioSpec, rng: random.Random) -> List[GooseMessage]:
    dm = MacAddress.from_text(spec.dm, multicast_pad=True)
    sm = MacAddress.from_text(spec.sm)
    t = _parse_start(spec.start_time)
    end = t + int(spec.duration_s * 1_000_000)
    heartbeat = int(spec.heartbeat_s * 1_000_000)
    jit = spec.heartbeat_jitter_us
    stnum, sqnum, d1, d2 = 1, 0, 0, 1
    msgs: List[GooseMessage] = []
    i = 0
    while t < end:
        msgs.append(GooseMessage(make_timestamp(t), dm, sm, ETHERTYPE_GOOSE,
                                 spec.appid, spec.dataset, spec.goid,
                                 stnum, sqnum, d1, d2, i))
        i += 1
        if spec.state_change_every and i % spec.state_change_every == 0:
            stnum += 1
            sqnum = 0
            d1 ^= 1
        else:
            sqnum += 1
        t += heartbeat + rng.randint(-jit, jit)
    return msgs


def _baseline_sv(spec: ScenarioSpec, rng: random.Random) -> List[SvMessage]:
    dm = MacAddress.from_text(spec.dm, multicast_pad=True)
    sm = MacAddress.from_text(spec.sm)
    t = _parse_start(spec.start_time)
    end = t + int(spec.duration_s * 1_000_000)
    lo, hi = spec.jitter_us
    period = spec.freq.smpcnt_max + 1
    cnt = 0
    msgs: List[SvMessage] = []
    i = 0
    while t < end:
        msgs.append(SvMessage(make_timestamp(t), dm, sm, ETHERTYPE_SV,
                              spec.appid, spec.svid, cnt, i))
        i += 1
        cnt = (cnt + 1) % period
        t += rng.randint(lo, hi)
    return msgs


def _index_at(records: Sequence[LabeledRecord], at_us: int) -> int:
    for i, rec in enumerate(records):
        if rec.message.time.micros >= at_us:
            return i
    raise SpecError(f"injection offset {at_us / 1e6:.3f}s is past the capture end")


def _retime(msg: Message, micros: int) -> Message:
    return msg._replace(time=make_timestamp(micros))


class _Injector:
    """Applies one injection list to a baseline, tracking touched spans."""

    def __init__(self, spec: ScenarioSpec, records: List[LabeledRecord],
                 rng: random.Random):
        self.spec = spec
        self.records = records
        self.rng = rng
        self.spans: List[Tuple[int, int, str]] = []  # (start_us, end_us, tag)

    def _claim(self, start_us: int, end_us: int, tag: str) -> None:
        for s, e, other in self.spans:
            if start_us < e and s < end_us:
                raise SpecError(
                    f"injections {other} and {tag} collide around "
                    f"{start_us / 1e6:.3f}s")
        self.spans.append((start_us, end_us, tag))

    def apply(self, inj: InjectionSpec) -> None:
        protocol = self.spec.protocol
        allowed = GOOSE_ATTACKS if protocol == "goose" else SV_ATTACKS
        if inj.attack not in allowed:
            raise SpecError(
                f"{inj.attack.value} does not apply to {protocol} traffic")
        handler = getattr(self, "_apply_" + inj.attack.value)
        handler(inj)

    # -- shared helpers ---------------------------------------------------

    def _anchor(self, inj: InjectionSpec) -> int:
        return _index_at(self.records, _parse_start(self.spec.start_time)
                         + int(inj.at_s * 1_000_000))

    def _insert_after(self, idx: int, msgs: List[Message], tag: str) -> None:
        t0 = self.records[idx].message.time.micros
        t1 = msgs[-1].time.micros
        self._claim(t0, t1 + 1, tag)
        self.records[idx + 1:idx + 1] = [LabeledRecord.attack(m, tag)
                                         for m in msgs]

    # -- GOOSE attacks ----------------------------------------------------

    def _apply_replay_stnum_regression(self, inj: InjectionSpec) -> None:
        run = inj.magnitude or 3
        idx = self._anchor(inj)
        # need an earlier state to replay: nudge past the first state change
        while idx < len(self.records) and self.records[idx].message.stnum < 2:
            idx += 1
        if idx >= len(self.records):
            raise SpecError("replay needs an established state number; "
                            "the capture never reaches stnum 2")
        cur = self.records[idx].message
        old_st = cur.stnum - 1
        # data parity of the previous epoch
        old_d1 = cur.data1 ^ 1
        replays = []
        t = cur.time.micros
        for j in range(run):
            t += 10_000
            replays.append(cur._replace(
                time=make_timestamp(t), stnum=old_st, sqnum=j,
                data1=old_d1))
        self._insert_after(idx, replays, inj.tag())

    def _apply_sqnum_skip(self, inj: InjectionSpec) -> None:
        skip = inj.magnitude or 5
        if skip < 2:
            raise SpecError("sqnum_skip magnitude must be >= 2 (a skip of 1 "
                            "is a compliant retransmission)")
        idx = self._anchor(inj)
        cur = self.records[idx].message
        forged = cur._replace(time=make_timestamp(cur.time.micros + 20_000),
                              sqnum=cur.sqnum + skip)
        self._insert_after(idx, [forged], inj.tag())

    def _apply_data_change_spoof(self, inj: InjectionSpec) -> None:
        idx = self._anchor(inj)
        cur = self.records[idx].message
        forged = cur._replace(time=make_timestamp(cur.time.micros + 20_000),
                              data1=cur.data1 ^ 1, sqnum=cur.sqnum + 1)
        self._insert_after(idx, [forged], inj.tag())

    def _apply_field_tamper(self, inj: InjectionSpec) -> None:
        protocol = self.spec.protocol
        fld = inj.tamper_field or ("goid" if protocol == "goose" else "svid")
        idx = self._anchor(inj)
        msg = self.records[idx].message
        if fld in ("goid", "dataset", "svid"):
            msg = msg._replace(**{fld: getattr(msg, fld) + "_X"})
        elif fld in ("dm", "sm"):
            mac = getattr(msg, fld)
            msg = msg._replace(**{fld: MacAddress(
                mac.octets[:5] + bytes((mac.octets[5] ^ 0xFF,)))})
        elif fld == "appid":
            msg = msg._replace(appid=msg.appid + 1)
        elif fld == "type":
            msg = msg._replace(ethertype=msg.ethertype + 1)
        else:
            raise SpecError(f"field_tamper cannot touch {fld!r}")
        t = msg.time.micros
        self._claim(t, t + 1, inj.tag())
        self.records[idx] = LabeledRecord.attack(msg, inj.tag())

    def _apply_flood(self, inj: InjectionSpec) -> None:
        from .rules.specs import SV_FLOOD_SPAN_US

        burst = inj.magnitude or 25
        idx = self._anchor(inj)
        if idx + 1 >= len(self.records):
            raise SpecError("flood needs a successor packet")
        cur = self.records[idx].message
        t0 = cur.time.micros
        if self.spec.protocol == "sv":
            # burst spacing: dense enough that 11 burst gaps stay inside the
            # flood span, loose enough that a genuine successor's 11-packet
            # span clears it again (no wake of false flood verdicts)
            gap = SV_FLOOD_SPAN_US // 11
            lo = self.spec.jitter_us[0]
            if 10 * gap + lo <= SV_FLOOD_SPAN_US:
                raise SpecError("flood spacing cannot clear the span bound")
        else:
            gap = 1
        copies = [cur._replace(time=make_timestamp(t0 + gap * (j + 1)))
                  for j in range(burst)]
        if self.spec.protocol == "sv":
            # keep the genuine successor's gap inside the compliant
            # interval: widen this one gap to fit the burst
            lo = self.spec.jitter_us[0]
            delta = (copies[-1].time.micros + lo
                     - self.records[idx + 1].message.time.micros)
            if delta > 0:
                for i in range(idx + 1, len(self.records)):
                    rec = self.records[i]
                    self.records[i] = rec._replace(message=_retime(
                        rec.message, rec.message.time.micros + delta))
        self._insert_after(idx, copies, inj.tag())

    def _apply_suppression(self, inj: InjectionSpec) -> None:
        gap_s = inj.magnitude or 11
        gap_us = int(gap_s * 1_000_000)
        if gap_us <= 10_000_000:
            raise SpecError("suppression gap must exceed 10 s to be an "
                            "anomaly at all")
        records = self.records
        idx = self._anchor(inj)
        # nudge: the silenced window must not swallow a state change
        while True:
            if idx >= len(records) or idx == 0:
                raise SpecError("suppression window does not fit the capture")
            anchor = records[idx - 1].message
            q = idx
            while (q < len(records)
                   and records[q].message.time.micros - anchor.time.micros
                   <= gap_us):
                q += 1
            if q >= len(records):
                raise SpecError("suppression window does not fit the capture")
            window = records[idx:q]
            if all(r.message.stnum == anchor.stnum for r in window):
                break
            idx += 1
        dropped = q - idx
        self._claim(anchor.time.micros + 1,
                    records[q].message.time.micros, inj.tag())
        del records[idx:q]
        # the publisher was silent: its sequence counter did not advance
        i = idx
        while i < len(records) and records[i].message.stnum == anchor.stnum:
            rec = records[i]
            records[i] = rec._replace(message=rec.message._replace(
                sqnum=rec.message.sqnum - dropped))
            i += 1
        records[idx] = LabeledRecord.attack(records[idx].message, inj.tag())

    def _apply_timestamp_malformat(self, inj: InjectionSpec) -> None:
        idx = self._anchor(inj)
        msg = self.records[idx].message
        ts = msg.time
        # zero-pad the hour: readable, same instant, not wellformed
        bad = ts._replace(raw_text="0" + ts.raw_text, wellformed=False)
        t = ts.micros
        self._claim(t, t + 1, inj.tag())
        self.records[idx] = LabeledRecord.attack(msg._replace(time=bad),
                                                 inj.tag())

    # -- SV attacks -------------------------------------------------------

    def _desync_suffix(self, inj: InjectionSpec, shift: int) -> None:
        idx = self._anchor(inj)
        records = self.records
        period = self.spec.freq.smpcnt_max + 1
        if shift < period:  # a plain jump can drift back into sync
            suffix = len(records) - idx
            resync = period + 1 - shift
            if suffix >= resync:
                raise SpecError(
                    f"smpcnt_jump of +{shift} re-synchronizes after {resync} "
                    f"packets but {suffix} remain; move at_s later or raise "
                    f"the magnitude")
        self._claim(records[idx].message.time.micros,
                    records[-1].message.time.micros + 1, inj.tag())
        for i in range(idx, len(records)):
            msg = records[i].message
            records[i] = LabeledRecord.attack(
                msg._replace(smpcnt=msg.smpcnt + shift), inj.tag())

    def _apply_smpcnt_jump(self, inj: InjectionSpec) -> None:
        shift = inj.magnitude or 17
        if shift < 2:
            raise SpecError("smpcnt_jump magnitude must be >= 2")
        self._desync_suffix(inj, shift)

    def _apply_smpcnt_out_of_range(self, inj: InjectionSpec) -> None:
        self._desync_suffix(inj, self.spec.freq.smpcnt_max + 1)

    def _apply_interval_drift(self, inj: InjectionSpec) -> None:
        run = inj.magnitude or 50
        lo, hi = 240, 260
        records = self.records
        idx = self._anchor(inj)
        if idx + run + 1 >= len(records):
            raise SpecError("interval_drift run does not fit the capture")
        t = records[idx].message.time.micros
        drift_end = idx + run
        shift = 0
        for i in range(idx + 1, len(records)):
            msg = records[i].message
            if i <= drift_end:
                t += self.rng.randint(lo, hi)
                shift = t - msg.time.micros
                records[i] = LabeledRecord.attack(_retime(msg, t), inj.tag())
            else:
                records[i] = records[i]._replace(
                    message=_retime(msg, msg.time.micros + shift))
        self._claim(records[idx].message.time.micros + 1,
                    records[drift_end].message.time.micros + 1, inj.tag())


def generate(spec: ScenarioSpec) -> List[LabeledRecord]:
    """Deterministically generate a labeled dataset from a scenario."""
    rng = random.Random(spec.seed)
    if spec.protocol == "goose":
        baseline: List[Message] = _baseline_goose(spec, rng)
    else:
        baseline = _baseline_sv(spec, rng)
    records = [LabeledRecord.normal(m) for m in baseline]
    injector = _Injector(spec, records, rng)
    for inj in sorted(spec.injections, key=lambda i: i.at_s):
        injector.apply(inj)
    # reindex after insertions/deletions
    for i, rec in enumerate(records):
        if rec.message.seq_index != i:
            records[i] = rec._replace(message=rec.message._replace(seq_index=i))
    return records


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".labels.csv")


def write_labels(records: Sequence[LabeledRecord], path) -> Path:
    out = sidecar_path(path)
    with open(out, "w", encoding="utf-8") as fh:
        fh.write("seq_index,label,attack_tag\n")
        for rec in records:
            tag = rec.attack_tag or ""
            fh.write(f"{rec.message.seq_index},{rec.label.value},{tag}\n")
    return out


def read_labels(path) -> List[Tuple[int, Label, Optional[str]]]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        if header != ["seq_index", "label", "attack_tag"]:
            raise SpecError(f"{path}: not a label sidecar file")
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            idx, label, tag = line.split(",", 2)
            rows.append((int(idx), Label(label), tag or None))
    return rows


def export(records: Sequence[LabeledRecord], fmt: str, path) -> List[Path]:
    """Write a dataset as CSV or pcap plus the label sidecar; returns the
    written paths."""
    if not records:
        raise SpecError("nothing to export")
    path = Path(path)
    messages = [rec.message for rec in records]
    if fmt == "csv":
        write_csv(messages, path)
    elif fmt == "pcap":
        write_pcap(messages, path)
    else:
        raise SpecError(f"unknown export format {fmt!r}")
    labels = write_labels(records, path)
    return [path, labels]
