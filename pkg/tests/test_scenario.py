"""Generator properties: baseline purity, label/detection exactness,
determinism, export round trips."""
import hashlib

import pytest

from gander.capture import CaptureSource, read_csv, read_pcap
from gander.errors import SpecError
from gander.model import Label
from gander.rules import SystemFrequency, TrainingLevel, evaluate_list
from gander.scenario import (
    Attack,
    InjectionSpec,
    ScenarioSpec,
    export,
    generate,
    read_labels,
    sidecar_path,
)

FT = TrainingLevel.FT
PT = TrainingLevel.PT


def flagged(records, level=FT, freq=SystemFrequency.F60):
    msgs = [r.message for r in records]
    return {v.seq_index for v in evaluate_list(msgs, level, freq)
            if v.anomalous}


def labeled(records):
    return {r.message.seq_index for r in records if r.label is Label.ANOMALOUS}


class TestBaseline:
    @pytest.mark.parametrize("seed", range(3))
    def test_goose_purity(self, seed):
        records = generate(ScenarioSpec("goose", 120, seed=seed))
        assert records and not flagged(records)

    @pytest.mark.parametrize("seed", range(3))
    def test_sv_purity(self, seed):
        records = generate(ScenarioSpec("sv", 1.5, seed=seed))
        assert len(records) > 4800 and not flagged(records)

    def test_sv_50hz_purity_and_cadence(self):
        spec = ScenarioSpec("sv", 1.0, freq=SystemFrequency.F50, seed=1)
        records = generate(spec)
        counts = [r.message.smpcnt for r in records]
        assert max(counts) == 3999 and counts[0] == 0
        assert not flagged(records, freq=SystemFrequency.F50)

    def test_sv_one_second_is_4800ish(self):
        # cadence: one packet every 200-215 us
        records = generate(ScenarioSpec("sv", 1.0, seed=0))
        assert 4650 <= len(records) <= 5000
        counts = [r.message.smpcnt for r in records]
        assert counts[:4800] == list(range(min(4800, len(counts))))

    def test_goose_state_changes(self):
        records = generate(ScenarioSpec("goose", 120, seed=0))
        stnums = {r.message.stnum for r in records}
        assert len(stnums) > 1  # heartbeats plus occasional state changes


def _exactness(spec, freq=SystemFrequency.F60):
    records = generate(spec)
    want = labeled(records)
    got = flagged(records, freq=freq)
    assert want, "scenario produced no labeled packets"
    assert got == want
    return records


class TestGooseAttacks:
    def test_replay_stnum_regression(self):
        spec = ScenarioSpec("goose", 120, seed=3, injections=[
            InjectionSpec(Attack.REPLAY_STNUM_REGRESSION, 60.0)])
        records = _exactness(spec)
        assert sum(1 for r in records if r.attack_tag) == 3

    def test_replay_nudges_past_first_epoch(self):
        spec = ScenarioSpec("goose", 120, seed=3, injections=[
            InjectionSpec(Attack.REPLAY_STNUM_REGRESSION, 0.0)])
        _exactness(spec)

    def test_sqnum_skip(self):
        spec = ScenarioSpec("goose", 120, seed=4, injections=[
            InjectionSpec(Attack.SQNUM_SKIP, 45.0)])
        _exactness(spec)

    def test_sqnum_skip_of_one_rejected(self):
        with pytest.raises(SpecError):
            generate(ScenarioSpec("goose", 60, injections=[
                InjectionSpec(Attack.SQNUM_SKIP, 30.0, magnitude=1)]))

    def test_data_change_spoof(self):
        spec = ScenarioSpec("goose", 120, seed=5, injections=[
            InjectionSpec(Attack.DATA_CHANGE_SPOOF, 50.0)])
        records = _exactness(spec)
        # the spoof is caught at partial training too (GR2 is rule #2)
        assert flagged(records, PT) == labeled(records)

    @pytest.mark.parametrize("fld", ["goid", "dataset", "dm", "sm", "appid",
                                     "type"])
    def test_field_tamper(self, fld):
        spec = ScenarioSpec("goose", 120, seed=6, injections=[
            InjectionSpec(Attack.FIELD_TAMPER, 70.0, tamper_field=fld)])
        _exactness(spec)

    def test_flood(self):
        spec = ScenarioSpec("goose", 120, seed=7, injections=[
            InjectionSpec(Attack.FLOOD, 80.0)])
        records = _exactness(spec)
        assert sum(1 for r in records if r.attack_tag) == 25

    def test_suppression_gr7_only(self):
        spec = ScenarioSpec("goose", 180, seed=8, injections=[
            InjectionSpec(Attack.SUPPRESSION, 90.0)])
        records = _exactness(spec)
        assert sum(1 for r in records if r.attack_tag) == 1
        # invisible at partial training: the gap rule is #7
        assert not flagged(records, PT)

    def test_short_suppression_rejected(self):
        with pytest.raises(SpecError):
            generate(ScenarioSpec("goose", 60, injections=[
                InjectionSpec(Attack.SUPPRESSION, 30.0, magnitude=5)]))

    def test_timestamp_malformat(self):
        spec = ScenarioSpec("goose", 120, seed=9, injections=[
            InjectionSpec(Attack.TIMESTAMP_MALFORMAT, 33.0)])
        _exactness(spec)


class TestSvAttacks:
    def test_field_tamper_svid(self):
        spec = ScenarioSpec("sv", 2.0, seed=10, injections=[
            InjectionSpec(Attack.FIELD_TAMPER, 1.0)])
        _exactness(spec)

    def test_flood(self):
        spec = ScenarioSpec("sv", 2.0, seed=11, injections=[
            InjectionSpec(Attack.FLOOD, 1.0)])
        _exactness(spec)

    def test_timestamp_malformat(self):
        spec = ScenarioSpec("sv", 2.0, seed=12, injections=[
            InjectionSpec(Attack.TIMESTAMP_MALFORMAT, 0.8)])
        _exactness(spec)

    def test_smpcnt_jump(self):
        spec = ScenarioSpec("sv", 2.0, seed=13, injections=[
            InjectionSpec(Attack.SMPCNT_JUMP, 1.5)])
        records = _exactness(spec)
        # partial training sees at most the post-wrap tail of the desync
        # (rule #2); the full desync needs the unit-increment rule (#8)
        assert flagged(records, PT) < labeled(records)

    def test_smpcnt_jump_resync_rejected(self):
        # +2 re-syncs after period-1 packets, which a 2 s capture reaches
        with pytest.raises(SpecError):
            generate(ScenarioSpec("sv", 2.0, injections=[
                InjectionSpec(Attack.SMPCNT_JUMP, 0.1, magnitude=2)]))

    def test_smpcnt_out_of_range(self):
        spec = ScenarioSpec("sv", 2.0, seed=14, injections=[
            InjectionSpec(Attack.SMPCNT_OUT_OF_RANGE, 1.5)])
        records = _exactness(spec)
        # out-of-range counters are already a partial-training catch (#1)
        assert flagged(records, PT) == labeled(records)

    def test_interval_drift(self):
        spec = ScenarioSpec("sv", 2.0, seed=15, injections=[
            InjectionSpec(Attack.INTERVAL_DRIFT, 1.0)])
        records = _exactness(spec)
        assert sum(1 for r in records if r.attack_tag) == 50
        assert not flagged(records, PT)


class TestSpecValidation:
    def test_goose_attack_on_sv_rejected(self):
        with pytest.raises(SpecError):
            generate(ScenarioSpec("sv", 2.0, injections=[
                InjectionSpec(Attack.SQNUM_SKIP, 1.0)]))

    def test_colliding_injections_rejected(self):
        with pytest.raises(SpecError) as err:
            generate(ScenarioSpec("goose", 120, injections=[
                InjectionSpec(Attack.SQNUM_SKIP, 50.0),
                InjectionSpec(Attack.DATA_CHANGE_SPOOF, 50.0)]))
        assert "collide" in str(err.value)

    def test_offset_past_end_rejected(self):
        with pytest.raises(SpecError):
            generate(ScenarioSpec("goose", 60, injections=[
                InjectionSpec(Attack.SQNUM_SKIP, 300.0)]))

    def test_disjoint_injections_compose(self):
        spec = ScenarioSpec("goose", 240, seed=16, injections=[
            InjectionSpec(Attack.SQNUM_SKIP, 40.0),
            InjectionSpec(Attack.DATA_CHANGE_SPOOF, 100.0),
            InjectionSpec(Attack.FLOOD, 160.0),
        ])
        _exactness(spec)

    def test_from_dict(self):
        spec = ScenarioSpec.from_dict({
            "protocol": "sv", "duration_s": 1.0, "seed": 5, "freq": 50,
            "injections": [{"attack": "interval_drift", "at_s": 0.5,
                            "magnitude": 10}],
        })
        assert spec.freq is SystemFrequency.F50
        assert spec.injections[0].attack is Attack.INTERVAL_DRIFT

    def test_from_dict_rejects_unknown_keys(self):
        with pytest.raises(SpecError):
            ScenarioSpec.from_dict({
                "protocol": "sv", "duration_s": 1.0,
                "injections": [{"attack": "flood", "at_s": 0.5, "bogus": 1}],
            })


class TestDeterminismAndExport:
    def test_same_seed_same_records(self):
        spec_kwargs = dict(protocol="goose", duration_s=90, seed=21,
                           injections=[InjectionSpec(Attack.FLOOD, 45.0)])
        a = generate(ScenarioSpec(**spec_kwargs))
        b = generate(ScenarioSpec(**spec_kwargs))
        assert a == b

    def test_export_hash_stable(self, tmp_path):
        spec = ScenarioSpec("sv", 0.5, seed=22, injections=[
            InjectionSpec(Attack.INTERVAL_DRIFT, 0.25, magnitude=20)])
        digests = []
        for name in ("a.csv", "b.csv"):
            paths = export(generate(spec), "csv", tmp_path / name)
            digests.append([hashlib.sha256(p.read_bytes()).hexdigest()
                            for p in paths])
        assert digests[0] == digests[1]

    def test_csv_round_trip(self, tmp_path):
        records = generate(ScenarioSpec("goose", 60, seed=23, injections=[
            InjectionSpec(Attack.TIMESTAMP_MALFORMAT, 30.0)]))
        path = tmp_path / "g.csv"
        export(records, "csv", path)
        back = list(read_csv(CaptureSource.csv(path)))
        assert back == [r.message for r in records]

    def test_pcap_round_trip(self, tmp_path):
        records = generate(ScenarioSpec("sv", 0.3, seed=24))
        path = tmp_path / "s.pcap"
        export(records, "pcap", path)
        back = list(read_pcap(CaptureSource.pcap(path)))
        assert back == [r.message for r in records]

    def test_sidecar_alignment(self, tmp_path):
        records = generate(ScenarioSpec("goose", 60, seed=25, injections=[
            InjectionSpec(Attack.SQNUM_SKIP, 30.0)]))
        path = tmp_path / "g.csv"
        export(records, "csv", path)
        rows = read_labels(sidecar_path(path))
        assert len(rows) == len(records)
        for (idx, label, tag), rec in zip(rows, records):
            assert idx == rec.message.seq_index
            assert label is rec.label
            assert tag == rec.attack_tag
