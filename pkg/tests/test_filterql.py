"""Filter-query parsing, printing, evaluation, and rule compilation."""
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gander.errors import QuerySyntaxError, QueryTypeError
from gander.filterql import (
    Cmp,
    Delta,
    Field,
    Num,
    Projection,
    Query,
    compile_rule,
    parse_query,
    run_query,
)
from gander.model import Outcome, Protocol, RuleId
from gander.rules import SystemFrequency, TrainingLevel, evaluate_list
from support import (
    g,
    goose_heartbeats,
    random_goose_sequence,
    random_sv_sequence,
    s,
    sv_run,
)


class TestParse:
    def test_count_query(self):
        q = parse_query("SELECT COUNT FROM sv WHERE smpcnt > 4799")
        assert q.source is Protocol.SV
        assert q.projection is Projection.COUNT
        assert q.predicate == Cmp(">", Field("smpcnt"), Num(4799))

    def test_rows_query_with_duration(self):
        q = parse_query("SELECT ROWS FROM goose WHERE delta(time) > 10s")
        assert q.predicate == Cmp(">", Delta(1), Num(10, "s"))
        assert Num(10, "s").value == 10_000_000

    def test_syntax_error_at_end(self):
        with pytest.raises(QuerySyntaxError) as err:
            parse_query("SELECT ROWS FROM goose WHERE")
        assert err.value.position == len("SELECT ROWS FROM goose WHERE")

    def test_syntax_error_position(self):
        with pytest.raises(QuerySyntaxError) as err:
            parse_query("SELECT ROWS FROM goose WHERE stnum > ;")
        assert err.value.position == 37

    def test_keywords_case_insensitive(self):
        q = parse_query("select rows from goose where stnum >= 1")
        assert q.projection is Projection.ROWS

    def test_hex_literal(self):
        q = parse_query("SELECT ROWS FROM goose WHERE type != 0x88b8")
        assert q.predicate.right == Num(0x88B8)

    def test_unknown_field(self):
        with pytest.raises(QueryTypeError):
            parse_query("SELECT ROWS FROM sv WHERE stnum > 1")

    def test_text_ordering_rejected(self):
        with pytest.raises(QueryTypeError):
            parse_query("SELECT ROWS FROM goose WHERE goid > 'a'")

    def test_string_vs_number_rejected(self):
        with pytest.raises(QueryTypeError):
            parse_query("SELECT ROWS FROM goose WHERE stnum = 'x'")

    def test_nested_window_count_rejected(self):
        with pytest.raises(QueryTypeError):
            parse_query("SELECT COUNT FROM sv WHERE "
                        "window_count(3, window_count(2, smpcnt > 0) > 1) > 0")

    def test_bad_mac_literal(self):
        with pytest.raises(QueryTypeError):
            parse_query("SELECT ROWS FROM goose WHERE dm = 'zz:zz'")


def exprs(depth=2):
    atoms = st.sampled_from([
        "stnum > 3", "sqnum != valid_sqnum + 1", "delta(time) <= 10us",
        "goid = 'SEL_421_1'", "data1 = 0", "stream_seq >= 1",
        "max_stnum < 9", "delta(time, 3) > 2ms",
        "window_count(5, stnum >= 0) >= 4",
        "dm = '01:0C:CD:01:00:03'", "time_format_digits != 6",
    ])
    if depth == 0:
        return atoms

    def combine(children):
        return st.one_of(
            children,
            st.tuples(children, children).map(lambda t: f"({t[0]} AND {t[1]})"),
            st.tuples(children, children).map(lambda t: f"({t[0]} OR {t[1]})"),
            children.map(lambda c: f"NOT ({c})"),
        )
    return combine(exprs(depth - 1))


class TestRoundTrip:
    @given(exprs(), st.sampled_from(["ROWS", "COUNT"]))
    @settings(max_examples=300)
    def test_parse_render_parse(self, expr, proj):
        text = f"SELECT {proj} FROM goose WHERE {expr}"
        q = parse_query(text)
        assert parse_query(q.render()) == q

    def test_render_is_canonical(self):
        q = parse_query("select count from sv where smpcnt>4799")
        assert q.render() == "SELECT COUNT FROM sv WHERE smpcnt > 4799"


class TestRunQuery:
    def test_count_zero_on_compliant_table(self):
        table = sv_run(100)
        q = parse_query("SELECT COUNT FROM sv WHERE smpcnt > 4799")
        assert run_query(q, table).count == 0

    def test_gap_rows(self):
        base = goose_heartbeats(10)
        # open an 11 s hole before the 6th packet
        shifted = [m if m.seq_index < 6 else
                   m._replace(time=m.time._replace(
                       micros=m.time.micros + 10_000_000))
                   for m in base]
        shifted = [m._replace(time=m.time._replace(
            raw_text=m.time.render(6))) for m in shifted]
        q = parse_query("SELECT ROWS FROM goose WHERE delta(time) > 10s")
        assert run_query(q, shifted).rows == (6,)

    def test_purity(self):
        rng = random.Random(5)
        table = random_goose_sequence(rng, 100)
        q = parse_query("SELECT ROWS FROM goose WHERE sqnum != valid_sqnum + 1")
        assert run_query(q, table) == run_query(q, table)

    def test_protocol_filtering(self):
        table = [g(0, 0), s(1, 205, smpcnt=1), g(2, 1_000_000, sqnum=1)]
        q = parse_query("SELECT COUNT FROM sv WHERE smpcnt >= 0")
        assert run_query(q, table).count == 1

    def test_mac_field_comparison(self):
        table = goose_heartbeats(3)
        q = parse_query("SELECT COUNT FROM goose WHERE dm = '01 00 03'")
        assert run_query(q, table).count == 3
        q = parse_query("SELECT COUNT FROM goose WHERE sm != '27 34 31'")
        assert run_query(q, table).count == 0

    def test_window_count_flood(self):
        # burst of 12 packets 1 us apart after a calm start
        msgs = goose_heartbeats(3)
        t0 = msgs[-1].time.micros
        burst = [g(3 + i, t0 + 1 + i, sqnum=msgs[-1].sqnum + 1 + i)
                 for i in range(12)]
        table = msgs + burst
        q = compile_rule(RuleId.GR6)
        got = set(run_query(q, table).rows)
        want = {v.seq_index for v in evaluate_list(table, TrainingLevel.FT)
                if v.outcome_of(RuleId.GR6) is Outcome.ANOMALOUS}
        assert got == want and got


def _anomalous_rows(table, rule, level=TrainingLevel.FT,
                    freq=SystemFrequency.F60):
    return {
        v.seq_index for v in evaluate_list(table, level, freq)
        if v.outcome_of(rule) is Outcome.ANOMALOUS
    }


class TestRuleQueryEquivalence:
    @pytest.mark.parametrize("rule", [r for r in RuleId
                                      if r.protocol is Protocol.GOOSE])
    @pytest.mark.parametrize("seed", range(6))
    def test_goose(self, rule, seed):
        rng = random.Random(seed * 31 + 1)
        table = random_goose_sequence(rng, 150)
        got = set(run_query(compile_rule(rule), table).rows)
        assert got == _anomalous_rows(table, rule)

    @pytest.mark.parametrize("rule", [r for r in RuleId
                                      if r.protocol is Protocol.SV])
    @pytest.mark.parametrize("seed", range(6))
    def test_sv(self, rule, seed):
        rng = random.Random(seed * 37 + 5)
        table = random_sv_sequence(rng, 150)
        got = set(run_query(compile_rule(rule), table).rows)
        assert got == _anomalous_rows(table, rule)

    def test_sr1_uses_50hz_bound(self):
        q = compile_rule(RuleId.SR1, SystemFrequency.F50)
        assert "3999" in q.render()
        table = [s(0, 0, smpcnt=4000)]
        assert run_query(q, table, SystemFrequency.F50).rows == (0,)

    def test_sr6_matches_direct_negation(self):
        q = compile_rule(RuleId.SR6)
        assert q.render() == (
            "SELECT ROWS FROM sv WHERE stream_seq >= 1 AND "
            "NOT (delta(time) >= 200us AND delta(time) <= 215us)")
