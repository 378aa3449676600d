"""The streaming engine and the brute-force oracle must agree verdict-for-
verdict on randomized mixed compliant/violating sequences."""
import random

import pytest

from gander.rules import (
    StreamEvaluator,
    SystemFrequency,
    TrainingLevel,
    evaluate_list,
    oracle_evaluate,
)
from support import random_goose_sequence, random_sv_sequence


def assert_agreement(msgs, level, freq=SystemFrequency.F60):
    got = evaluate_list(msgs, level, freq)
    want = oracle_evaluate(msgs, level, freq)
    assert got == want


@pytest.mark.parametrize("level", list(TrainingLevel))
@pytest.mark.parametrize("seed", range(30))
def test_goose_agreement(level, seed):
    rng = random.Random(seed)
    msgs = random_goose_sequence(rng, rng.randrange(1, 200))
    assert_agreement(msgs, level)


@pytest.mark.parametrize("level", list(TrainingLevel))
@pytest.mark.parametrize("seed", range(30))
def test_sv_agreement(level, seed):
    rng = random.Random(1000 + seed)
    msgs = random_sv_sequence(rng, rng.randrange(1, 200))
    assert_agreement(msgs, level, SystemFrequency.F60)


@pytest.mark.parametrize("seed", range(10))
def test_sv_agreement_50hz(seed):
    rng = random.Random(2000 + seed)
    msgs = random_sv_sequence(rng, rng.randrange(1, 200), cnt_max=3999)
    assert_agreement(msgs, TrainingLevel.FT, SystemFrequency.F50)


def test_empty_input():
    assert evaluate_list([], TrainingLevel.FT) == []
    assert oracle_evaluate([], TrainingLevel.FT) == []


def test_mixed_protocols_interleaved():
    rng = random.Random(7)
    goose = random_goose_sequence(rng, 60)
    sv = random_sv_sequence(rng, 60)
    mixed = []
    gi = iter(goose)
    si = iter(sv)
    for i in range(120):
        src = next(gi if i % 2 == 0 else si)
        mixed.append(src._replace(seq_index=i))
    assert_agreement(mixed, TrainingLevel.FT)


@pytest.mark.parametrize("seed", range(8))
def test_inlined_push_matches_per_rule_functions(seed):
    """The evaluator's inlined path and the public per-rule functions must
    produce identical outcomes."""
    from gander.model import GooseMessage, Protocol
    from gander.rules import eval_goose_rule, eval_sv_rule

    rng = random.Random(3000 + seed)
    msgs = random_goose_sequence(rng, 80) + random_sv_sequence(rng, 80)
    for level in TrainingLevel:
        ev = StreamEvaluator(level)
        for m in msgs:
            state = ev.state_for(m)
            if isinstance(m, GooseMessage):
                expected = tuple(eval_goose_rule(r, m, state)
                                 for r in level.rules_for(Protocol.GOOSE))
            else:
                expected = tuple(eval_sv_rule(r, m, state, ev.freq)
                                 for r in level.rules_for(Protocol.SV))
            assert ev.push(m).per_rule == expected


def test_backwards_timestamp_warns():
    from gander.errors import MonotonicityWarning
    from support import g
    with pytest.warns(MonotonicityWarning):
        evaluate_list([g(0, 5_000_000, sqnum=0), g(1, 4_000_000, sqnum=1)],
                      TrainingLevel.FT)


def test_window_rules_translation_invariant():
    rng = random.Random(99)
    msgs = random_goose_sequence(rng, 150)
    shifted = [m._replace(time=m.time._replace(
        micros=m.time.micros + 3_600_000_000)) for m in msgs]
    base = evaluate_list(msgs, TrainingLevel.FT)
    moved = evaluate_list(shifted, TrainingLevel.FT)
    assert [v.per_rule for v in base] == [v.per_rule for v in moved]
