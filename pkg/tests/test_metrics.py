from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import METRIC_CASES, rates_by_hand
from tegr.metrics import (
    TABLE_COLUMNS,
    Outcome,
    confusion,
    format_table,
    metric_rates,
    rates_from_counts,
    ranked_first,
)


@pytest.mark.parametrize("case", range(len(METRIC_CASES)))
def test_rates_match_hand_arithmetic(case):
    outcomes = METRIC_CASES[case]
    got = metric_rates(outcomes).to_json()
    want = rates_by_hand(outcomes)
    for key, value in want.items():
        assert got[key] == pytest.approx(value, abs=1e-12), key


def test_rate_examples():
    assert rates_from_counts(3, 0, 1, 0).tpr == 0.75
    assert rates_from_counts(1, 0, 0, 0).f1 == 1.0
    assert rates_from_counts(0, 1, 0, 3).fpr == 0.25


def test_zero_denominator_is_flagged():
    r = metric_rates([("g0", {"g0"}, 1)])
    assert r.fpr == 0.0
    assert r.flags == ["fpr: zero denominator"]
    assert rates_from_counts(0, 0, 0, 0).flags == ["tpr: zero denominator", "fpr: zero denominator",
                                                    "f1: zero denominator"]


def test_ties_count_as_false_positives():
    assert confusion(Outcome("g0", frozenset({"g0", "g1"}), 4)) == (1, 1, 0, 2)
    assert confusion(Outcome("g0", frozenset({"g1"}), 4)) == (0, 1, 1, 2)


def test_empty_outcomes_rejected():
    with pytest.raises(ValueError):
        metric_rates([])


outcome = st.integers(1, 6).flatmap(lambda n: st.tuples(
    st.sampled_from([f"g{k}" for k in range(n)]),
    st.sets(st.sampled_from([f"g{k}" for k in range(n)]), min_size=1),
    st.just(n)))


@given(st.lists(outcome, min_size=1, max_size=8))
def test_rate_invariants(outcomes):
    r = metric_rates(outcomes)
    assert r.fnr == 1.0 - r.tpr
    assert 0.0 <= r.f1 <= 1.0
    assert 0.0 <= r.tpr <= 1.0 and 0.0 <= r.fpr <= 1.0
    assert r.tp + r.fn == len(outcomes)
    assert r.tp + r.fp + r.fn + r.tn == sum(n for _, _, n in outcomes)


# ---------------------------------------------------------------- ranked first

def test_ranked_first_examples():
    steps = [["g0"]] * 6 + [["g1"]] * 4
    assert ranked_first(steps, "g0") == 0.6
    assert ranked_first([["g0"]] * 3, "g0") == 1.0
    assert ranked_first([["g1"]] * 3, "g0") == 0.0
    assert ranked_first([["g0", "g1"]], "g0") == 0.0  # a tie is not first
    assert ranked_first([{"g0": 0.7, "g1": 0.3}, {"g0": 0.5, "g1": 0.5}], "g0") == 0.5
    with pytest.raises(ValueError):
        ranked_first([], "g0")


def test_table_layout():
    row = {"domain": "blocksworld", "family": "eventually", "hypotheses": 4, "level": 10, "observations": 1.5,
           "time": 0.25, "tpr": 1.0, "fpr": 0.0, "fnr": 0.0, "f1": 1.0}
    text = format_table([row, dict(row, level=100)])
    lines = text.splitlines()
    assert lines[0].split() == list(TABLE_COLUMNS)
    assert set(lines[1]) <= {"-", " "}
    assert len(lines) == 4
    assert lines[2].split()[:4] == ["blocksworld", "eventually", "4.0", "10"]
    assert len({len(line) for line in lines}) == 1
