from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import all_traces, sat, sat_trace
from strategies import ATOMS, formulas
from tegr.logic import (
    Atom,
    Formula,
    FormulaError,
    MixedTenseError,
    always,
    atom,
    before,
    desugar,
    eventually,
    historically,
    holds,
    holds_at,
    holds_batch,
    land,
    lnot,
    lor,
    make_trace,
    next_,
    once,
    parse_formula,
    resolve_dialect,
    since,
    tense,
    until,
    weak_next,
)

a, b, c = atom("a"), atom("b"), atom("c")
SMALL_TRACES = list(all_traces(ATOMS[:2], 4))


def T(*steps):
    return make_trace(steps)


# ---------------------------------------------------------------- parsing

def test_parse_operators_and_atoms():
    assert parse_formula("F vAt(51)") == eventually(atom("vAt", "51"))
    assert parse_formula("a U b U c") == until(a, until(b, c))
    assert parse_formula("!a & b | c") == lor(land(lnot(a), b), c)
    assert parse_formula("a & b U c") == land(a, until(b, c))
    assert parse_formula("WX a") == weak_next(a)
    assert parse_formula("Y a S b") == since(before(a), b)
    assert parse_formula("H O a") == historically(once(a))
    assert parse_formula("on(b1, b2)").atom == Atom("on", ("b1", "b2"))
    assert parse_formula("true").op == "true"


def test_parse_errors_name_the_problem():
    with pytest.raises(FormulaError, match="column"):
        parse_formula("a &")
    with pytest.raises(FormulaError):
        parse_formula("(a | b")
    with pytest.raises(FormulaError):
        parse_formula("a -> b")
    with pytest.raises(FormulaError):
        parse_formula("")


def test_mixed_tense_rejected():
    with pytest.raises(MixedTenseError):
        parse_formula("F a & O b")
    with pytest.raises(MixedTenseError):
        parse_formula("F a", "ppltl")
    with pytest.raises(MixedTenseError):
        parse_formula("O a", "ltlf")
    with pytest.raises(FormulaError):
        resolve_dialect(a, "ctl")


def test_tense_and_dialect_defaults():
    assert tense(a) is None
    assert tense(eventually(a)) == "future"
    assert tense(once(a)) == "past"
    assert resolve_dialect(land(a, b)) == "ltlf"
    assert resolve_dialect(once(a)) == "ppltl"
    assert resolve_dialect(land(a, b), "ppltl") == "ppltl"


def test_formula_constructor_checks_arity():
    with pytest.raises(FormulaError):
        Formula("until", (a,))
    with pytest.raises(FormulaError):
        Formula("bogus")
    with pytest.raises(FormulaError):
        Atom("1bad")


@given(formulas("ltlf"))
def test_text_round_trip_future(f):
    assert parse_formula(str(f)) == f


@given(formulas("ppltl"))
def test_text_round_trip_past(f):
    assert parse_formula(str(f)) == f


# ---------------------------------------------------------------- desugaring

def test_desugar_examples():
    assert desugar(eventually(a)) == until(Formula("true"), a)
    assert desugar(always(a)) == lnot(until(Formula("true"), lnot(a)))
    assert desugar(a) == a


@given(formulas("ltlf", max_depth=3), st.sampled_from(list(all_traces(ATOMS, 3))))
def test_desugar_sound_future(f, t):
    assert holds(f, t, "ltlf") == holds(desugar(f), t, "ltlf")


@given(formulas("ppltl", max_depth=3), st.sampled_from(list(all_traces(ATOMS, 3))))
def test_desugar_sound_past(f, t):
    assert holds(f, t, "ppltl") == holds(desugar(f), t, "ppltl")


def test_desugar_exhaustive_on_small_family():
    fs = [eventually(a), always(lor(a, b)), weak_next(a), once(b), historically(lnot(a)), lor(a, next_(b))]
    for f in fs:
        d = "ppltl" if tense(f) == "past" else "ltlf"
        for t in all_traces(ATOMS[:2], 6):
            assert holds(f, t, d) == holds(desugar(f), t, d)


# ---------------------------------------------------------------- semantics

def test_holds_at_examples():
    assert holds_at(next_(a), T([], ["a"]), 0)
    assert not holds_at(next_(a), T(["a"]), 0)
    assert holds_at(until(a, b), T(["a"], ["a"], ["b"]), 0)
    assert not holds_at(before(a), T(["a"], []), 0)
    with pytest.raises(IndexError):
        holds_at(a, T(["a"]), 1)


def test_holds_examples():
    assert holds(eventually(a), T([], ["a"]))
    assert holds(land(a, once(b)), T(["b"], ["a"]))
    assert not holds(a, T([]))
    with pytest.raises(ValueError):
        holds(a, ())


def test_weak_next_at_end_is_true():
    assert holds(weak_next(a), T(["b"]))
    assert not holds(next_(Formula("true")), T(["b"]))


@given(formulas("ltlf", max_depth=3), st.sampled_from(SMALL_TRACES))
def test_semantics_match_clause_oracle_future(f, t):
    for i in range(len(t)):
        assert holds_at(f, t, i) == sat(f, t, i)


@given(formulas("ppltl", max_depth=3), st.sampled_from(SMALL_TRACES))
def test_semantics_match_clause_oracle_past(f, t):
    for i in range(len(t)):
        assert holds_at(f, t, i) == sat(f, t, i)


@given(formulas("ltlf", max_depth=3), st.sampled_from(SMALL_TRACES))
def test_duality(f, t):
    assert holds(lnot(f), t, "ltlf") == (not holds(f, t, "ltlf"))


def test_until_expansion_exhaustive():
    lhs = until(a, b)
    rhs = lor(b, land(a, next_(until(a, b))))
    for t in all_traces(ATOMS[:2], 6):
        assert holds(lhs, t) == holds(rhs, t)


def test_since_expansion_exhaustive():
    lhs = since(a, b)
    rhs = lor(b, land(a, before(since(a, b))))
    for t in all_traces(ATOMS[:2], 5):
        for i in range(len(t)):
            assert holds_at(lhs, t, i) == holds_at(rhs, t, i)


def test_past_formulas_are_read_at_the_last_position():
    t = T(["a"], [])
    assert holds(once(a), t)
    assert not holds(a, t, "ppltl")
    assert holds(a, t, "ltlf")


@given(formulas("ltlf", max_depth=3), st.integers(1, 4))
def test_holds_batch_matches_holds(f, n):
    atoms = list(ATOMS)
    letters = np.array(list(itertools.product(range(8), repeat=n)))
    got = holds_batch(f, letters, atoms, "ltlf")
    for row, v in zip(letters, got):
        t = tuple(frozenset(atoms[k] for k in range(3) if (int(x) >> k) & 1) for x in row)
        assert bool(v) == sat_trace(f, t, "ltlf")


@given(formulas("ppltl", max_depth=3), st.integers(1, 4))
def test_holds_batch_matches_holds_past(f, n):
    atoms = list(ATOMS)
    letters = np.array(list(itertools.product(range(8), repeat=n)))
    got = holds_batch(f, letters, atoms, "ppltl")
    for row, v in zip(letters, got):
        t = tuple(frozenset(atoms[k] for k in range(3) if (int(x) >> k) & 1) for x in row)
        assert bool(v) == sat_trace(f, t, "ppltl")


def test_make_trace_accepts_text_atoms():
    t = make_trace([["vAt(51)"], []])
    assert t[0] == frozenset({Atom("vAt", ("51",))})
    with pytest.raises(TypeError):
        make_trace([[3]])
