from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import bundled_task
from oracles import strong_cyclic_solvable
from tegr.compiler import (
    CompilationError,
    MalformedAlternation,
    check_policy_satisfies,
    compile,
    guard_condition,
    resolve_atoms,
    strip,
)
from tegr.datasets import bundled_domains
from tegr.logic import Atom, Formula, atom, eventually, land, parse_formula
from tegr.pddl import And, Lit, Or, ground, parse_domain, parse_problem
from tegr.planner import Policy, enumerate_executions, solve_strong_cyclic

F51 = parse_formula("F vAt(51)")


@pytest.fixture(scope="module")
def compiled51(triangle):
    d, p = triangle
    cp = compile(d, p, F51)
    model = ground(cp.domain, cp.problem)
    return cp, model, solve_strong_cyclic(model)


def test_compiled_domain_text_shape(compiled51):
    cp, _, _ = compiled51
    text = cp.domain_text()
    assert "(q0 ?x - location) (q1 ?x - location) (turnDomain)" in text
    assert "(:action trans\n    :parameters (?x - location)\n    :precondition (not (turnDomain))" in text
    assert "(when (and (q0 ?x) (not (vAt ?x)))" in text
    assert "(when (or (and (q0 ?x) (vAt ?x)) (q1 ?x))" in text
    assert "(and (q1 ?x) (not (q0 ?x)) (turnDomain))" in text
    for req in (":negative-preconditions", ":disjunctive-preconditions", ":conditional-effects"):
        assert req in text
    # domain actions are gated on the turn fluent and hand the turn back
    assert "(not (flattire)) (turnDomain))" in text
    assert text.count("(not (turnDomain))") == 3


def test_compiled_problem_text_shape(compiled51):
    cp, _, _ = compiled51
    text = cp.problem_text()
    assert "(q0 51) (turnDomain)))" in text
    assert "(:goal (and (q1 51) (turnDomain)))" in text
    assert cp.initial_state == 0


def test_initial_automaton_state_reads_s0(triangle):
    d, p = triangle
    cp = compile(d, p, parse_formula("F vAt(11)"))
    assert cp.initial_state in cp.dfa.accepting
    assert Atom("q1", ("11",)) in cp.problem.init
    model = ground(cp.domain, cp.problem)
    assert model.is_goal(model.init)
    assert len(solve_strong_cyclic(model)) == 0


def test_state_predicate_names_avoid_clashes():
    d = parse_domain("""(define (domain clash) (:requirements :typing)
      (:predicates (q0) (turnDomain) (a))
      (:action trans :parameters () :precondition (q0) :effect (a)))""")
    p = parse_problem("(define (problem c1) (:domain clash) (:init (q0)) (:goal (a)))")
    cp = compile(d, p, parse_formula("F a"))
    assert cp.state_predicates[0] == "q0-aut1"
    assert cp.turn_predicate == "turnDomain-aut1"
    assert cp.trans_name == "trans-aut1"
    model = ground(cp.domain, cp.problem)
    policy = solve_strong_cyclic(model)
    assert policy is not None
    assert check_policy_satisfies(d, p, parse_formula("F a"), policy, compiled=cp)


def test_flat_atom_names_are_resolved(triangle):
    d, p = triangle
    assert resolve_atoms(parse_formula("F vAt_51"), d, p) == F51
    assert resolve_atoms(parse_formula("spare-in(21) U flattire"), d, p) == parse_formula("spare-in(21) U flattire")
    with pytest.raises(CompilationError, match="no predicate"):
        resolve_atoms(parse_formula("F fly(51)"), d, p)
    with pytest.raises(CompilationError, match="unknown object"):
        resolve_atoms(parse_formula("F vAt(99)"), d, p)


def test_guard_condition_forms():
    a, b = Atom("a"), Atom("b")
    assert guard_condition(Formula("true")) == And(())
    assert guard_condition(Formula("false")) == Or(())
    g = parse_formula("a & !b | b")
    assert guard_condition(g) == Or((And((Lit(a), Lit(b, False))), Lit(b)))
    with pytest.raises(CompilationError):
        guard_condition(parse_formula("F a"))


# ---------------------------------------------------------------- strip

def test_strip_examples():
    ex = ["(move 11 21)", "(trans 51)", "(changetire 21)", "(trans 51)"]
    assert strip(ex) == ["(move 11 21)", "(changetire 21)"]
    assert strip([]) == []
    assert strip(["move 11 21", "trans(51)"]) == ["(move 11 21)"]
    assert strip(["(move 11 21)"]) == ["(move 11 21)"]


@pytest.mark.parametrize("bad", [
    ["(trans 51)"],
    ["(move 11 21)", "(move 21 31)"],
    ["(move 11 21)", "(trans 51)", "(trans 51)"],
])
def test_strip_rejects_broken_alternation(bad):
    with pytest.raises(MalformedAlternation):
        strip(bad)


def test_strip_with_renamed_trans():
    assert strip(["(a)", "(trans-aut1)"], "trans-aut1") == ["(a)"]


# ---------------------------------------------------------------- policies

def test_compiled_policy_satisfies_formula(triangle, compiled51):
    d, p = triangle
    cp, model, policy = compiled51
    assert policy is not None
    assert check_policy_satisfies(d, p, F51, policy, compiled=cp)
    assert check_policy_satisfies(d, p, F51, policy)


def test_empty_policy_does_not_satisfy(triangle, compiled51):
    d, p = triangle
    cp, _, _ = compiled51
    assert not check_policy_satisfies(d, p, F51, Policy({}), compiled=cp)


def test_executions_alternate_and_track_one_automaton_state(compiled51):
    cp, model, policy = compiled51
    turn = model.index[Atom(cp.turn_predicate)]
    qs = {i for a, i in model.index.items() if a.name in cp.state_predicates}
    execs = enumerate_executions(model, policy)
    assert execs
    for ex in execs:
        domain_part = strip(ex.actions, cp.trans_name)
        assert len(domain_part) * 2 == len(ex.actions)
        for k, s in enumerate(ex.states):
            assert (turn in s) == (k % 2 == 0)
            assert len(qs & s) == 1
        assert ex.actions[-1].startswith("(trans")


def test_conjunctive_goal_on_a_chain():
    d, p = bundled_task("blocksworld")
    goal = land(eventually(atom("holding", "b")), eventually(atom("clear", "d")))
    cp = compile(d, p, goal)
    model = ground(cp.domain, cp.problem)
    policy = solve_strong_cyclic(model)
    assert policy is not None
    assert check_policy_satisfies(d, p, goal, policy, compiled=cp)


def _goal_formula(cond) -> Formula:
    lits = cond.args if isinstance(cond, And) else (cond,)
    parts = [Formula("atom", atom=x.atom) if x.positive else Formula("not", (Formula("atom", atom=x.atom),))
             for x in lits]
    f = parts[0]
    for g in parts[1:]:
        f = land(f, g)
    return f


@pytest.mark.parametrize("name", bundled_domains())
def test_eventually_goal_matches_plain_goal(name):
    d, p = bundled_task(name)
    plain = ground(d, p)
    base = strong_cyclic_solvable(plain, limit=20_000)
    goal = eventually(_goal_formula(p.goal))
    cp = compile(d, p, goal)
    model = ground(cp.domain, cp.problem)
    policy = solve_strong_cyclic(model)
    assert (policy is not None) == bool(base)
    if policy is not None:
        assert check_policy_satisfies(d, p, goal, policy, compiled=cp)


@given(st.sampled_from(["F vAt(22)", "F vAt(33)", "!flattire U vAt(22)", "G !flattire",
                        "F (vAt(21) & X vAt(22))", "O vAt(22)", "O (vAt(21) & !flattire)"]))
def test_compiled_solvability_matches_oracle(text):
    d, p = bundled_task("triangle-tireworld")
    f = parse_formula(text)
    cp = compile(d, p, f)
    model = ground(cp.domain, cp.problem)
    expected = strong_cyclic_solvable(model, limit=20_000)
    policy = solve_strong_cyclic(model)
    assert (policy is not None) == expected
    if policy is not None:
        assert check_policy_satisfies(d, p, f, policy, compiled=cp)
