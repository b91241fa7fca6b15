from __future__ import annotations

import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import bundled_task, with_goal
from oracles import policy_ok, reachable_states, strong_cyclic_solvable, strong_solvable
from tegr.datasets import bundled_domains
from tegr.pddl import ground, parse_domain, parse_problem
from tegr.planner import (
    ExecutionCapExceeded,
    Policy,
    enumerate_executions,
    executions_to_json,
    iter_executions,
    policy_graph,
    solve_strong,
    solve_strong_cyclic,
    validate,
)

E0 = ("(move 11 21)", "(move 21 22)")
E1 = ("(move 11 21)", "(changetire 21)", "(move 21 22)")

RETRY = """
(define (domain retry)
  (:requirements :non-deterministic :negative-preconditions)
  (:predicates (done) (broken) (started))
  (:action try
    :parameters ()
    :precondition (and (not (done)) (not (broken)))
    :effect (oneof (done) (and)))
  (:action gamble
    :parameters ()
    :precondition (and (not (done)) (not (broken)) (not (started)))
    :effect (and (started) (oneof (done) (broken)))))
"""


def retry_model(goal="(done)", init=""):
    d = parse_domain(RETRY)
    p = parse_problem(f"(define (problem r1) (:domain retry) (:init {init}) (:goal {goal}))")
    return ground(d, p)


# ---------------------------------------------------------------- running example

def test_running_example_policy_executions(triangle_22):
    _, _, m = triangle_22
    policy = solve_strong_cyclic(m)
    assert policy is not None
    execs = enumerate_executions(m, policy)
    assert sorted(e.actions for e in execs) == sorted([E0, E1])
    assert validate(m, policy, "strong-cyclic")
    assert validate(m, policy, "strong")


def test_policy_json_round_trip(triangle_22):
    _, _, m = triangle_22
    policy = solve_strong_cyclic(m)
    rows = json.loads(policy.dumps(m))
    again = Policy.from_json(m, rows)
    assert again.mapping == policy.mapping
    assert again.to_json(m) == rows


def test_partial_policy_fails_validation(triangle_22):
    _, _, m = triangle_22
    policy = solve_strong_cyclic(m)
    flat = next(s for s in policy.mapping if "flattire" in m.state_text(s))
    broken = Policy({s: a for s, a in policy.items() if s != flat})
    assert not validate(m, broken)
    assert not policy_ok(m, broken.mapping)
    _, closed = policy_graph(m, broken)
    assert not closed


def test_validate_rejects_unknown_mode(triangle_22):
    _, _, m = triangle_22
    with pytest.raises(ValueError):
        validate(m, Policy({}), "weak")


# ---------------------------------------------------------------- solver behaviour

def test_goal_true_initially_gives_empty_policy():
    m = retry_model(init="(done)")
    policy = solve_strong_cyclic(m)
    assert policy is not None and len(policy) == 0
    assert [e.actions for e in enumerate_executions(m, policy)] == [()]
    assert len(solve_strong(m)) == 0


def test_unreachable_goal_is_unsolvable():
    m = retry_model(goal="(and (done) (broken))")
    assert solve_strong_cyclic(m) is None
    assert solve_strong(m) is None
    assert strong_cyclic_solvable(m) is False


def test_cyclic_only_task():
    m = retry_model()
    assert strong_cyclic_solvable(m) and not strong_solvable(m)
    policy = solve_strong_cyclic(m)
    assert policy is not None
    assert validate(m, policy, "strong-cyclic") and not validate(m, policy, "strong")
    assert policy_ok(m, policy.mapping, "strong-cyclic") and not policy_ok(m, policy.mapping, "strong")
    # the risky action leads to a dead end and must not be chosen
    assert {m.actions[a].label for a in policy.mapping.values()} == {"(try)"}
    assert solve_strong(m) is None


def test_strong_policy_is_acyclic(triangle_22):
    _, _, m = triangle_22
    policy = solve_strong(m)
    assert policy is not None
    assert policy_ok(m, policy.mapping, "strong")


def test_loop_bound_controls_unrolling():
    m = retry_model()
    policy = solve_strong_cyclic(m)
    assert [e.actions for e in enumerate_executions(m, policy, loop_bound=0)] == [("(try)",)]
    assert [e.actions for e in enumerate_executions(m, policy, loop_bound=1)] == [("(try)",), ("(try)", "(try)")]
    assert len(enumerate_executions(m, policy, loop_bound=3)) == 4
    with pytest.raises(ValueError):
        list(iter_executions(m, policy, loop_bound=-1))


def test_execution_cap():
    m = retry_model()
    policy = solve_strong_cyclic(m)
    with pytest.raises(ExecutionCapExceeded):
        enumerate_executions(m, policy, loop_bound=5, max_executions=3)


def test_executions_replay_through_the_model(triangle_22):
    _, _, m = triangle_22
    policy = solve_strong_cyclic(m)
    for ex in enumerate_executions(m, policy):
        assert ex.states[0] == m.init
        assert m.is_goal(ex.states[-1])
        for k, label in enumerate(ex.actions):
            ai = m.action_index[label]
            assert policy.get(ex.states[k]) == ai
            assert ex.states[k + 1] in m.successors(ex.states[k], ai)
    assert executions_to_json(enumerate_executions(m, policy)) == [list(E0), list(E1)]


# ---------------------------------------------------------------- oracle agreement

@pytest.mark.parametrize("name", bundled_domains())
def test_bundled_policies_pass_both_checkers(name):
    d, p = bundled_task(name)
    m = ground(d, p)
    policy = solve_strong_cyclic(m)
    expected = strong_cyclic_solvable(m, limit=20_000)
    assert expected is not None
    assert (policy is not None) == expected
    if policy is not None:
        assert validate(m, policy)
        assert policy_ok(m, policy.mapping)


TRIANGLE_GOALS = ["(vAt 22)", "(vAt 33)", "(vAt 51)", "(vAt 15)", "(and (vAt 22) (spare-in 21))",
                  "(and (vAt 21) (not (spare-in 21)))", "(and (vAt 31) (flattire))", "(vAt 11)"]


@given(st.sampled_from(TRIANGLE_GOALS))
def test_triangle_goals_agree_with_oracle(goal):
    d, p = with_goal("triangle-tireworld", goal)
    m = ground(d, p)
    assert reachable_states(m) is not None
    policy = solve_strong_cyclic(m)
    assert (policy is not None) == strong_cyclic_solvable(m)
    if policy is not None:
        assert validate(m, policy) and policy_ok(m, policy.mapping)
    strong = solve_strong(m)
    assert (strong is not None) == strong_solvable(m)
    if strong is not None:
        assert validate(m, strong, "strong") and policy_ok(m, strong.mapping, "strong")
