from __future__ import annotations

import json
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import FIXTURES, bundled_task
from oracles import MISS, brute_force_posterior, distances, ordered_before
from tegr.metrics import ranked_first
from tegr.pddl import normalize_action
from tegr.recognizer import (
    MISS_DISTANCE,
    GoalTable,
    Hypothesis,
    RecognitionError,
    RecognitionProblem,
    average_distances,
    average_estimated_score,
    build_tables,
    estimated_score,
    goal_table,
    likelihood,
    load_problem,
    normalize,
    order_relation,
    penalty,
    recognize_offline,
    recognize_online,
    score_observations,
)

E0 = ("(move 11 21)", "(move 21 22)")
E1 = ("(move 11 21)", "(changetire 21)", "(move 21 22)")

# average distances printed for the three hypotheses of the worked example
PUBLISHED_D = {
    "phi0": {"(move 11 21)": 4.5, "(changetire 21)": 4, "(move 21 31)": 3, "(changetire 31)": 2.5,
             "(move 31 41)": 1.5, "(changetire 41)": 1, "(move 41 51)": 0},
    "phi1": {"(move 11 21)": 4.5, "(changetire 21)": 4, "(move 21 22)": 3, "(changetire 22)": 2.5,
             "(move 22 23)": 1.5, "(changetire 23)": 1, "(move 23 33)": 0},
    "phi2": {"(move 11 21)": 6, "(changetire 21)": 5.5, "(move 21 22)": 4.5, "(changetire 22)": 4,
             "(move 22 23)": 3, "(changetire 23)": 2.5, "(changetire 24)": 1, "(move 23 24)": 1.5,
             "(move 24 15)": 0},
}
OBS = ["(move 11 21)", "(changetire 22)"]


@pytest.fixture(scope="module")
def example2():
    problem = load_problem(FIXTURES / "example2.json")
    return problem, build_tables(problem)


def table(goal, execs):
    execs = [tuple(normalize_action(a) for a in ex) for ex in execs]
    return GoalTable(goal, tuple(map(tuple, execs)), average_distances(execs), order_relation(execs))


# ---------------------------------------------------------------- distances and order

def test_running_example_distances():
    d = average_distances([E0, E1])
    assert d == pytest.approx({"(move 11 21)": 1.5, "(changetire 21)": 1.0, "(move 21 22)": 0.0}, abs=1e-9)


def test_distances_need_an_execution():
    with pytest.raises(RecognitionError):
        average_distances([])


def test_repeated_actions_count_every_occurrence():
    assert average_distances([("a", "b", "a")]) == {"a": 1.0, "b": 1.0}


def test_order_relation_and_penalty():
    order = order_relation([E0, E1])
    assert ("(move 11 21)", "(changetire 21)") in order
    assert ("(move 21 22)", "(move 11 21)") not in order
    assert penalty(None, "(move 11 21)", order) == 0
    assert penalty("(move 11 21)", "(move 21 22)", order) == 0
    assert penalty("(move 21 22)", "(move 11 21)", order) == 1
    assert penalty("(fly)", "(move 11 21)", order) == 1


@given(st.lists(st.lists(st.sampled_from("abcde"), min_size=1, max_size=6), min_size=1, max_size=4))
def test_distances_and_order_match_oracle(execs):
    assert average_distances(execs) == pytest.approx(distances(execs), abs=1e-12)
    order = order_relation(execs)
    for x in "abcde":
        for y in "abcde":
            assert ((x, y) in order) == ordered_before(execs, x, y)


# ---------------------------------------------------------------- worked example

def test_reference_policies_reproduce_the_distance_tables(example2):
    _, tables = example2
    assert {g: len(t.executions) for g, t in tables.items()} == {"phi0": 8, "phi1": 8, "phi2": 16}
    for g, want in PUBLISHED_D.items():
        assert dict(tables[g].distances) == pytest.approx(want, abs=1e-9)


def test_worked_example_scores_by_hand(example2):
    _, tables = example2
    e5 = math.exp(5)
    assert estimated_score("phi0", None, OBS[0], tables) == pytest.approx(4.5 / 15, abs=1e-12)
    assert estimated_score("phi2", None, OBS[0], tables) == pytest.approx(6 / 15, abs=1e-12)
    den = e5 + 2.5 + 4
    assert estimated_score("phi0", OBS[0], OBS[1], tables) == pytest.approx(math.e * e5 / den, abs=1e-12)
    assert estimated_score("phi1", OBS[0], OBS[1], tables) == pytest.approx(2.5 / den, abs=1e-12)
    assert estimated_score("phi1", OBS[0], OBS[1], tables) == pytest.approx(0.016138, abs=1e-6)
    assert average_estimated_score("phi0", OBS, tables) == pytest.approx(1.452113, abs=1e-6)
    assert average_estimated_score("phi1", OBS, tables) == pytest.approx(0.158069, abs=1e-6)
    assert average_estimated_score("phi2", OBS, tables) == pytest.approx(0.212910, abs=1e-6)


def test_worked_example_ranks_the_intended_goal_first(example2):
    problem, tables = example2
    post = recognize_offline(problem, tables)
    assert post.argmax == ["phi1"]
    assert post.ranking == ["phi1", "phi2", "phi0"]
    assert post.likelihood == pytest.approx({"phi0": 0.407812, "phi1": 0.863506, "phi2": 0.824463}, abs=1e-6)
    assert post.posterior == pytest.approx({"phi0": 0.194587, "phi1": 0.412021, "phi2": 0.393392}, abs=1e-6)
    assert post.penalties == {"phi0": [0, 1], "phi1": [0, 0], "phi2": [0, 0]}


def test_worked_example_matches_brute_force(example2):
    problem, tables = example2
    post = recognize_offline(problem, tables)
    ref = brute_force_posterior({g: list(t.executions) for g, t in tables.items()}, problem.observations)
    for key in ("score", "likelihood", "posterior"):
        assert getattr(post, key) == pytest.approx(ref[key], abs=1e-9)
    assert recognize_online(problem, tables)[0].argmax == ["phi0", "phi1"]


def test_priors_scale_the_posterior(example2):
    problem, tables = example2
    priors = {"phi0": 0.2, "phi1": 0.2, "phi2": 0.6}
    post = score_observations(["phi0", "phi1", "phi2"], problem.observations, tables, priors)
    ref = brute_force_posterior({g: list(t.executions) for g, t in tables.items()}, problem.observations, priors)
    assert post.posterior == pytest.approx(ref["posterior"], abs=1e-9)
    assert post.argmax == ["phi2"]
    # unnormalized priors are rescaled
    again = score_observations(["phi0", "phi1", "phi2"], problem.observations, tables, {"phi0": 1, "phi1": 1, "phi2": 3})
    assert again.posterior == pytest.approx(post.posterior, abs=1e-12)


def test_posterior_json_shape(example2):
    problem, tables = example2
    data = recognize_offline(problem, tables).to_json()
    assert data["argmax"] == ["phi1"]
    assert set(data["goals"]["phi0"]) == {"likelihood", "prior", "posterior", "score", "observation_scores",
                                         "penalties"}
    json.dumps(data)


# ---------------------------------------------------------------- online and degenerate cases

def test_online_fixture_ranked_first():
    problem = load_problem(FIXTURES / "online-example.json")
    steps = recognize_online(problem)
    assert len(steps) == len(problem.observations)
    assert [s.step for s in steps] == list(range(1, 11))
    assert ranked_first(steps, "g0") == pytest.approx(0.6)
    assert steps[-1].argmax == ["g0"]


def test_all_miss_observations_give_uniform_posterior():
    tables = {"g0": table("g0", [("a",)]), "g1": table("g1", [("b",)])}
    post = score_observations(["g0", "g1"], ["(zzz)"], tables)
    assert post.posterior == pytest.approx({"g0": 0.5, "g1": 0.5})
    assert post.score["g0"] == pytest.approx(0.5)


def test_zero_denominator_scores_zero():
    tables = {"g0": table("g0", [("a",)]), "g1": table("g1", [("a",)])}
    assert estimated_score("g0", None, "(a)", tables) == 0.0


def test_order_disambiguates_swapped_goals():
    tables = {"pq": table("pq", [("a", "b", "c")]), "qp": table("qp", [("b", "a", "c")])}
    post = score_observations(["pq", "qp"], ["a", "b"], tables)
    assert post.argmax == ["pq"]
    assert post.penalties == {"pq": [0, 0], "qp": [0, 1]}
    post = score_observations(["pq", "qp"], ["b", "a"], tables)
    assert post.argmax == ["qp"]


def test_likelihood_and_normalize():
    assert likelihood(0.0) == 1.0
    assert likelihood(1.0) == 0.5
    assert normalize({"a": 1.0, "b": 3.0}) == pytest.approx({"a": 0.25, "b": 0.75})
    assert normalize({"a": 0.0, "b": 0.0}) == {"a": 0.5, "b": 0.5}


def test_empty_observations_rejected(example2):
    problem, tables = example2
    with pytest.raises(RecognitionError):
        score_observations(["phi0"], [], tables)
    empty = RecognitionProblem(problem.hypotheses, [], problem.domain, problem.problem)
    with pytest.raises(RecognitionError):
        recognize_offline(empty, tables)


def test_problem_validation():
    h = Hypothesis.parse("g", "F a", executions=(("(a)",),))
    with pytest.raises(RecognitionError):
        RecognitionProblem([], ["(a)"])
    with pytest.raises(RecognitionError):
        RecognitionProblem([h, h], ["(a)"])
    with pytest.raises(RecognitionError):
        RecognitionProblem([h], ["(a)"], true_goal="nope")
    with pytest.raises(RecognitionError):
        RecognitionProblem([Hypothesis.parse("g", "F a")], ["(a)"])
    assert RecognitionProblem([h], ["a"]).observations == ["(a)"]


# ---------------------------------------------------------------- planner-backed tables

def test_planned_table_for_running_example(triangle):
    d, p = triangle
    t = goal_table(Hypothesis.parse("g", "F vAt(22)"), d, p)
    assert t.solvable and t.warning is None
    assert sorted(t.executions) == sorted([E0, E1])
    assert dict(t.distances) == pytest.approx({"(move 11 21)": 1.5, "(changetire 21)": 1.0, "(move 21 22)": 0.0})


def test_unsolvable_goal_scores_with_miss_distances(triangle):
    d, p = triangle
    t = goal_table(Hypothesis.parse("g", "F (vAt(21) & vAt(22))"), d, p)
    assert not t.solvable and "unsolvable" in t.warning
    assert t.distance("(move 11 21)") == MISS_DISTANCE == MISS


def test_past_goal_is_recognized_from_planned_tables():
    d, p = bundled_task("triangle-tireworld")
    hyps = [Hypothesis.parse("past", "O vAt(22)"), Hypothesis.parse("other", "O vAt(31)")]
    problem = RecognitionProblem(hyps, ["(move 11 21)", "(move 21 22)"], d, p)
    post = recognize_offline(problem)
    assert post.argmax == ["past"]
