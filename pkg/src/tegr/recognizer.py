"""Probabilistic recognition of temporally extended goals from observed actions.

For every hypothesis the goal is compiled into the domain, a strong-cyclic
policy is computed and its executions are enumerated.  Observations are then
scored by how far each observed action is from achieving each goal, relative
to the other hypotheses, with a penalty when consecutive observations never
appear in that order in any execution.  Scores become likelihoods
``1/(1+E)`` and are normalized with the priors.
"""

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .logic import Formula, parse_formula
from .pddl import DomainModel, ProblemModel, ground, normalize_action

log = logging.getLogger(__name__)

MISS_DISTANCE = math.exp(5)


class RecognitionError(Exception):
    pass


@dataclass(frozen=True)
class Hypothesis:
    """A goal hypothesis.

    ``executions`` (action-label sequences) or ``policy_file`` (JSON policy
    for the compiled task) may be supplied to bypass the built-in planner.
    """

    id: str
    formula: Formula
    dialect: str | None = None
    executions: tuple[tuple[str, ...], ...] | None = None
    policy_file: str | None = None

    @classmethod
    def parse(cls, id: str, text: str, dialect: str | None = None, **kw) -> "Hypothesis":
        return cls(id, parse_formula(text, dialect), dialect, **kw)


@dataclass
class RecognitionProblem:
    hypotheses: list[Hypothesis]
    observations: list[str]
    domain: DomainModel | None = None
    problem: ProblemModel | None = None
    true_goal: str | None = None
    priors: dict[str, float] | None = None
    loop_bound: int = 1

    def __post_init__(self):
        if not self.hypotheses:
            raise RecognitionError("at least one goal hypothesis is required")
        ids = [h.id for h in self.hypotheses]
        if len(set(ids)) != len(ids):
            raise RecognitionError("duplicate hypothesis ids")
        if self.true_goal is not None and self.true_goal not in ids:
            raise RecognitionError(f"true goal {self.true_goal!r} is not a hypothesis")
        self.observations = [normalize_action(o) for o in self.observations]
        if self.domain is None or self.problem is None:
            if any(h.executions is None for h in self.hypotheses):
                raise RecognitionError("hypotheses without executions need a domain and problem")


@dataclass(frozen=True)
class GoalTable:
    """Per-hypothesis statistics over its policy's executions."""

    goal: str
    executions: tuple[tuple[str, ...], ...]
    distances: Mapping[str, float]
    order: frozenset[tuple[str, str]]
    solvable: bool = True
    warning: str | None = None

    def distance(self, action: str) -> float:
        return self.distances.get(action, MISS_DISTANCE)


# ---------------------------------------------------------------- primitives

def average_distances(executions: Iterable[Sequence[str]]) -> dict[str, float]:
    """Mean number of actions remaining after each occurrence of every action."""
    total: dict[str, float] = {}
    count: dict[str, int] = {}
    empty = True
    for ex in executions:
        empty = False
        n = len(ex)
        for i, a in enumerate(ex):
            total[a] = total.get(a, 0.0) + (n - 1 - i)
            count[a] = count.get(a, 0) + 1
    if empty:
        raise RecognitionError("average distances need at least one execution")
    return {a: total[a] / count[a] for a in total}


def order_relation(executions: Iterable[Sequence[str]]) -> frozenset[tuple[str, str]]:
    """All pairs (a, b) with a occurring strictly before b in some execution."""
    pairs: set[tuple[str, str]] = set()
    for ex in executions:
        for i, a in enumerate(ex):
            for b in ex[i + 1:]:
                pairs.add((a, b))
    return frozenset(pairs)


def penalty(o_prev: str | None, o_curr: str, order: frozenset[tuple[str, str]]) -> int:
    if o_prev is None:
        return 0
    return 0 if (o_prev, o_curr) in order else 1


def estimated_score(goal: str, o_prev: str | None, o_curr: str, tables: Mapping[str, GoalTable]) -> float:
    """Penalized distance of ``o_curr`` to ``goal`` relative to all hypotheses."""
    denom = sum(t.distance(o_curr) for t in tables.values())
    if denom == 0:
        return 0.0
    t = tables[goal]
    return math.exp(penalty(o_prev, o_curr, t.order)) * t.distance(o_curr) / denom


def average_estimated_score(goal: str, observations: Sequence[str], tables: Mapping[str, GoalTable]) -> float:
    if not observations:
        raise RecognitionError("empty observation sequence")
    total = 0.0
    prev = None
    for o in observations:
        total += estimated_score(goal, prev, o, tables)
        prev = o
    return total / len(observations)


def likelihood(score: float) -> float:
    return 1.0 / (1.0 + score)


def normalize(values: Mapping[str, float], priors: Mapping[str, float] | None = None) -> dict[str, float]:
    """Posterior proportional to likelihood times prior (uniform by default)."""
    if priors is None:
        priors = {g: 1.0 / len(values) for g in values}
    joint = {g: values[g] * priors[g] for g in values}
    z = sum(joint.values())
    if z <= 0:
        return {g: 1.0 / len(values) for g in values}
    return {g: v / z for g, v in joint.items()}


def argmax_set(post: Mapping[str, float], tol: float = 1e-12) -> list[str]:
    best = max(post.values())
    return [g for g, v in post.items() if v >= best - tol]


# ---------------------------------------------------------------- results

@dataclass
class Posterior:
    goals: list[str]
    likelihood: dict[str, float]
    prior: dict[str, float]
    posterior: dict[str, float]
    score: dict[str, float]
    observation_scores: dict[str, list[float]]
    penalties: dict[str, list[int]]
    observations: list[str]
    warnings: list[str] = field(default_factory=list)

    @property
    def argmax(self) -> list[str]:
        return argmax_set(self.posterior)

    @property
    def ranking(self) -> list[str]:
        order = {g: i for i, g in enumerate(self.goals)}
        return sorted(self.goals, key=lambda g: (-self.posterior[g], order[g]))

    def to_json(self) -> dict:
        return {
            "observations": self.observations,
            "argmax": self.argmax,
            "ranking": self.ranking,
            "goals": {
                g: {
                    "likelihood": self.likelihood[g],
                    "prior": self.prior[g],
                    "posterior": self.posterior[g],
                    "score": self.score[g],
                    "observation_scores": self.observation_scores[g],
                    "penalties": self.penalties[g],
                }
                for g in self.goals
            },
            "warnings": self.warnings,
        }


@dataclass
class StepRanking:
    step: int
    posterior: Posterior

    @property
    def ranking(self) -> list[str]:
        return self.posterior.ranking

    @property
    def argmax(self) -> list[str]:
        return self.posterior.argmax

    def to_json(self) -> dict:
        return {"step": self.step, "observation": self.posterior.observations[-1], "ranking": self.ranking,
                "argmax": self.argmax, "posterior": self.posterior.posterior}


# ---------------------------------------------------------------- tables

def _table_from_executions(goal: str, execs: Sequence[Sequence[str]], warning: str | None = None) -> GoalTable:
    execs = tuple(tuple(normalize_action(a) for a in ex) for ex in execs)
    if not execs:
        return GoalTable(goal, (), {}, frozenset(), False, warning or f"goal {goal} has no executions")
    return GoalTable(goal, execs, average_distances(execs), order_relation(execs), True, warning)


def goal_table(h: Hypothesis, domain: DomainModel | None, problem: ProblemModel | None,
               loop_bound: int = 1, max_states: int | None = None) -> GoalTable:
    """Compile, plan and enumerate for one hypothesis."""
    if h.executions is not None:
        return _table_from_executions(h.id, h.executions)
    from .automata import DEFAULT_MAX_STATES
    from .compiler import compile, strip
    from .planner import Policy, enumerate_executions, solve_strong_cyclic

    cp = compile(domain, problem, h.formula, h.dialect, max_states=max_states or DEFAULT_MAX_STATES)
    model = ground(cp.domain, cp.problem)
    if h.policy_file is not None:
        policy = Policy.from_json(model, json.loads(Path(h.policy_file).read_text()))
    else:
        policy = solve_strong_cyclic(model)
    if policy is None:
        msg = f"goal {h.id} is unsolvable from the initial state; scored with miss distances"
        return GoalTable(h.id, (), {}, frozenset(), False, msg)
    execs = enumerate_executions(model, policy, loop_bound=loop_bound)
    return _table_from_executions(h.id, [strip(e.actions, cp.trans_name) for e in execs])


def _goal_table_job(args):
    return goal_table(*args)


def build_tables(problem: RecognitionProblem, jobs: int = 1, max_states: int | None = None) -> dict[str, GoalTable]:
    args = [(h, problem.domain, problem.problem, problem.loop_bound, max_states) for h in problem.hypotheses]
    if jobs > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            tables = list(pool.map(_goal_table_job, args))
    else:
        tables = [_goal_table_job(a) for a in args]
    for t in tables:
        if t.warning:
            log.warning(t.warning)
    return {t.goal: t for t in tables}


# ---------------------------------------------------------------- drivers

def score_observations(goals: Sequence[str], observations: Sequence[str], tables: Mapping[str, GoalTable],
                       priors: Mapping[str, float] | None = None) -> Posterior:
    observations = [normalize_action(o) for o in observations]
    if not observations:
        raise RecognitionError("empty observation sequence")
    obs_scores: dict[str, list[float]] = {}
    pens: dict[str, list[int]] = {}
    for g in goals:
        prev = None
        row, prow = [], []
        for o in observations:
            row.append(estimated_score(g, prev, o, tables))
            prow.append(penalty(prev, o, tables[g].order))
            prev = o
        obs_scores[g], pens[g] = row, prow
    score = {g: sum(obs_scores[g]) / len(observations) for g in goals}
    lik = {g: likelihood(score[g]) for g in goals}
    if priors is None:
        prior = {g: 1.0 / len(goals) for g in goals}
    else:
        z = sum(priors[g] for g in goals)
        prior = {g: priors[g] / z for g in goals}
    post = normalize(lik, prior)
    warnings = [tables[g].warning for g in goals if tables[g].warning]
    return Posterior(list(goals), lik, prior, post, score, obs_scores, pens, list(observations), warnings)


def recognize_offline(problem: RecognitionProblem, tables: Mapping[str, GoalTable] | None = None,
                      jobs: int = 1) -> Posterior:
    """Rank hypotheses given the whole observation sequence at once."""
    if not problem.observations:
        raise RecognitionError("empty observation sequence")
    tables = tables or build_tables(problem, jobs)
    goals = [h.id for h in problem.hypotheses]
    return score_observations(goals, problem.observations, tables, problem.priors)


def recognize_online(problem: RecognitionProblem, tables: Mapping[str, GoalTable] | None = None,
                     jobs: int = 1) -> list[StepRanking]:
    """One ranking per observation prefix; tables are built once and reused."""
    if not problem.observations:
        raise RecognitionError("empty observation sequence")
    tables = tables or build_tables(problem, jobs)
    goals = [h.id for h in problem.hypotheses]
    return [StepRanking(k, score_observations(goals, problem.observations[:k], tables, problem.priors))
            for k in range(1, len(problem.observations) + 1)]


# ---------------------------------------------------------------- problem files

def load_problem(path: str | Path, observations: Sequence[str] | None = None) -> RecognitionProblem:
    """Read a recognition problem JSON file.

    Keys: ``domain_file``, ``problem_file`` (paths relative to the JSON file
    or ``bundled:<domain>/<file>``), ``hypotheses`` (``id``, ``formula``,
    optional ``dialect``, ``executions``, ``policy_file``), ``observations``
    (a list, or a map from observability level to list), optional
    ``true_goal``, ``priors`` and ``loop_bound``.
    """
    from .datasets import resolve_path
    from .pddl import parse_domain, parse_problem

    path = Path(path)
    data = json.loads(path.read_text())
    base = path.parent
    domain = problem = None
    if data.get("domain_file"):
        domain = parse_domain(resolve_path(data["domain_file"], base).read_text())
        problem = parse_problem(resolve_path(data["problem_file"], base).read_text())
    hyps = []
    for h in data["hypotheses"]:
        execs = h.get("executions")
        pf = h.get("policy_file")
        hyps.append(Hypothesis.parse(
            h["id"], h["formula"], h.get("dialect"),
            executions=tuple(tuple(e) for e in execs) if execs is not None else None,
            policy_file=str(resolve_path(pf, base)) if pf else None))
    if observations is None:
        obs = data.get("observations", [])
        if isinstance(obs, dict):
            obs = obs.get("100", [])
        observations = obs
    return RecognitionProblem(hyps, list(observations), domain, problem, data.get("true_goal"),
                              data.get("priors"), int(data.get("loop_bound", 1)))


__all__ = [
    "MISS_DISTANCE", "Hypothesis", "RecognitionProblem", "RecognitionError", "GoalTable", "Posterior",
    "StepRanking", "average_distances", "order_relation", "penalty", "estimated_score",
    "average_estimated_score", "likelihood", "normalize", "argmax_set", "goal_table", "build_tables",
    "score_observations", "recognize_offline", "recognize_online", "load_problem",
]
