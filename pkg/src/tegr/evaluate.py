"""Batch evaluation of a recognition dataset."""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .datasets import Dataset, DatasetProblem, resolve_path
from .metrics import Outcome, format_table, metric_rates
from .pddl import parse_domain, parse_problem
from .recognizer import Hypothesis, RecognitionProblem, build_tables, score_observations


def evaluate_problem(dp: DatasetProblem, base: Path | None = None) -> list[dict]:
    """Recognize one problem at every observability level it carries."""
    domain = parse_domain(resolve_path(dp.domain_file, base).read_text())
    problem = parse_problem(resolve_path(dp.problem_file, base).read_text())
    hyps = [Hypothesis.parse(h["id"], h["formula"], h.get("dialect")) for h in dp.hypotheses]
    rp = RecognitionProblem(hyps, [], domain, problem, dp.true_goal)
    t0 = time.perf_counter()
    tables = build_tables(rp)
    setup = time.perf_counter() - t0
    goals = [h.id for h in hyps]
    out = []
    for level in sorted(dp.observations, key=int):
        obs = dp.observations[level]
        t1 = time.perf_counter()
        post = score_observations(goals, obs, tables)
        out.append({
            "problem": dp.id,
            "domain": dp.domain,
            "family": dp.family,
            "level": int(level),
            "hypotheses": len(goals),
            "observations": len(obs),
            "true_goal": dp.true_goal,
            "argmax": post.argmax,
            "posterior": post.posterior,
            "time": setup + time.perf_counter() - t1,
        })
    return out


def _job(args):
    return evaluate_problem(*args)


def evaluate_dataset(ds: Dataset, base: Path | None = None, jobs: int = 1) -> tuple[dict, str]:
    """Metrics JSON (timing-free, so reproducible byte for byte) and the text table."""
    args = [(p, base) for p in ds.problems]
    if jobs > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            per_problem = list(pool.map(_job, args))
    else:
        per_problem = [_job(a) for a in args]
    records = [r for rs in per_problem for r in rs]

    groups: dict[tuple[str, str, int], list[dict]] = {}
    for r in records:
        groups.setdefault((r["domain"], r["family"], r["level"]), []).append(r)
        groups.setdefault(("all", "all", r["level"]), []).append(r)

    rows = []
    for (dom, fam, level), rs in sorted(groups.items(), key=lambda kv: (kv[0][0] == "all", kv[0])):
        m = metric_rates(Outcome(r["true_goal"], frozenset(r["argmax"]), r["hypotheses"]) for r in rs)
        rows.append({
            "domain": dom, "family": fam, "level": level, "problems": len(rs),
            "hypotheses": sum(r["hypotheses"] for r in rs) / len(rs),
            "observations": sum(r["observations"] for r in rs) / len(rs),
            "time": sum(r["time"] for r in rs) / len(rs),
            **m.to_json(),
        })
    metrics = {
        "seed": ds.seed,
        "rows": [{k: v for k, v in row.items() if k != "time"} for row in rows],
        "problems": [{k: v for k, v in r.items() if k != "time"} for r in records],
    }
    return metrics, format_table(rows)


__all__ = ["evaluate_problem", "evaluate_dataset"]
