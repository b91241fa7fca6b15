"""Command-line front end.

Exit codes: 0 success, 2 formula/usage error or empty observations,
3 PDDL error or missing file, 4 unsolvable task, 5 resource cap exceeded.
The automaton state cap can be overridden with TEGR_STATE_CAP.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .automata import DEFAULT_MAX_STATES, AutomatonError, StateBudgetExceeded
from .compiler import CompilationError, compile
from .datasets import FAMILIES, LEVELS, DatasetError, bundled_domains, generate_dataset, resolve_path
from .logic import FormulaError, parse_formula
from .pddl import PddlError, ground, parse_domain, parse_problem, print_domain, print_problem
from .planner import (
    ExecutionCapExceeded,
    StateSpaceTooLarge,
    enumerate_executions,
    executions_to_json,
    solve_strong,
    solve_strong_cyclic,
    validate,
)
from .recognizer import RecognitionError, build_tables, load_problem, recognize_offline, recognize_online

EXIT_OK, EXIT_USAGE, EXIT_PDDL, EXIT_UNSOLVABLE, EXIT_LIMIT = 0, 2, 3, 4, 5
STATE_CAP_ENV = "TEGR_STATE_CAP"

log = logging.getLogger("tegr")


class Unsolvable(Exception):
    pass


def state_cap() -> int:
    raw = os.environ.get(STATE_CAP_ENV)
    if not raw:
        return DEFAULT_MAX_STATES
    try:
        cap = int(raw)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{STATE_CAP_ENV} must be an integer, got {raw!r}") from None
    if cap < 1:
        raise argparse.ArgumentTypeError(f"{STATE_CAP_ENV} must be positive")
    return cap


def _read(path: str) -> str:
    return resolve_path(path, Path.cwd()).read_text()


def _dump(obj, out: str | None) -> None:
    text = json.dumps(obj, indent=1) + "\n"
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _load_task(args):
    domain = parse_domain(_read(args.domain))
    problem = parse_problem(_read(args.problem))
    return domain, problem


def cmd_compile(args) -> int:
    domain, problem = _load_task(args)
    phi = parse_formula(args.goal, args.dialect)
    cp = compile(domain, problem, phi, args.dialect, lifted=not args.ground_only, max_states=state_cap())
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    dpath, ppath = out / "domain.pddl", out / "problem.pddl"
    dpath.write_text(print_domain(cp.domain))
    ppath.write_text(print_problem(cp.problem))
    print(dpath)
    print(ppath)
    return EXIT_OK


def cmd_plan(args) -> int:
    domain, problem = _load_task(args)
    if args.goal:
        cp = compile(domain, problem, parse_formula(args.goal, args.dialect), args.dialect, max_states=state_cap())
        domain, problem = cp.domain, cp.problem
    model = ground(domain, problem)
    policy = solve_strong(model) if args.mode == "strong" else solve_strong_cyclic(model)
    if policy is None:
        raise Unsolvable(f"no {args.mode} policy exists for {problem.name}")
    if not validate(model, policy, args.mode):  # pragma: no cover - planner invariant
        raise Unsolvable("planner returned an invalid policy")
    _dump(policy.to_json(model), args.output)
    if args.executions:
        execs = enumerate_executions(model, policy, loop_bound=args.loop_bound)
        Path(args.executions).write_text(json.dumps(executions_to_json(execs), indent=1) + "\n")
    return EXIT_OK


def cmd_recognize(args) -> int:
    problem = load_problem(args.problem)
    if args.level is not None:
        data = json.loads(Path(args.problem).read_text())
        obs = data.get("observations", {})
        if not isinstance(obs, dict) or str(args.level) not in obs:
            raise RecognitionError(f"problem file has no observations for level {args.level}")
        problem = load_problem(args.problem, obs[str(args.level)])
    if not problem.observations:
        raise RecognitionError("empty observation sequence")
    tables = build_tables(problem, jobs=args.jobs, max_states=state_cap())
    if args.online:
        steps = recognize_online(problem, tables)
        result = {"mode": "online", "true_goal": problem.true_goal, "steps": [s.to_json() for s in steps]}
        if problem.true_goal is not None:
            from .metrics import ranked_first
            result["ranked_first"] = ranked_first(steps, problem.true_goal)
    else:
        post = recognize_offline(problem, tables)
        result = {"mode": "offline", "true_goal": problem.true_goal, **post.to_json()}
    _dump(result, args.output)
    return EXIT_OK


def cmd_eval(args) -> int:
    from .datasets import Dataset
    from .evaluate import evaluate_dataset

    path = resolve_path(args.dataset, Path.cwd())
    ds = Dataset.load(path)
    metrics, table = evaluate_dataset(ds, base=path.parent, jobs=args.jobs)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "metrics.json").write_text(json.dumps(metrics, indent=1, sort_keys=True) + "\n")
    (out / "table.txt").write_text(table)
    sys.stdout.write(table)
    return EXIT_OK


def cmd_generate(args) -> int:
    ds = generate_dataset(args.domains, args.families, args.count, args.seed, levels=args.levels, jobs=args.jobs)
    Path(args.output).write_text(ds.dumps())
    print(f"{len(ds.problems)} problems written to {args.output}")
    return EXIT_OK


def _levels(text: str) -> list[int]:
    try:
        levels = [int(x) for x in text.split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid level list {text!r}") from None
    bad = [lv for lv in levels if lv not in LEVELS]
    if bad or not levels:
        raise argparse.ArgumentTypeError(f"levels must be a non-empty subset of {LEVELS}")
    return levels


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tegr", description="Recognize temporally extended goals in FOND domains.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("compile", help="compile an LTLf/PPLTL goal into a FOND task")
    c.add_argument("domain")
    c.add_argument("problem")
    c.add_argument("--goal", required=True, help='goal formula, e.g. "F vAt(51)"')
    c.add_argument("--dialect", choices=("ltlf", "ppltl"))
    c.add_argument("--out-dir", default=".")
    c.add_argument("--ground-only", action="store_true", help="skip lifting the automaton")
    c.set_defaults(func=cmd_compile)

    pl = sub.add_parser("plan", help="compute a strong-cyclic or strong policy")
    pl.add_argument("domain")
    pl.add_argument("problem")
    pl.add_argument("--mode", choices=("strong-cyclic", "strong"), default="strong-cyclic")
    pl.add_argument("--goal", help="optional temporal goal to compile in first")
    pl.add_argument("--dialect", choices=("ltlf", "ppltl"))
    pl.add_argument("-o", "--output", default="-")
    pl.add_argument("--executions", help="also write the policy's executions to this file")
    pl.add_argument("--loop-bound", type=int, default=1)
    pl.set_defaults(func=cmd_plan)

    r = sub.add_parser("recognize", help="rank goal hypotheses given observations")
    r.add_argument("problem", help="recognition problem JSON")
    r.add_argument("--online", action="store_true", help="rank after every observation prefix")
    r.add_argument("--level", type=int, choices=LEVELS, help="observability level to read from the file")
    r.add_argument("-o", "--output", default="-")
    r.add_argument("--jobs", type=int, default=1)
    r.set_defaults(func=cmd_recognize)

    e = sub.add_parser("eval", help="evaluate a dataset; writes metrics.json and table.txt")
    e.add_argument("dataset")
    e.add_argument("--out-dir", default=".")
    e.add_argument("--jobs", type=int, default=1)
    e.add_argument("--seed", type=int, default=0, help="accepted for symmetry; evaluation is deterministic")
    e.set_defaults(func=cmd_eval)

    g = sub.add_parser("generate", help="generate a recognition dataset from bundled domains")
    g.add_argument("--domains", nargs="+", default=["triangle-tireworld"], choices=bundled_domains())
    g.add_argument("--families", nargs="+", default=["eventually"], choices=FAMILIES)
    g.add_argument("--count", type=int, default=10)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--levels", type=_levels, default=list(LEVELS))
    g.add_argument("-o", "--output", required=True)
    g.add_argument("--jobs", type=int, default=1)
    g.set_defaults(func=cmd_generate)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (FormulaError, CompilationError, RecognitionError, DatasetError, argparse.ArgumentTypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (PddlError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PDDL
    except Unsolvable as exc:
        print(f"unsolvable: {exc}", file=sys.stderr)
        return EXIT_UNSOLVABLE
    except (StateBudgetExceeded, StateSpaceTooLarge, ExecutionCapExceeded, AutomatonError) as exc:
        print(f"limit exceeded: {exc}", file=sys.stderr)
        return EXIT_LIMIT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
