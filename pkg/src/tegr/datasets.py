"""Goal templates, observation sampling and recognition dataset generation."""

from __future__ import annotations

import json
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Sequence

from .logic import Atom, Formula, eventually, land, lnot, next_, once, since, until

LEVELS = (10, 30, 50, 70, 100)
BUNDLED_PREFIX = "bundled:"

FAMILIES = ("conjunctive", "eventually", "ordered-eventually", "until", "once", "since")
FAMILY_SLOTS = {
    "conjunctive": (1, 2),
    "eventually": (1, 2),
    "ordered-eventually": (2,),
    "until": (2,),
    "once": (2,),
    "since": (3,),
}
# conjunctive goals are plain reachability: the propositions must hold at the end of the trace
FAMILY_DIALECT = {
    "conjunctive": "ppltl",
    "eventually": "ltlf",
    "ordered-eventually": "ltlf",
    "until": "ltlf",
    "once": "ppltl",
    "since": "ppltl",
}


class DatasetError(Exception):
    pass


@dataclass(frozen=True)
class GoalTemplate:
    family: str
    slots: int

    def __post_init__(self):
        if self.family not in FAMILY_SLOTS:
            raise DatasetError(f"unknown template family {self.family!r}")
        if self.slots not in FAMILY_SLOTS[self.family]:
            raise DatasetError(f"family {self.family} takes {FAMILY_SLOTS[self.family]} slots, not {self.slots}")

    @property
    def dialect(self) -> str:
        return FAMILY_DIALECT[self.family]


def _as_formula(x) -> Formula:
    if isinstance(x, Formula):
        return x
    if isinstance(x, Atom):
        return Formula("atom", atom=x)
    return Formula("atom", atom=Atom.parse(str(x)))


def instantiate_template(t: GoalTemplate | str, bindings: Sequence) -> Formula:
    """Ground formula of the template family; slots are formulas, atoms or atom text."""
    if isinstance(t, str):
        t = GoalTemplate(t, len(bindings))
    if len(bindings) != t.slots:
        raise DatasetError(f"template {t.family} expects {t.slots} bindings, got {len(bindings)}")
    s = [_as_formula(b) for b in bindings]
    fam = t.family
    if fam == "conjunctive":
        return land(*s)
    if fam == "eventually":
        return eventually(land(*s))
    if fam == "ordered-eventually":
        return eventually(land(s[0], next_(eventually(s[1]))))
    if fam == "until":
        return until(s[0], s[1])
    if fam == "once":
        return land(s[0], once(s[1]))
    return land(s[0], since(lnot(s[1]), s[2]))


def sample_size(n: int, level: int) -> int:
    """round-half-up(level * n / 100), at least 1."""
    return max(1, (2 * level * n + 100) // 200)


def sample_observations(execution: Sequence[str], level: int, seed: int | str | random.Random = 0) -> list[str]:
    """Order-preserving random subsequence keeping ``level`` percent of the actions."""
    if not execution:
        raise DatasetError("cannot sample observations from an empty execution")
    if not 0 < level <= 100:
        raise DatasetError(f"observability level must be in (0, 100], got {level}")
    if level == 100:
        return list(execution)
    rng = seed if isinstance(seed, random.Random) else random.Random(seed)
    k = sample_size(len(execution), level)
    keep = sorted(rng.sample(range(len(execution)), k))
    return [execution[i] for i in keep]


# ---------------------------------------------------------------- bundled resources

def bundled_domains() -> list[str]:
    root = resources.files("tegr") / "domains"
    return sorted(p.name for p in root.iterdir() if (p / "domain.pddl").is_file())


def bundled_path(name: str) -> Path:
    p = Path(str(resources.files("tegr") / "domains" / name))
    if not p.exists():
        raise FileNotFoundError(f"no bundled resource {name!r}")
    return p


def resolve_path(ref: str, base: Path | None = None) -> Path:
    """Resolve ``bundled:<domain>/<file>`` or a path relative to ``base``."""
    if ref.startswith(BUNDLED_PREFIX):
        return bundled_path(ref[len(BUNDLED_PREFIX):])
    p = Path(ref)
    if not p.is_absolute() and base is not None:
        p = base / p
    if not p.exists():
        raise FileNotFoundError(f"file not found: {p}")
    return p


def domain_catalog(domain: str) -> dict:
    """The bundled ``goals.json``.

    Keys: ``problem`` (problem file), ``atoms`` (candidate goal atoms),
    optional ``pools`` (per-family atom lists) and ``ordered_swaps`` (false
    when no pair of atoms can be reached in both orders).
    """
    return json.loads(bundled_path(f"{domain}/goals.json").read_text())


# ---------------------------------------------------------------- generation

@dataclass
class DatasetProblem:
    id: str
    domain: str
    family: str
    domain_file: str
    problem_file: str
    hypotheses: list[dict]
    true_goal: str
    observations: dict[str, list[str]]
    seed: int
    execution: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "domain": self.domain,
            "family": self.family,
            "domain_file": self.domain_file,
            "problem_file": self.problem_file,
            "hypotheses": self.hypotheses,
            "true_goal": self.true_goal,
            "observations": self.observations,
            "seed": self.seed,
            "execution": self.execution,
        }

    @classmethod
    def from_json(cls, d: dict) -> "DatasetProblem":
        return cls(d["id"], d.get("domain", ""), d.get("family", ""), d["domain_file"], d["problem_file"],
                   d["hypotheses"], d["true_goal"], {str(k): v for k, v in d["observations"].items()},
                   int(d.get("seed", 0)), d.get("execution", []))


@dataclass
class Dataset:
    problems: list[DatasetProblem]
    seed: int = 0

    def to_json(self) -> dict:
        return {"seed": self.seed, "levels": list(LEVELS), "problems": [p.to_json() for p in self.problems]}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1, sort_keys=False) + "\n"

    @classmethod
    def from_json(cls, d: dict) -> "Dataset":
        return cls([DatasetProblem.from_json(p) for p in d["problems"]], int(d.get("seed", 0)))

    @classmethod
    def load(cls, path: str | Path) -> "Dataset":
        return cls.from_json(json.loads(Path(path).read_text()))


def _split_initial(pool: list[str], initial: frozenset[str]) -> tuple[list[str], list[str]]:
    held = sorted(a for a in pool if a in initial)
    rest = sorted(a for a in pool if a not in initial)
    if not held or len(rest) < 2:
        raise DatasetError("until goals need initially true and initially false pool atoms")
    return held, rest


def _hypothesis_slots(family: str, pool: list[str], rng: random.Random,
                      initial: frozenset[str] = frozenset()) -> list[tuple[str, ...]]:
    """Four similar slot tuples; ordered families come in order-swapped pairs.

    ``p U q`` needs ``p`` or ``q`` at the start, so ``until`` pairs an
    initially true atom with one that is not.
    """
    if family == "eventually":
        return [(a,) for a in rng.sample(pool, 4)]
    if family == "conjunctive":
        a, b, c, d = rng.sample(pool, 4)
        return [(a, b), (a, c), (b, d), (c, d)]
    if family == "since":
        a, b, c, d, e = rng.sample(pool, 5)
        return [(a, b, c), (c, b, a), (d, e, c), (c, e, d)]
    if family == "until":
        held, rest = _split_initial(pool, initial)
        p, q = rng.choice(held), rng.choice(held)
        r, t = rng.sample(rest, 2)
        return [(p, r), (r, p), (q, t), (t, q)]
    a, b, c, d = rng.sample(pool, 4)
    return [(a, b), (b, a), (c, d), (d, c)]


def _random_slot(family: str, pool: list[str], rng: random.Random,
                 initial: frozenset[str] = frozenset()) -> tuple[str, ...]:
    """A single slot tuple of the family, for hypotheses collected one at a time."""
    if family == "until":
        held, rest = _split_initial(pool, initial)
        return (rng.choice(held), rng.choice(rest))
    if family == "eventually":
        return (rng.choice(pool),)
    return tuple(rng.sample(pool, max(FAMILY_SLOTS[family])))


def hypothesis_set(family: str, slots: Sequence[tuple[str, ...]]) -> list[dict]:
    out = []
    for i, s in enumerate(slots):
        f = instantiate_template(GoalTemplate(family, len(s)), list(s))
        out.append({"id": f"g{i}", "dialect": FAMILY_DIALECT[family], "formula": str(f)})
    return out


def generate_problem(domain: str, family: str, seed: int, index: int, *, budget: int = 200,
                     levels: Sequence[int] = LEVELS) -> DatasetProblem:
    """One recognition problem whose hypotheses are all strong-cyclic solvable."""
    from .pddl import parse_domain, parse_problem
    from .recognizer import Hypothesis, goal_table

    if family not in FAMILIES:
        raise DatasetError(f"unknown template family {family!r}")
    cat = domain_catalog(domain)
    dfile = f"{BUNDLED_PREFIX}{domain}/domain.pddl"
    pfile = f"{BUNDLED_PREFIX}{domain}/{cat['problem']}"
    dm = parse_domain(resolve_path(dfile).read_text())
    pm = parse_problem(resolve_path(pfile).read_text())
    rng = random.Random(f"{seed}:{domain}:{family}:{index}")
    pool = list(cat.get("pools", {}).get(family, cat["atoms"]))
    initial = frozenset(str(a) for a in pm.init)
    cache: dict[str, object] = {}

    def table(formula: str):
        if formula not in cache:
            h = Hypothesis.parse("g", formula, FAMILY_DIALECT[family])
            cache[formula] = goal_table(h, dm, pm)
        return cache[formula]

    def finish(hyps: list[dict]) -> DatasetProblem | None:
        candidates = [h for h in hyps if any(table(h["formula"]).executions)]
        if not candidates:
            return None
        true = rng.choice(candidates)
        ex = list(rng.choice([e for e in table(true["formula"]).executions if e]))
        obs = {str(lv): sample_observations(ex, lv, rng) for lv in levels}
        return DatasetProblem(f"{domain}-{family}-{index:03d}", domain, family, dfile, pfile, hyps, true["id"],
                              obs, seed, ex)

    # first try sets with order-swapped pairs; catalogs of one-way domains opt out
    swaps = family == "until" or cat.get("ordered_swaps", True)
    for _ in range(budget // 4 if swaps else 0):
        hyps = hypothesis_set(family, _hypothesis_slots(family, pool, rng, initial))
        if all(table(h["formula"]).solvable for h in hyps):
            done = finish(hyps)
            if done is not None:
                return done
    # then collect solvable hypotheses one at a time
    slots: list[tuple[str, ...]] = []
    seen: set[tuple[str, ...]] = set()
    for _ in range(budget):
        s = _random_slot(family, pool, rng, initial)
        if s in seen:
            continue
        seen.add(s)
        if table(hypothesis_set(family, [s])[0]["formula"]).solvable:
            slots.append(s)
        if len(slots) == 4:
            done = finish(hypothesis_set(family, slots))
            if done is not None:
                return done
            slots.pop(0)
    raise DatasetError(f"resample budget exhausted for {domain}/{family} problem {index}")


def _generate_job(args, levels):
    return generate_problem(*args, levels=levels)


def generate_dataset(domains: Sequence[str] | str, families: Sequence[str] | str, count: int, seed: int, *,
                     levels: Sequence[int] = LEVELS, jobs: int = 1) -> Dataset:
    domains = [domains] if isinstance(domains, str) else list(domains)
    families = [families] if isinstance(families, str) else list(families)
    args = [(d, f, seed, i) for d in domains for f in families for i in range(count)]
    if jobs > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            problems = list(pool.map(_generate_job, args, [tuple(levels)] * len(args)))
    else:
        problems = [_generate_job(a, tuple(levels)) for a in args]
    return Dataset(problems, seed)


__all__ = [
    "LEVELS", "FAMILIES", "FAMILY_SLOTS", "FAMILY_DIALECT", "GoalTemplate", "DatasetError", "Dataset",
    "DatasetProblem", "instantiate_template", "sample_observations", "sample_size", "generate_problem",
    "generate_dataset", "hypothesis_set", "bundled_domains", "bundled_path", "resolve_path", "domain_catalog",
]
