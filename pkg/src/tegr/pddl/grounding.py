"""Grounding into an explicit FOND model with interned fluents."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

from ..logic import Atom
from .model import (
    ActionSchema,
    And,
    AndEff,
    Condition,
    DomainModel,
    Effect,
    Lit,
    Not,
    OneOf,

    PddlError,
    PddlTypeError,
    ProblemModel,
    When,
    effect_atoms,
)

# A DNF is a tuple of cubes; a cube is (positive, negative) sets.
Cube = tuple[frozenset, frozenset]
Dnf = tuple[Cube, ...]
_EMPTY: frozenset = frozenset()
DNF_TRUE: Dnf = ((_EMPTY, _EMPTY),)
DNF_FALSE: Dnf = ()

State = frozenset  # of interned atom ids


def _dnf_or(x: Dnf, y: Dnf) -> Dnf:
    out = list(x)
    for c in y:
        if c not in out:
            out.append(c)
    return _absorb(out)


def _dnf_and(x: Dnf, y: Dnf) -> Dnf:
    out = []
    for (p1, n1), (p2, n2) in itertools.product(x, y):
        p, n = p1 | p2, n1 | n2
        if p & n:
            continue
        if (p, n) not in out:
            out.append((p, n))
    return _absorb(out)


def _absorb(cubes: list[Cube]) -> Dnf:
    kept: list[Cube] = []
    for c in sorted(cubes, key=lambda c: len(c[0]) + len(c[1])):
        if not any(k[0] <= c[0] and k[1] <= c[1] for k in kept):
            kept.append(c)
    # restore first-seen order among survivors for determinism independent of set iteration
    return tuple(c for c in cubes if c in kept)


def dnf_holds(dnf: Dnf, state: frozenset) -> bool:
    for pos, neg in dnf:
        if pos <= state and not (neg & state):
            return True
    return False


@dataclass(frozen=True)
class CondEffect:
    condition: Dnf
    add: frozenset
    delete: frozenset


@dataclass(frozen=True)
class GroundAction:
    name: str
    args: tuple[str, ...]
    precondition: Dnf
    alternatives: tuple[tuple[CondEffect, ...], ...]

    @property
    def label(self) -> str:
        return "(" + " ".join((self.name,) + self.args) + ")"

    @property
    def deterministic(self) -> bool:
        return len(self.alternatives) == 1

    def __str__(self) -> str:
        return self.label


def action_label(name: str, args: Sequence[str] = ()) -> str:
    return "(" + " ".join((name,) + tuple(args)) + ")"


def normalize_action(text: str) -> str:
    """Canonical label for ``move 11 21``, ``(move 11 21)`` or ``move(11,21)``."""
    t = text.strip()
    if t.startswith("(") and t.endswith(")"):
        t = t[1:-1]
    elif "(" in t and t.endswith(")"):
        head, rest = t.split("(", 1)
        t = head + " " + rest[:-1].replace(",", " ")
    parts = t.split()
    if not parts:
        raise PddlError(f"empty action reference {text!r}")
    return action_label(parts[0], parts[1:])


class InapplicableAction(PddlError):
    pass


@dataclass
class FondModel:
    """Grounded FOND task: fluents, actions, initial state and goal."""

    atoms: tuple[Atom, ...]
    actions: tuple[GroundAction, ...]
    init: State
    goal: Dnf
    name: str = ""
    _succ_cache: dict = field(default_factory=dict, repr=False, compare=False)

    @cached_property
    def index(self) -> dict[Atom, int]:
        return {a: i for i, a in enumerate(self.atoms)}

    @cached_property
    def action_index(self) -> dict[str, int]:
        return {a.label: i for i, a in enumerate(self.actions)}

    def action(self, ref: str | int) -> GroundAction:
        if isinstance(ref, int):
            return self.actions[ref]
        i = self.action_index.get(normalize_action(ref))
        if i is None:
            raise PddlError(f"unknown ground action {ref}")
        return self.actions[i]

    def is_goal(self, s: State) -> bool:
        return dnf_holds(self.goal, s)

    def applicable(self, s: State, a: GroundAction | int) -> bool:
        if isinstance(a, int):
            a = self.actions[a]
        return dnf_holds(a.precondition, s)

    def applicable_actions(self, s: State) -> list[int]:
        return [i for i, a in enumerate(self.actions) if dnf_holds(a.precondition, s)]

    def successors(self, s: State, ai: int) -> tuple[State, ...]:
        """Cached ``apply`` by action id; assumes applicability."""
        key = (s, ai)
        r = self._succ_cache.get(key)
        if r is None:
            r = self._succ_cache[key] = _apply(self.actions[ai], s)
        return r

    def apply(self, s: State, a: GroundAction | int | str) -> tuple[State, ...]:
        if isinstance(a, int):
            a = self.actions[a]
        elif isinstance(a, str):
            a = self.action(a)
        if not dnf_holds(a.precondition, s):
            raise InapplicableAction(f"{a.label} is not applicable")
        return _apply(a, s)

    def state_atoms(self, s: State) -> frozenset[Atom]:
        return frozenset(self.atoms[i] for i in s)

    def state_from_atoms(self, atoms: Iterable[Atom]) -> State:
        ids = set()
        for a in atoms:
            i = self.index.get(a)
            if i is None:
                raise PddlError(f"atom {a} is not a fluent of this task")
            ids.add(i)
        return frozenset(ids)

    def state_text(self, s: State) -> list[str]:
        return sorted(str(self.atoms[i]) for i in s)


def _apply(a: GroundAction, s: State) -> tuple[State, ...]:
    out: list[State] = []
    for alt in a.alternatives:
        add: set = set()
        dele: set = set()
        for ce in alt:
            if dnf_holds(ce.condition, s):
                add |= ce.add
                dele |= ce.delete
        nxt = frozenset((s - dele) | add)
        if nxt not in out:
            out.append(nxt)
    return tuple(out)


# ---------------------------------------------------------------- grounding

class _Types:
    def __init__(self, d: DomainModel, objects: Sequence[tuple[str, str]]):
        self.parent = {t: p for t, p in d.types}
        self.objects = list(objects)
        self.type_of = dict(objects)

    def is_subtype(self, t: str, sup: str) -> bool:
        seen = set()
        while t not in seen:
            if t == sup or sup == "object":
                return True
            seen.add(t)
            t = self.parent.get(t, "object")
        return False

    def of_type(self, t: str) -> list[str]:
        return [o for o, ot in self.objects if self.is_subtype(ot, t)]


def _top_literals(c: Condition) -> list[Lit]:
    if isinstance(c, Lit):
        return [c]
    if isinstance(c, And):
        return [l for a in c.args for l in _top_literals(a)]
    return []


class _Grounder:
    def __init__(self, d: DomainModel, p: ProblemModel):
        self.d, self.p = d, p
        objects: dict[str, str] = {}
        for o, t in tuple(d.constants) + tuple(p.objects):
            if o in objects and objects[o] != t:
                raise PddlTypeError(f"object {o} declared with types {objects[o]} and {t}")
            objects[o] = t
        self.types = _Types(d, list(objects.items()))
        self.preds = {pr.name: pr for pr in d.predicates}
        fluent_preds = set()
        for a in d.actions:
            fluent_preds |= {at.name for at in effect_atoms(a.effect)}
        self.static = {n for n in self.preds if n not in fluent_preds}
        for a in p.init:
            self._check_atom(a, "init")
        self.init_atoms = set(p.init)

    def _check_atom(self, a: Atom, where: str) -> None:
        pr = self.preds.get(a.name)
        if pr is None:
            raise PddlTypeError(f"{where}: undeclared predicate {a.name!r}")
        if len(a.args) != pr.arity:
            raise PddlTypeError(f"{where}: {a} has {len(a.args)} arguments, expected {pr.arity}")
        for arg, (_, t) in zip(a.args, pr.params):
            ot = self.types.type_of.get(arg)
            if ot is None:
                raise PddlTypeError(f"{where}: unknown object {arg!r} in {a}")
            if not self.types.is_subtype(ot, t):
                raise PddlTypeError(f"{where}: object {arg} of type {ot} used where {t} is expected in {a}")

    # conditions -> DNF over Atoms, static atoms evaluated away
    def cond(self, c: Condition, binding: dict[str, str], neg: bool = False) -> Dnf:
        if isinstance(c, Lit):
            a = c.atom.substitute(binding)
            positive = c.positive != neg
            if a.name in self.static:
                return DNF_TRUE if (a in self.init_atoms) == positive else DNF_FALSE
            return ((frozenset({a}), _EMPTY),) if positive else ((_EMPTY, frozenset({a})),)
        if isinstance(c, Not):
            return self.cond(c.arg, binding, not neg)
        conj = isinstance(c, And) != neg
        acc = DNF_TRUE if conj else DNF_FALSE
        for sub in c.args:
            part = self.cond(sub, binding, neg)
            acc = _dnf_and(acc, part) if conj else _dnf_or(acc, part)
            if conj and not acc:
                break
        return acc

    def effect(self, e: Effect, binding: dict[str, str]) -> list[list[tuple[Dnf, frozenset, frozenset]]]:
        if isinstance(e, Lit):
            a = e.atom.substitute(binding)
            return [[(DNF_TRUE, frozenset({a}), _EMPTY) if e.positive else (DNF_TRUE, _EMPTY, frozenset({a}))]]
        if isinstance(e, AndEff):
            alts: list[list] = [[]]
            for sub in e.args:
                alts = [x + y for x in alts for y in self.effect(sub, binding)]
            return alts
        if isinstance(e, OneOf):
            return [alt for sub in e.args for alt in self.effect(sub, binding)]
        if isinstance(e, When):
            c = self.cond(e.condition, binding)
            if not c:
                return [[]]
            (body,) = self.effect(e.effect, binding)
            return [[(_dnf_and(c, ce[0]), ce[1], ce[2]) for ce in body]]
        raise PddlError(f"unknown effect node {e!r}")

    def bindings(self, a: ActionSchema) -> Iterable[dict[str, str]]:
        params = [v for v, _ in a.params]
        domains = [self.types.of_type(t) for _, t in a.params]
        checks: dict[int, list[Lit]] = {}
        pos_of = {v: i for i, v in enumerate(params)}
        for lit in _top_literals(a.precondition):
            if lit.atom.name in self.static:
                idx = [pos_of[x] for x in lit.atom.args if x in pos_of]
                checks.setdefault(max(idx) if idx else -1, []).append(lit)
        for lit in checks.get(-1, []):
            if (lit.atom in self.init_atoms) != lit.positive:
                return
        binding: dict[str, str] = {}

        def rec(i: int):
            if i == len(params):
                yield dict(binding)
                return
            for o in domains[i]:
                binding[params[i]] = o
                if all((l.atom.substitute(binding) in self.init_atoms) == l.positive for l in checks.get(i, [])):
                    yield from rec(i + 1)
            binding.pop(params[i], None)

        yield from rec(0)


def ground(d: DomainModel, p: ProblemModel) -> FondModel:
    """Instantiate all action schemas, prune with static facts and relaxed reachability."""
    g = _Grounder(d, p)
    raw = []
    for schema in d.actions:
        for b in g.bindings(schema):
            pre = g.cond(schema.precondition, b)
            if not pre:
                continue
            alts = g.effect(schema.effect, b)
            raw.append((schema.name, tuple(b[v] for v, _ in schema.params), pre, alts))

    reached = {a for a in p.init if a.name not in g.static}
    on = [False] * len(raw)
    changed = True
    while changed:
        changed = False
        for k, (_, _, pre, alts) in enumerate(raw):
            if not on[k]:
                if not any(pos <= reached for pos, _ in pre):
                    continue
                on[k] = True
                changed = True
            for alt in alts:
                for c, add, _ in alt:
                    if not add <= reached and any(pos <= reached for pos, _ in c):
                        reached |= add
                        changed = True

    atoms = tuple(sorted(reached))
    idx = {a: i for i, a in enumerate(atoms)}

    def intern(dnf: Dnf) -> Dnf:
        out = []
        for pos, neg in dnf:
            if not pos <= reached:
                continue
            cube = (frozenset(idx[a] for a in pos), frozenset(idx[a] for a in neg if a in reached))
            if cube not in out:
                out.append(cube)
        return _absorb(out)

    actions = []
    for k, (name, args, pre, alts) in enumerate(raw):
        if not on[k]:
            continue
        ipre = intern(pre)
        if not ipre:
            continue
        ialts = []
        for alt in alts:
            uncond_add: set = set()
            uncond_del: set = set()
            ces = []
            for c, add, dele in alt:
                ic = intern(c)
                if not ic:
                    continue
                a_ids = frozenset(idx[x] for x in add if x in idx)
                d_ids = frozenset(idx[x] for x in dele if x in idx)
                if not a_ids and not d_ids:
                    continue
                if ic == DNF_TRUE:
                    uncond_add |= a_ids
                    uncond_del |= d_ids
                else:
                    ces.append(CondEffect(ic, a_ids, d_ids))
            if uncond_add or uncond_del:
                ces.insert(0, CondEffect(DNF_TRUE, frozenset(uncond_add), frozenset(uncond_del)))
            ialts.append(tuple(ces))
        if not any(ialts):
            continue  # no-op instantiations can never help reach anything
        actions.append(GroundAction(name, args, ipre, tuple(ialts)))
    actions.sort(key=lambda a: (a.name, a.args))

    for a in _goal_atoms(p.goal):
        g._check_atom(a, "goal")
    goal = intern(g.cond(p.goal, {}))
    init = frozenset(idx[a] for a in p.init if a in idx)
    return FondModel(atoms, tuple(actions), init, goal, name=p.name)


def _goal_atoms(c: Condition) -> set[Atom]:
    if isinstance(c, Lit):
        return {c.atom}
    if isinstance(c, Not):
        return _goal_atoms(c.arg)
    return set().union(*(_goal_atoms(a) for a in c.args)) if c.args else set()


__all__ = [
    "FondModel", "GroundAction", "CondEffect", "ground", "dnf_holds", "action_label",
    "normalize_action", "InapplicableAction", "DNF_TRUE", "DNF_FALSE", "State",
]


