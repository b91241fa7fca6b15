"""Immutable AST for the supported PDDL subset."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..logic import Atom

SUPPORTED_REQUIREMENTS = (
    ":strips",
    ":typing",
    ":negative-preconditions",
    ":disjunctive-preconditions",
    ":conditional-effects",
    ":non-deterministic",
)


class PddlError(Exception):
    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        self.line = line
        self.col = col
        where = f" (line {line}, column {col})" if line is not None else ""
        super().__init__(message + where)


class PddlSyntaxError(PddlError):
    pass


class UnsupportedFeature(PddlError):
    pass


class PddlTypeError(PddlError):
    pass


# Typed parameter/object lists are tuples of (name, type).
TypedList = tuple[tuple[str, str], ...]


# ---------------------------------------------------------------- conditions

@dataclass(frozen=True)
class Lit:
    atom: Atom
    positive: bool = True

    def negate(self) -> "Lit":
        return Lit(self.atom, not self.positive)


@dataclass(frozen=True)
class Not:
    arg: "Condition"


@dataclass(frozen=True)
class And:
    args: tuple["Condition", ...] = ()


@dataclass(frozen=True)
class Or:
    args: tuple["Condition", ...] = ()


Condition = Lit | Not | And | Or
TRUE_COND = And(())


# ---------------------------------------------------------------- effects

@dataclass(frozen=True)
class AndEff:
    args: tuple["Effect", ...] = ()


@dataclass(frozen=True)
class OneOf:
    args: tuple["Effect", ...]


@dataclass(frozen=True)
class When:
    condition: Condition
    effect: "Effect"


Effect = Lit | AndEff | OneOf | When


# ---------------------------------------------------------------- schemas

@dataclass(frozen=True)
class Predicate:
    name: str
    params: TypedList = ()

    @property
    def arity(self) -> int:
        return len(self.params)


@dataclass(frozen=True)
class ActionSchema:
    name: str
    params: TypedList
    precondition: Condition
    effect: Effect


@dataclass(frozen=True)
class DomainModel:
    name: str
    requirements: tuple[str, ...] = ()
    types: TypedList = ()  # (type, parent)
    constants: TypedList = ()
    predicates: tuple[Predicate, ...] = ()
    actions: tuple[ActionSchema, ...] = ()

    def predicate(self, name: str) -> Predicate | None:
        for p in self.predicates:
            if p.name == name:
                return p
        return None

    def action(self, name: str) -> ActionSchema | None:
        for a in self.actions:
            if a.name == name:
                return a
        return None


@dataclass(frozen=True)
class ProblemModel:
    name: str
    domain_name: str
    objects: TypedList = ()
    init: tuple[Atom, ...] = ()
    goal: Condition = field(default=TRUE_COND)


# ---------------------------------------------------------------- helpers

def condition_atoms(c: Condition) -> set[Atom]:
    if isinstance(c, Lit):
        return {c.atom}
    if isinstance(c, Not):
        return condition_atoms(c.arg)
    out: set[Atom] = set()
    for a in c.args:
        out |= condition_atoms(a)
    return out


def effect_atoms(e: Effect) -> set[Atom]:
    if isinstance(e, Lit):
        return {e.atom}
    if isinstance(e, When):
        return effect_atoms(e.effect)
    out: set[Atom] = set()
    for a in e.args:
        out |= effect_atoms(a)
    return out


def effect_has_oneof(e: Effect) -> bool:
    if isinstance(e, OneOf):
        return True
    if isinstance(e, AndEff):
        return any(effect_has_oneof(a) for a in e.args)
    if isinstance(e, When):
        return effect_has_oneof(e.effect)
    return False


def substitute_condition(c: Condition, mapping: dict[str, str]) -> Condition:
    if isinstance(c, Lit):
        return Lit(c.atom.substitute(mapping), c.positive)
    if isinstance(c, Not):
        return Not(substitute_condition(c.arg, mapping))
    return type(c)(tuple(substitute_condition(a, mapping) for a in c.args))


def substitute_effect(e: Effect, mapping: dict[str, str]) -> Effect:
    if isinstance(e, Lit):
        return Lit(e.atom.substitute(mapping), e.positive)
    if isinstance(e, When):
        return When(substitute_condition(e.condition, mapping), substitute_effect(e.effect, mapping))
    return type(e)(tuple(substitute_effect(a, mapping) for a in e.args))
