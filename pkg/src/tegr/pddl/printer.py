"""Deterministic PDDL text emission."""

from __future__ import annotations

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
    ProblemModel,
    TypedList,
    When,
)


def atom_text(a: Atom) -> str:
    return f"({' '.join((a.name,) + a.args)})"


def _typed(items: TypedList, show_object: bool = False) -> str:
    parts: list[str] = []
    i = 0
    while i < len(items):
        typ = items[i][1]
        group = []
        while i < len(items) and items[i][1] == typ:
            group.append(items[i][0])
            i += 1
        if typ == "object" and not show_object:
            parts.append(" ".join(group))
        else:
            parts.append(f"{' '.join(group)} - {typ}")
    return " ".join(parts)


def condition_text(c: Condition) -> str:
    if isinstance(c, Lit):
        return atom_text(c.atom) if c.positive else f"(not {atom_text(c.atom)})"
    if isinstance(c, Not):
        return f"(not {condition_text(c.arg)})"
    kw = "and" if isinstance(c, And) else "or"
    if not c.args:
        return f"({kw})"
    return f"({kw} {' '.join(condition_text(a) for a in c.args)})"


def effect_text(e: Effect, indent: int = 0) -> str:
    pad = " " * indent
    if isinstance(e, Lit):
        return pad + condition_text(e)
    if isinstance(e, When):
        return f"{pad}(when {condition_text(e.condition)}\n{effect_text(e.effect, indent + 2)})"
    kw = "and" if isinstance(e, AndEff) else "oneof"
    if not e.args:
        return f"{pad}({kw})"
    if all(isinstance(a, Lit) for a in e.args):
        return f"{pad}({kw} {' '.join(condition_text(a) for a in e.args)})"
    inner = "\n".join(effect_text(a, indent + 2) for a in e.args)
    return f"{pad}({kw}\n{inner})"


def _action_text(a: ActionSchema) -> str:
    return (
        f"  (:action {a.name}\n"
        f"    :parameters ({_typed(a.params, show_object=True)})\n"
        f"    :precondition {condition_text(a.precondition)}\n"
        f"    :effect\n{effect_text(a.effect, 6)})"
    )


def print_domain(d: DomainModel) -> str:
    out = [f"(define (domain {d.name})"]
    if d.requirements:
        out.append(f"  (:requirements {' '.join(d.requirements)})")
    if d.types:
        out.append(f"  (:types {_typed(d.types)})")
    if d.constants:
        out.append(f"  (:constants {_typed(d.constants, show_object=True)})")
    preds = " ".join(
        f"({p.name}{' ' + _typed(p.params, show_object=True) if p.params else ''})" for p in d.predicates)
    out.append(f"  (:predicates {preds})")
    out.extend(_action_text(a) for a in d.actions)
    return "\n".join(out) + ")\n"


def print_problem(p: ProblemModel) -> str:
    init = " ".join(atom_text(a) for a in p.init)
    out = [
        f"(define (problem {p.name})",
        f"  (:domain {p.domain_name})",
        f"  (:objects {_typed(p.objects, show_object=True)})",
        f"  (:init (and {init}))",
        f"  (:goal {condition_text(p.goal)}))",
    ]
    return "\n".join(out) + "\n"
