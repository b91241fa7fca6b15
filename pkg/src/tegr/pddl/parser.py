"""S-expression reader and PDDL domain/problem parser."""

from __future__ import annotations

import re

from ..logic import Atom
from .model import (
    SUPPORTED_REQUIREMENTS,
    ActionSchema,
    And,
    AndEff,
    Condition,
    DomainModel,
    Effect,
    Lit,
    Not,
    OneOf,
    Or,
    PddlSyntaxError,
    PddlTypeError,
    Predicate,
    ProblemModel,
    TypedList,
    UnsupportedFeature,
    When,
    condition_atoms,
    effect_atoms,
    effect_has_oneof,
)


class Sym(str):
    line: int
    col: int


class SList(list):
    line: int
    col: int


_TOKEN = re.compile(r"\s+|;[^\n]*|\(|\)|[^\s();]+")


def read_sexprs(text: str) -> list:
    """Read all top-level s-expressions, keeping line/column positions."""
    stack: list[SList] = [SList()]
    stack[0].line = stack[0].col = 1
    line, line_start = 1, 0
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        tok = m.group()
        col = pos - line_start + 1
        if tok[0].isspace() or tok[0] == ";":
            pass
        elif tok == "(":
            lst = SList()
            lst.line, lst.col = line, col
            stack[-1].append(lst)
            stack.append(lst)
        elif tok == ")":
            if len(stack) == 1:
                raise PddlSyntaxError("unbalanced ')'", line, col)
            stack.pop()
        else:
            s = Sym(tok)
            s.line, s.col = line, col
            stack[-1].append(s)
        nl = tok.count("\n")
        if nl:
            line += nl
            line_start = pos + tok.rfind("\n") + 1
        pos = m.end()
    if len(stack) > 1:
        open_ = stack[-1]
        raise PddlSyntaxError("unclosed '('", open_.line, open_.col)
    return list(stack[0])


def _pos(x) -> tuple[int | None, int | None]:
    return getattr(x, "line", None), getattr(x, "col", None)


def _expect_list(x, what: str) -> SList:
    if not isinstance(x, list):
        raise PddlSyntaxError(f"expected {what}, found {x!r}", *_pos(x))
    return x


def _expect_sym(x, what: str) -> Sym:
    if isinstance(x, list):
        raise PddlSyntaxError(f"expected {what}, found a list", *_pos(x))
    return x


def _head(x) -> str:
    if isinstance(x, list) and x and not isinstance(x[0], list):
        return x[0].lower()
    return ""


def _typed_list(items, default: str = "object") -> TypedList:
    out: list[tuple[str, str]] = []
    pending: list[Sym] = []
    i = 0
    while i < len(items):
        tok = _expect_sym(items[i], "a name")
        if tok == "-":
            if i + 1 >= len(items):
                raise PddlSyntaxError("missing type after '-'", *_pos(tok))
            typ = items[i + 1]
            if isinstance(typ, list):
                if _head(typ) == "either":
                    raise UnsupportedFeature("'either' types are not supported", *_pos(typ))
                raise PddlSyntaxError("expected a type name", *_pos(typ))
            out.extend((str(p), str(typ)) for p in pending)
            pending = []
            i += 2
            continue
        pending.append(tok)
        i += 1
    out.extend((str(p), default) for p in pending)
    return tuple(out)


def _atom(x) -> Atom:
    x = _expect_list(x, "an atom")
    if not x:
        raise PddlSyntaxError("empty atom", *_pos(x))
    name = _expect_sym(x[0], "a predicate name")
    if name == "=":
        raise UnsupportedFeature("equality is not supported", *_pos(x))
    args = tuple(str(_expect_sym(a, "a term")) for a in x[1:])
    try:
        return Atom(str(name), args)
    except Exception as exc:
        raise PddlSyntaxError(str(exc), *_pos(x)) from None


_UNSUPPORTED_COND = {"forall", "exists", "imply", "="}
_UNSUPPORTED_EFF = {"forall", "increase", "decrease", "assign", "probabilistic"}


def _condition(x) -> Condition:
    x = _expect_list(x, "a condition")
    h = _head(x)
    if h == "and":
        return And(tuple(_condition(a) for a in x[1:]))
    if h == "or":
        return Or(tuple(_condition(a) for a in x[1:]))
    if h == "not":
        if len(x) != 2:
            raise PddlSyntaxError("'not' takes one argument", *_pos(x))
        inner = _condition(x[1])
        if isinstance(inner, Lit):
            return inner.negate()
        return Not(inner)
    if h == "=":
        raise UnsupportedFeature("equality ('=') conditions are not supported", *_pos(x))
    if h in _UNSUPPORTED_COND:
        raise UnsupportedFeature(f"'{h}' conditions are not supported", *_pos(x))
    return Lit(_atom(x))


def _effect(x) -> Effect:
    x = _expect_list(x, "an effect")
    h = _head(x)
    if h == "and":
        return AndEff(tuple(_effect(a) for a in x[1:]))
    if h == "oneof":
        if len(x) < 2:
            raise PddlSyntaxError("'oneof' needs at least one branch", *_pos(x))
        return OneOf(tuple(_effect(a) for a in x[1:]))
    if h == "when":
        if len(x) != 3:
            raise PddlSyntaxError("'when' takes a condition and an effect", *_pos(x))
        body = _effect(x[2])
        if effect_has_oneof(body):
            raise UnsupportedFeature("'oneof' nested under 'when' is not supported", *_pos(x))
        return When(_condition(x[1]), body)
    if h == "not":
        if len(x) != 2:
            raise PddlSyntaxError("'not' takes one argument", *_pos(x))
        return Lit(_atom(x[1]), False)
    if h in _UNSUPPORTED_EFF:
        raise UnsupportedFeature(f"'{h}' effects are not supported", *_pos(x))
    return Lit(_atom(x))


def _check_define(top, kind: str) -> tuple[str, SList]:
    if len(top) != 1:
        raise PddlSyntaxError(f"expected exactly one (define ...) form, found {len(top)}")
    d = _expect_list(top[0], "(define ...)")
    if _head(d) != "define" or len(d) < 2:
        raise PddlSyntaxError("expected (define ...)", *_pos(d))
    hdr = _expect_list(d[1], f"({kind} NAME)")
    if _head(hdr) != kind or len(hdr) != 2:
        raise PddlSyntaxError(f"expected ({kind} NAME)", *_pos(hdr))
    return str(hdr[1]), d


def parse_domain(text: str) -> DomainModel:
    name, d = _check_define(read_sexprs(text), "domain")
    requirements: list[str] = []
    types: TypedList = ()
    constants: TypedList = ()
    predicates: list[Predicate] = []
    actions: list[ActionSchema] = []
    for sec in d[2:]:
        sec = _expect_list(sec, "a domain section")
        h = _head(sec)
        if h == ":requirements":
            for r in sec[1:]:
                r = _expect_sym(r, "a requirement")
                if r.lower() not in SUPPORTED_REQUIREMENTS:
                    raise UnsupportedFeature(f"requirement {r} is not supported", *_pos(r))
                requirements.append(r.lower())
        elif h == ":types":
            types = _typed_list(sec[1:])
        elif h == ":constants":
            constants = _typed_list(sec[1:])
        elif h == ":predicates":
            for p in sec[1:]:
                p = _expect_list(p, "a predicate declaration")
                predicates.append(Predicate(str(_expect_sym(p[0], "a predicate name")), _typed_list(p[1:])))
        elif h == ":action":
            actions.append(_action(sec))
        elif h in (":functions", ":derived", ":durative-action", ":constraints", ":process", ":event"):
            raise UnsupportedFeature(f"section {h} is not supported", *_pos(sec))
        else:
            raise PddlSyntaxError(f"unknown domain section {h or sec!r}", *_pos(sec))
    dom = DomainModel(name, tuple(requirements), types, constants, tuple(predicates), tuple(actions))
    check_domain(dom)
    return dom


def _action(sec: SList) -> ActionSchema:
    if len(sec) < 2:
        raise PddlSyntaxError("action without a name", *_pos(sec))
    name = str(_expect_sym(sec[1], "an action name"))
    params: TypedList = ()
    pre: Condition = And(())
    eff: Effect = AndEff(())
    i = 2
    while i < len(sec):
        key = _expect_sym(sec[i], "an action keyword").lower()
        if i + 1 >= len(sec):
            raise PddlSyntaxError(f"missing value for {key}", *_pos(sec[i]))
        val = sec[i + 1]
        if key == ":parameters":
            params = _typed_list(_expect_list(val, "a parameter list"))
        elif key == ":precondition":
            pre = _condition(val) if val else And(())
        elif key == ":effect":
            eff = _effect(val) if val else AndEff(())
        else:
            raise PddlSyntaxError(f"unknown action keyword {key}", *_pos(sec[i]))
        i += 2
    return ActionSchema(name, params, pre, eff)


def check_domain(d: DomainModel) -> None:
    """Declared predicates/arity and bound variables in every action."""
    preds = {p.name: p.arity for p in d.predicates}
    declared_types = {"object"} | {t for t, _ in d.types} | {p for _, p in d.types}
    for _, t in d.constants:
        if t not in declared_types:
            raise PddlTypeError(f"constant of undeclared type {t!r}")
    for a in d.actions:
        bound = {v for v, _ in a.params}
        for v, t in a.params:
            if not v.startswith("?"):
                raise PddlSyntaxError(f"action {a.name}: parameter {v!r} must start with '?'")
            if t not in declared_types:
                raise PddlTypeError(f"action {a.name}: parameter {v} has undeclared type {t!r}")
        for at in condition_atoms(a.precondition) | effect_atoms(a.effect):
            if at.name not in preds:
                raise PddlTypeError(f"action {a.name}: undeclared predicate {at.name!r}")
            if preds[at.name] != len(at.args):
                raise PddlTypeError(
                    f"action {a.name}: predicate {at.name} expects {preds[at.name]} arguments, got {len(at.args)}")
            for arg in at.args:
                if arg.startswith("?") and arg not in bound:
                    raise PddlTypeError(f"action {a.name}: unbound variable {arg}")


def parse_problem(text: str) -> ProblemModel:
    name, d = _check_define(read_sexprs(text), "problem")
    domain_name = ""
    objects: TypedList = ()
    init: list[Atom] = []
    goal: Condition = And(())
    for sec in d[2:]:
        sec = _expect_list(sec, "a problem section")
        h = _head(sec)
        if h == ":domain":
            domain_name = str(sec[1])
        elif h == ":objects":
            objects = _typed_list(sec[1:])
        elif h == ":init":
            items = list(sec[1:])
            if len(items) == 1 and _head(items[0]) == "and":
                items = list(items[0][1:])
            for it in items:
                if _head(it) == "not":
                    continue  # closed world: negative init facts are redundant
                init.append(_atom(it))
        elif h == ":goal":
            if len(sec) != 2:
                raise PddlSyntaxError(":goal takes exactly one condition", *_pos(sec))
            goal = _condition(sec[1])
        elif h == ":requirements":
            for r in sec[1:]:
                if r.lower() not in SUPPORTED_REQUIREMENTS:
                    raise UnsupportedFeature(f"requirement {r} is not supported", *_pos(r))
        elif h in (":metric", ":constraints"):
            raise UnsupportedFeature(f"section {h} is not supported", *_pos(sec))
        else:
            raise PddlSyntaxError(f"unknown problem section {h or sec!r}", *_pos(sec))
    seen: dict[Atom, None] = {}
    for a in init:
        seen.setdefault(a, None)
    return ProblemModel(name, domain_name, objects, tuple(seen), goal)
