"""Compile a temporally extended goal into a plain FOND reachability task.

The goal formula becomes a DFA, the DFA is lifted over the formula's objects
of interest, and the lifted automaton is encoded as state fluents plus one
deterministic ``trans`` operator with conditional effects.  Domain actions
and ``trans`` alternate, gated by the ``turnDomain`` fluent.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .automata import DEFAULT_MAX_STATES, Dfa, ObjectMapping, Pdfa, compile_to_dfa, lift_to_pdfa
from .logic import Atom, Formula, holds, resolve_dialect
from .pddl import (
    ActionSchema,
    And,
    AndEff,
    Condition,
    DomainModel,
    Effect,
    Lit,
    Or,
    Predicate,
    ProblemModel,
    When,
    ground,
    normalize_action,
    print_domain,
    print_problem,
)

EXTRA_REQUIREMENTS = (":negative-preconditions", ":disjunctive-preconditions", ":conditional-effects")


class CompilationError(Exception):
    pass


class MalformedAlternation(CompilationError):
    pass


@dataclass(frozen=True)
class CompiledProblem:
    domain: DomainModel
    problem: ProblemModel
    formula: Formula
    dialect: str
    dfa: Dfa
    pdfa: Pdfa | None
    mapping: ObjectMapping
    state_predicates: tuple[str, ...]
    turn_predicate: str
    trans_name: str
    initial_state: int  # automaton state after reading s0

    def domain_text(self) -> str:
        return print_domain(self.domain)

    def problem_text(self) -> str:
        return print_problem(self.problem)

    def is_automaton_atom(self, a: Atom) -> bool:
        return a.name in self.state_predicates or a.name == self.turn_predicate


# ---------------------------------------------------------------- atom resolution

def resolve_atoms(f: Formula, d: DomainModel, p: ProblemModel) -> Formula:
    """Map formula atoms onto domain predicates.

    ``vAt(51)`` is taken as is; a flat name such as ``vAt_51`` is split on
    underscores into a predicate and its arguments.
    """
    arity = {pr.name: pr.arity for pr in d.predicates}
    objects = {o for o, _ in tuple(p.objects) + tuple(d.constants)}

    def fix(a: Atom) -> Formula:
        cand = None
        if arity.get(a.name) == len(a.args):
            cand = a
        elif not a.args and "_" in a.name:
            parts = a.name.split("_")
            for k in range(len(parts) - 1, 0, -1):
                name = "_".join(parts[:k])
                if arity.get(name) == len(parts) - k:
                    cand = Atom(name, tuple(parts[k:]))
                    break
        if cand is None:
            raise CompilationError(f"formula atom {a} matches no predicate of domain {d.name}")
        for o in cand.args:
            if o not in objects:
                raise CompilationError(f"formula atom {a} names unknown object {o!r}")
        return Formula("atom", atom=cand)

    return f.map_atoms(fix)


def objects_of_interest(f: Formula) -> list[str]:
    seen: dict[str, None] = {}
    for g in f.subformulas():
        if g.op == "atom":
            for o in g.atom.args:
                seen.setdefault(o, None)
    return list(seen)


# ---------------------------------------------------------------- encoding

def guard_condition(g: Formula) -> Condition:
    """Translate a propositional guard into a PDDL condition."""
    op = g.op
    if op == "atom":
        return Lit(g.atom)
    if op == "true":
        return And(())
    if op == "false":
        return Or(())
    if op == "not":
        inner = guard_condition(g.args[0])
        if isinstance(inner, Lit):
            return inner.negate()
        raise CompilationError(f"guard not in DNF: {g}")
    if op in ("and", "or"):
        cls = And if op == "and" else Or
        parts = []
        for a in g.args:
            c = guard_condition(a)
            parts.extend(c.args if isinstance(c, cls) else (c,))
        return cls(tuple(parts))
    raise CompilationError(f"temporal operator in guard: {g}")


def _fresh(name: str, taken: set[str]) -> str:
    if name not in taken:
        return name
    k = 1
    while f"{name}-aut{k}" in taken:
        k += 1
    return f"{name}-aut{k}"


def _gate(c: Condition, turn: Lit) -> Condition:
    if isinstance(c, And):
        return And(c.args + (turn,))
    return And((c, turn))


def _ungate(e: Effect, turn: str) -> Effect:
    lit = Lit(Atom(turn), False)
    if isinstance(e, AndEff):
        return AndEff(e.args + (lit,))
    return AndEff((e, lit))


def _object_types(d: DomainModel, p: ProblemModel) -> dict[str, str]:
    return dict(tuple(d.constants) + tuple(p.objects))


def compile(d: DomainModel, p: ProblemModel, phi: Formula, dialect: str | None = None, *,
            lifted: bool = True, max_states: int = DEFAULT_MAX_STATES) -> CompiledProblem:
    """Fuse the automaton of ``phi`` into ``d``/``p``."""
    phi = resolve_atoms(phi, d, p)
    dialect = resolve_dialect(phi, dialect)
    dfa = compile_to_dfa(phi, dialect, max_states=max_states)

    objs = objects_of_interest(phi) if lifted else []
    mapping = ObjectMapping.fresh(objs)
    pdfa = lift_to_pdfa(dfa, mapping) if lifted else None
    auto = pdfa if pdfa is not None else dfa
    otypes = _object_types(d, p)
    params = tuple((v, otypes.get(o, "object")) for o, v in mapping.forward.items())
    var_names = tuple(v for v, _ in params)

    taken = {pr.name for pr in d.predicates}
    qnames = []
    for i in range(dfa.num_states):
        n = _fresh(f"q{i}", taken)
        taken.add(n)
        qnames.append(n)
    turn = _fresh("turnDomain", taken)
    trans_name = _fresh("trans", {a.name for a in d.actions})

    def q(i: int, args: Sequence[str]) -> Lit:
        return Lit(Atom(qnames[i], tuple(args)))

    turn_lit = Lit(Atom(turn))
    actions = [
        ActionSchema(a.name, a.params, _gate(a.precondition, turn_lit), _ungate(a.effect, turn))
        for a in d.actions
    ]

    incoming: dict[int, list[Condition]] = {}
    for src, edges in enumerate(auto.transitions):
        for g, tgt in edges:
            gc = guard_condition(g)
            if isinstance(gc, Or) and not gc.args:
                continue
            here = q(src, var_names)
            if isinstance(gc, And) and not gc.args:
                term: Condition = here
            elif isinstance(gc, And):
                term = And((here,) + gc.args)
            else:
                term = And((here, gc))
            incoming.setdefault(tgt, []).append(term)
    whens: list[Effect] = []
    for tgt in sorted(incoming):
        terms = incoming[tgt]
        cond = terms[0] if len(terms) == 1 else Or(tuple(terms))
        body = AndEff(
            (q(tgt, var_names),)
            + tuple(q(o, var_names).negate() for o in range(dfa.num_states) if o != tgt)
            + (turn_lit,))
        whens.append(When(cond, body))
    actions.append(ActionSchema(trans_name, params, turn_lit.negate(), AndEff(tuple(whens))))

    requirements = list(d.requirements)
    for r in EXTRA_REQUIREMENTS:
        if r not in requirements:
            requirements.append(r)
    predicates = tuple(d.predicates) + tuple(Predicate(n, params) for n in qnames) + (Predicate(turn),)
    domain2 = DomainModel(d.name, tuple(requirements), d.types, d.constants, predicates, tuple(actions))

    s0 = [a for a in p.init]
    q_start = dfa.step(dfa.initial, s0)
    init2 = tuple(p.init) + (q(q_start, objs).atom, turn_lit.atom)
    acc = [q(i, objs) for i in sorted(dfa.accepting)]
    goal_q: Condition = acc[0] if len(acc) == 1 else Or(tuple(acc))
    problem2 = ProblemModel(p.name, p.domain_name, p.objects, init2, And((goal_q, turn_lit)))

    return CompiledProblem(domain2, problem2, phi, dialect, dfa, pdfa, mapping, tuple(qnames), turn,
                           trans_name, q_start)


# ---------------------------------------------------------------- executions

def strip(execution: Sequence[str], trans_name: str = "trans") -> list[str]:
    """Drop synchronization actions from a compiled execution.

    Domain actions and ``trans`` must alternate, starting with a domain
    action.
    """
    out: list[str] = []
    expect_domain = True
    for raw in execution:
        label = normalize_action(raw)
        is_trans = label[1:-1].split()[0] == trans_name
        if is_trans == expect_domain:
            what = "trans" if is_trans else "domain action"
            raise MalformedAlternation(f"unexpected {what} {label} at position {len(out)}")
        if not is_trans:
            out.append(label)
        expect_domain = not expect_domain
    return out


def check_policy_satisfies(d: DomainModel, p: ProblemModel, phi: Formula, policy, *,
                           compiled: CompiledProblem | None = None, dialect: str | None = None,
                           loop_bound: int = 1, max_executions: int = 100_000) -> bool:
    """Model-check every execution of a compiled-task policy against ``phi``.

    Each execution's domain-state trace (s0 then the state after every domain
    action, automaton fluents projected away) must satisfy ``phi``.  A policy
    that is not a strong-cyclic solution of the compiled task fails.
    """
    from .planner import ExecutionCapExceeded, enumerate_executions, validate

    cp = compiled or compile(d, p, phi, dialect)
    model = ground(cp.domain, cp.problem)
    if not validate(model, policy, "strong-cyclic"):
        return False
    try:
        execs = enumerate_executions(model, policy, loop_bound=loop_bound, max_executions=max_executions)
    except ExecutionCapExceeded:
        return False
    turn = model.index.get(Atom(cp.turn_predicate))
    for ex in execs:
        trace = [_project(model, ex.states[0], cp)]
        for k, label in enumerate(ex.actions):
            if label[1:-1].split()[0] != cp.trans_name:
                trace.append(_project(model, ex.states[k + 1], cp))
        if turn is not None and turn not in ex.states[-1]:
            return False
        if not holds(cp.formula, trace, cp.dialect):
            return False
    return True


def _project(model, state, cp: CompiledProblem) -> frozenset[Atom]:
    return frozenset(a for a in model.state_atoms(state) if not cp.is_automaton_atom(a))


__all__ = [
    "CompiledProblem", "CompilationError", "MalformedAlternation", "compile", "strip",
    "check_policy_satisfies", "resolve_atoms", "objects_of_interest", "guard_condition",
]
