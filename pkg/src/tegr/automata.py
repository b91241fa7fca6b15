"""Deterministic finite automata for LTLf/PPLTL goals.

LTLf formulas are compiled by formula progression: a state is a monotone
Boolean combination (kept as a minimal DNF) of next/weak-next obligations,
which is canonical, so the construction terminates.  PPLTL formulas are
compiled by tracking the truth values of their past subformulas.  Both
constructions run over the explicit alphabet 2^AP and then summarize each
state's outgoing edges as Boolean guards.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Hashable, Iterable, Sequence

from .logic import (
    FALSE,
    TRUE,
    Atom,
    Formula,
    FormulaError,
    desugar,
    land,
    lnot,
    lor,
    resolve_dialect,
)

DEFAULT_MAX_STATES = 10_000
MAX_ATOMS = 16


class AutomatonError(Exception):
    pass


class StateBudgetExceeded(AutomatonError):
    pass


@dataclass(frozen=True)
class Dfa:
    """Explicit-state DFA whose edges carry propositional guards over ``atoms``.

    States are ``0..num_states-1``; per state, guards are mutually exclusive
    and exhaustive over 2^atoms.
    """

    atoms: tuple[Atom, ...]
    initial: int
    accepting: frozenset[int]
    transitions: tuple[tuple[tuple[Formula, int], ...], ...]

    @property
    def num_states(self) -> int:
        return len(self.transitions)

    @property
    def states(self) -> range:
        return range(self.num_states)

    @cached_property
    def _index(self) -> dict[Atom, int]:
        return {a: k for k, a in enumerate(self.atoms)}

    @cached_property
    def table(self) -> list[list[int]]:
        """Dense successor table ``table[state][letter]`` (letters are bitmasks over ``atoms``)."""
        return [
            [_target(edges, letter, self.atoms) for letter in range(1 << len(self.atoms))]
            for edges in self.transitions
        ]

    def letter(self, step: Iterable[Atom]) -> int:
        idx = self._index
        mask = 0
        for a in step:
            k = idx.get(a)
            if k is not None:
                mask |= 1 << k
        return mask

    def step(self, state: int, step: Iterable[Atom]) -> int:
        return self.table[state][self.letter(step)]

    def run(self, trace: Sequence[Iterable[Atom]], state: int | None = None) -> int:
        q = self.initial if state is None else state
        for s in trace:
            q = self.step(q, s)
        return q

    def check_well_formed(self) -> None:
        """Raise AutomatonError unless every state's guards partition the alphabet."""
        if not 0 <= self.initial < self.num_states:
            raise AutomatonError("initial state out of range")
        if any(not 0 <= q < self.num_states for q in self.accepting):
            raise AutomatonError("accepting state out of range")
        for q, edges in enumerate(self.transitions):
            for letter in range(1 << len(self.atoms)):
                hits = [t for g, t in edges if _eval_guard(g, letter, self.atoms)]
                if len(hits) != 1:
                    raise AutomatonError(
                        f"state {q}: {len(hits)} guards match letter {letter:b} (need exactly 1)")
            for _, t in edges:
                if not 0 <= t < self.num_states:
                    raise AutomatonError(f"state {q}: edge to unknown state {t}")


def _eval_guard(g: Formula, letter: int, atoms: Sequence[Atom]) -> bool:
    op = g.op
    if op == "atom":
        try:
            return bool((letter >> atoms.index(g.atom)) & 1)
        except ValueError:
            return False
    if op == "true":
        return True
    if op == "false":
        return False
    if op == "not":
        return not _eval_guard(g.args[0], letter, atoms)
    if op == "and":
        return _eval_guard(g.args[0], letter, atoms) and _eval_guard(g.args[1], letter, atoms)
    if op == "or":
        return _eval_guard(g.args[0], letter, atoms) or _eval_guard(g.args[1], letter, atoms)
    raise FormulaError(f"temporal operator {op!r} inside a guard")


def _target(edges, letter: int, atoms) -> int:
    for g, t in edges:
        if _eval_guard(g, letter, atoms):
            return t
    raise AutomatonError("automaton is not total")


def accepts(d: Dfa, trace: Sequence[Iterable]) -> bool:
    """Run ``d`` over a non-empty trace and report acceptance of the final state."""
    from .logic import make_trace

    trace = make_trace(trace)
    if not trace:
        raise ValueError("automata are run on non-empty traces only")
    return d.run(trace) in d.accepting


# --------------------------------------------------------------------------- guards

def _prime_implicants(minterms: set[int], nbits: int) -> list[tuple[int, int]]:
    """Quine-McCluskey prime implicants as (value, care-mask) pairs."""
    full = (1 << nbits) - 1
    current = {(m, full) for m in minterms}
    primes: set[tuple[int, int]] = set()
    while current:
        merged: set[tuple[int, int]] = set()
        used: set[tuple[int, int]] = set()
        by_mask: dict[int, list[tuple[int, int]]] = {}
        for imp in current:
            by_mask.setdefault(imp[1], []).append(imp)
        for mask, group in by_mask.items():
            values = {v for v, _ in group}
            for v in values:
                for b in range(nbits):
                    bit = 1 << b
                    if mask & bit and not v & bit and (v | bit) in values:
                        merged.add((v, mask & ~bit))
                        used.add((v, mask))
                        used.add((v | bit, mask))
        primes |= current - used
        current = merged
    return sorted(primes, key=lambda p: (bin(p[1]).count("1"), p[1], p[0]))


def _cover(minterms: set[int], nbits: int) -> list[tuple[int, int]]:
    primes = _prime_implicants(minterms, nbits)
    covers = {p: {m for m in minterms if m & p[1] == p[0]} for p in primes}
    chosen: list[tuple[int, int]] = []
    left = set(minterms)
    # essential primes first, then greedy by coverage
    for m in sorted(minterms):
        holders = [p for p in primes if m in covers[p]]
        if len(holders) == 1 and holders[0] not in chosen:
            chosen.append(holders[0])
            left -= covers[holders[0]]
    while left:
        best = max(primes, key=lambda p: (len(covers[p] & left), -bin(p[1]).count("1"), -p[1], -p[0]))
        chosen.append(best)
        left -= covers[best]
    return sorted(chosen, key=lambda p: (bin(p[1]).count("1"), -p[1], p[0]))


def guard_from_letters(letters: Iterable[int], atoms: Sequence[Atom]) -> Formula:
    """A compact DNF guard true exactly on the given letters."""
    letters = set(letters)
    n = len(atoms)
    if not letters:
        return FALSE
    if len(letters) == 1 << n:
        return TRUE
    cubes = []
    for value, mask in _cover(letters, n):
        lits = []
        for k, a in enumerate(atoms):
            if mask >> k & 1:
                f = Formula("atom", atom=a)
                lits.append(f if value >> k & 1 else lnot(f))
        cubes.append(land(*lits) if lits else TRUE)
    return lor(*cubes)


def dfa_from_table(atoms: Sequence[Atom], table: Sequence[Sequence[int]], initial: int,
                   accepting: Iterable[int]) -> Dfa:
    """Build a trimmed, canonically numbered Dfa from a dense successor table."""
    atoms = tuple(atoms)
    accepting = set(accepting)
    order = {initial: 0}
    queue = deque([initial])
    while queue:
        q = queue.popleft()
        for t in table[q]:
            if t not in order:
                order[t] = len(order)
                queue.append(t)
    old = sorted(order, key=order.get)
    transitions = []
    for q in old:
        by_target: dict[int, list[int]] = {}
        for letter, t in enumerate(table[q]):
            by_target.setdefault(order[t], []).append(letter)
        transitions.append(tuple(
            (guard_from_letters(ls, atoms), t) for t, ls in sorted(by_target.items())))
    return Dfa(atoms, 0, frozenset(order[q] for q in old if q in accepting), tuple(transitions))


# --------------------------------------------------------------------------- construction

def _explore(initial: Hashable, accept: Callable[[Hashable], bool],
             delta: Callable[[Hashable, int], Hashable], nletters: int,
             max_states: int) -> tuple[list[list[int]], list[bool]]:
    ids = {initial: 0}
    keys = [initial]
    table: list[list[int]] = []
    i = 0
    while i < len(keys):
        key = keys[i]
        row = []
        for letter in range(nletters):
            nxt = delta(key, letter)
            j = ids.get(nxt)
            if j is None:
                if len(keys) >= max_states:
                    raise StateBudgetExceeded(f"automaton exceeds the state budget of {max_states}")
                j = ids[nxt] = len(keys)
                keys.append(nxt)
            row.append(j)
        table.append(row)
        i += 1
    return table, [accept(k) for k in keys]


class _LtlfBuilder:
    """Progression over NNF with interned nodes.

    Obligation terms are ints ``2*node + weak``; a state is a frozenset of
    cubes (frozensets of terms) kept free of absorbed cubes.
    """

    def __init__(self, f: Formula, atoms: Sequence[Atom]):
        self.index = {a: k for k, a in enumerate(atoms)}
        self.nodes: list[tuple] = []
        self.ids: dict[tuple, int] = {}
        self.root = self.nnf(f, False)
        self.prog_memo: dict[tuple[int, int], frozenset] = {}

    def intern(self, node: tuple) -> int:
        i = self.ids.get(node)
        if i is None:
            i = self.ids[node] = len(self.nodes)
            self.nodes.append(node)
        return i

    def nnf(self, f: Formula, neg: bool) -> int:
        op = f.op
        a = f.args
        if op == "atom":
            return self.intern(("lit", self.index[f.atom], not neg))
        if op in ("true", "false"):
            return self.intern(("T",) if (op == "true") != neg else ("F",))
        if op == "not":
            return self.nnf(a[0], not neg)
        if op in ("and", "or"):
            kind = "and" if (op == "and") != neg else "or"
            return self.intern((kind, self.nnf(a[0], neg), self.nnf(a[1], neg)))
        if op in ("next", "weak-next"):
            strong = (op == "next") != neg
            return self.intern(("X" if strong else "W", self.nnf(a[0], neg)))
        if op == "until":
            return self.intern(("R" if neg else "U", self.nnf(a[0], neg), self.nnf(a[1], neg)))
        if op in ("eventually", "always"):
            ev = (op == "eventually") != neg
            return self.intern(("Fe" if ev else "G", self.nnf(a[0], neg)))
        raise FormulaError(f"past operator {op!r} in an LTLf formula")

    @staticmethod
    def _absorb(cubes: Iterable[frozenset]) -> frozenset:
        cubes = sorted(set(cubes), key=len)
        kept: list[frozenset] = []
        for c in cubes:
            if not any(k <= c for k in kept):
                kept.append(c)
        return frozenset(kept)

    def _and(self, x: frozenset, y: frozenset) -> frozenset:
        if not x or not y:
            return frozenset()
        return self._absorb(a | b for a in x for b in y)

    def _or(self, x: frozenset, y: frozenset) -> frozenset:
        return self._absorb(x | y)

    TRUE_DNF = frozenset({frozenset()})
    FALSE_DNF: frozenset = frozenset()

    def prog(self, n: int, letter: int) -> frozenset:
        key = (n, letter)
        r = self.prog_memo.get(key)
        if r is not None:
            return r
        node = self.nodes[n]
        kind = node[0]
        if kind == "T":
            r = self.TRUE_DNF
        elif kind == "F":
            r = self.FALSE_DNF
        elif kind == "lit":
            r = self.TRUE_DNF if bool(letter >> node[1] & 1) == node[2] else self.FALSE_DNF
        elif kind == "and":
            r = self._and(self.prog(node[1], letter), self.prog(node[2], letter))
        elif kind == "or":
            r = self._or(self.prog(node[1], letter), self.prog(node[2], letter))
        elif kind == "X":
            r = frozenset({frozenset({2 * node[1]})})
        elif kind == "W":
            r = frozenset({frozenset({2 * node[1] + 1})})
        elif kind == "U":
            r = self._or(self.prog(node[2], letter),
                         self._and(self.prog(node[1], letter), frozenset({frozenset({2 * n})})))
        elif kind == "R":
            r = self._and(self.prog(node[2], letter),
                          self._or(self.prog(node[1], letter), frozenset({frozenset({2 * n + 1})})))
        elif kind == "Fe":
            r = self._or(self.prog(node[1], letter), frozenset({frozenset({2 * n})}))
        elif kind == "G":
            r = self._and(self.prog(node[1], letter), frozenset({frozenset({2 * n + 1})}))
        else:  # pragma: no cover
            raise AssertionError(kind)
        self.prog_memo[key] = r
        return r

    def empty_trace_value(self, n: int) -> bool:
        node = self.nodes[n]
        kind = node[0]
        if kind in ("T", "W", "R", "G"):
            return True
        if kind in ("F", "lit", "X", "U", "Fe"):
            return False
        if kind == "and":
            return self.empty_trace_value(node[1]) and self.empty_trace_value(node[2])
        return self.empty_trace_value(node[1]) or self.empty_trace_value(node[2])

    INIT = "init"

    def delta(self, state, letter: int) -> frozenset:
        if state == self.INIT:
            return self.prog(self.root, letter)
        out: frozenset = self.FALSE_DNF
        for cube in state:
            acc = self.TRUE_DNF
            for term in cube:
                acc = self._and(acc, self.prog(term >> 1, letter))
                if not acc:
                    break
            out = self._or(out, acc)
        return out

    def accept(self, state) -> bool:
        if state == self.INIT:
            return self.empty_trace_value(self.root)
        return any(all(t & 1 for t in cube) for cube in state)


class _PpltlBuilder:
    """Tracks values of the past-memory subformulas at the current position."""

    def __init__(self, f: Formula, atoms: Sequence[Atom]):
        self.index = {a: k for k, a in enumerate(atoms)}
        self.f = desugar(f)
        self.subs = self.f.subformulas()
        memory: dict[Formula, None] = {}
        for g in self.subs:
            if g.op == "before":
                memory[g.args[0]] = None
            elif g.op == "since":
                memory[g] = None
        memory[self.f] = None
        self.memory = list(memory)
        self.root_pos = self.memory.index(self.f)

    INIT = "init"

    def _values(self, prev: dict | None, letter: int | None) -> dict[Formula, bool]:
        val: dict[Formula, bool] = {}
        for g in self.subs:
            op = g.op
            if op == "atom":
                v = letter is not None and bool(letter >> self.index[g.atom] & 1)
            elif op == "true":
                v = True
            elif op == "false":
                v = False
            elif op == "not":
                v = not val[g.args[0]]
            elif op == "and":
                v = val[g.args[0]] and val[g.args[1]]
            elif op == "before":
                v = prev is not None and prev[g.args[0]]
            elif op == "since":
                if letter is None:
                    v = False
                else:
                    v = val[g.args[1]] or (val[g.args[0]] and prev is not None and prev[g])
            else:  # pragma: no cover
                raise FormulaError(f"operator {op!r} in a PPLTL formula")
            val[g] = v
        return val

    def delta(self, state, letter: int):
        prev = None if state == self.INIT else dict(zip(self.memory, state))
        val = self._values(prev, letter)
        return tuple(val[m] for m in self.memory)

    def accept(self, state) -> bool:
        if state == self.INIT:
            return self._values(None, None)[self.f]
        return state[self.root_pos]


def compile_to_dfa(f: Formula, dialect: str | None = None, *, max_states: int = DEFAULT_MAX_STATES,
                   minimal: bool = True) -> Dfa:
    """Compile an LTLf or PPLTL formula into a total DFA over its atoms.

    The DFA reads one interpretation per trace step; a non-empty trace is
    accepted iff the formula holds on it.  Raises StateBudgetExceeded when
    more than ``max_states`` states would be needed.
    """
    d = resolve_dialect(f, dialect)
    atoms = tuple(sorted(f.atoms()))
    if len(atoms) > MAX_ATOMS:
        raise AutomatonError(f"too many atoms ({len(atoms)} > {MAX_ATOMS})")
    builder = _LtlfBuilder(f, atoms) if d == "ltlf" else _PpltlBuilder(f, atoms)
    table, acc = _explore(builder.INIT, builder.accept, builder.delta, 1 << len(atoms), max_states)
    if minimal:
        return _minimize_table(atoms, table, 0, {q for q, a in enumerate(acc) if a})
    return dfa_from_table(atoms, table, 0, [q for q, a in enumerate(acc) if a])


# --------------------------------------------------------------------------- minimization

def _hopcroft(table: Sequence[Sequence[int]], accepting: set[int], nletters: int) -> list[int]:
    """Partition refinement; returns the block id of every state."""
    n = len(table)
    inverse = [[[] for _ in range(n)] for _ in range(nletters)]
    for q, row in enumerate(table):
        for c, t in enumerate(row):
            inverse[c][t].append(q)
    blocks = [b for b in (set(accepting), set(range(n)) - set(accepting)) if b]
    block_of = [0] * n
    for i, b in enumerate(blocks):
        for q in b:
            block_of[q] = i
    work = set(range(len(blocks)))
    while work:
        a = work.pop()
        splitter = set(blocks[a])
        for c in range(nletters):
            x = {p for q in splitter for p in inverse[c][q]}
            if not x:
                continue
            touched: dict[int, set[int]] = {}
            for p in x:
                touched.setdefault(block_of[p], set()).add(p)
            for y, inter in touched.items():
                if len(inter) == len(blocks[y]):
                    continue
                rest = blocks[y] - inter
                blocks[y] = inter
                blocks.append(rest)
                z = len(blocks) - 1
                for q in rest:
                    block_of[q] = z
                if y in work:
                    work.add(z)
                else:
                    work.add(y if len(inter) <= len(rest) else z)
    return block_of


def _minimize_table(atoms, table, initial, accepting) -> Dfa:
    block_of = _hopcroft(table, set(accepting), 1 << len(atoms))
    nblocks = max(block_of) + 1
    quotient: list[list[int] | None] = [None] * nblocks
    for q, row in enumerate(table):
        if quotient[block_of[q]] is None:
            quotient[block_of[q]] = [block_of[t] for t in row]
    acc = {block_of[q] for q in accepting}
    return dfa_from_table(atoms, quotient, block_of[initial], acc)


def minimize(d: Dfa) -> Dfa:
    """Language-equivalent DFA with the fewest states, guards re-canonicalized."""
    return _minimize_table(d.atoms, d.table, d.initial, d.accepting)


def to_dot(d: Dfa | "Pdfa", name: str = "dfa") -> str:
    """GraphViz rendering for debugging."""
    lines = [f"digraph {name} {{", "  rankdir=LR;", '  __start [shape=point, label=""];']
    for q in range(d.num_states):
        shape = "doublecircle" if q in d.accepting else "circle"
        lines.append(f'  q{q} [shape={shape}, label="{d.state_name(q) if isinstance(d, Pdfa) else f"q{q}"}"];')
    lines.append(f"  __start -> q{d.initial};")
    for q, edges in enumerate(d.transitions):
        for g, t in edges:
            label = str(g).replace('"', '\\"')
            lines.append(f'  q{q} -> q{t} [label="{label}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------- parametric DFAs

class ObjectMapping:
    """Bijection between object symbols and free variables (``?x`` style)."""

    def __init__(self, pairs: dict[str, str] | Iterable[tuple[str, str]] = ()):
        items = list(pairs.items()) if isinstance(pairs, dict) else list(pairs)
        fwd: dict[str, str] = {}
        for obj, var in items:
            var = var if var.startswith("?") else "?" + var
            if obj in fwd:
                raise AutomatonError(f"object {obj!r} mapped twice")
            fwd[obj] = var
        if len(set(fwd.values())) != len(fwd):
            raise AutomatonError("object mapping is not injective")
        self.forward = fwd
        self.backward = {v: o for o, v in fwd.items()}

    @classmethod
    def fresh(cls, objects: Sequence[str]) -> "ObjectMapping":
        names = ["x", "y", "z", "w"]
        return cls({o: names[i] if i < len(names) else f"v{i}" for i, o in enumerate(objects)})

    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(self.forward.values())

    @property
    def objects(self) -> tuple[str, ...]:
        return tuple(self.forward)

    def inverse(self) -> dict[str, str]:
        return dict(self.backward)

    def __eq__(self, other) -> bool:
        return isinstance(other, ObjectMapping) and list(self.forward.items()) == list(other.forward.items())

    def __repr__(self) -> str:
        return f"ObjectMapping({self.forward!r})"


@dataclass(frozen=True)
class Pdfa:
    """Lifted DFA: atoms and guards range over the mapping's variables."""

    atoms: tuple[Atom, ...]
    initial: int
    accepting: frozenset[int]
    transitions: tuple[tuple[tuple[Formula, int], ...], ...]
    params: tuple[str, ...]
    mapping: ObjectMapping = field(compare=False)

    @property
    def num_states(self) -> int:
        return len(self.transitions)

    def state_name(self, q: int) -> str:
        return f"q{q}({','.join(self.params)})" if self.params else f"q{q}"


def lift_to_pdfa(d: Dfa, m: ObjectMapping) -> Pdfa:
    """Replace every object of interest by its variable."""
    for a in d.atoms:
        for arg in a.args:
            if arg not in m.forward:
                raise AutomatonError(f"object {arg!r} of atom {a} is not in the mapping")
    fwd = m.forward
    return Pdfa(
        atoms=tuple(a.substitute(fwd) for a in d.atoms),
        initial=d.initial,
        accepting=d.accepting,
        transitions=tuple(tuple((g.substitute(fwd), t) for g, t in edges) for edges in d.transitions),
        params=m.variables,
        mapping=m,
    )


def ground_pdfa(p: Pdfa, binding: dict[str, str]) -> Dfa:
    """Substitute objects for the PDFA variables."""
    binding = {(v if v.startswith("?") else "?" + v): o for v, o in binding.items()}
    missing = [v for v in p.params if v not in binding]
    if missing:
        raise AutomatonError(f"unbound PDFA variable(s): {', '.join(missing)}")
    return Dfa(
        atoms=tuple(a.substitute(binding) for a in p.atoms),
        initial=p.initial,
        accepting=p.accepting,
        transitions=tuple(tuple((g.substitute(binding), t) for g, t in edges) for edges in p.transitions),
    )


def all_letters(atoms: Sequence[Atom]) -> list[frozenset[Atom]]:
    return [frozenset(a for k, a in enumerate(atoms) if letter >> k & 1)
            for letter in range(1 << len(atoms))]


def language_equal(d1: Dfa, d2: Dfa) -> bool:
    """Exact language equivalence via product-automaton search over the joint alphabet."""
    atoms = tuple(sorted(set(d1.atoms) | set(d2.atoms)))
    letters = all_letters(atoms)
    seen = {(d1.initial, d2.initial)}
    queue = deque(seen)
    while queue:
        p, q = queue.popleft()
        for s in letters:
            nxt = (d1.step(p, s), d2.step(q, s))
            if (nxt[0] in d1.accepting) != (nxt[1] in d2.accepting):
                return False
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return True


__all__ = [
    "Dfa", "Pdfa", "ObjectMapping", "AutomatonError", "StateBudgetExceeded", "DEFAULT_MAX_STATES",
    "compile_to_dfa", "accepts", "minimize", "lift_to_pdfa", "ground_pdfa", "to_dot",
    "guard_from_letters", "dfa_from_table", "language_equal", "all_letters",
]
