"""LTLf and PPLTL formulas: syntax tree, text parser, desugaring and finite-trace semantics.

Formulas are immutable and hashable.  A formula is either pure-future (LTLf),
pure-past (PPLTL) or purely propositional; which position a propositional
formula is checked at depends on the dialect it is read in.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

FUTURE_OPS = frozenset({"next", "weak-next", "until", "eventually", "always"})
PAST_OPS = frozenset({"before", "since", "once", "historically"})
BOOL_OPS = frozenset({"atom", "true", "false", "not", "and", "or"})

_ARITY = {
    "atom": 0, "true": 0, "false": 0,
    "not": 1, "next": 1, "weak-next": 1, "eventually": 1, "always": 1,
    "before": 1, "once": 1, "historically": 1,
    "and": 2, "or": 2, "until": 2, "since": 2,
}

DIALECTS = ("ltlf", "ppltl")


class FormulaError(ValueError):
    """Raised for malformed formula text or ill-formed formula trees."""

    def __init__(self, message: str, position: int | None = None):
        self.position = position
        if position is not None:
            message = f"{message} (at column {position})"
        super().__init__(message)


class MixedTenseError(FormulaError):
    pass


@dataclass(frozen=True, order=True)
class Atom:
    name: str
    args: tuple[str, ...] = ()

    def __post_init__(self):
        if not _IDENT.fullmatch(self.name):
            raise FormulaError(f"invalid atom name {self.name!r}")
        object.__setattr__(self, "args", tuple(self.args))

    @property
    def is_lifted(self) -> bool:
        return any(a.startswith("?") for a in self.args)

    def substitute(self, mapping: dict[str, str]) -> "Atom":
        return Atom(self.name, tuple(mapping.get(a, a) for a in self.args))

    def __str__(self) -> str:
        if not self.args:
            return self.name
        return f"{self.name}({','.join(self.args)})"

    @classmethod
    def parse(cls, text: str) -> "Atom":
        f = parse_formula(text)
        if f.op != "atom":
            raise FormulaError(f"not an atom: {text!r}")
        return f.atom


class Formula:
    """A node of an LTLf/PPLTL syntax tree."""

    __slots__ = ("op", "args", "atom", "_hash")

    def __init__(self, op: str, args: Sequence["Formula"] = (), atom: Atom | None = None):
        if op not in _ARITY:
            raise FormulaError(f"unknown operator {op!r}")
        args = tuple(args)
        if len(args) != _ARITY[op]:
            raise FormulaError(f"operator {op!r} takes {_ARITY[op]} operand(s), got {len(args)}")
        if (op == "atom") != (atom is not None):
            raise FormulaError("atom nodes (and only atom nodes) carry an Atom")
        object.__setattr__(self, "op", op)
        object.__setattr__(self, "args", args)
        object.__setattr__(self, "atom", atom)
        object.__setattr__(self, "_hash", hash((op, args, atom)))

    def __setattr__(self, key, value):
        raise AttributeError("Formula is immutable")

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        if not isinstance(other, Formula) or self._hash != other._hash:
            return False
        return self.op == other.op and self.atom == other.atom and self.args == other.args

    def __reduce__(self):
        return (Formula, (self.op, self.args, self.atom))

    def __repr__(self) -> str:
        return f"Formula({str(self)!r})"

    def __str__(self) -> str:
        return _to_text(self)

    def subformulas(self) -> list["Formula"]:
        """Distinct subformulas in post-order (children before parents)."""
        seen: dict[Formula, None] = {}

        def walk(f: Formula) -> None:
            if f in seen:
                return
            for a in f.args:
                walk(a)
            seen[f] = None

        walk(self)
        return list(seen)

    def atoms(self) -> list[Atom]:
        out: dict[Atom, None] = {}
        for f in self.subformulas():
            if f.op == "atom":
                out[f.atom] = None
        return list(out)

    def substitute(self, mapping: dict[str, str]) -> "Formula":
        """Rename atom arguments (objects or variables) throughout."""
        if self.op == "atom":
            return Formula("atom", atom=self.atom.substitute(mapping))
        if not self.args:
            return self
        return Formula(self.op, [a.substitute(mapping) for a in self.args])

    def map_atoms(self, fn) -> "Formula":
        if self.op == "atom":
            return fn(self.atom)
        if not self.args:
            return self
        return Formula(self.op, [a.map_atoms(fn) for a in self.args])


TRUE = Formula("true")
FALSE = Formula("false")


def atom(name: str, *args: str) -> Formula:
    return Formula("atom", atom=Atom(name, tuple(args)))


def lnot(f: Formula) -> Formula:
    return Formula("not", [f])


def land(*fs: Formula) -> Formula:
    """Left-nested conjunction; ``land()`` is TRUE."""
    if not fs:
        return TRUE
    out = fs[0]
    for f in fs[1:]:
        out = Formula("and", [out, f])
    return out


def lor(*fs: Formula) -> Formula:
    if not fs:
        return FALSE
    out = fs[0]
    for f in fs[1:]:
        out = Formula("or", [out, f])
    return out


def next_(f: Formula) -> Formula:
    return Formula("next", [f])


def weak_next(f: Formula) -> Formula:
    return Formula("weak-next", [f])


def until(a: Formula, b: Formula) -> Formula:
    return Formula("until", [a, b])


def eventually(f: Formula) -> Formula:
    return Formula("eventually", [f])


def always(f: Formula) -> Formula:
    return Formula("always", [f])


def before(f: Formula) -> Formula:
    return Formula("before", [f])


def since(a: Formula, b: Formula) -> Formula:
    return Formula("since", [a, b])


def once(f: Formula) -> Formula:
    return Formula("once", [f])


def historically(f: Formula) -> Formula:
    return Formula("historically", [f])


def tense(f: Formula) -> str | None:
    """'future', 'past', or None for a purely propositional formula."""
    ops = {g.op for g in f.subformulas()}
    fut, past = bool(ops & FUTURE_OPS), bool(ops & PAST_OPS)
    if fut and past:
        raise MixedTenseError(f"formula mixes future and past operators: {f}")
    if fut:
        return "future"
    if past:
        return "past"
    return None


def resolve_dialect(f: Formula, dialect: str | None = None) -> str:
    """Pick the evaluation dialect; propositional formulas default to LTLf."""
    t = tense(f)
    if dialect is None:
        return "ppltl" if t == "past" else "ltlf"
    if dialect not in DIALECTS:
        raise FormulaError(f"unknown dialect {dialect!r}; expected one of {DIALECTS}")
    if (dialect == "ltlf" and t == "past") or (dialect == "ppltl" and t == "future"):
        raise MixedTenseError(f"{dialect} formula uses {t} operators: {f}")
    return dialect


# --------------------------------------------------------------------------- text

_IDENT = re.compile(r"[a-zA-Z_][a-zA-Z0-9_-]*")
_TOKEN = re.compile(
    r"\s*(?:(?P<lp>\()|(?P<rp>\))|(?P<comma>,)|(?P<op>!|&|\|)"
    r"|(?P<term>\?[a-zA-Z0-9_-]+|[a-zA-Z0-9_][a-zA-Z0-9_-]*))"
)
_UNARY = {"!": "not", "X": "next", "WX": "weak-next", "F": "eventually", "G": "always",
          "Y": "before", "O": "once", "H": "historically"}
_BINARY_TEMPORAL = {"U": "until", "S": "since"}
_KEYWORDS = set(_UNARY) | set(_BINARY_TEMPORAL) | {"true", "false"}


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            col = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise FormulaError(f"unexpected character {text[col]!r}", col)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("eof", "", len(text)))
    return tokens


class _Parser:
    # or < and < until/since (right assoc) < unary

    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.i]

    def take(self) -> tuple[str, str, int]:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, kind: str) -> tuple[str, str, int]:
        tok = self.take()
        if tok[0] != kind:
            want = {"lp": "'('", "rp": "')'", "comma": "','", "term": "a name"}.get(kind, kind)
            raise FormulaError(f"expected {want}, found {tok[1] or 'end of input'!r}", tok[2])
        return tok

    def parse(self) -> Formula:
        f = self.parse_or()
        tok = self.peek()
        if tok[0] != "eof":
            raise FormulaError(f"unexpected token {tok[1]!r}", tok[2])
        return f

    def parse_or(self) -> Formula:
        left = self.parse_and()
        while self.peek()[:2] == ("op", "|"):
            self.take()
            left = Formula("or", [left, self.parse_and()])
        return left

    def parse_and(self) -> Formula:
        left = self.parse_temporal()
        while self.peek()[:2] == ("op", "&"):
            self.take()
            left = Formula("and", [left, self.parse_temporal()])
        return left

    def parse_temporal(self) -> Formula:
        left = self.parse_unary()
        kind, val, _ = self.peek()
        if kind == "term" and val in _BINARY_TEMPORAL:
            self.take()
            return Formula(_BINARY_TEMPORAL[val], [left, self.parse_temporal()])
        return left

    def parse_unary(self) -> Formula:
        kind, val, pos = self.take()
        if kind == "op" and val == "!":
            return Formula("not", [self.parse_unary()])
        if kind == "lp":
            f = self.parse_or()
            self.expect("rp")
            return f
        if kind == "term":
            if val in _UNARY:
                return Formula(_UNARY[val], [self.parse_unary()])
            if val == "true":
                return TRUE
            if val == "false":
                return FALSE
            if val in _BINARY_TEMPORAL:
                raise FormulaError(f"binary operator {val!r} lacks a left operand", pos)
            if not _IDENT.fullmatch(val):
                raise FormulaError(f"invalid atom name {val!r}", pos)
            args: list[str] = []
            if self.peek()[0] == "lp":
                self.take()
                while True:
                    k, a, apos = self.take()
                    if k != "term" or a in _KEYWORDS:
                        raise FormulaError(f"expected an atom argument, found {a or 'end of input'!r}", apos)
                    args.append(a)
                    k, _, cpos = self.take()
                    if k == "rp":
                        break
                    if k != "comma":
                        raise FormulaError("expected ',' or ')' in atom arguments", cpos)
            return Formula("atom", atom=Atom(val, tuple(args)))
        raise FormulaError(f"unexpected {val or 'end of input'!r}", pos)


def parse_formula(text: str, dialect: str | None = None) -> Formula:
    """Parse ASCII formula text.

    Operators: ``! & |`` and ``X WX U F G`` (future), ``Y S O H`` (past).
    Atoms are identifiers with an optional argument list, e.g. ``vAt(51)``.
    With a ``dialect`` the formula must fit it (no past operators in ``ltlf``
    and vice versa); mixing tenses is always an error.
    """
    f = _Parser(text).parse()
    resolve_dialect(f, dialect)
    return f


_PREC = {"or": 1, "and": 2, "until": 3, "since": 3}
_SYMBOL = {v: k for k, v in _UNARY.items()}


def _to_text(f: Formula) -> str:
    def go(g: Formula, ctx: int) -> str:
        op = g.op
        if op == "atom":
            return str(g.atom)
        if op in ("true", "false"):
            return op
        if op in _SYMBOL:
            sym = _SYMBOL[op]
            inner = go(g.args[0], 4)
            return f"{sym}{inner}" if sym == "!" else f"{sym}({go(g.args[0], 0)})"
        prec = _PREC[op]
        if op in ("until", "since"):
            # right associative
            s = f"{go(g.args[0], prec + 1)} {'U' if op == 'until' else 'S'} {go(g.args[1], prec)}"
        else:
            s = f"{go(g.args[0], prec)} {'&' if op == 'and' else '|'} {go(g.args[1], prec + 1)}"
        return f"({s})" if prec < ctx else s

    return go(f, 0)


# --------------------------------------------------------------------------- desugar

def desugar(f: Formula) -> Formula:
    """Rewrite abbreviations into the core operators.

    Future core: atom, not, and, next, until.  Past core: atom, not, and,
    before, since.  ``true``/``false`` constants are kept.
    """
    memo: dict[Formula, Formula] = {}

    def go(g: Formula) -> Formula:
        if g in memo:
            return memo[g]
        op = g.op
        a = [go(x) for x in g.args]
        if op in ("atom", "true", "false"):
            r = g
        elif op == "or":
            r = lnot(land(lnot(a[0]), lnot(a[1])))
        elif op == "weak-next":
            r = lnot(next_(lnot(a[0])))
        elif op == "eventually":
            r = until(TRUE, a[0])
        elif op == "always":
            r = lnot(until(TRUE, lnot(a[0])))
        elif op == "once":
            r = since(TRUE, a[0])
        elif op == "historically":
            r = lnot(since(TRUE, lnot(a[0])))
        else:
            r = Formula(op, a)
        memo[g] = r
        return r

    return go(f)


# --------------------------------------------------------------------------- semantics

Trace = tuple[frozenset[Atom], ...]


def _coerce_atom(x) -> Atom:
    if isinstance(x, Atom):
        return x
    if isinstance(x, str):
        return Atom.parse(x)
    raise TypeError(f"cannot interpret {x!r} as an atom")


def make_trace(steps: Iterable[Iterable]) -> Trace:
    """Build a trace from step collections of Atoms or atom strings like ``'vAt(51)'``."""
    return tuple(frozenset(_coerce_atom(a) for a in step) for step in steps)


def _table(f: Formula, trace: Trace) -> dict[Formula, list[bool]]:
    """Truth value of every subformula at every position, bottom-up."""
    n = len(trace)
    val: dict[Formula, list[bool]] = {}
    for g in f.subformulas():
        op = g.op
        if op == "atom":
            v = [g.atom in step for step in trace]
        elif op == "true":
            v = [True] * n
        elif op == "false":
            v = [False] * n
        elif op == "not":
            v = [not x for x in val[g.args[0]]]
        elif op == "and":
            v = [x and y for x, y in zip(val[g.args[0]], val[g.args[1]])]
        elif op == "or":
            v = [x or y for x, y in zip(val[g.args[0]], val[g.args[1]])]
        elif op == "next":
            c = val[g.args[0]]
            v = [i + 1 < n and c[i + 1] for i in range(n)]
        elif op == "weak-next":
            c = val[g.args[0]]
            v = [i + 1 >= n or c[i + 1] for i in range(n)]
        elif op in ("until", "eventually"):
            if op == "until":
                a, b = val[g.args[0]], val[g.args[1]]
            else:
                a, b = [True] * n, val[g.args[0]]
            v = [False] * n
            nxt = False
            for i in range(n - 1, -1, -1):
                nxt = b[i] or (a[i] and nxt)
                v[i] = nxt
        elif op == "always":
            c = val[g.args[0]]
            v = [False] * n
            nxt = True
            for i in range(n - 1, -1, -1):
                nxt = c[i] and nxt
                v[i] = nxt
        elif op == "before":
            c = val[g.args[0]]
            v = [i >= 1 and c[i - 1] for i in range(n)]
        elif op in ("since", "once"):
            if op == "since":
                a, b = val[g.args[0]], val[g.args[1]]
            else:
                a, b = [True] * n, val[g.args[0]]
            v = [False] * n
            prev = False
            for i in range(n):
                prev = b[i] or (a[i] and prev)
                v[i] = prev
        elif op == "historically":
            c = val[g.args[0]]
            v = [False] * n
            prev = True
            for i in range(n):
                prev = c[i] and prev
                v[i] = prev
        else:  # pragma: no cover
            raise FormulaError(f"unknown operator {op!r}")
        val[g] = v
    return val


def holds_at(f: Formula, trace: Trace, i: int) -> bool:
    """Whether ``f`` holds at position ``i`` of ``trace``."""
    trace = make_trace(trace)
    if not 0 <= i < len(trace):
        raise IndexError(f"position {i} outside trace of length {len(trace)}")
    tense(f)
    return _table(f, trace)[f][i]


def holds(f: Formula, trace: Trace, dialect: str | None = None) -> bool:
    """Trace satisfaction: future formulas at the first position, past ones at the last."""
    trace = make_trace(trace)
    if not trace:
        raise ValueError("formulas are evaluated on non-empty traces only")
    d = resolve_dialect(f, dialect)
    return _table(f, trace)[f][0 if d == "ltlf" else len(trace) - 1]


def eval_propositional(f: Formula, letter: frozenset[Atom] | set[Atom]) -> bool:
    """Evaluate a temporal-operator-free formula against one interpretation."""
    op = f.op
    if op == "atom":
        return f.atom in letter
    if op == "true":
        return True
    if op == "false":
        return False
    if op == "not":
        return not eval_propositional(f.args[0], letter)
    if op == "and":
        return eval_propositional(f.args[0], letter) and eval_propositional(f.args[1], letter)
    if op == "or":
        return eval_propositional(f.args[0], letter) or eval_propositional(f.args[1], letter)
    raise FormulaError(f"temporal operator {op!r} in a propositional context")


def holds_batch(f: Formula, letters: np.ndarray, atoms: Sequence[Atom],
                dialect: str | None = None) -> np.ndarray:
    """Vectorized ``holds`` over many equal-length traces.

    ``letters`` has shape (num_traces, length); entry ``[k, i]`` is a bitmask
    over ``atoms`` giving the interpretation at step ``i`` of trace ``k``.
    """
    letters = np.asarray(letters)
    if letters.ndim != 2 or letters.shape[1] == 0:
        raise ValueError("letters must be a non-empty (num_traces, length) array")
    d = resolve_dialect(f, dialect)
    index = {a: k for k, a in enumerate(atoms)}
    n = letters.shape[1]
    val: dict[Formula, np.ndarray] = {}
    ones = np.ones(letters.shape, dtype=bool)
    for g in f.subformulas():
        op = g.op
        if op == "atom":
            k = index.get(g.atom)
            v = np.zeros(letters.shape, dtype=bool) if k is None else ((letters >> k) & 1).astype(bool)
        elif op == "true":
            v = ones
        elif op == "false":
            v = ~ones
        elif op == "not":
            v = ~val[g.args[0]]
        elif op == "and":
            v = val[g.args[0]] & val[g.args[1]]
        elif op == "or":
            v = val[g.args[0]] | val[g.args[1]]
        elif op in ("next", "weak-next"):
            c = val[g.args[0]]
            v = np.empty_like(c)
            v[:, :-1] = c[:, 1:]
            v[:, -1] = op == "weak-next"
        elif op == "before":
            c = val[g.args[0]]
            v = np.empty_like(c)
            v[:, 1:] = c[:, :-1]
            v[:, 0] = False
        elif op in ("until", "eventually", "always"):
            if op == "until":
                a, b = val[g.args[0]], val[g.args[1]]
            elif op == "eventually":
                a, b = ones, val[g.args[0]]
            else:
                a, b = val[g.args[0]], None
            v = np.empty_like(ones)
            if op == "always":
                cur = np.ones(len(letters), dtype=bool)
                for i in range(n - 1, -1, -1):
                    cur = a[:, i] & cur
                    v[:, i] = cur
            else:
                cur = np.zeros(len(letters), dtype=bool)
                for i in range(n - 1, -1, -1):
                    cur = b[:, i] | (a[:, i] & cur)
                    v[:, i] = cur
        elif op in ("since", "once", "historically"):
            if op == "since":
                a, b = val[g.args[0]], val[g.args[1]]
            elif op == "once":
                a, b = ones, val[g.args[0]]
            else:
                a, b = val[g.args[0]], None
            v = np.empty_like(ones)
            if op == "historically":
                cur = np.ones(len(letters), dtype=bool)
                for i in range(n):
                    cur = a[:, i] & cur
                    v[:, i] = cur
            else:
                cur = np.zeros(len(letters), dtype=bool)
                for i in range(n):
                    cur = b[:, i] | (a[:, i] & cur)
                    v[:, i] = cur
        else:  # pragma: no cover
            raise FormulaError(f"unknown operator {op!r}")
        val[g] = v
    return val[f][:, 0 if d == "ltlf" else n - 1].copy()
