"""Strong-cyclic and strong FOND planning, policy validation, execution enumeration.

The strong-cyclic solver follows the determinize-plan-repair scheme: weak
plans are found with A* on the all-outcomes determinization, every outcome
the policy can reach is planned for in turn, and states with no plan are
marked as dead ends, after which the actions leading to them are forbidden
and planning restarts.  If that loop fails, an exhaustive fixpoint over the
reachable state space decides the task.
"""

from __future__ import annotations

import heapq
import itertools
import json
import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .logic import Atom
from .pddl import FondModel, PddlError, normalize_action
from .pddl.grounding import State

log = logging.getLogger(__name__)

INF = float("inf")
DEFAULT_MAX_EXECUTIONS = 100_000
DEFAULT_STATE_LIMIT = 500_000


class PlanningError(Exception):
    pass


class ExecutionCapExceeded(PlanningError):
    pass


class StateSpaceTooLarge(PlanningError):
    pass


@dataclass
class Policy:
    """Partial map from states to action ids of one FondModel."""

    mapping: dict[State, int] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.mapping)

    def __contains__(self, s: State) -> bool:
        return s in self.mapping

    def get(self, s: State) -> int | None:
        return self.mapping.get(s)

    def items(self):
        return self.mapping.items()

    def to_json(self, model: FondModel) -> list[dict]:
        rows = [{"state": model.state_text(s), "action": model.actions[a].label} for s, a in self.mapping.items()]
        rows.sort(key=lambda r: (r["state"], r["action"]))
        return rows

    @classmethod
    def from_json(cls, model: FondModel, rows: Iterable[dict]) -> "Policy":
        """Load the JSON state->action format; atoms unknown to the model are ignored."""
        mapping: dict[State, int] = {}
        for row in rows:
            atoms = [Atom.parse(t) for t in row["state"]]
            state = frozenset(model.index[a] for a in atoms if a in model.index)
            label = normalize_action(row["action"])
            ai = model.action_index.get(label)
            if ai is None:
                raise PddlError(f"policy mentions unknown action {label}")
            mapping[state] = ai
        return cls(mapping)

    def dumps(self, model: FondModel) -> str:
        return json.dumps(self.to_json(model), indent=1)


@dataclass(frozen=True)
class Execution:
    """Alternating states/actions; ``states`` has one more entry than ``actions``."""

    states: tuple[State, ...]
    actions: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.actions)


# ---------------------------------------------------------------- heuristic

class _HAdd:
    """Additive delete-relaxation heuristic with a generalized Dijkstra."""

    def __init__(self, model: FondModel):
        self.model = model
        ops: list[tuple[tuple[int, ...], tuple[int, ...]]] = []
        for a in model.actions:
            adds_by_cube: list[tuple[frozenset, frozenset]] = []
            for alt in a.alternatives:
                for ce in alt:
                    for pos, _ in ce.condition:
                        adds_by_cube.append((pos, ce.add))
            for pre, _ in a.precondition:
                for cpos, add in adds_by_cube:
                    if add:
                        ops.append((tuple(sorted(pre | cpos)), tuple(sorted(add))))
        self.ops = list(dict.fromkeys(ops))
        self.pre_of: dict[int, list[int]] = {}
        for k, (pre, _) in enumerate(self.ops):
            for p in pre:
                self.pre_of.setdefault(p, []).append(k)
        self.free_ops = [k for k, (pre, _) in enumerate(self.ops) if not pre]
        self.goal = [tuple(sorted(pos)) for pos, _ in model.goal]
        self.cache: dict[State, float] = {}

    def __call__(self, s: State) -> float:
        h = self.cache.get(s)
        if h is not None:
            return h
        if not self.goal:
            self.cache[s] = INF
            return INF
        cost: dict[int, float] = {}
        missing = [len(pre) for pre, _ in self.ops]
        acc = [0.0] * len(self.ops)
        heap: list[tuple[float, int]] = [(0.0, p) for p in s]
        for p in s:
            cost[p] = 0.0
        for k in self.free_ops:
            for q in self.ops[k][1]:
                if cost.get(q, INF) > 1.0:
                    cost[q] = 1.0
                    heapq.heappush(heap, (1.0, q))
        done: set[int] = set()
        while heap:
            c, p = heapq.heappop(heap)
            if p in done or c > cost.get(p, INF):
                continue
            done.add(p)
            for k in self.pre_of.get(p, ()):
                acc[k] += c
                missing[k] -= 1
                if missing[k] == 0:
                    nc = acc[k] + 1.0
                    for q in self.ops[k][1]:
                        if nc < cost.get(q, INF):
                            cost[q] = nc
                            heapq.heappush(heap, (nc, q))
        h = min(sum(cost.get(p, INF) for p in cube) for cube in self.goal)
        self.cache[s] = h
        return h


# ---------------------------------------------------------------- strong-cyclic

def _astar(model: FondModel, start: State, policy: dict, forbidden: set, dead: set,
           h: _HAdd, max_expansions: int) -> list[tuple[State, int]] | None:
    """Weak plan on the all-outcomes determinization, to the goal or a policy state."""
    counter = itertools.count()
    h0 = h(start)
    if h0 == INF:
        return None
    frontier = [(h0, h0, next(counter), start)]
    parent: dict[State, tuple[State, int] | None] = {start: None}
    g = {start: 0}
    closed: set[State] = set()
    expansions = 0
    while frontier:
        _, _, _, s = heapq.heappop(frontier)
        if s in closed:
            continue
        closed.add(s)
        if s != start and (model.is_goal(s) or s in policy):
            path = []
            while parent[s] is not None:
                prev, a = parent[s]
                path.append((prev, a))
                s = prev
            return path[::-1]
        expansions += 1
        if expansions > max_expansions:
            raise StateSpaceTooLarge(f"weak-plan search exceeded {max_expansions} expansions")
        for ai in model.applicable_actions(s):
            if (s, ai) in forbidden:
                continue
            succ = model.successors(s, ai)
            if any(t in dead for t in succ):
                forbidden.add((s, ai))
                continue
            for t in succ:
                ng = g[s] + 1
                if ng < g.get(t, INF):
                    ht = h(t)
                    if ht == INF and not (model.is_goal(t) or t in policy):
                        dead.add(t)
                        continue
                    g[t] = ng
                    parent[t] = (s, ai)
                    heapq.heappush(frontier, (ng + ht, ht, next(counter), t))
    return None


def _prp(model: FondModel, max_expansions: int, max_rounds: int) -> Policy | None:
    h = _HAdd(model)
    dead: set[State] = set()
    forbidden: set[tuple[State, int]] = set()
    for _ in range(max_rounds):
        policy: dict[State, int] = {}
        restart = False
        queue = deque([model.init])
        seen = {model.init}
        while queue:
            s = queue.popleft()
            if model.is_goal(s):
                continue
            if s not in policy:
                path = _astar(model, s, policy, forbidden, dead, h, max_expansions)
                if path is None:
                    if s == model.init:
                        return None
                    dead.add(s)
                    for p, a in list(policy.items()):
                        if s in model.successors(p, a):
                            forbidden.add((p, a))
                    restart = True
                    break
                for p, a in path:
                    policy.setdefault(p, a)
            for t in model.successors(s, policy[s]):
                if t in dead:
                    forbidden.add((s, policy[s]))
                    restart = True
                    break
                if t not in seen:
                    seen.add(t)
                    queue.append(t)
            if restart:
                break
        if not restart:
            return _trim(model, Policy(policy))
    return None


def _reachable(model: FondModel, limit: int) -> list[State]:
    seen = {model.init: None}
    queue = deque([model.init])
    while queue:
        s = queue.popleft()
        if model.is_goal(s):
            continue
        for ai in model.applicable_actions(s):
            for t in model.successors(s, ai):
                if t not in seen:
                    if len(seen) >= limit:
                        raise StateSpaceTooLarge(f"more than {limit} reachable states")
                    seen[t] = None
                    queue.append(t)
    return list(seen)


def _fixpoint_strong_cyclic(model: FondModel, limit: int) -> Policy | None:
    states = _reachable(model, limit)
    alive = set(states)
    while True:
        good: dict[State, list[int]] = {}
        for s in alive:
            if model.is_goal(s):
                continue
            good[s] = [ai for ai in model.applicable_actions(s)
                       if all(t in alive for t in model.successors(s, ai))]
        # backward reachability to the goal along good actions
        dist = {s: 0 for s in alive if model.is_goal(s)}
        changed = True
        layer = 0
        while changed:
            changed = False
            layer += 1
            for s, acts in good.items():
                if s in dist:
                    continue
                for ai in acts:
                    if any(dist.get(t, INF) < layer for t in model.successors(s, ai)):
                        dist[s] = layer
                        changed = True
                        break
        if set(dist) == alive:
            break
        alive = set(dist)
        if model.init not in alive:
            return None
    if model.init not in alive:
        return None
    policy = {}
    for s, acts in good.items():
        best = [ai for ai in acts if any(dist[t] < dist[s] for t in model.successors(s, ai))]
        policy[s] = min(best)
    return _trim(model, Policy(policy))


def _trim(model: FondModel, policy: Policy) -> Policy:
    """Keep only entries reachable from the initial state under the policy."""
    keep: dict[State, int] = {}
    queue = deque([model.init])
    seen = {model.init}
    while queue:
        s = queue.popleft()
        if model.is_goal(s) or s not in policy.mapping:
            continue
        keep[s] = policy.mapping[s]
        for t in model.successors(s, keep[s]):
            if t not in seen:
                seen.add(t)
                queue.append(t)
    return Policy(keep)


def solve_strong_cyclic(model: FondModel, *, max_expansions: int = 200_000, max_rounds: int = 25,
                        state_limit: int = DEFAULT_STATE_LIMIT) -> Policy | None:
    """A strong-cyclic policy, or None when the task has none."""
    if model.is_goal(model.init):
        return Policy({})
    if not model.goal:
        return None
    try:
        policy = _prp(model, max_expansions, max_rounds)
    except StateSpaceTooLarge:
        policy = None
    if policy is not None and validate(model, policy, "strong-cyclic"):
        return policy
    log.debug("determinize-plan-repair failed on %s; running the exhaustive fixpoint", model.name)
    return _fixpoint_strong_cyclic(model, state_limit)


def solve_strong(model: FondModel, *, state_limit: int = DEFAULT_STATE_LIMIT) -> Policy | None:
    """An acyclic policy that reaches the goal under every outcome, or None."""
    if model.is_goal(model.init):
        return Policy({})
    states = _reachable(model, state_limit)
    rank = {s: 0 for s in states if model.is_goal(s)}
    choice: dict[State, int] = {}
    pending = [s for s in states if s not in rank]
    level = 0
    while model.init not in rank:
        level += 1
        new = {}
        for s in pending:
            best = None
            for ai in model.applicable_actions(s):
                succ = model.successors(s, ai)
                if all(t in rank for t in succ):
                    worst = max(rank[t] for t in succ)
                    if best is None or worst < best[0]:
                        best = (worst, ai)
            if best is not None:
                new[s] = best[1]
        if not new:
            return None
        for s, ai in new.items():
            rank[s] = level
            choice[s] = ai
        pending = [s for s in pending if s not in rank]
    return _trim(model, Policy(choice))


# ---------------------------------------------------------------- validation

def policy_graph(model: FondModel, policy: Policy) -> tuple[dict[State, tuple[State, ...]], bool]:
    """Successor map of the reachable policy graph and whether it is closed.

    Closed means every reachable non-goal state has an applicable policy action.
    """
    graph: dict[State, tuple[State, ...]] = {}
    queue = deque([model.init])
    ok = True
    while queue:
        s = queue.popleft()
        if s in graph:
            continue
        if model.is_goal(s):
            graph[s] = ()
            continue
        ai = policy.get(s)
        if ai is None or not model.applicable(s, ai):
            graph[s] = ()
            ok = False
            continue
        graph[s] = model.successors(s, ai)
        queue.extend(t for t in graph[s] if t not in graph)
    return graph, ok


def validate(model: FondModel, policy: Policy, mode: str = "strong-cyclic") -> bool:
    """Exhaustive AND-OR check of the policy graph."""
    if mode not in ("strong", "strong-cyclic"):
        raise ValueError(f"unknown mode {mode!r}")
    graph, closed = policy_graph(model, policy)
    if not closed:
        return False
    reverse: dict[State, list[State]] = {s: [] for s in graph}
    for s, succ in graph.items():
        for t in succ:
            reverse[t].append(s)
    reach = {s for s in graph if model.is_goal(s)}
    queue = deque(reach)
    while queue:
        t = queue.popleft()
        for s in reverse[t]:
            if s not in reach:
                reach.add(s)
                queue.append(s)
    if len(reach) != len(graph):
        return False
    if mode == "strong":
        return not _has_cycle(graph)
    return True


def _has_cycle(graph: dict[State, tuple[State, ...]]) -> bool:
    colour: dict[State, int] = {}
    for root in graph:
        if root in colour:
            continue
        stack = [(root, iter(graph[root]))]
        colour[root] = 1
        while stack:
            s, it = stack[-1]
            for t in it:
                c = colour.get(t, 0)
                if c == 1:
                    return True
                if c == 0:
                    colour[t] = 1
                    stack.append((t, iter(graph[t])))
                    break
            else:
                colour[s] = 2
                stack.pop()
    return False


# ---------------------------------------------------------------- executions

def iter_executions(model: FondModel, policy: Policy, loop_bound: int = 1) -> Iterator[Execution]:
    """Depth-first policy unrolling; a state may repeat ``loop_bound`` times on a path."""
    if loop_bound < 0:
        raise ValueError("loop_bound must be >= 0")
    limit = 1 + loop_bound
    count: dict[State, int] = {model.init: 1}
    states = [model.init]
    actions: list[str] = []

    def rec(s: State):
        if model.is_goal(s):
            yield Execution(tuple(states), tuple(actions))
            return
        ai = policy.get(s)
        if ai is None:
            return
        actions.append(model.actions[ai].label)
        for t in model.successors(s, ai):
            if count.get(t, 0) >= limit:
                continue
            count[t] = count.get(t, 0) + 1
            states.append(t)
            yield from rec(t)
            states.pop()
            count[t] -= 1
        actions.pop()

    yield from rec(model.init)


def enumerate_executions(model: FondModel, policy: Policy, loop_bound: int = 1,
                         max_executions: int = DEFAULT_MAX_EXECUTIONS) -> list[Execution]:
    """Goal-reaching executions, distinct by action sequence, in canonical DFS order."""
    out: dict[tuple[str, ...], Execution] = {}
    raw = 0
    for ex in iter_executions(model, policy, loop_bound):
        raw += 1
        if ex.actions not in out:
            out[ex.actions] = ex
            if len(out) > max_executions:
                raise ExecutionCapExceeded(f"more than {max_executions} executions")
        if raw > 10 * max_executions:
            raise ExecutionCapExceeded(f"more than {10 * max_executions} raw execution paths")
    return list(out.values())


def executions_to_json(execs: Iterable[Execution]) -> list[list[str]]:
    return [list(e.actions) for e in execs]


__all__ = [
    "Policy", "Execution", "PlanningError", "ExecutionCapExceeded", "StateSpaceTooLarge",
    "solve_strong_cyclic", "solve_strong", "validate", "policy_graph", "enumerate_executions",
    "iter_executions", "executions_to_json",
]
