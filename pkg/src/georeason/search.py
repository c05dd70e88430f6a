"""Baseline theorem-sequence searchers.

Forward search walks the state graph from the initial state.  Backward
search regresses the goal through theorem conclusions into subgoals until
every open subgoal holds initially, then orders the collected theorems into
a forward sequence.  Either way a reported solution has been replayed by the
environment, so a searcher can never claim an unsound proof.
"""

from __future__ import annotations

import itertools
import json
import random
import time
from collections import deque
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from .algebra import AlgebraError, equation_key
from .deduction import Action, Environment, Explorer, State
from .lang import (Attr, Eq, Fact, Problem, RelationGoal, ValueGoal, equation_attrs,
                   term_attrs)

__all__ = [
    "STRATEGIES", "METHODS", "SearchBudget", "SearchResult", "Subgoal",
    "solve_forward", "solve_backward", "solve", "benchmark", "format_benchmark",
]

STRATEGIES = ("BFS", "DFS", "RS", "BS")
METHODS = ("fw-bfs", "fw-dfs", "fw-rs", "fw-bs", "bw-bfs", "bw-dfs", "bw-rs", "bw-bs")


@dataclass(frozen=True)
class SearchBudget:
    max_nodes: int = 500
    max_depth: int = 30
    wall_timeout: float = 60.0
    beam_width: int = 4
    rng_seed: int = 0

    def __post_init__(self):
        # a zero timeout is accepted and means "give up immediately"
        if self.max_nodes < 1 or self.max_depth < 1 or self.beam_width < 1:
            raise ValueError("max_nodes, max_depth and beam_width must be positive")
        if self.wall_timeout < 0:
            raise ValueError("wall_timeout must be non-negative")


@dataclass
class SearchResult:
    solved: bool
    sequence: List[Action]
    nodes_expanded: int
    elapsed: float
    strategy: str

    def to_dict(self, with_time: bool = True) -> dict:
        out = {"solved": self.solved, "sequence": [a.to_dict() for a in self.sequence],
               "nodes_expanded": self.nodes_expanded, "strategy": self.strategy}
        if with_time:
            out["elapsed"] = round(self.elapsed, 6)
        return out


class _Clock:
    def __init__(self, budget: SearchBudget):
        self.budget = budget
        self.start = time.perf_counter()
        self.expanded = 0

    def exhausted(self) -> bool:
        return (self.expanded >= self.budget.max_nodes
                or time.perf_counter() - self.start >= self.budget.wall_timeout)

    def elapsed(self) -> float:
        return time.perf_counter() - self.start


def _finish(env: Environment, problem: Problem, seq: Sequence[int], clock: _Clock,
            label: str) -> SearchResult:
    actions = [env.actions[i] for i in seq]
    ok = env.verify_sequence(problem, actions).solved
    return SearchResult(ok, actions if ok else [], clock.expanded, clock.elapsed(), label)


def _fail(clock: _Clock, label: str) -> SearchResult:
    return SearchResult(False, [], clock.expanded, clock.elapsed(), label)


# --------------------------------------------------------------------------
# forward


def solve_forward(env: Environment, problem: Problem, strategy: str = "BFS",
                  budget: SearchBudget = SearchBudget()) -> SearchResult:
    """Forward search from the initial state.

    ``nodes_expanded`` counts generated successor states, i.e. theorem
    applications, the same unit as one MCTS expansion.  Revisited states
    (equal digests) are skipped.  Random walks pay for every step, even one
    that repeats an earlier transition.
    """
    strategy = strategy.upper()
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    label = f"fw-{strategy.lower()}"
    clock = _Clock(budget)
    ex = Explorer(env, problem)
    if ex.solved(ex.root):
        return _finish(env, problem, [], clock, label)
    if budget.wall_timeout == 0:
        return _fail(clock, label)
    depth_cap = min(budget.max_depth, env.max_steps)
    runner = {"BFS": _bfs, "DFS": _dfs, "RS": _random, "BS": _beam}[strategy]
    seq = runner(ex, clock, depth_cap, budget)
    if seq is None:
        return _fail(clock, label)
    return _finish(env, problem, seq, clock, label)


def _bfs(ex: Explorer, clock: _Clock, depth_cap: int, budget) -> Optional[list]:
    seen = {ex.root.digest}
    queue = deque([(ex.root, ())])
    while queue:
        state, path = queue.popleft()
        for a in ex.legal(state):
            if clock.exhausted():
                return None
            child, n = ex.apply(state, a)
            clock.expanded = ex.applications
            if not n or child.digest in seen:
                continue
            if ex.solved(child):
                return list(path) + [a]
            seen.add(child.digest)
            if len(path) + 1 < depth_cap:
                queue.append((child, path + (a,)))
    return None


def _dfs(ex: Explorer, clock: _Clock, depth_cap: int, budget) -> Optional[list]:
    seen = {ex.root.digest}
    stack = [(ex.root, ())]
    while stack:
        state, path = stack.pop()
        children = []
        for a in ex.legal(state):
            if clock.exhausted():
                return None
            child, n = ex.apply(state, a)
            clock.expanded = ex.applications
            if not n or child.digest in seen:
                continue
            if ex.solved(child):
                return list(path) + [a]
            seen.add(child.digest)
            if len(path) + 1 < depth_cap:
                children.append((child, path + (a,)))
        # lowest action index is explored first
        stack.extend(reversed(children))
    return None


def _random(ex: Explorer, clock: _Clock, depth_cap: int, budget) -> Optional[list]:
    """Random walks from the root, restarting at dead ends and the depth cap."""
    rng = random.Random(budget.rng_seed)
    while not clock.exhausted():
        state, path = ex.root, []
        while len(path) < depth_cap and not clock.exhausted():
            legal = ex.legal(state)
            if not legal:
                break
            a = rng.choice(legal)
            clock.expanded += 1
            state, _ = ex.apply(state, a)
            path.append(a)
            if ex.solved(state):
                return path
        if not ex.legal(ex.root):
            return None
    return None


def _beam(ex: Explorer, clock: _Clock, depth_cap: int, budget) -> Optional[list]:
    """Keep the ``beam_width`` children adding the most new nodes per layer."""
    seen = {ex.root.digest}
    beam = [(ex.root, ())]
    for _ in range(depth_cap):
        scored = []
        for rank, (state, path) in enumerate(beam):
            for a in ex.legal(state):
                if clock.exhausted():
                    return None
                child, n = ex.apply(state, a)
                clock.expanded = ex.applications
                if not n or child.digest in seen:
                    continue
                if ex.solved(child):
                    return list(path) + [a]
                scored.append((-n, rank, a, child, path + (a,)))
        if not scored:
            return None
        scored.sort(key=lambda t: t[:3])
        beam = []
        for *_, child, path in scored:
            if child.digest in seen:
                continue
            seen.add(child.digest)
            beam.append((child, path))
            if len(beam) == budget.beam_width:
                break
    return None


# --------------------------------------------------------------------------
# backward


@dataclass(frozen=True)
class Subgoal:
    """Something that must hold before the goal can be derived.

    ``target`` is ``("fact", Fact)``, ``("value", Attr)`` or
    ``("equation", Eq)``.
    """
    target: tuple
    pending_premises: tuple = ()
    depth: int = 0


@dataclass(frozen=True)
class _Node:
    open: tuple                       # Subgoals still to regress
    steps: tuple                      # (depth, action index) in regression order
    covered: frozenset                # targets already opened on this branch


class _Regressor:
    """Enumerates the ways one subgoal can be produced by one theorem step."""

    def __init__(self, env: Environment, root: State):
        self.env = env
        self.lib = env.library
        self.root = root
        self.points = tuple(root.points)
        producible = set()
        for i, plan in enumerate(env._plans):
            for f in plan.branch.conclusion_facts:
                for g in env.closure(f):
                    producible.add(g.predicate)
        self.producible = producible
        self._cache: Dict[tuple, list] = {}

    def holds(self, target: tuple) -> bool:
        kind, obj = target
        if kind == "fact":
            return obj in self.root.facts
        if kind == "value":
            return obj in self.root.algebra.determined
        return self.env.support(self.root, obj) is not None

    def value_subgoals(self, eq: Eq, skip: Optional[Attr] = None) -> List[tuple]:
        out = []
        for a in equation_attrs(eq):
            a = self.env.canonical_attr(a)
            if a != skip and ("value", a) not in out:
                out.append(("value", a))
        return out

    def alternatives(self, target: tuple) -> List[Tuple[int, List[tuple]]]:
        """(action index, premise targets) pairs producing ``target``."""
        hit = self._cache.get(target)
        if hit is None:
            hit = self._cache[target] = list(self._alternatives(target))
        return hit

    def _alternatives(self, target: tuple):
        kind, obj = target
        seen = set()
        for idx, plan in enumerate(self.env._plans):
            branch = plan.branch
            for partial, check in self._unifiers(kind, obj, branch):
                for b in self._complete(plan.theorem.variables, partial):
                    made = check(b)
                    if made is None:
                        continue
                    premises = self._premises(branch, b)
                    if premises is None:
                        continue
                    key = (idx, tuple(premises))
                    if key not in seen:
                        seen.add(key)
                        yield idx, premises + made
        if kind == "equation":
            # fall back to deriving the value of every attribute in it
            yield -1, self.value_subgoals(obj)

    def _unifiers(self, kind, obj, branch):
        env = self.env
        if kind == "fact":
            schema = self.lib.predicates[obj.predicate]
            for tmpl in branch.conclusion_facts:
                for g in env.closure(tmpl):
                    if g.predicate != obj.predicate:
                        continue
                    for variant in schema.variants(obj.points):
                        b = _unify(g.points, variant, {})
                        if b is not None:
                            yield b, (lambda bb, g=g: [] if env.canonical_fact(
                                Fact(g.predicate, tuple(bb[v] for v in g.points))) == obj
                                else None)
            return
        if kind == "value":
            schema = self.lib.attributes[obj.name]
            for tmpl in branch.conclusion_equations:
                for a in equation_attrs(tmpl):
                    if a.name != obj.name:
                        continue
                    for variant in schema.variants(obj.points):
                        b = _unify(a.points, variant, {})
                        if b is not None:
                            yield b, (lambda bb, t=tmpl: [
                                s for s in self.value_subgoals(_ground(env, t, bb), obj)
                                if not self.holds(s)])
            return
        target_key = equation_key(obj)
        first = equation_attrs(obj)
        if not first:
            return
        lead = first[0]
        schema = self.lib.attributes[lead.name]
        for tmpl in branch.conclusion_equations:
            for a in equation_attrs(tmpl):
                if a.name != lead.name:
                    continue
                for variant in schema.variants(lead.points):
                    b = _unify(a.points, variant, {})
                    if b is not None:
                        yield b, (lambda bb, t=tmpl: [] if equation_key(
                            _ground(env, t, bb)) == target_key else None)

    def _complete(self, variables: Sequence[str], partial: dict):
        free = [v for v in variables if v not in partial]
        for combo in itertools.permutations(self.points, len(free)) if free else [()]:
            b = dict(partial)
            b.update(zip(free, combo))
            yield b

    def _premises(self, branch, b: dict) -> Optional[List[tuple]]:
        env = self.env
        out = []
        for f in branch.premise_facts:
            pts = tuple(b[v] for v in f.points)
            if len(set(pts)) != len(pts):
                return None
            g = env.canonical_fact(Fact(f.predicate, pts))
            if g not in self.root.facts and g.predicate not in self.producible:
                return None
            out.append(("fact", g))
        for eq in branch.premise_equations:
            for a in equation_attrs(eq):
                pts = tuple(b[v] for v in a.points)
                if len(set(pts)) != len(pts):
                    return None
            out.append(("equation", _ground(env, eq, b)))
        for f in branch.conclusion_facts:
            pts = tuple(b[v] for v in f.points)
            if len(set(pts)) != len(pts):
                return None
        return out


def _unify(template: tuple, points: tuple, b: dict) -> Optional[dict]:
    b = dict(b)
    for v, p in zip(template, points):
        cur = b.get(v)
        if cur is None:
            b[v] = p
        elif cur != p:
            return None
    return b


def _ground(env: Environment, eq: Eq, b: dict) -> Eq:
    return env.ground_equation(eq, b)


def _goal_targets(env: Environment, goal) -> List[tuple]:
    if isinstance(goal, RelationGoal):
        return [("fact", goal.fact)]
    if isinstance(goal, ValueGoal):
        if isinstance(goal.term, Attr):
            return [("value", env.canonical_attr(goal.term))]
        return [("value", env.canonical_attr(a)) for a in dict.fromkeys(term_attrs(goal.term))]
    return [("equation", env.canonical_equation(goal.equation))]


def solve_backward(env: Environment, problem: Problem, strategy: str = "BFS",
                   budget: SearchBudget = SearchBudget()) -> SearchResult:
    """Goal regression.

    A node is a set of open subgoals plus the theorem steps chosen so far.
    Each generated child node costs one unit of ``max_nodes``.  Expanding
    a node regresses its first open subgoal through every theorem
    conclusion that can produce it; premises that do not hold initially
    become new subgoals.  A node without open subgoals yields a candidate
    whose steps, deepest first, are replayed forward; steps that add
    nothing are dropped and the candidate counts only if it reaches the
    goal.
    """
    strategy = strategy.upper()
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    label = f"bw-{strategy.lower()}"
    clock = _Clock(budget)
    root = env.init_state(problem)
    if env.solved(root):
        return _finish(env, problem, [], clock, label)
    if budget.wall_timeout == 0:
        return _fail(clock, label)
    reg = _Regressor(env, root)
    targets = [t for t in _goal_targets(env, problem.goal) if not reg.holds(t)]
    start = _Node(tuple(Subgoal(t, (), 0) for t in targets), (), frozenset(targets))
    tried: set = set()

    def candidate(node: _Node) -> Optional[list]:
        order = [a for _, a in sorted(node.steps, key=lambda s: -s[0]) if a >= 0]
        key = tuple(order)
        if key in tried:
            return None
        tried.add(key)
        return _replay(env, root, order)

    def children(node: _Node) -> List[_Node]:
        sub, rest = node.open[0], node.open[1:]
        out = []
        if sub.depth >= budget.max_depth:
            return out
        for idx, premises in reg.alternatives(sub.target):
            fresh = [p for p in premises if not reg.holds(p) and p not in node.covered]
            fresh = list(dict.fromkeys(fresh))
            steps = node.steps + ((sub.depth, idx),)
            if sum(1 for _, a in steps if a >= 0) > budget.max_depth:
                continue
            opened = tuple(Subgoal(p, (), sub.depth + 1) for p in fresh)
            out.append(_Node(rest + opened, steps, node.covered | frozenset(fresh)))
        return out

    def visit(node: _Node) -> Optional[list]:
        if not node.open:
            return candidate(node)
        return None

    result = _run_backward(strategy, start, children, visit, clock, budget)
    if result is None:
        return _fail(clock, label)
    return _finish(env, problem, result, clock, label)


def _run_backward(strategy, start, children, visit, clock, budget) -> Optional[list]:
    hit = visit(start)
    if hit is not None:
        return hit
    seen = {(start.open, start.steps)}
    if strategy in ("BFS", "DFS"):
        frontier = deque([start])
        while frontier and not clock.exhausted():
            node = frontier.popleft() if strategy == "BFS" else frontier.pop()
            kids = []
            for child in children(node):
                if clock.exhausted():
                    return None
                clock.expanded += 1
                key = (child.open, child.steps)
                if key in seen:
                    continue
                seen.add(key)
                hit = visit(child)
                if hit is not None:
                    return hit
                if child.open:
                    kids.append(child)
            frontier.extend(kids if strategy == "BFS" else reversed(kids))
        return None
    if strategy == "RS":
        rng = random.Random(budget.rng_seed)
        while not clock.exhausted():
            node = start
            while node.open and not clock.exhausted():
                kids = children(node)
                clock.expanded += 1
                if not kids:
                    break
                node = rng.choice(kids)
                hit = visit(node)
                if hit is not None:
                    return hit
            if not children(start):
                return None
        return None
    # beam: fewest open subgoals first, then fewest steps, then generation order
    beam = [start]
    while beam and not clock.exhausted():
        pool = []
        for node in beam:
            for child in children(node):
                if clock.exhausted():
                    break
                clock.expanded += 1
                key = (child.open, child.steps)
                if key in seen:
                    continue
                seen.add(key)
                hit = visit(child)
                if hit is not None:
                    return hit
                if child.open:
                    pool.append(child)
        order = sorted(range(len(pool)), key=lambda i: (len(pool[i].open), len(pool[i].steps), i))
        beam = [pool[i] for i in order[:budget.beam_width]]
    return None


def _replay(env: Environment, root: State, order: Sequence[int]) -> Optional[list]:
    """Forward replay keeping only productive steps; the kept list if it solves."""
    state, kept = root, []
    for a in order:
        try:
            nxt, n = env.apply_action(state, a)
        except AlgebraError:
            return None
        if n:
            state = nxt
            kept.append(a)
            if env.solved(state):
                return kept
    return None


# --------------------------------------------------------------------------
# dispatch and benchmark


def solve(env: Environment, problem: Problem, method: str,
          budget: SearchBudget = SearchBudget()) -> SearchResult:
    """Run one of :data:`METHODS` (``fw-bfs`` ... ``bw-bs``)."""
    direction, _, strategy = method.lower().partition("-")
    if method.lower() not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    fn = solve_forward if direction == "fw" else solve_backward
    return fn(env, problem, strategy, budget)


def benchmark(records, methods: Sequence[str], runner, jobs: int = 1) -> List[dict]:
    """Solve every record with every method; per-method rows of solve rates.

    ``runner(method, record)`` returns an object with ``solved``,
    ``sequence`` and ``nodes_expanded``/``elapsed`` style fields (a
    :class:`SearchResult` or an MCTS record dict).  Rows follow the order of
    ``methods``; levels without problems get a rate of ``None``.
    """
    from .dataset import LEVELS

    cells = [(m, r) for m in methods for r in records]
    if jobs > 1 and len(cells) > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(lambda c: _run_cell(runner, *c), cells))
    else:
        outcomes = [_run_cell(runner, m, r) for m, r in cells]
    by_method: Dict[str, list] = {m: [] for m in methods}
    for (m, r), out in zip(cells, outcomes):
        by_method[m].append((r, out))
    rows = []
    for m in methods:
        entries = sorted(by_method[m], key=lambda e: e[0].id)
        per_level = {}
        for lv in LEVELS:
            hits = [o["solved"] for r, o in entries if r.level == lv]
            per_level[lv] = round(100.0 * sum(hits) / len(hits), 2) if hits else None
        solved = sum(o["solved"] for _, o in entries)
        rows.append({
            "method": m,
            "total_rate": round(100.0 * solved / len(entries), 2) if entries else None,
            "per_level": per_level,
            "per_problem": [{"id": r.id, **o} for r, o in entries],
        })
    return rows


def _run_cell(runner, method, record) -> dict:
    t0 = time.perf_counter()
    res = runner(method, record)
    seconds = time.perf_counter() - t0
    if isinstance(res, SearchResult):
        solved, seq, nodes = res.solved, res.sequence, res.nodes_expanded
    else:
        solved, seq, nodes = res["solved"], res["sequence"], res.get("iterations", 0)
    return {"solved": bool(solved), "seq_len": len(seq) if solved else None,
            "nodes": nodes, "seconds": round(seconds, 4)}


def format_benchmark(rows: List[dict]) -> str:
    """Aligned text table: one row per method, columns Total and L1..L6."""
    from .dataset import LEVELS

    def cell(v):
        return "-" if v is None else f"{v:.2f}"

    width = max([len("Method")] + [len(r["method"]) for r in rows])
    head = f"{'Method':<{width}}" + "".join(f"{h:>9}" for h in ("Total", *LEVELS))
    lines = [head]
    for r in rows:
        lines.append(f"{r['method']:<{width}}" + f"{cell(r['total_rate']):>9}"
                     + "".join(f"{cell(r['per_level'][lv]):>9}" for lv in LEVELS))
    return "\n".join(lines) + "\n"
