"""The reasoning environment.

A :class:`State` is the fact base, the equation store, the goal, and the
proof trace built so far.  An :class:`Action` is one theorem branch; applying
it fires *every* binding of the branch premise at once and merges all the
conclusions into the next state.  Reward is 1 exactly when the next state
satisfies the goal.

Bindings map theorem variables to points.  Distinct variables may share a
point, but every instantiated fact and attribute application must use
pairwise distinct points (``Angle(A,B,A)`` is never a valid instance).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple

from .algebra import AlgebraError, EquationStore, EvaluationError, equation_key
from .lang import (Attr, Eq, EquationGoal, Fact, Library, Problem, RelationGoal,
                   TheoremBranch, TheoremSchema, ValueGoal, equation_attrs, map_term,
                   term_attrs)

__all__ = [
    "Action", "FactBase", "HyperTree", "TraceNode", "TraceEdge", "State",
    "Match", "StepResult", "Verification", "Environment", "Explorer",
    "DEFAULT_MAX_STEPS",
]

DEFAULT_MAX_STEPS = 30


class Action(NamedTuple):
    theorem: str
    branch: int

    def __str__(self) -> str:
        return f"{self.theorem}({self.branch})"

    def to_dict(self) -> dict:
        return {"theorem": self.theorem, "branch": self.branch}

    @classmethod
    def from_dict(cls, data) -> "Action":
        if isinstance(data, (list, tuple)):
            return cls(str(data[0]), int(data[1]))
        return cls(str(data["theorem"]), int(data["branch"]))


class FactBase:
    """Set of canonical facts with a per-predicate index; keeps insertion order."""

    def __init__(self, facts: Iterable[Fact] = ()):
        self._facts: Dict[Fact, None] = {}
        self.by_predicate: Dict[str, List[tuple]] = {}
        for f in facts:
            self.add(f)

    def add(self, fact: Fact) -> bool:
        if fact in self._facts:
            return False
        self._facts[fact] = None
        self.by_predicate.setdefault(fact.predicate, []).append(fact.points)
        return True

    def copy(self) -> "FactBase":
        new = FactBase.__new__(FactBase)
        new._facts = dict(self._facts)
        new.by_predicate = {k: list(v) for k, v in self.by_predicate.items()}
        return new

    def __contains__(self, fact) -> bool:
        return fact in self._facts

    def __iter__(self):
        return iter(self._facts)

    def __len__(self) -> int:
        return len(self._facts)

    def count(self, predicate: str) -> int:
        return len(self.by_predicate.get(predicate, ()))


# --------------------------------------------------------------------------
# proof trace


class TraceNode(NamedTuple):
    id: int
    kind: str          # "fact" | "equation" | "value" | "goal"
    label: str
    initial: bool


class TraceEdge(NamedTuple):
    id: int
    rule: str          # theorem name, "solve" or "goal"
    branch: int
    binding: tuple     # ((var, point), ...)
    premises: tuple
    conclusions: tuple


class HyperTree:
    """Condition nodes joined by theorem-application hyper-edges."""

    def __init__(self):
        self.nodes: List[TraceNode] = []
        self.edges: List[TraceEdge] = []
        self.index: Dict[tuple, int] = {}
        self.equation_nodes: List[int] = []   # store index -> node id

    def copy(self) -> "HyperTree":
        new = HyperTree.__new__(HyperTree)
        new.nodes = list(self.nodes)
        new.edges = list(self.edges)
        new.index = dict(self.index)
        new.equation_nodes = list(self.equation_nodes)
        return new

    def add_node(self, key: tuple, kind: str, label: str, initial: bool) -> int:
        node_id = len(self.nodes)
        self.nodes.append(TraceNode(node_id, kind, label, initial))
        self.index[key] = node_id
        return node_id

    def add_edge(self, rule: str, branch: int, binding: tuple,
                 premises: Sequence[int], conclusions: Sequence[int]) -> int:
        edge_id = len(self.edges)
        self.edges.append(TraceEdge(edge_id, rule, branch, tuple(binding),
                                    tuple(sorted(set(premises))), tuple(conclusions)))
        return edge_id

    def fact_node(self, fact: Fact) -> int:
        return self.index[("fact", fact)]

    def value_node(self, sym: Attr) -> int:
        return self.index[("value", sym)]

    def __eq__(self, other):
        return (isinstance(other, HyperTree) and self.nodes == other.nodes
                and self.edges == other.edges)

    def to_dict(self) -> dict:
        return {
            "nodes": [{"id": n.id, "kind": n.kind, "label": n.label, "initial": n.initial}
                      for n in self.nodes],
            "edges": [{"id": e.id, "rule": e.rule, "branch": e.branch,
                       "binding": {v: p for v, p in e.binding},
                       "premises": list(e.premises), "conclusions": list(e.conclusions)}
                      for e in self.edges],
        }

    def to_dot(self, name: str = "proof") -> str:
        lines = [f"digraph {json.dumps(name)} {{", "  rankdir=LR;",
                 "  node [fontname=\"Helvetica\", fontsize=10];"]
        shapes = {"fact": "box", "equation": "ellipse", "value": "ellipse",
                  "goal": "doubleoctagon"}
        for n in self.nodes:
            style = ', style=filled, fillcolor="#d8f0d8"' if n.initial else ""
            lines.append(f"  n{n.id} [label={json.dumps(n.label)}, "
                         f"shape={shapes[n.kind]}{style}];")
        for e in self.edges:
            label = e.rule if e.rule in ("solve", "goal") else f"{e.rule}({e.branch})"
            lines.append(f"  e{e.id} [label={json.dumps(label)}, shape=box, "
                         f"style=rounded, fontsize=8];")
            for p in e.premises:
                lines.append(f"  n{p} -> e{e.id};")
            for c in e.conclusions:
                lines.append(f"  e{e.id} -> n{c};")
        lines.append("}")
        return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# state


@dataclass(eq=False)
class State:
    points: tuple
    goal: object
    facts: FactBase = field(default_factory=FactBase)
    algebra: EquationStore = field(default_factory=EquationStore)
    trace: HyperTree = field(default_factory=HyperTree)
    steps_taken: int = 0
    applied: tuple = ()
    _cache: dict = field(default_factory=dict, repr=False)

    def clone(self) -> "State":
        return State(self.points, self.goal, self.facts.copy(), self.algebra.copy(),
                     self.trace.copy(), self.steps_taken, self.applied)

    @property
    def digest(self) -> tuple:
        """Hashable summary: facts, known values and still-open equations."""
        d = self._cache.get("digest")
        if d is None:
            store = self.algebra
            pending = set(store.pending)
            open_keys = frozenset(k for k, i in store.keys.items() if i in pending)
            d = (frozenset(self.facts), frozenset(store.determined.items()), open_keys)
            self._cache["digest"] = d
        return d

    def digest_hex(self) -> str:
        facts = sorted(str(f) for f in self.facts)
        values = sorted(f"{s}={v}" for s, v in self.algebra.determined.items())
        pending = sorted(str(self.algebra.equations[i]) for i in self.algebra.pending)
        blob = json.dumps([facts, values, pending])
        return hashlib.sha1(blob.encode()).hexdigest()

    def __eq__(self, other):
        if not isinstance(other, State):
            return NotImplemented
        return (self.points == other.points and self.goal == other.goal
                and list(self.facts) == list(other.facts)
                and self.algebra.equations == other.algebra.equations
                and self.algebra.determined == other.algebra.determined
                and self.steps_taken == other.steps_taken
                and self.applied == other.applied and self.trace == other.trace)

    __hash__ = None


@dataclass
class Match:
    binding: tuple                 # ((var, point), ...) in theorem variable order
    premise_facts: tuple
    premise_equations: tuple       # (Eq, support)
    conclusion_facts: tuple
    conclusion_equations: tuple

    def as_dict(self) -> dict:
        return dict(self.binding)


class StepResult(NamedTuple):
    state: State
    reward: int
    terminal: bool
    new_nodes: int

    @property
    def no_progress(self) -> bool:
        return self.new_nodes == 0


@dataclass
class Verification:
    solved: bool
    first_failure: Optional[int]
    trace: HyperTree
    state: State

    @property
    def verified(self) -> bool:
        return self.solved and self.first_failure is None


# --------------------------------------------------------------------------
# the environment


def _instantiate_fact(fact: Fact, b: dict) -> Fact:
    return Fact(fact.predicate, tuple(b[v] for v in fact.points))


def _instantiate_eq(eq: Eq, b: dict) -> Eq:
    fn = lambda a: Attr(a.name, tuple(b[v] for v in a.points))
    return Eq(map_term(eq.lhs, fn), map_term(eq.rhs, fn))


def _well_formed(points: tuple) -> bool:
    return len(set(points)) == len(points)


class _Plan:
    """Precomputed matching order for one branch."""

    def __init__(self, theorem: TheoremSchema, branch: TheoremBranch):
        self.theorem = theorem
        self.branch = branch
        self.variables = [v for v in theorem.variables if v in set(branch.premise_variables())]
        # most-constrained patterns first: more variables, then declaration order
        self.order = sorted(range(len(branch.premise_facts)),
                            key=lambda i: -len(set(branch.premise_facts[i].points)))
        # equation premises checked as soon as the patterns bind all their variables
        self.checks: List[List[int]] = [[] for _ in self.order]
        bound: set = set()
        pending = list(range(len(branch.premise_equations)))
        for level, i in enumerate(self.order):
            bound.update(branch.premise_facts[i].points)
            for j in list(pending):
                eq_vars = {v for a in equation_attrs(branch.premise_equations[j]) for v in a.points}
                if eq_vars <= bound:
                    self.checks[level].append(j)
                    pending.remove(j)
        self.eq_attr_vars = [[a.points for a in equation_attrs(eq)]
                             for eq in branch.premise_equations]
        self.eq_flat_vars = [tuple(v for pts in groups for v in pts)
                             for groups in self.eq_attr_vars]


class Environment:
    """Applies theorems of a :class:`Library` to states."""

    def __init__(self, library: Library, max_steps: int = DEFAULT_MAX_STEPS):
        self.library = library
        self.max_steps = max_steps
        self.actions: List[Action] = [Action(t.name, b.index)
                                      for t in library.theorems for b in t.branches]
        self.action_index: Dict[Action, int] = {a: i for i, a in enumerate(self.actions)}
        self._plans = [_Plan(library.theorem(a.theorem),
                             library.theorem(a.theorem).branch(a.branch))
                       for a in self.actions]
        self._canon_cache: Dict[Fact, Fact] = {}
        self._attr_cache: Dict[Attr, Attr] = {}
        self._ground_cache: Dict[tuple, Eq] = {}

    @property
    def action_count(self) -> int:
        return len(self.actions)

    def resolve(self, action) -> Optional[int]:
        """Index of ``action`` or None if the theorem/branch does not exist."""
        if isinstance(action, int):
            return action if 0 <= action < len(self.actions) else None
        return self.action_index.get(Action(*action))

    # -- canonical forms --------------------------------------------------

    def canonical_fact(self, fact: Fact) -> Fact:
        c = self._canon_cache.get(fact)
        if c is None:
            c = self.library.canonical_fact(fact)
            self._canon_cache[fact] = c
        return c

    def canonical_attr(self, attr: Attr) -> Attr:
        c = self._attr_cache.get(attr)
        if c is None:
            c = self.library.canonical_attr(attr)
            self._attr_cache[attr] = c
        return c

    def canonical_equation(self, eq: Eq) -> Eq:
        return Eq(map_term(eq.lhs, self.canonical_attr), map_term(eq.rhs, self.canonical_attr))

    def ground_equation(self, eq: Eq, b: dict) -> Eq:
        """Canonical instance of an equation template under binding ``b``."""
        points = tuple(b[v] for a in equation_attrs(eq) for v in a.points)
        key = (eq, points)
        g = self._ground_cache.get(key)
        if g is None:
            g = self.canonical_equation(_instantiate_eq(eq, b))
            self._ground_cache[key] = g
        return g

    @staticmethod
    def support(state: State, eq: Eq):
        """Memoised ``state.algebra.support``; only valid for finished states."""
        cache = state._cache.setdefault("support", {})
        try:
            return cache[eq]
        except KeyError:
            s = cache[eq] = state.algebra.support(eq)
            return s

    def closure(self, fact: Fact) -> List[Fact]:
        """``fact`` (canonical) followed by all of its extension consequences."""
        out = [self.canonical_fact(fact)]
        i = 0
        while i < len(out):
            f = out[i]
            schema = self.library.predicates[f.predicate]
            for variant in schema.variants(f.points):
                b = dict(zip(schema.params, variant))
                for ext in schema.extensions:
                    g = self.canonical_fact(_instantiate_fact(ext, b))
                    if g not in out:
                        out.append(g)
            i += 1
        return out

    # -- initial state ----------------------------------------------------

    def init_state(self, problem: Problem) -> State:
        state = State(tuple(problem.points), problem.goal)
        trace = state.trace
        for fact in problem.construction:
            for f in self.closure(fact):
                if state.facts.add(f):
                    trace.add_node(("fact", f), "fact", str(f), True)
        for eq in problem.conditions:
            eq = self.canonical_equation(eq)
            if state.algebra.add_equation(eq):
                trace.equation_nodes.append(
                    trace.add_node(("eq", equation_key(eq)), "equation", str(eq), True))
        for sym in state.algebra.solve():
            trace.add_node(("value", sym), "value",
                           f"{sym}={state.algebra.determined[sym]}", True)
        return state

    # -- matching ---------------------------------------------------------

    def _raw_bindings(self, state: State, plan: _Plan) -> Iterable[Tuple[dict, dict]]:
        """Yield (binding, equation supports) for every satisfied premise."""
        facts = plan.branch.premise_facts
        equations = plan.branch.premise_equations
        order = plan.order
        preds = self.library.predicates
        supports: dict = {}

        # keyed by (template, points) so the hot path never hashes an Eq
        known = state._cache.setdefault("premise_support", {})

        def equations_hold(level: int, b: dict) -> bool:
            for j in plan.checks[level]:
                flat = tuple(b[v] for v in plan.eq_flat_vars[j])
                key = (id(equations[j]), flat)
                hit = known.get(key)
                if hit is None:
                    ok = all(_well_formed(tuple(b[v] for v in pts))
                             for pts in plan.eq_attr_vars[j])
                    if ok:
                        g = self.ground_equation(equations[j], b)
                        hit = (g, self.support(state, g))
                    else:
                        hit = (None, None)
                    known[key] = hit
                if hit[1] is None:
                    return False
                supports[j] = hit
            return True

        def rec(k: int, b: dict):
            if k == len(order):
                yield dict(b), dict(supports)
                return
            pat = facts[order[k]]
            schema = preds[pat.predicate]
            for pts in state.facts.by_predicate.get(pat.predicate, ()):
                for variant in schema.variants(pts):
                    added = []
                    ok = True
                    for v, p in zip(pat.points, variant):
                        cur = b.get(v)
                        if cur is None:
                            b[v] = p
                            added.append(v)
                        elif cur != p:
                            ok = False
                            break
                    if ok and equations_hold(k, b):
                        yield from rec(k + 1, b)
                    for v in added:
                        del b[v]

        yield from rec(0, {})

    def _build_match(self, state: State, plan: _Plan, b: dict, supports: dict) -> Optional[Match]:
        branch = plan.branch
        for eq in branch.conclusion_equations:
            for a in equation_attrs(eq):
                if not _well_formed(tuple(b[v] for v in a.points)):
                    return None
        conc_facts = []
        for f in branch.conclusion_facts:
            g = _instantiate_fact(f, b)
            if not _well_formed(g.points):
                return None
            conc_facts.append(self.canonical_fact(g))
        prem_eqs = [supports[j] for j in range(len(branch.premise_equations))]
        conc_eqs = [self.ground_equation(eq, b) for eq in branch.conclusion_equations]
        prem_facts = [self.canonical_fact(_instantiate_fact(f, b)) for f in branch.premise_facts]
        return Match(tuple((v, b[v]) for v in plan.variables), tuple(prem_facts),
                     tuple(prem_eqs), tuple(conc_facts), tuple(conc_eqs))

    def matches(self, state: State, action) -> List[Match]:
        """Deduplicated matches of one branch, sorted by binding."""
        idx = self.resolve(action)
        if idx is None:
            return []
        cache = state._cache.setdefault("matches", {})
        if idx in cache:
            return cache[idx]
        plan = self._plans[idx]
        best: Dict[tuple, Match] = {}
        for b, supports in self._raw_bindings(state, plan):
            m = self._build_match(state, plan, b, supports)
            if m is None:
                continue
            key = (frozenset(m.premise_facts),
                   frozenset(equation_key(e) for e, _ in m.premise_equations),
                   frozenset(m.conclusion_facts),
                   frozenset(equation_key(e) for e in m.conclusion_equations))
            cur = best.get(key)
            if cur is None or _order(m) < _order(cur):
                best[key] = m
        out = sorted(best.values(), key=_order)
        cache[idx] = out
        return out

    def match_premise(self, state: State, action) -> List[dict]:
        return [m.as_dict() for m in self.matches(state, action)]

    def _match_is_new(self, state: State, m: Match) -> bool:
        for f in m.conclusion_facts:
            if f not in state.facts:
                return True
        for eq in m.conclusion_equations:
            if self.support(state, eq) is None:
                return True
        return False

    def applicable(self, state: State, action) -> bool:
        """At least one binding exists (regardless of novelty)."""
        return bool(self.matches(state, action))

    def legal_mask(self, state: State) -> List[bool]:
        cached = state._cache.get("legal")
        if cached is None:
            cached = [any(self._match_is_new(state, m) for m in self.matches(state, i))
                      for i in range(len(self.actions))]
            state._cache["legal"] = cached
        return cached

    def legal_indices(self, state: State) -> List[int]:
        return [i for i, ok in enumerate(self.legal_mask(state)) if ok]

    def legal_actions(self, state: State) -> List[Action]:
        return [self.actions[i] for i in self.legal_indices(state)]

    # -- transitions ------------------------------------------------------

    def apply_action(self, state: State, action) -> Tuple[State, int]:
        """Fire every binding of ``action``; returns (next state, new nodes)."""
        idx = self.resolve(action)
        new = state.clone()
        new.steps_taken += 1
        label = self.actions[idx] if idx is not None else Action(*action)
        new.applied = state.applied + (label,)
        if idx is None:
            return new, 0
        trace = new.trace
        total = 0
        for m in self.matches(state, idx):
            premises = [trace.fact_node(f) for f in m.premise_facts]
            for _, (kind, ref) in m.premise_equations:
                if kind == "equation":
                    premises.append(trace.equation_nodes[ref])
                else:
                    premises.extend(trace.value_node(s) for s in ref)
            produced = []
            for fact in m.conclusion_facts:
                for f in self.closure(fact):
                    if new.facts.add(f):
                        produced.append(trace.add_node(("fact", f), "fact", str(f), False))
            for eq in m.conclusion_equations:
                if new.algebra.is_redundant(eq):
                    continue
                new.algebra.add_equation(eq)
                node = trace.add_node(("eq", equation_key(eq)), "equation", str(eq), False)
                trace.equation_nodes.append(node)
                produced.append(node)
            if produced:
                trace.add_edge(label.theorem, label.branch, m.binding, premises, produced)
                total += len(produced)
        if total:
            self._solve_into(new)
        return new, total

    def _solve_into(self, state: State):
        store, trace = state.algebra, state.trace
        for sym in store.solve():
            sources, subs = store.provenance[sym]
            premises = [trace.equation_nodes[i] for i in sources]
            premises += [trace.value_node(s) for s in subs]
            node = trace.add_node(("value", sym), "value", f"{sym}={store.determined[sym]}",
                                  False)
            trace.add_edge("solve", 0, (), premises, [node])

    def solved(self, state: State) -> bool:
        goal = state.goal
        if isinstance(goal, RelationGoal):
            return goal.fact in state.facts
        if isinstance(goal, ValueGoal):
            try:
                value = state.algebra.value_of(goal.term)
            except EvaluationError:
                return False
            return value is not None and (goal.target is None or value == goal.target)
        if isinstance(goal, EquationGoal):
            return state.algebra.support(goal.equation) is not None
        raise TypeError(f"unknown goal {goal!r}")

    def step(self, state: State, action) -> StepResult:
        """One MDP transition: reward 1 iff the next state meets the goal."""
        try:
            nxt, new_nodes = self.apply_action(state, action)
        except AlgebraError:
            nxt = state.clone()
            nxt.steps_taken += 1
            nxt.applied = state.applied + (Action(*self.actions[action])
                                           if isinstance(action, int) else Action(*action),)
            return StepResult(nxt, 0, True, 0)
        reward = 1 if self.solved(nxt) else 0
        terminal = (reward == 1 or nxt.steps_taken >= self.max_steps
                    or not any(self.legal_mask(nxt)))
        return StepResult(nxt, reward, terminal, new_nodes)

    def verify_sequence(self, problem: Problem, actions: Sequence) -> Verification:
        state = self.init_state(problem)
        first_failure = None
        for i, action in enumerate(actions):
            result = self.step(state, action)
            if result.new_nodes == 0 and first_failure is None:
                first_failure = i
            state = result.state
        return Verification(self.solved(state), first_failure, state.trace, state)

    # -- export -----------------------------------------------------------

    def goal_support(self, state: State) -> List[int]:
        """Trace nodes that witness the goal (empty if unsolved)."""
        if not self.solved(state):
            return []
        goal, trace = state.goal, state.trace
        if isinstance(goal, RelationGoal):
            return [trace.fact_node(goal.fact)]
        if isinstance(goal, ValueGoal):
            syms = sorted({a for a in term_attrs(goal.term) if a in state.algebra.determined})
            return [trace.value_node(s) for s in syms]
        kind, ref = state.algebra.support(goal.equation)
        if kind == "equation":
            return [trace.equation_nodes[ref]]
        return [trace.value_node(s) for s in ref]

    def export_hypertree(self, state: State) -> dict:
        """JSON-ready trace; a solved state gets an extra goal node."""
        trace = state.trace
        if self.solved(state):
            trace = trace.copy()
            support = self.goal_support(state)
            goal_node = trace.add_node(("goal",), "goal", "goal", False)
            trace.add_edge("goal", 0, (), support, [goal_node])
        out = trace.to_dict()
        out["solved"] = self.solved(state)
        out["steps"] = [a.to_dict() for a in state.applied]
        return out

    def export_dot(self, state: State, name: str = "proof") -> str:
        trace = state.trace
        if self.solved(state):
            trace = trace.copy()
            goal_node = trace.add_node(("goal",), "goal", "goal", False)
            trace.add_edge("goal", 0, (), self.goal_support(state), [goal_node])
        return trace.to_dot(name)


def _order(m: Match) -> tuple:
    return tuple(p for _, p in m.binding)


class Explorer:
    """Transition memo for searching one problem.

    States reached by different paths but with equal digests share one
    object, so matches, legality and features are computed once.  The
    ``applied`` history of a cached state reflects whichever path reached it
    first; searchers track their own paths.
    """

    def __init__(self, env: Environment, problem: Problem):
        self.env = env
        self.problem = problem
        self.root = env.init_state(problem)
        self._states: Dict[tuple, State] = {self.root.digest: self.root}
        self._edges: Dict[Tuple[tuple, int], Tuple[State, int]] = {}
        self.applications = 0

    def intern(self, state: State) -> State:
        return self._states.setdefault(state.digest, state)

    def apply(self, state: State, action_index: int) -> Tuple[State, int]:
        key = (state.digest, action_index)
        hit = self._edges.get(key)
        if hit is None:
            self.applications += 1
            try:
                nxt, n = self.env.apply_action(state, action_index)
            except AlgebraError:
                nxt, n = state, 0
            hit = (self.intern(nxt) if n else state, n)
            self._edges[key] = hit
        return hit

    def legal(self, state: State) -> List[int]:
        return self.env.legal_indices(state)

    def solved(self, state: State) -> bool:
        s = state._cache.get("solved")
        if s is None:
            s = self.env.solved(state)
            state._cache["solved"] = s
        return s
