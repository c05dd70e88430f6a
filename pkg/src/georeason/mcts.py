"""Policy-guided Monte Carlo tree search and the reinforcement loop.

One iteration descends from the root by UCB through already expanded
edges, expands the first unexpanded edge it meets, estimates the new child
with rollouts sampled from the frozen supervised policy, and backs the
estimate up the path with one discount per level.
"""

from __future__ import annotations

import math
import time
import zlib
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from .deduction import Action, Environment, Explorer, State
from .lang import Problem
from .policy import (Featurizer, PolicyModel, Trajectory, TrajectoryStep, mask_normalize,
                     predict, reinforce_update)

__all__ = [
    "MCTSConfig", "EdgeStats", "TreeNode", "SearchTree", "Models", "BackupRecord",
    "select_ucb", "expand", "simulate", "backup", "run_search", "train_loop",
]


@dataclass(frozen=True)
class MCTSConfig:
    c: float = 1.25
    gamma: float = 0.99
    simulation_num: int = 30
    max_sim_steps: int = 30
    max_iterations: int = 200
    wall_timeout: float = 60.0
    seed: int = 0

    def __post_init__(self):
        if self.c < 0:
            raise ValueError("exploration constant c must be >= 0")
        if not 0 < self.gamma <= 1:
            raise ValueError("gamma must lie in (0, 1]")
        if self.simulation_num < 1:
            raise ValueError("simulation_num must be >= 1")
        if self.max_sim_steps < 0 or self.max_iterations < 0 or self.wall_timeout < 0:
            raise ValueError("step, iteration and time budgets must be >= 0")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_mapping(cls, data: dict) -> "MCTSConfig":
        """Build from strings or numbers, e.g. a parsed key=value file."""
        kinds = {f.name: f.type for f in fields(cls)}
        out = {}
        for key, value in data.items():
            if key not in kinds:
                raise ValueError(f"unknown MCTS setting {key!r}")
            out[key] = int(value) if kinds[key] in (int, "int") else float(value)
        return cls(**out)


@dataclass
class EdgeStats:
    P: float
    N: int = 0
    G: float = 0.0
    visited: bool = False
    dead: bool = False
    total: float = 0.0
    child: Optional["TreeNode"] = None

    def record(self, value: float) -> None:
        """Add one backed-up value; G stays the mean of everything recorded."""
        self.N += 1
        self.total += value
        self.G = self.total / self.N


@dataclass(eq=False)
class TreeNode:
    state: State
    depth: int
    edges: Dict[int, EdgeStats] = field(default_factory=dict)
    expanded: bool = False
    terminal: bool = False
    solved: bool = False

    @property
    def digest(self) -> tuple:
        return self.state.digest


class Models(NamedTuple):
    rl: PolicyModel       # priors at expansion
    sl: PolicyModel       # frozen rollout policy


class BackupRecord(NamedTuple):
    action: int
    depth: int            # distance from the expanded edge
    value: float


def select_ucb(node: TreeNode, c: float) -> int:
    """UCB choice among the node's live edges.

    Edges never backed up (N=0) come first, highest prior first.  Otherwise
    the score is G + c*sqrt(ln(sum N) / N).  Ties go to the lowest action
    index.
    """
    live = sorted(a for a, e in node.edges.items() if not e.dead)
    if not live:
        raise ValueError("node has no selectable edges")
    fresh = [a for a in live if node.edges[a].N == 0]
    if fresh:
        return max(fresh, key=lambda a: (node.edges[a].P, -a))
    total = sum(node.edges[a].N for a in live)
    log_total = math.log(total)
    best, best_score = live[0], -math.inf
    for a in live:
        e = node.edges[a]
        score = e.G + c * math.sqrt(log_total / e.N)
        if score > best_score:
            best, best_score = a, score
    return best


class SearchTree:
    """Tree for one problem; transitions are memoised by state digest."""

    def __init__(self, env: Environment, problem: Problem, featurizer: Featurizer,
                 models: Models):
        self.env = env
        self.explorer = Explorer(env, problem)
        self.featurize = featurizer
        self.models = models
        self.root = TreeNode(self.explorer.root, 0)
        self.size = 1
        self._init_node(self.root)

    def _init_node(self, node: TreeNode) -> None:
        ex = self.explorer
        node.solved = ex.solved(node.state)
        legal = [] if node.solved or node.depth >= self.env.max_steps else ex.legal(node.state)
        node.terminal = node.solved or not legal
        if node.terminal:
            return
        probs = mask_normalize(predict(self.models.rl, self.featurize(node.state)), legal)
        node.edges = {a: EdgeStats(float(probs[a])) for a in legal}
        node.expanded = True


def expand(tree: SearchTree, node: TreeNode, action: int) -> TreeNode:
    """Apply ``action`` at ``node`` and link the resulting child."""
    edge = node.edges[action]
    if edge.visited:
        raise ValueError(f"action {action} already expanded at this node")
    edge.visited = True
    nxt, n = tree.explorer.apply(node.state, action)
    child = TreeNode(nxt, node.depth + 1)
    if n == 0:
        # nothing new: the child is the parent state and the edge is worthless
        edge.dead = True
        child.terminal = True
    else:
        tree._init_node(child)
    edge.child = child
    tree.size += 1
    return child


def _as_seed_sequence(rng) -> np.random.SeedSequence:
    if isinstance(rng, np.random.SeedSequence):
        return rng
    return np.random.SeedSequence(rng)


def simulate(tree_or_env, state: State, model: PolicyModel, max_sim_steps: int,
             simulation_num: int, rng, featurizer: Optional[Featurizer] = None,
             depth: int = 0) -> float:
    """Share of ``simulation_num`` policy rollouts that reach the goal.

    ``tree_or_env`` is a :class:`SearchTree` (transitions shared with the
    search) or an :class:`Environment`.  Each rollout draws from its own
    stream spawned from ``rng`` (a seed or ``SeedSequence``), so results do
    not depend on rollout scheduling.  ``depth`` is the number of steps
    already taken; rollouts stop at the environment's step limit.
    """
    if simulation_num < 1:
        raise ValueError("simulation_num must be >= 1")
    if isinstance(tree_or_env, SearchTree):
        ex, featurize = tree_or_env.explorer, featurizer or tree_or_env.featurize
    else:
        ex = _StatelessExplorer(tree_or_env)
        featurize = featurizer or Featurizer(tree_or_env)
    if ex.solved(state):
        return 1.0
    limit = ex.env.max_steps
    successes = 0
    for stream in _as_seed_sequence(rng).spawn(simulation_num):
        gen = np.random.default_rng(stream)
        s, steps = state, depth
        for _ in range(max_sim_steps):
            if steps >= limit:
                break
            legal = ex.legal(s)
            if not legal:
                break
            probs = mask_normalize(predict(model, featurize(s)), legal)[legal]
            cdf = np.cumsum(probs)
            k = int(np.searchsorted(cdf, gen.random() * cdf[-1], side="right"))
            s, _ = ex.apply(s, legal[min(k, len(legal) - 1)])
            steps += 1
            if ex.solved(s):
                successes += 1
                break
    return successes / simulation_num


class _StatelessExplorer(Explorer):
    """Explorer over states that need not come from one problem's root."""

    def __init__(self, env: Environment):
        self.env = env
        self._states = {}
        self._edges = {}
        self.applications = 0


def backup(path: Sequence[Tuple[int, EdgeStats]], omega: float, gamma: float
           ) -> List[BackupRecord]:
    """Record discounted values along ``path`` (root first).

    The expanded edge gets ``omega``; each step towards the root multiplies
    by ``gamma`` once, since intermediate rewards are zero.
    """
    records = []
    value = omega
    for depth, (action, edge) in enumerate(reversed(path)):
        if depth:
            value = gamma * value
        edge.record(value)
        records.append(BackupRecord(action, depth, value))
    return records


# --------------------------------------------------------------------------
# full search


def _trajectory(tree: SearchTree, path: Sequence[Tuple[TreeNode, int]], solved: bool,
                gamma: float, problem_id: str) -> Trajectory:
    steps = []
    for i, (node, action) in enumerate(path):
        last = i == len(path) - 1
        steps.append(TrajectoryStep(tree.featurize(node.state), action,
                                    tuple(sorted(node.edges)), 1.0 if last and solved else 0.0))
    return Trajectory(steps, gamma, problem_id)


def run_search(problem: Problem, env: Environment, models, config: MCTSConfig = MCTSConfig(),
               featurizer: Optional[Featurizer] = None, problem_id: str = "",
               keep_backups: bool = False) -> dict:
    """Search one problem; returns the search record.

    Keys: ``problem_id, solved, sequence, iterations, tree_nodes,
    root_visits, seed, config`` (the JSON record) plus ``trajectories`` and,
    with ``keep_backups``, ``backups`` (one list of :class:`BackupRecord`
    per iteration).  The sequence has been replayed by the environment.
    """
    if isinstance(models, PolicyModel):
        models = Models(models, models)
    featurizer = featurizer or Featurizer(env)
    started = time.perf_counter()
    tree = SearchTree(env, problem, featurizer, models)
    seeds = np.random.SeedSequence(config.seed)
    trajectories: List[Trajectory] = []
    backups: List[List[BackupRecord]] = []
    found: Optional[List[int]] = [] if tree.root.solved else None
    iterations = 0
    while (found is None and iterations < config.max_iterations and not tree.root.terminal
           and time.perf_counter() - started < config.wall_timeout):
        node, path, nodes = tree.root, [], []
        omega = 0.0
        while True:
            try:
                a = select_ucb(node, config.c)
            except ValueError:
                break                       # every edge here is dead
            path.append((a, node.edges[a]))
            nodes.append((node, a))
            edge = node.edges[a]
            if not edge.visited:
                child = expand(tree, node, a)
                if child.solved:
                    omega = 1.0
                    found = [act for act, _ in path]
                elif not child.terminal:
                    stream = seeds.spawn(1)[0]
                    omega = simulate(tree, child.state, models.sl, config.max_sim_steps,
                                     config.simulation_num, stream, depth=child.depth)
                if child.terminal and not edge.dead:
                    trajectories.append(_trajectory(tree, nodes, child.solved, config.gamma,
                                                    problem_id))
                break
            node = edge.child
            if node.terminal:
                break                       # revisiting a dead end: value 0
        iterations += 1
        if path:
            rec = backup(path, omega, config.gamma)
            if keep_backups:
                backups.append(rec)
        else:
            break
    sequence: List[Action] = []
    solved = False
    if found is not None:
        sequence = [env.actions[a] for a in found]
        solved = env.verify_sequence(problem, sequence).solved
        if not solved:
            sequence = []
    out = {
        "problem_id": problem_id,
        "solved": solved,
        "sequence": [a.to_dict() for a in sequence],
        "iterations": iterations,
        "tree_nodes": tree.size,
        "root_visits": sum(e.N for e in tree.root.edges.values()),
        "seed": config.seed,
        "config": config.to_dict(),
        "trajectories": trajectories,
    }
    if keep_backups:
        out["backups"] = backups
    return out


def search_record(result: dict) -> dict:
    """The JSON-serialisable part of a :func:`run_search` result."""
    keys = ("problem_id", "solved", "sequence", "iterations", "tree_nodes", "root_visits",
            "seed", "config")
    return {k: result[k] for k in keys}


def problem_seed(seed: int, *parts) -> int:
    """Stable per-problem seed derived from a base seed and labels."""
    blob = "/".join(str(p) for p in (seed, *parts)).encode()
    return zlib.crc32(blob)


def train_loop(problems: Sequence[Tuple[str, Problem]], models: Union[Models, PolicyModel],
               mcts_config: MCTSConfig, train_config, generations: int, env: Environment,
               featurizer: Optional[Featurizer] = None
               ) -> Tuple[List[PolicyModel], List[dict]]:
    """Alternate tree search and REINFORCE for ``generations`` rounds.

    Generation g searches with the latest model for priors and the model
    of the previous generation for rollouts, then updates the latest model
    on the collected trajectories.  Returns the model lineage (starting
    with the given model) and one metrics dict per generation.
    """
    if isinstance(models, Models):
        lineage = [models.sl, models.rl] if models.rl is not models.sl else [models.rl]
    else:
        lineage = [models]
    featurizer = featurizer or Featurizer(env)
    metrics = []
    for g in range(generations):
        rl = lineage[-1]
        sl = lineage[-2] if len(lineage) > 1 else lineage[-1]
        trajectories: List[Trajectory] = []
        solved = 0
        for pid, problem in problems:
            cfg = replace(mcts_config, seed=problem_seed(mcts_config.seed, g, pid))
            res = run_search(problem, env, Models(rl, sl), cfg, featurizer, pid)
            solved += res["solved"]
            trajectories.extend(res["trajectories"])
        if trajectories:
            new = reinforce_update(rl, trajectories, train_config)
        else:
            new = rl.copy(version=rl.version + 1)
        lineage.append(new)
        rets = [t.ret for t in trajectories]
        metrics.append({
            "generation": g + 1,
            "problems": len(problems),
            "solved": solved,
            "solve_rate": solved / len(problems) if problems else 0.0,
            "trajectories": len(trajectories),
            "mean_return": float(np.mean(rets)) if rets else 0.0,
            "model_version": new.version,
        })
    return lineage, metrics
