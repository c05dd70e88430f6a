"""Linear-softmax theorem predictor.

States are turned into a fixed-length feature vector by :class:`Featurizer`;
a :class:`PolicyModel` maps features to a distribution over the
environment's branch-actions.  Supervised pretraining minimises
cross-entropy against replayed annotated actions, and
:func:`reinforce_update` does policy-gradient ascent on search trajectories
using the distribution restricted to the legal actions of each step.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .deduction import Environment, State
from .lang import EquationGoal, RelationGoal, ValueGoal, equation_attrs, term_attrs

__all__ = [
    "Featurizer", "PolicyModel", "TrainConfig", "TrajectoryStep", "Trajectory",
    "EmptyLegalSet", "DimensionError", "EmptyPool",
    "softmax", "predict", "mask_normalize", "train_supervised", "reinforce_update",
    "log_prob", "log_prob_gradient", "topk_hit_rate", "load_model", "save_model",
]


class EmptyLegalSet(ValueError):
    pass


class DimensionError(ValueError):
    pass


class EmptyPool(ValueError):
    pass


# --------------------------------------------------------------------------
# features


class Featurizer:
    """Deterministic state features for one theorem library.

    Layout (in order):

    * fact count per predicate, divided by the number of points
    * goal kind one-hot (relation, value, equation)
    * goal predicate one-hot and goal attribute one-hot
    * determined and pending symbol counts (scaled by 1/10)
    * steps taken divided by the step cap
    * per action: has a binding, is legal, would produce something that
      mentions the goal
    """

    def __init__(self, env: Environment):
        self.env = env
        lib = env.library
        self.predicates = list(lib.predicates)
        self.attributes = list(lib.attributes)
        k = env.action_count
        self.names: List[str] = (
            [f"count:{p}" for p in self.predicates]
            + ["goal:relation", "goal:value", "goal:equation"]
            + [f"goal_pred:{p}" for p in self.predicates]
            + [f"goal_attr:{a}" for a in self.attributes]
            + ["determined", "pending", "steps"]
            + [f"applicable:{a}" for a in env.actions]
            + [f"legal:{a}" for a in env.actions]
            + [f"goal_touch:{a}" for a in env.actions]
        )
        self.dim = len(self.names)
        self._action_base = self.dim - 3 * k

    def __call__(self, state: State) -> np.ndarray:
        cached = state._cache.get("features")
        if cached is not None:
            return cached
        env = self.env
        x = np.zeros(self.dim)
        n_points = max(1, len(state.points))
        i = 0
        for p in self.predicates:
            x[i] = state.facts.count(p) / n_points
            i += 1
        goal = state.goal
        kinds = (RelationGoal, ValueGoal, EquationGoal)
        for kind in kinds:
            x[i] = 1.0 if isinstance(goal, kind) else 0.0
            i += 1
        goal_syms = _goal_symbols(goal)
        goal_fact = goal.fact if isinstance(goal, RelationGoal) else None
        for p in self.predicates:
            x[i] = 1.0 if goal_fact is not None and goal_fact.predicate == p else 0.0
            i += 1
        goal_attr_names = {a.name for a in goal_syms}
        for a in self.attributes:
            x[i] = 1.0 if a in goal_attr_names else 0.0
            i += 1
        store = state.algebra
        x[i] = len(store.determined) / 10
        pending_syms = set()
        for j in store.pending:
            pending_syms.update(a for a in equation_attrs(store.equations[j])
                                if a not in store.determined)
        x[i + 1] = len(pending_syms) / 10
        x[i + 2] = state.steps_taken / max(1, env.max_steps)
        k = env.action_count
        base = self._action_base
        legal = env.legal_mask(state)
        for a in range(k):
            matches = env.matches(state, a)
            x[base + a] = 1.0 if matches else 0.0
            x[base + k + a] = 1.0 if legal[a] else 0.0
            if legal[a]:
                x[base + 2 * k + a] = 1.0 if _touches_goal(state, matches, goal_syms,
                                                          goal_fact) else 0.0
        state._cache["features"] = x
        return x


def _goal_symbols(goal) -> set:
    if isinstance(goal, ValueGoal):
        return set(term_attrs(goal.term))
    if isinstance(goal, EquationGoal):
        return set(equation_attrs(goal.equation))
    return set()


def _touches_goal(state: State, matches, goal_syms: set, goal_fact) -> bool:
    for m in matches:
        if goal_fact is not None and goal_fact in m.conclusion_facts:
            return True
        for eq in m.conclusion_equations:
            if goal_syms.intersection(equation_attrs(eq)) and not state.algebra.is_redundant(eq):
                return True
    return False


# --------------------------------------------------------------------------
# model


@dataclass
class PolicyModel:
    weights: np.ndarray            # feature_dim x action_count
    bias: np.ndarray               # action_count
    action_names: List[str]
    version: int = 0

    @classmethod
    def zeros(cls, feature_dim: int, action_names: Sequence[str], version: int = 0):
        k = len(action_names)
        return cls(np.zeros((feature_dim, k)), np.zeros(k), list(action_names), version)

    @property
    def feature_dim(self) -> int:
        return self.weights.shape[0]

    @property
    def action_count(self) -> int:
        return self.weights.shape[1]

    def copy(self, version: Optional[int] = None) -> "PolicyModel":
        return PolicyModel(self.weights.copy(), self.bias.copy(), list(self.action_names),
                           self.version if version is None else version)

    def logits(self, features: np.ndarray) -> np.ndarray:
        features = np.asarray(features, dtype=float)
        if features.shape[-1] != self.feature_dim:
            raise DimensionError(f"expected {self.feature_dim} features, "
                                 f"got {features.shape[-1]}")
        return features @ self.weights + self.bias

    def to_dict(self) -> dict:
        return {"feature_dim": self.feature_dim, "action_count": self.action_count,
                "action_names": list(self.action_names),
                "weights": self.weights.tolist(), "bias": self.bias.tolist(),
                "version": self.version}

    @classmethod
    def from_dict(cls, data: dict) -> "PolicyModel":
        w = np.asarray(data["weights"], dtype=float).reshape(data["feature_dim"],
                                                             data["action_count"])
        b = np.asarray(data["bias"], dtype=float)
        if b.shape != (data["action_count"],) or len(data["action_names"]) != data["action_count"]:
            raise DimensionError("model file has inconsistent action dimensions")
        return cls(w, b, list(data["action_names"]), int(data.get("version", 0)))


def save_model(model: PolicyModel, path) -> None:
    Path(path).write_text(json.dumps(model.to_dict()) + "\n")


def load_model(path) -> PolicyModel:
    return PolicyModel.from_dict(json.loads(Path(path).read_text()))


def softmax(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    e = np.exp(z - z.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def predict(model: PolicyModel, features: np.ndarray) -> np.ndarray:
    """Distribution over all actions."""
    return softmax(model.logits(features))


def mask_normalize(probs: np.ndarray, legal: Sequence[int]) -> np.ndarray:
    """Zero the illegal entries and renormalise the rest."""
    legal = list(legal)
    if not legal:
        raise EmptyLegalSet("no legal actions to normalise over")
    out = np.zeros_like(np.asarray(probs, dtype=float))
    out[legal] = np.asarray(probs, dtype=float)[legal]
    total = out.sum()
    if total <= 0 or not math.isfinite(total):
        out[legal] = 1.0 / len(legal)
        return out
    return out / total


def _masked_log_softmax(z: np.ndarray, legal: Sequence[int]) -> np.ndarray:
    zl = z[list(legal)]
    m = zl.max()
    return zl - (m + math.log(np.exp(zl - m).sum()))


def log_prob(model: PolicyModel, features, action: int, legal: Sequence[int]) -> float:
    """log pi(action | state) under the distribution restricted to ``legal``."""
    legal = list(legal)
    return float(_masked_log_softmax(model.logits(features), legal)[legal.index(action)])


def log_prob_gradient(model: PolicyModel, features, action: int,
                      legal: Sequence[int]) -> Tuple[np.ndarray, np.ndarray]:
    """Gradient of :func:`log_prob` with respect to (weights, bias)."""
    legal = list(legal)
    x = np.asarray(features, dtype=float)
    pi = np.zeros(model.action_count)
    pi[legal] = np.exp(_masked_log_softmax(model.logits(x), legal))
    g = -pi
    g[action] += 1.0
    return np.outer(x, g), g


# --------------------------------------------------------------------------
# training


@dataclass
class TrainConfig:
    learning_rate: float = 0.5
    epochs: int = 300
    batch_size: int = 64
    l2: float = 1e-4
    gamma: float = 0.99
    seed: int = 0
    rl_learning_rate: float = 0.5

    def __post_init__(self):
        if not self.learning_rate > 0 or not self.rl_learning_rate > 0:
            raise ValueError("learning rates must be positive")
        if not 0 < self.gamma <= 1:
            raise ValueError("gamma must lie in (0, 1]")
        if self.epochs < 0 or self.batch_size < 1:
            raise ValueError("epochs must be >= 0 and batch_size >= 1")


def _cross_entropy(model: PolicyModel, X: np.ndarray, y: np.ndarray, l2: float) -> float:
    if len(X) == 0:
        return float("nan")
    z = model.logits(X)
    z = z - z.max(axis=1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    return float(-logp[np.arange(len(y)), y].mean() + 0.5 * l2 * (model.weights ** 2).sum())


def train_supervised(model: PolicyModel, pool: Sequence, config: TrainConfig,
                     validation: Sequence = ()) -> Tuple[PolicyModel, List[dict]]:
    """Minibatch gradient descent on cross-entropy plus an l2 penalty.

    ``pool`` and ``validation`` hold records with ``features`` and
    ``action_index``.  Returns the new model (version + 1) and a per-epoch
    loss curve.
    """
    if not pool:
        raise EmptyPool("experience pool is empty")
    X = np.asarray([r.features for r in pool], dtype=float)
    y = np.asarray([r.action_index for r in pool], dtype=int)
    Xv = np.asarray([r.features for r in validation], dtype=float).reshape(-1, model.feature_dim)
    yv = np.asarray([r.action_index for r in validation], dtype=int)
    if X.shape[1] != model.feature_dim:
        raise DimensionError(f"pool features have dimension {X.shape[1]}, "
                             f"model expects {model.feature_dim}")
    if config.epochs == 0:
        return model, []
    rng = np.random.default_rng(config.seed)
    new = model.copy(version=model.version + 1)
    n = len(X)
    curve = []
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            xb, yb = X[idx], y[idx]
            p = softmax(new.logits(xb))
            p[np.arange(len(yb)), yb] -= 1.0
            p /= len(yb)
            new.weights -= config.learning_rate * (xb.T @ p + config.l2 * new.weights)
            new.bias -= config.learning_rate * p.sum(axis=0)
        curve.append({"epoch": epoch + 1,
                      "train_loss": _cross_entropy(new, X, y, config.l2),
                      "validation_loss": _cross_entropy(new, Xv, yv, config.l2)
                      if len(Xv) else None})
    return new, curve


@dataclass
class TrajectoryStep:
    features: np.ndarray
    action: int
    legal: Tuple[int, ...]
    reward: float = 0.0


@dataclass
class Trajectory:
    steps: List[TrajectoryStep]
    gamma: float = 0.99
    problem_id: str = ""

    @property
    def ret(self) -> float:
        """R(tau) = sum_t gamma^t r_t."""
        return float(sum(self.gamma ** t * s.reward for t, s in enumerate(self.steps)))


def reinforce_update(model: PolicyModel, trajectories: Sequence[Trajectory],
                     config) -> PolicyModel:
    """theta += lr * mean over trajectories of sum_t grad log pi(a_t|s_t) * R(tau).

    ``config`` is a :class:`TrainConfig` (its ``rl_learning_rate`` is used)
    or a bare learning rate.
    """
    learning_rate = getattr(config, "rl_learning_rate", config)
    if not trajectories:
        raise ValueError("no trajectories to learn from")
    gw = np.zeros_like(model.weights)
    gb = np.zeros_like(model.bias)
    active = False
    for traj in trajectories:
        ret = traj.ret
        if ret == 0.0:
            continue            # contributes exactly nothing
        active = True
        for step in traj.steps:
            dw, db = log_prob_gradient(model, step.features, step.action, step.legal)
            gw += ret * dw
            gb += ret * db
    new = model.copy(version=model.version + 1)
    if active:
        scale = learning_rate / len(trajectories)
        new.weights = model.weights + scale * gw
        new.bias = model.bias + scale * gb
    return new


# --------------------------------------------------------------------------
# evaluation


def topk_hit_rate(model: PolicyModel, pairs: Sequence, ks: Sequence[int]) -> Dict[int, float]:
    """Share of (features, action) pairs whose action ranks within the top k.

    Ranking is by probability, highest first, ties going to the lower index.
    """
    if not pairs:
        raise ValueError("no test pairs")
    for k in ks:
        if not 1 <= k <= model.action_count:
            raise ValueError(f"k={k} outside 1..{model.action_count}")
    X = np.asarray([_features_of(p) for p in pairs], dtype=float)
    y = np.asarray([_action_of(p) for p in pairs], dtype=int)
    probs = softmax(model.logits(X))
    idx = np.arange(model.action_count)
    ranks = np.empty(len(y), dtype=int)
    for r, (p, a) in enumerate(zip(probs, y)):
        ranks[r] = int(np.sum((p > p[a]) | ((p == p[a]) & (idx < a))))
    return {k: float(np.mean(ranks < k)) for k in ks}


def _features_of(pair):
    return pair.features if hasattr(pair, "features") else pair[0]


def _action_of(pair):
    return pair.action_index if hasattr(pair, "action_index") else pair[1]
