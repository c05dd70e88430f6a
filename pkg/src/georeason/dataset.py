"""Problem corpora: loading, difficulty levels, stratified splits,
experience replay and summary tables."""

from __future__ import annotations

import json
import random
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .deduction import Action, Environment
from .lang import FormalLanguageError, Library, Problem, problem_from_dict

__all__ = [
    "CATEGORIES", "LEVELS", "ProblemRecord", "CorpusError", "ReplayError", "Experience",
    "Split", "difficulty_of", "record_from_dict", "load_corpus", "split",
    "build_experience", "save_pool", "load_pool", "corpus_stats", "format_stats",
]

CATEGORIES = ("Angle", "Length", "Area", "Perimeter", "Other")
LEVELS = ("L1", "L2", "L3", "L4", "L5", "L6")


def difficulty_of(length: int) -> str:
    """Level label for an annotated sequence of ``length`` theorems."""
    if length < 0:
        raise ValueError("sequence length must be non-negative")
    if length <= 2:
        return "L1"
    if length > 10:
        return "L6"
    return LEVELS[(length - 1) // 2]


@dataclass
class ProblemRecord:
    id: str
    problem: Problem
    category: str
    annotated_sequence: Optional[Tuple[Action, ...]] = None
    declared_level: Optional[str] = None
    coordinates: Optional[dict] = None

    @property
    def level(self) -> Optional[str]:
        if self.annotated_sequence is not None:
            return difficulty_of(len(self.annotated_sequence))
        return self.declared_level


class CorpusError(Exception):
    """Every problem file that failed to load, reported together."""

    def __init__(self, failures: List[Tuple[str, str]]):
        self.failures = failures
        lines = [f"{name}: {msg}" for name, msg in failures]
        super().__init__(f"{len(failures)} problem file(s) rejected:\n  " + "\n  ".join(lines))


class ReplayError(RuntimeError):
    pass


def record_from_dict(data: dict, library: Library, fallback_id: str = "") -> ProblemRecord:
    problem = problem_from_dict(data, library)
    category = data.get("category", "Other")
    if category not in CATEGORIES:
        raise FormalLanguageError(f"unknown category {category!r}")
    seq = data.get("annotated_sequence")
    actions = tuple(Action.from_dict(a) for a in seq) if seq is not None else None
    level = data.get("level")
    if level is not None and level not in LEVELS:
        raise FormalLanguageError(f"unknown level {level!r}")
    return ProblemRecord(str(data.get("id", fallback_id)), problem, category, actions,
                         level, data.get("coordinates"))


def load_corpus(path, library: Library, env: Optional[Environment] = None,
                verify: bool = True) -> List[ProblemRecord]:
    """Load every ``*.json`` problem under ``path`` sorted by id.

    Annotated sequences are replayed when ``verify`` is set; a sequence that
    does not solve its problem, or has a step that adds nothing, rejects the
    file.  All failures are collected into one :class:`CorpusError`.
    """
    path = Path(path)
    if not path.is_dir():
        raise CorpusError([(str(path), "not a directory")])
    env = env or Environment(library)
    records, failures = [], []
    for file in sorted(path.glob("*.json")):
        try:
            data = json.loads(file.read_text())
            rec = record_from_dict(data, library, fallback_id=file.stem)
        except (json.JSONDecodeError, FormalLanguageError, KeyError, TypeError,
                ValueError) as exc:
            failures.append((file.name, str(exc)))
            continue
        if verify and rec.annotated_sequence is not None:
            result = env.verify_sequence(rec.problem, rec.annotated_sequence)
            if not result.verified:
                where = ("first_failure=" + str(result.first_failure)
                         if result.first_failure is not None else "goal not reached")
                failures.append((file.name, f"annotated sequence does not verify ({where})"))
                continue
        records.append(rec)
    if failures:
        raise CorpusError(failures)
    ids = [r.id for r in records]
    if len(set(ids)) != len(ids):
        raise CorpusError([(str(path), "duplicate problem ids")])
    return sorted(records, key=lambda r: r.id)


# --------------------------------------------------------------------------
# splitting


class Split(NamedTuple):
    train: List[ProblemRecord]
    test: List[ProblemRecord]
    validation: List[ProblemRecord]


def _largest_remainder(n: int, ratios: Sequence[Fraction], deficit: List[Fraction]) -> List[int]:
    quotas = [n * r for r in ratios]
    sizes = [int(q) for q in quotas]            # floor, quotas are non-negative
    left = n - sum(sizes)
    # ties on the remainder go to the part furthest behind its global target
    order = sorted(range(len(ratios)),
                   key=lambda i: (-(quotas[i] - sizes[i]), -deficit[i], i))
    for i in order[:left]:
        sizes[i] += 1
    return sizes


def split(records: Sequence[ProblemRecord], ratios=(0.7, 0.15, 0.15), seed: int = 0) -> Split:
    """Stratified train/test/validation partition by (category, level)."""
    fr = [Fraction(str(r)) if not isinstance(r, Fraction) else r for r in ratios]
    if len(fr) != 3 or any(r < 0 for r in fr) or sum(fr) != 1:
        raise ValueError(f"ratios must be three non-negative numbers summing to 1, got {ratios}")
    strata: Dict[tuple, List[ProblemRecord]] = defaultdict(list)
    for r in sorted(records, key=lambda r: r.id):
        strata[(r.category, r.level or "")].append(r)
    rng = random.Random(seed)
    parts: List[List[ProblemRecord]] = [[], [], []]
    total = len(records)
    for key in sorted(strata):
        members = strata[key]
        rng.shuffle(members)
        deficit = [total * fr[i] - len(parts[i]) for i in range(3)]
        sizes = _largest_remainder(len(members), fr, deficit)
        start = 0
        for i, size in enumerate(sizes):
            parts[i].extend(members[start:start + size])
            start += size
    return Split(*(sorted(p, key=lambda r: r.id) for p in parts))


# --------------------------------------------------------------------------
# experience


@dataclass
class Experience:
    problem_id: str
    t: int
    features: np.ndarray
    action_index: int
    G: float

    def to_dict(self) -> dict:
        return {"problem_id": self.problem_id, "t": self.t,
                "features": [float(v) for v in self.features],
                "action_index": self.action_index, "G": self.G}

    @classmethod
    def from_dict(cls, data: dict) -> "Experience":
        return cls(data["problem_id"], int(data["t"]), np.asarray(data["features"], dtype=float),
                   int(data["action_index"]), float(data["G"]))


def build_experience(records: Sequence[ProblemRecord], env: Environment, featurize,
                     gamma: float = 0.99) -> List[Experience]:
    """Replay annotated sequences into (s_t, a_t, G_t) records, G_t = gamma^(T-1-t)."""
    pool = []
    for rec in sorted(records, key=lambda r: r.id):
        seq = rec.annotated_sequence
        if seq is None:
            continue
        state = env.init_state(rec.problem)
        T = len(seq)
        for t, action in enumerate(seq):
            idx = env.resolve(action)
            if idx is None:
                raise ReplayError(f"{rec.id}: step {t} names unknown action {action}")
            features = featurize(state)
            result = env.step(state, idx)
            if result.new_nodes == 0:
                raise ReplayError(f"{rec.id}: step {t} ({action}) adds nothing")
            pool.append(Experience(rec.id, t, features, idx, gamma ** (T - 1 - t)))
            state = result.state
        if not env.solved(state):
            raise ReplayError(f"{rec.id}: annotated sequence does not reach the goal")
    return pool


def save_pool(pool: Sequence[Experience], path) -> None:
    with open(path, "w") as fh:
        for rec in pool:
            fh.write(json.dumps(rec.to_dict()) + "\n")


def load_pool(path) -> List[Experience]:
    with open(path) as fh:
        return [Experience.from_dict(json.loads(line)) for line in fh if line.strip()]


# --------------------------------------------------------------------------
# statistics


def corpus_stats(records: Sequence[ProblemRecord]) -> dict:
    """Counts per category and level with row and column totals."""
    table = {c: {lv: 0 for lv in LEVELS} for c in CATEGORIES}
    for r in records:
        if r.level is not None:
            table.setdefault(r.category, {lv: 0 for lv in LEVELS})[r.level] += 1
    rows = {c: {**cells, "Total": sum(cells.values())} for c, cells in table.items()}
    totals = {lv: sum(rows[c][lv] for c in rows) for lv in LEVELS}
    totals["Total"] = sum(totals.values())
    return {"rows": rows, "totals": totals}


def format_stats(stats: dict) -> str:
    header = ["Category", "Total", *LEVELS]
    lines = [_row(header)]
    for cat, cells in stats["rows"].items():
        lines.append(_row([cat, cells["Total"], *(cells[lv] for lv in LEVELS)]))
    t = stats["totals"]
    lines.append(_row(["Total", t["Total"], *(t[lv] for lv in LEVELS)]))
    return "\n".join(lines) + "\n"


def _row(cells) -> str:
    return f"{str(cells[0]):<10}" + "".join(f"{str(c):>7}" for c in cells[1:])
