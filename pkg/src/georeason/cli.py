"""Command-line interface.

Exit codes: 0 solved / verified / done, 1 unsolved / not verified, 2 error.
Every command accepts ``--config FILE`` with ``key = value`` lines; values
from the file override the corresponding flags.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from . import __version__, default_corpus_path, default_library_path
from .dataset import (CorpusError, ReplayError, build_experience, corpus_stats, format_stats,
                      load_corpus, split)
from .deduction import Action, Environment
from .lang import FormalLanguageError, Library, parse_cdl, parse_gdl, problem_from_dict
from .mcts import MCTSConfig, problem_seed, run_search, search_record, train_loop
from .policy import (DimensionError, EmptyPool, Featurizer, PolicyModel, TrainConfig,
                     load_model, save_model, topk_hit_rate, train_supervised)
from .search import METHODS, SearchBudget, benchmark, format_benchmark, solve

log = logging.getLogger("georeason")

ALL_METHODS = METHODS + ("mcts",)
DEFAULT_KS = (1, 3, 5, 10, 15, 20, 25)


class UsageError(Exception):
    """Bad input detected after argument parsing; maps to exit code 2."""


@dataclass
class RunConfig:
    gdl: Path = field(default_factory=default_library_path)
    corpus: Optional[Path] = None
    model: Optional[Path] = None
    out: Optional[Path] = None
    mcts: MCTSConfig = MCTSConfig()
    train: TrainConfig = field(default_factory=TrainConfig)
    budget: SearchBudget = SearchBudget()
    max_steps: int = 30
    generations: int = 1
    seed: int = 0
    verbosity: int = 0


# --------------------------------------------------------------------------
# configuration


def read_key_values(path) -> Dict[str, str]:
    """``key = value`` lines; blank lines and ``#`` comments are ignored."""
    out = {}
    for n, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


_FLAG_KEYS = {
    # flag dest -> (section, field)
    "sims": ("mcts", "simulation_num"), "max_sim_steps": ("mcts", "max_sim_steps"),
    "iterations": ("mcts", "max_iterations"), "c": ("mcts", "c"), "gamma": ("mcts", "gamma"),
    "max_nodes": ("budget", "max_nodes"), "max_depth": ("budget", "max_depth"),
    "beam_width": ("budget", "beam_width"), "epochs": ("train", "epochs"),
    "learning_rate": ("train", "learning_rate"), "rl_learning_rate": ("train", "rl_learning_rate"),
}
_SECTIONS = {"mcts": MCTSConfig, "budget": SearchBudget, "train": TrainConfig}
_TOP_LEVEL = {"seed": int, "max_steps": int, "generations": int, "timeout": float}


def _coerce(cls, name: str, value):
    kind = {f.name: f.type for f in fields(cls)}[name]
    return int(value) if kind in (int, "int") else float(value)


def build_config(args: argparse.Namespace) -> RunConfig:
    """Merge defaults, flags and the optional config file into a RunConfig."""
    values: Dict[str, object] = {k: v for k, v in vars(args).items() if v is not None}
    if getattr(args, "config", None):
        values.update(read_key_values(args.config))
    sections = {name: {} for name in _SECTIONS}
    top = {}
    for key, value in values.items():
        if key in ("command", "config", "func", "verbose", "problem", "sequence", "method",
                   "methods", "k", "dot", "jobs", "split", "json_out", "gdl", "corpus",
                   "model", "out"):
            continue
        if key == "gamma":
            # one discount for search backups and experience returns
            sections["mcts"]["gamma"] = sections["train"]["gamma"] = float(value)
        elif key in _FLAG_KEYS:
            section, name = _FLAG_KEYS[key]
            sections[section][name] = _coerce(_SECTIONS[section], name, value)
        elif key in _TOP_LEVEL:
            top[key] = _TOP_LEVEL[key](value)
        else:
            hit = [s for s, cls in _SECTIONS.items() if key in {f.name for f in fields(cls)}]
            if not hit:
                raise UsageError(f"unknown setting {key!r}")
            for s in hit:
                sections[s][key] = _coerce(_SECTIONS[s], key, value)
    seed = int(top.get("seed", 0))
    timeout = top.get("timeout")
    mcts_kw = {"seed": seed, **sections["mcts"]}
    budget_kw = {"rng_seed": seed, **sections["budget"]}
    if timeout is not None:
        mcts_kw.setdefault("wall_timeout", timeout)
        budget_kw.setdefault("wall_timeout", timeout)
    try:
        cfg = RunConfig(
            mcts=MCTSConfig(**mcts_kw),
            budget=SearchBudget(**budget_kw),
            train=TrainConfig(**{"seed": seed, **sections["train"]}),
            max_steps=int(top.get("max_steps", 30)),
            generations=int(top.get("generations", 1)),
            seed=seed,
            verbosity=getattr(args, "verbose", 0) or 0,
        )
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    for name in ("gdl", "corpus", "model", "out"):
        value = values.get(name)
        if value is not None:
            setattr(cfg, name, Path(value))
    if cfg.max_steps < 1 or cfg.generations < 0:
        raise UsageError("max_steps must be >= 1 and generations >= 0")
    return cfg


def _library(cfg: RunConfig) -> Library:
    if not cfg.gdl.is_file():
        raise UsageError(f"theorem library not found: {cfg.gdl}")
    return parse_gdl(cfg.gdl.read_text())


def _corpus_dir(cfg: RunConfig) -> Path:
    return cfg.corpus if cfg.corpus is not None else default_corpus_path()


def _load_problem(path: Path, lib: Library):
    """(id, problem) from a JSON problem file or a declaration-language file."""
    if not path.is_file():
        raise UsageError(f"problem file not found: {path}")
    text = path.read_text()
    try:
        if path.suffix == ".json":
            data = json.loads(text)
            return str(data.get("id", path.stem)), problem_from_dict(data, lib)
        return path.stem, parse_cdl(text, lib)
    except (FormalLanguageError, json.JSONDecodeError) as exc:
        raise UsageError(f"{path}:{exc}") from None


def _load_sequence(path: Path) -> List[Action]:
    """Accepts a list of actions or an object with a ``sequence`` list.

    An action is ``{"theorem": ..., "branch": ...}`` or ``"name(b)"``.
    """
    if not path.is_file():
        raise UsageError(f"sequence file not found: {path}")
    data = json.loads(path.read_text())
    if isinstance(data, dict):
        data = data.get("sequence")
    if not isinstance(data, list):
        raise UsageError("sequence file must hold a list of actions")
    out = []
    for item in data:
        if isinstance(item, str):
            name, _, rest = item.partition("(")
            if not rest.endswith(")"):
                raise UsageError(f"bad action {item!r}")
            out.append(Action(name.strip(), int(rest[:-1])))
        else:
            out.append(Action.from_dict(item))
    return out


def _model_for(cfg: RunConfig, env: Environment, feat: Featurizer) -> PolicyModel:
    if cfg.model is None:
        log.info("no model given, using a uniform policy")
        return PolicyModel.zeros(feat.dim, [str(a) for a in env.actions])
    if not cfg.model.is_file():
        raise UsageError(f"model file not found: {cfg.model}")
    model = load_model(cfg.model)
    if model.feature_dim != feat.dim or model.action_count != env.action_count:
        raise UsageError("model does not match the theorem library")
    return model


def _emit(payload, cfg: RunConfig, name: Optional[str] = None) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True)
    print(text)
    if cfg.out is not None:
        target = cfg.out / name if name and cfg.out.suffix != ".json" else cfg.out
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(text + "\n")


# --------------------------------------------------------------------------
# commands


def cmd_solve(args, cfg: RunConfig) -> int:
    lib = _library(cfg)
    env = Environment(lib, cfg.max_steps)
    pid, problem = _load_problem(Path(args.problem), lib)
    method = args.method.lower()
    if method == "mcts":
        feat = Featurizer(env)
        model = _model_for(cfg, env, feat)
        record = search_record(run_search(problem, env, model, cfg.mcts, feat, pid))
        record["method"] = "mcts"
    else:
        res = solve(env, problem, method, cfg.budget)
        record = {"problem_id": pid, "method": method, **res.to_dict(with_time=False),
                  "seed": cfg.seed, "budget": _budget_dict(cfg.budget)}
    _emit(record, cfg, f"{pid}.{method}.json")
    return 0 if record["solved"] else 1


def _budget_dict(b: SearchBudget) -> dict:
    return {f.name: getattr(b, f.name) for f in fields(b)}


def cmd_verify(args, cfg: RunConfig) -> int:
    lib = _library(cfg)
    env = Environment(lib, cfg.max_steps)
    pid, problem = _load_problem(Path(args.problem), lib)
    seq = _load_sequence(Path(args.sequence))
    result = env.verify_sequence(problem, seq)
    payload = {"problem_id": pid, "verified": result.verified, "solved": result.solved,
               "first_failure": result.first_failure, "steps": len(seq),
               "trace": env.export_hypertree(result.state)}
    if args.dot:
        Path(args.dot).write_text(env.export_dot(result.state, pid or "proof"))
    _emit(payload, cfg, f"{pid}.verify.json")
    return 0 if result.verified else 1


def cmd_train(args, cfg: RunConfig) -> int:
    lib = _library(cfg)
    env = Environment(lib, cfg.max_steps)
    feat = Featurizer(env)
    records = load_corpus(_corpus_dir(cfg), lib, env)
    parts = split(records, seed=cfg.seed)
    pool = build_experience(parts.train, env, feat, cfg.train.gamma)
    if not pool:
        raise UsageError("no annotated sequences in the training split; nothing to learn from")
    val = build_experience(parts.validation, env, feat, cfg.train.gamma)
    base = PolicyModel.zeros(feat.dim, [str(a) for a in env.actions])
    sl, curve = train_supervised(base, pool, cfg.train, val)
    problems = [(r.id, r.problem) for r in parts.train]
    lineage, gens = train_loop(problems, sl, cfg.mcts, cfg.train, cfg.generations, env, feat)
    out = cfg.out or Path("runs/train")
    out.mkdir(parents=True, exist_ok=True)
    files = []
    for model in lineage:
        path = out / f"model_v{model.version}.json"
        save_model(model, path)
        files.append(path.name)
    save_model(lineage[-1], out / "model.json")
    metrics = {
        "seed": cfg.seed,
        "split": {"train": [r.id for r in parts.train], "test": [r.id for r in parts.test],
                  "validation": [r.id for r in parts.validation]},
        "experience": {"train": len(pool), "validation": len(val)},
        "supervised": {"final": curve[-1] if curve else None, "epochs": len(curve)},
        "generations": gens,
        "models": files,
        "mcts": cfg.mcts.to_dict(),
        "train": {f.name: getattr(cfg.train, f.name) for f in fields(cfg.train)},
    }
    text = json.dumps(metrics, indent=2, sort_keys=True)
    (out / "metrics.json").write_text(text + "\n")
    print(text)
    return 0


def cmd_eval(args, cfg: RunConfig) -> int:
    lib = _library(cfg)
    env = Environment(lib, cfg.max_steps)
    feat = Featurizer(env)
    if cfg.model is None:
        raise UsageError("--model is required")
    model = _model_for(cfg, env, feat)
    records = load_corpus(_corpus_dir(cfg), lib, env)
    chosen = records if args.split == "all" else getattr(split(records, seed=cfg.seed), args.split)
    pairs = build_experience(chosen, env, feat)
    if not pairs:
        raise UsageError(f"the {args.split} split has no annotated steps to evaluate")
    ks = args.k or list(DEFAULT_KS)
    rates = topk_hit_rate(model, pairs, ks)
    width = 8
    lines = ["Range".ljust(10) + "".join(f"{k:>{width}}" for k in ks),
             "Hit rate".ljust(10) + "".join(f"{100 * rates[k]:>{width - 1}.2f}%" for k in ks)]
    table = "\n".join(lines) + "\n"
    payload = {"model_version": model.version, "split": args.split, "pairs": len(pairs),
               "uniform_top1": 1.0 / env.action_count,
               "hit_rate": {str(k): rates[k] for k in ks}}
    if cfg.out is not None:
        cfg.out.parent.mkdir(parents=True, exist_ok=True)
        cfg.out.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    sys.stdout.write(table)
    return 0


def cmd_bench(args, cfg: RunConfig) -> int:
    lib = _library(cfg)
    env = Environment(lib, cfg.max_steps)
    records = load_corpus(_corpus_dir(cfg), lib, env)
    methods = [m.strip().lower() for m in (args.methods or ",".join(ALL_METHODS)).split(",")]
    for m in methods:
        if m not in ALL_METHODS:
            raise UsageError(f"unknown method {m!r}")
    feat = Featurizer(env)
    model = _model_for(cfg, env, feat) if "mcts" in methods else None

    def runner(method, rec):
        if method == "mcts":
            mc = replace(cfg.mcts, seed=problem_seed(cfg.seed, rec.id))
            return run_search(rec.problem, env, model, mc, feat, rec.id)
        return solve(env, rec.problem, method, cfg.budget)

    rows = benchmark(records, methods, runner, jobs=args.jobs)
    text = format_benchmark(rows)
    payload = {"seed": cfg.seed, "problems": len(records), "mcts": cfg.mcts.to_dict(),
               "budget": _budget_dict(cfg.budget), "rows": rows}
    out = cfg.out or Path("runs/bench")
    out.mkdir(parents=True, exist_ok=True)
    (out / "bench.json").write_text(json.dumps(payload, indent=2) + "\n")
    (out / "bench.txt").write_text(text)
    sys.stdout.write(text)
    return 0


def cmd_stats(args, cfg: RunConfig) -> int:
    lib = _library(cfg)
    records = load_corpus(_corpus_dir(cfg), lib, Environment(lib, cfg.max_steps))
    stats = corpus_stats(records)
    if args.json_out:
        print(json.dumps(stats, indent=2))
    else:
        sys.stdout.write(format_stats(stats))
    return 0


# --------------------------------------------------------------------------
# argument parsing


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--gdl", help="theorem library file (default: bundled library)")
    p.add_argument("--config", help="key = value settings file; overrides flags")
    p.add_argument("--seed", type=int)
    p.add_argument("--max-steps", dest="max_steps", type=int, help="episode step limit")
    p.add_argument("--out", help="output file or directory")
    p.add_argument("-v", "--verbose", action="count", default=0)


def _corpus_flag(p):
    p.add_argument("--corpus", help="directory of problem JSON files (default: bundled corpus)")


def _search_flags(p):
    p.add_argument("--timeout", type=float, help="wall-clock limit per search, seconds")
    p.add_argument("--sims", type=int, help="rollouts per expansion")
    p.add_argument("--max-sim-steps", dest="max_sim_steps", type=int, help="rollout length cap")
    p.add_argument("--iterations", type=int, help="MCTS iterations")
    p.add_argument("--c", type=float, help="UCB exploration constant")
    p.add_argument("--gamma", type=float, help="discount")
    p.add_argument("--beam-width", dest="beam_width", type=int)
    p.add_argument("--max-nodes", dest="max_nodes", type=int,
                   help="baseline budget in generated states")
    p.add_argument("--model", help="policy model JSON (MCTS priors and rollouts)")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="georeason", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="search for a theorem sequence")
    p.add_argument("problem")
    p.add_argument("--method", default="mcts", choices=ALL_METHODS)
    _common(p), _search_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="replay a theorem sequence")
    p.add_argument("problem")
    p.add_argument("sequence")
    p.add_argument("--dot", help="write the proof trace in DOT format here")
    _common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("train", help="supervised pretraining then search-driven RL")
    _common(p), _corpus_flag(p), _search_flags(p)
    p.add_argument("--generations", type=int)
    p.add_argument("--epochs", type=int)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="top-k hit rate of a model")
    _common(p), _corpus_flag(p)
    p.add_argument("--model")
    p.add_argument("--k", type=int, nargs="+")
    p.add_argument("--split", default="test", choices=("train", "test", "validation", "all"))
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="success rates of several methods by level")
    _common(p), _corpus_flag(p), _search_flags(p)
    p.add_argument("--methods", help="comma-separated subset of: " + ",".join(ALL_METHODS))
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("stats", help="corpus counts by category and level")
    _common(p), _corpus_flag(p)
    p.add_argument("--json", dest="json_out", action="store_true")
    p.set_defaults(func=cmd_stats)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:          # argparse reports usage errors with code 2
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        cfg = build_config(args)
        return args.func(args, cfg)
    except (UsageError, FormalLanguageError, CorpusError, ReplayError, EmptyPool,
            DimensionError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
