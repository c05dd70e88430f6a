"""Acceptance criteria 1-12.

Each test prints one ``CRITERION n: PASS|FAIL ...`` line (run with ``-s`` or
look at the captured output) and then asserts.  Tolerances and budgets are
pinned as module constants.
"""

import json
import math
import random
import time
from fractions import Fraction

import numpy as np
import pytest

import matcher_oracle
from georeason import default_corpus_path
from georeason.algebra import EquationStore
from georeason.cli import main
from georeason.dataset import build_experience, difficulty_of
from georeason.deduction import Environment
from georeason.lang import Attr, parse_equation
from georeason.mcts import (EdgeStats, MCTSConfig, TreeNode, problem_seed, run_search,
                            select_ucb, train_loop)
from georeason.policy import (PolicyModel, TrainConfig, Trajectory, TrajectoryStep, log_prob,
                              log_prob_gradient, mask_normalize, predict, reinforce_update,
                              topk_hit_rate)
from georeason.search import SearchBudget, benchmark, format_benchmark, solve

VERIFY_SECONDS = 1.0
MATCHER_SWEEP_SECONDS = 60.0
ALGEBRA_SHUFFLES = 20
UCB_DRAWS = 1000
GRADIENT_MODELS = 120
GRADIENT_EPS = 1e-5
GRADIENT_REL_TOL = 1e-4
HIT_RATE_FACTOR = 3.0
EVAL_SECONDS = 10.0
BENCH_SECONDS = 600.0
L12_SOLVE_RATE = 0.90
# equal budget: 500 generated states per baseline search, 200 MCTS iterations
BASELINE_BUDGET = SearchBudget(max_nodes=500, max_depth=30, wall_timeout=60, beam_width=4)
BENCH_MCTS = MCTSConfig(c=0.3, gamma=0.99, simulation_num=30, max_sim_steps=3,
                        max_iterations=200, wall_timeout=60, seed=0)
METHODS_9 = ["mcts", "fw-bfs", "fw-dfs", "fw-rs", "fw-bs", "bw-bfs", "bw-dfs", "bw-rs", "bw-bs"]


def report(capsys, n, ok, detail):
    with capsys.disabled():
        print(f"\nCRITERION {n}: {'PASS' if ok else 'FAIL'} {detail}")
    assert ok, detail


def run_cli(capsys, *argv):
    code = main([str(a) for a in argv])
    return code, capsys.readouterr().out


# --------------------------------------------------------------------------


def test_criterion_01_verifier_soundness(capsys, corpus, tmp_path):
    worst, failures = 0.0, []
    for rec in corpus:
        seq = tmp_path / f"{rec.id}.seq.json"
        seq.write_text(json.dumps([a.to_dict() for a in rec.annotated_sequence]))
        t0 = time.perf_counter()
        code, _ = run_cli(capsys, "verify", default_corpus_path() / f"{rec.id}.json", seq)
        worst = max(worst, time.perf_counter() - t0)
        if code != 0:
            failures.append(rec.id)
    ok = not failures and worst < VERIFY_SECONDS and len(corpus) >= 40
    report(capsys, 1, ok, f"{len(corpus) - len(failures)}/{len(corpus)} verified, "
                          f"slowest {worst:.3f}s (limit {VERIFY_SECONDS}s)")


def test_criterion_02_matcher_oracle(capsys, env, corpus):
    t0 = time.perf_counter()
    bad, checked = [], 0
    for rec in corpus:
        state = env.init_state(rec.problem)
        states = [state]
        for a in rec.annotated_sequence:
            state = env.step(state, a).state
            states.append(state)
        for s in (states[0], states[len(states) // 2], states[-1]):
            bad.extend((rec.id, d) for d in matcher_oracle.discrepancies(env, s))
            checked += env.action_count
    elapsed = time.perf_counter() - t0
    ok = not bad and elapsed < MATCHER_SWEEP_SECONDS
    report(capsys, 2, ok, f"{len(bad)} discrepancies over {checked} (state, branch) pairs, "
                          f"{elapsed:.1f}s (limit {MATCHER_SWEEP_SECONDS:.0f}s)")


def test_criterion_03_algebra(capsys):
    x, y, z = (Attr("LengthOfLine", p) for p in (("A", "B"), ("B", "C"), ("A", "C")))
    fixtures = {
        "sum/difference": (["Equal(Add(LengthOfLine(A,B),LengthOfLine(B,C)),180)",
                            "Equal(Sub(LengthOfLine(A,B),LengthOfLine(B,C)),40)"],
                           {x: Fraction(110), y: Fraction(70)}),
        "3-4-5": (["Equal(Pow(LengthOfLine(A,C),2),Add(Pow(LengthOfLine(A,B),2),"
                   "Pow(LengthOfLine(B,C),2)))",
                   "Equal(LengthOfLine(A,B),3)", "Equal(LengthOfLine(B,C),4)"],
                  {x: Fraction(3), y: Fraction(4), z: Fraction(5)}),
    }
    rng = random.Random(0)
    problems = []
    for name, (sources, want) in fixtures.items():
        orders = [sources] + [rng.sample(sources, len(sources)) for _ in range(ALGEBRA_SHUFFLES)]
        for order in orders:
            store = EquationStore()
            for s in order:
                store.add_equation(parse_equation(s))
            store.solve()
            got = store.determined
            if got != want or not all(type(v) is Fraction for v in got.values()):
                problems.append((name, order))
    report(capsys, 3, not problems,
           f"2 fixtures x {ALGEBRA_SHUFFLES + 1} orders, {len(problems)} mismatches")


TWO_PLY_FIXTURES = {
    "one-step": """Points A,B,C;
Polygon(A,B,C);
Equal(MeasureOfAngle(A,B,C),60);
Equal(MeasureOfAngle(B,C,A),70);
Goal Value(MeasureOfAngle(C,A,B))=50;""",
    "two-step": """Points A,B,C,D,E;
Polygon(A,B,C);
Collinear(A,C,D);
Collinear(B,C,E);
Angle(D,C,E);
Equal(MeasureOfAngle(D,C,E),70);
Equal(MeasureOfAngle(C,A,B),50);
Goal Value(MeasureOfAngle(A,B,C))=60;""",
    "unreachable": """Points A,B,C,D;
Polygon(A,B,C);
Equal(MeasureOfAngle(A,B,C),60);
Goal Value(LengthOfLine(A,D));""",
}


def test_criterion_04_reward_contract(capsys, library, cdl):
    violations, steps, goal_hits = [], 0, 0
    for max_steps in (30, 1):
        env = Environment(library, max_steps=max_steps)
        for name, src in TWO_PLY_FIXTURES.items():
            root = env.init_state(cdl(src))
            frontier = [((), root)]
            for _ in range(2):
                nxt = []
                for seq, state in frontier:
                    for a in range(env.action_count):
                        res = env.step(state, a)
                        steps += 1
                        solved = env.solved(res.state)
                        goal_hits += solved
                        want = 1 if solved and not res.no_progress else 0
                        if res.reward != want:
                            violations.append((name, max_steps, seq + (a,)))
                        if res.no_progress and res.reward != 0:
                            violations.append((name, max_steps, seq + (a,), "no-progress"))
                        at_limit = res.state.steps_taken >= max_steps
                        if at_limit and not res.terminal:
                            violations.append((name, max_steps, seq + (a,), "limit"))
                        if not res.terminal:
                            nxt.append((seq + (a,), res.state))
                frontier = nxt
    ok = not violations and goal_hits > 0
    report(capsys, 4, ok, f"{steps} steps over 3 fixtures x 2 step limits, "
                          f"{goal_hits} goal-reaching, {len(violations)} violations")


def test_criterion_05_backup_identity(capsys, env, featurizer, sl_model, records_by_id,
                                      monkeypatch):
    contributions = {}
    original = EdgeStats.record

    def logging_record(self, value):
        contributions.setdefault(id(self), (self, []))[1].append(value)
        original(self, value)

    monkeypatch.setattr(EdgeStats, "record", logging_record)
    cfg = MCTSConfig(simulation_num=5, max_sim_steps=3, max_iterations=80, c=1.25, seed=5)
    bad_depth, records = 0, 0
    for rid in ("ang18", "len09", "per06", "are07"):
        res = run_search(records_by_id[rid].problem, env, sl_model, cfg, featurizer, rid,
                         keep_backups=True)
        for trace in res["backups"]:
            omega = trace[0].value
            value = omega
            for r in trace:
                records += 1
                if r.depth:
                    value = cfg.gamma * value
                if r.value != value or not math.isclose(r.value, cfg.gamma ** r.depth * omega,
                                                        rel_tol=1e-12, abs_tol=1e-300):
                    bad_depth += 1
    bad_mean = sum(1 for edge, vals in contributions.values()
                   if edge.N != len(vals) or not math.isclose(edge.G, sum(vals) / len(vals),
                                                              rel_tol=1e-12, abs_tol=1e-15))
    ok = bad_depth == 0 and bad_mean == 0 and records > 0
    report(capsys, 5, ok, f"{records} backup records, {bad_depth} off gamma^d*omega; "
                          f"{len(contributions)} edges, {bad_mean} with G != running mean")


def test_criterion_06_ucb_reductions(capsys):
    rng = np.random.default_rng(0)
    failures = 0
    for _ in range(UCB_DRAWS):
        k = int(rng.integers(1, 9))
        actions = sorted(rng.choice(38, size=k, replace=False).tolist())
        stats = {a: dict(P=float(rng.random()), N=int(rng.integers(1, 20)),
                         G=float(rng.integers(0, 5)) / 4) for a in actions}
        node = TreeNode(None, 0, {a: EdgeStats(**s) for a, s in stats.items()})
        best_g = max(s["G"] for s in stats.values())
        greedy = min(a for a in actions if stats[a]["G"] == best_g)
        if select_ucb(node, 0.0) != greedy:
            failures += 1
        # one fresh edge must win whatever the others look like
        fresh = actions[int(rng.integers(k))]
        node.edges[fresh] = EdgeStats(P=float(rng.random()))
        if select_ucb(node, float(rng.random() * 3)) != fresh:
            failures += 1
        # identical stats: lowest index
        same = TreeNode(None, 0, {a: EdgeStats(P=0.5, N=3, G=0.5) for a in actions})
        if select_ucb(same, float(rng.random() * 3)) != actions[0]:
            failures += 1
    report(capsys, 6, failures == 0,
           f"{UCB_DRAWS} random draws x 3 properties, {failures} failures")


def test_criterion_07_gradient(capsys):
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(GRADIENT_MODELS):
        d, k = int(rng.integers(2, 5)), int(rng.integers(2, 6))
        model = PolicyModel(rng.normal(size=(d, k)), rng.normal(size=k),
                            [str(i) for i in range(k)])
        x = rng.normal(size=d)
        legal = sorted(rng.choice(k, size=int(rng.integers(1, k + 1)), replace=False).tolist())
        a = int(rng.choice(legal))
        gw, gb = log_prob_gradient(model, x, a, legal)
        for arr, grad in ((model.weights, gw), (model.bias, gb)):
            for i in np.ndindex(arr.shape):
                old = arr[i]
                arr[i] = old + GRADIENT_EPS
                up = log_prob(model, x, a, legal)
                arr[i] = old - GRADIENT_EPS
                down = log_prob(model, x, a, legal)
                arr[i] = old
                num = (up - down) / (2 * GRADIENT_EPS)
                scale = max(abs(num), abs(grad[i]))
                if scale > 1e-6:
                    worst = max(worst, abs(num - grad[i]) / scale)
                else:
                    worst = max(worst, 0.0 if abs(num - grad[i]) < 1e-9 else math.inf)
    report(capsys, 7, worst <= GRADIENT_REL_TOL,
           f"{GRADIENT_MODELS} random models, max relative error {worst:.2e} "
           f"(limit {GRADIENT_REL_TOL:.0e})")


def test_criterion_08_hit_rate(capsys, env, featurizer, corpus_split, sl_model):
    t0 = time.perf_counter()
    pairs = build_experience(corpus_split.test, env, featurizer)
    ks = list(range(1, env.action_count + 1))
    rates = topk_hit_rate(sl_model, pairs, ks)
    elapsed = time.perf_counter() - t0
    values = [rates[k] for k in ks]
    uniform = 1.0 / env.action_count
    monotone = all(a <= b for a, b in zip(values, values[1:]))
    ok = monotone and rates[1] >= HIT_RATE_FACTOR * uniform and elapsed < EVAL_SECONDS
    report(capsys, 8, ok, f"held-out pairs {len(pairs)}, top-1 {rates[1]:.3f} vs "
                          f"{HIT_RATE_FACTOR:.0f}x uniform {HIT_RATE_FACTOR * uniform:.3f}, "
                          f"top-5 {rates[5]:.3f}, monotone={monotone}, {elapsed:.2f}s")


def test_criterion_09_benchmark(capsys, env, featurizer, corpus, sl_model):
    def runner(method, rec):
        if method == "mcts":
            cfg = MCTSConfig(**{**BENCH_MCTS.to_dict(),
                                "seed": problem_seed(BENCH_MCTS.seed, rec.id)})
            return run_search(rec.problem, env, sl_model, cfg, featurizer, rec.id)
        return solve(env, rec.problem, method, BASELINE_BUDGET)

    t0 = time.perf_counter()
    rows = benchmark(corpus, METHODS_9, runner)
    elapsed = time.perf_counter() - t0
    by = {r["method"]: r for r in rows}
    solved = {m: sum(p["solved"] for p in by[m]["per_problem"]) for m in METHODS_9}
    easy = [p for p, rec in zip(by["mcts"]["per_problem"], sorted(corpus, key=lambda r: r.id))
            if rec.level in ("L1", "L2")]
    easy_rate = sum(p["solved"] for p in easy) / len(easy)
    ok = (easy_rate >= L12_SOLVE_RATE and solved["mcts"] > solved["fw-bfs"]
          and elapsed < BENCH_SECONDS and len(rows) == 9)
    with capsys.disabled():
        print("\n" + format_benchmark(rows), end="")
    report(capsys, 9, ok, f"MCTS L1-L2 {easy_rate:.1%} (need {L12_SOLVE_RATE:.0%}), "
                          f"MCTS {solved['mcts']} vs FW-BFS {solved['fw-bfs']} of {len(corpus)}, "
                          f"9 methods in {elapsed:.0f}s (limit {BENCH_SECONDS:.0f}s)")


def test_criterion_10_reinforce(capsys, env, featurizer, records_by_id):
    rng = np.random.default_rng(0)
    model = PolicyModel(rng.normal(size=(featurizer.dim, env.action_count)),
                        rng.normal(size=env.action_count), [str(a) for a in env.actions])
    zero = [Trajectory([TrajectoryStep(rng.normal(size=featurizer.dim), 0, (0, 1, 2), 0.0)
                        for _ in range(3)]) for _ in range(4)]
    after = reinforce_update(model, zero, TrainConfig())
    identical = (after.weights.tobytes() == model.weights.tobytes()
                 and after.bias.tobytes() == model.bias.tobytes())

    curriculum = [records_by_id[i] for i in ("ang01", "ang17", "len02")]
    steps = []
    for rec in curriculum:
        state = env.init_state(rec.problem)
        for action in rec.annotated_sequence:
            idx = env.resolve(action)
            steps.append((featurizer(state), idx, env.legal_indices(state)))
            state = env.step(state, idx).state

    def mean_prob(m):
        return float(np.mean([mask_normalize(predict(m, x), legal)[a] for x, a, legal in steps]))

    base = PolicyModel.zeros(featurizer.dim, [str(a) for a in env.actions])
    cfg = MCTSConfig(c=0.3, simulation_num=10, max_sim_steps=3, max_iterations=50, seed=0)
    lineage, _ = train_loop([(r.id, r.problem) for r in curriculum], base, cfg, TrainConfig(), 1,
                            env, featurizer)
    before, later = mean_prob(base), mean_prob(lineage[-1])
    ok = identical and later > before
    report(capsys, 10, ok, f"zero-return update bit-identical={identical}; mean annotated-action "
                           f"probability {before:.3f} -> {later:.3f} after one generation")


def test_criterion_11_determinism(capsys, tmp_path):
    solve_args = ["solve", default_corpus_path() / "len09.json", "--method", "mcts",
                  "--seed", 7]
    first = run_cli(capsys, *solve_args)
    second = run_cli(capsys, *solve_args)
    solve_same = first == second

    # reduced settings keep two full training runs within a couple of minutes
    train_args = ["train", "--seed", 7, "--generations", 1, "--epochs", 100, "--sims", 5,
                  "--max-sim-steps", 3, "--iterations", 30]
    run_cli(capsys, *train_args, "--out", tmp_path / "a")
    run_cli(capsys, *train_args, "--out", tmp_path / "b")
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    train_same = bool(names) and all(
        (tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes() for n in names)
    ok = solve_same and train_same
    report(capsys, 11, ok, f"solve --seed 7 identical={solve_same} (exit {first[0]}); "
                           f"train --seed 7 identical={train_same} over {len(names)} files")


def test_criterion_12_difficulty(capsys):
    want = {2: "L1", 3: "L2", 4: "L2", 5: "L3", 6: "L3", 7: "L4", 8: "L4", 9: "L5", 10: "L5",
            11: "L6"}
    got = {n: difficulty_of(n) for n in want}
    report(capsys, 12, got == want, f"lengths 2..11 -> {' '.join(got[n] for n in sorted(got))}")
