import json
import shutil
from pathlib import Path

import jsonschema
import pytest
from referencing import Registry, Resource

from georeason import default_corpus_path
from georeason.cli import main
from georeason.policy import PolicyModel, save_model

SCHEMAS = Path(__file__).resolve().parent.parent / "docs" / "schemas"
CORPUS = default_corpus_path()

UNSOLVABLE = """Points A,B,C,D;
Polygon(A,B,C);
Equal(MeasureOfAngle(A,B,C),60);
Goal Value(LengthOfLine(A,D));
"""


def _registry():
    resources = []
    for f in SCHEMAS.glob("*.json"):
        data = json.loads(f.read_text())
        resources.append((data["$id"], Resource.from_contents(data)))
    return Registry().with_resources(resources)


REGISTRY = _registry()


def validate(payload, schema_name):
    schema = json.loads((SCHEMAS / schema_name).read_text())
    jsonschema.Draft202012Validator(schema, registry=REGISTRY).validate(payload)


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_solve_mcts_then_verify_round_trip(capsys, tmp_path):
    problem = CORPUS / "ang01.json"
    code, out, _ = run(capsys, "solve", problem, "--method", "mcts", "--sims", 3,
                       "--max-sim-steps", 3, "--iterations", 50)
    assert code == 0
    record = json.loads(out)
    validate(record, "solve-mcts.json")
    seq = tmp_path / "seq.json"
    seq.write_text(json.dumps(record))
    code, out, _ = run(capsys, "verify", problem, seq, "--dot", tmp_path / "proof.dot")
    assert code == 0
    payload = json.loads(out)
    validate(payload, "verify.json")
    assert payload["verified"] and (tmp_path / "proof.dot").read_text().startswith("digraph")


@pytest.mark.parametrize("method", ["fw-bfs", "bw-bs", "mcts"])
def test_unsolvable_exits_one(capsys, tmp_path, method):
    path = tmp_path / "hopeless.cdl"
    path.write_text(UNSOLVABLE)
    code, out, _ = run(capsys, "solve", path, "--method", method, "--iterations", 20,
                       "--max-nodes", 50, "--sims", 2, "--max-sim-steps", 2)
    assert code == 1
    record = json.loads(out)
    validate(record, "solve-mcts.json" if method == "mcts" else "solve-baseline.json")


def test_baseline_output_is_reproducible(capsys):
    args = ("solve", CORPUS / "len09.json", "--method", "fw-rs", "--seed", 4)
    first = run(capsys, *args)
    assert first == run(capsys, *args) and first[0] == 0


def test_missing_library_exits_two(capsys, tmp_path):
    code, _, err = run(capsys, "solve", CORPUS / "ang01.json", "--gdl", tmp_path / "none.gdl")
    assert code == 2 and "not found" in err


def test_parse_error_exits_two(capsys, tmp_path):
    path = tmp_path / "broken.cdl"
    path.write_text("Points A,B;\nPolygon(A,B,C);\nGoal Polygon(A,B,C);")
    code, _, err = run(capsys, "solve", path)
    assert code == 2 and "broken.cdl:2:1:" in err


def test_bad_flag_exits_two(capsys):
    assert run(capsys, "solve", CORPUS / "ang01.json", "--method", "psychic")[0] == 2


def test_verify_examples(capsys, tmp_path):
    data = json.loads((CORPUS / "ang17.json").read_text())
    good = tmp_path / "good.json"
    good.write_text(json.dumps(data["annotated_sequence"]))
    assert run(capsys, "verify", CORPUS / "ang17.json", good)[0] == 0

    wrong = [dict(a) for a in data["annotated_sequence"]]
    wrong[1]["branch"] = 2
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(wrong))
    code, out, _ = run(capsys, "verify", CORPUS / "ang17.json", bad)
    assert code == 1 and json.loads(out)["first_failure"] == 1

    trivial = tmp_path / "trivial.cdl"
    trivial.write_text("Points A,B,C;\nPolygon(A,B,C);\nGoal Polygon(C,A,B);")
    empty = tmp_path / "empty.json"
    empty.write_text("[]")
    assert run(capsys, "verify", trivial, empty)[0] == 0

    names = tmp_path / "names.json"
    names.write_text(json.dumps(["triangle_angle_sum(1)", "adjacent_complementary_angle(1)"]))
    assert run(capsys, "verify", CORPUS / "ang17.json", names)[0] == 0


def test_config_file_overrides_flags(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# tuned\nsimulation_num = 4\nc = 0.3\niterations = 7\nseed = 9\n")
    code, out, _ = run(capsys, "solve", CORPUS / "ang18.json", "--sims", 30, "--c", 2.0,
                       "--seed", 1, "--config", cfg)
    record = json.loads(out)
    assert code in (0, 1)
    assert record["config"]["simulation_num"] == 4 and record["config"]["c"] == 0.3
    assert record["config"]["max_iterations"] == 7 and record["seed"] == 9


def test_unknown_config_key_exits_two(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("warp_factor = 9\n")
    assert run(capsys, "solve", CORPUS / "ang01.json", "--config", cfg)[0] == 2


def _mini_corpus(tmp_path, ids):
    d = tmp_path / "corpus"
    d.mkdir()
    for rid in ids:
        shutil.copy(CORPUS / f"{rid}.json", d)
    return d


TRAIN_IDS = ["ang01", "ang02", "ang03", "ang04", "ang05", "ang17", "len01", "len02", "per02",
             "per03", "are02", "oth01"]


def test_train_writes_lineage_and_is_deterministic(capsys, tmp_path):
    corpus = _mini_corpus(tmp_path, TRAIN_IDS)
    argv = ["train", "--corpus", corpus, "--generations", 1, "--epochs", 40, "--sims", 2,
            "--max-sim-steps", 2, "--iterations", 10]
    assert run(capsys, *argv, "--out", tmp_path / "a")[0] == 0
    assert run(capsys, *argv, "--out", tmp_path / "b")[0] == 0
    a, b = tmp_path / "a", tmp_path / "b"
    assert {p.name for p in a.iterdir()} == {"model_v1.json", "model_v2.json", "model.json",
                                             "metrics.json"}
    assert (a / "metrics.json").read_bytes() == (b / "metrics.json").read_bytes()
    assert (a / "model.json").read_bytes() == (b / "model.json").read_bytes()
    validate(json.loads((a / "metrics.json").read_text()), "train-metrics.json")

    code, out, _ = run(capsys, "eval", "--corpus", corpus, "--model", a / "model.json",
                       "--split", "all", "--k", 1, 3, 5, 10, 15, 20, 25)
    assert code == 0
    head, rates = out.splitlines()
    assert head.split() == ["Range", "1", "3", "5", "10", "15", "20", "25"]
    assert rates.startswith("Hit rate")

    code, out, _ = run(capsys, "eval", "--corpus", corpus, "--model", a / "model.json",
                       "--split", "all", "--k", 38)
    assert code == 0 and out.splitlines()[1].split()[-1] == "100.00%"


def test_train_without_annotations_exits_two(capsys, tmp_path):
    d = tmp_path / "bare"
    d.mkdir()
    for rid in ("ang01", "ang02", "len01"):
        data = json.loads((CORPUS / f"{rid}.json").read_text())
        data.pop("annotated_sequence")
        data["level"] = "L1"
        (d / f"{rid}.json").write_text(json.dumps(data))
    assert run(capsys, "train", "--corpus", d, "--out", tmp_path / "o")[0] == 2


def test_eval_errors(capsys, tmp_path, env, featurizer):
    corpus = _mini_corpus(tmp_path, ["ang01"])      # one problem: the test split is empty
    model = tmp_path / "m.json"
    assert run(capsys, "eval", "--corpus", corpus, "--model", model)[0] == 2
    save_model(PolicyModel.zeros(featurizer.dim, [str(a) for a in env.actions]), model)
    code, _, err = run(capsys, "eval", "--corpus", corpus, "--model", model)
    assert code == 2 and "test split" in err
    assert run(capsys, "eval", "--corpus", corpus, "--model", model, "--split", "all")[0] == 0
    assert run(capsys, "eval", "--corpus", corpus)[0] == 2


def test_bench_single_cell_and_zero_timeout(capsys, tmp_path):
    corpus = _mini_corpus(tmp_path, ["ang01"])
    code, out, _ = run(capsys, "bench", "--corpus", corpus, "--methods", "fw-bfs",
                       "--out", tmp_path / "one")
    assert code == 0
    lines = out.splitlines()
    assert len(lines) == 2 and len(lines[1].split()) == 8      # method + Total + L1..L6
    validate(json.loads((tmp_path / "one" / "bench.json").read_text()), "bench.json")

    code, out, _ = run(capsys, "bench", "--corpus", corpus, "--methods", "fw-bfs,bw-bfs,mcts",
                       "--timeout", 0, "--out", tmp_path / "zero")
    assert code == 0
    rows = json.loads((tmp_path / "zero" / "bench.json").read_text())["rows"]
    assert [r["total_rate"] for r in rows] == [0.0, 0.0, 0.0]


def test_stats_command(capsys, corpus):
    code, out, _ = run(capsys, "stats", "--json")
    assert code == 0 and json.loads(out)["totals"]["Total"] == len(corpus)
