import json
import os
import subprocess
import sys
from importlib import resources
from pathlib import Path

import jsonschema
import pytest

from hetfilter.cli import build_parser, main
from hetfilter.graph import Graph, save_graph
from hetfilter.randgen import two_clique_counterexample

GOLDEN = Path(__file__).parent / "golden"
SUBCOMMANDS = ("generate", "check", "simulate", "witness", "experiment", "sweep")


def schema(name):
    text = resources.files("hetfilter").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def fig1_file(tmp_path):
    g, t = two_clique_counterexample(10)
    path = tmp_path / "fig1_n10.json"
    save_graph(path, g, t)
    return path


@pytest.fixture
def small_spec(tmp_path):
    path = tmp_path / "spec.json"
    path.write_text(json.dumps({
        "generator": {"model": "er", "n": 9, "p": 0.5},
        "thresholds": {"probs": [0.4, 0.3, 0.3]},
        "mode": "consensus-random-init",
        "trials": 12,
        "seed": 31,
        "bisections": 2,
        "dynamics": {"max_steps": 2000},
    }))
    return path


def test_check_fig1(capsys, fig1_file):
    code, out, _ = run(capsys, "check", "--graph", str(fig1_file))
    assert code == 0
    v = json.loads(out)
    jsonschema.validate(v, schema("verdict"))
    assert v == {"robust": False, "witness": [[0, 1, 2, 3, 4], [5, 6, 7, 8, 9]], "method": "exact"}


def test_check_k30_cap(capsys, tmp_path):
    path = tmp_path / "k30.json"
    save_graph(path, Graph.complete(30), [1] * 30)
    code, out, err = run(capsys, "check", "--graph", str(path))
    assert code == 1 and out == ""
    lines = err.strip().splitlines()
    assert len(lines) == 1
    assert json.loads(lines[0]) == {"error": "cap_exceeded", "message": "n exceeds exact-check cap 24"}


def test_check_halfsize(capsys, tmp_path, fig1_file):
    path = tmp_path / "k30.json"
    save_graph(path, Graph.complete(30), [1] * 30)
    code, out, _ = run(capsys, "check", "--graph", str(path), "--method", "halfsize")
    assert code == 0 and json.loads(out) == {"robust": True, "witness": None, "method": "halfsize"}
    # not certified: falls back to the exact checker while it applies
    code, out, _ = run(capsys, "check", "--graph", str(fig1_file), "--method", "halfsize")
    assert json.loads(out)["robust"] is False


def test_check_halfsize_inconclusive_above_exact_cap(capsys, tmp_path):
    g, t = two_clique_counterexample(26)
    path = tmp_path / "fig26.json"
    save_graph(path, g, t)
    code, out, _ = run(capsys, "check", "--graph", str(path), "--method", "halfsize")
    v = json.loads(out)
    jsonschema.validate(v, schema("verdict"))
    assert code == 0 and v["robust"] is None and len(v["inconclusive_set"]) <= 13


def test_unknown_flag_is_usage_error(capsys):
    with pytest.raises(SystemExit) as info:
        main(["check", "--bogus"])
    assert info.value.code == 2
    assert "usage:" in capsys.readouterr().err


def test_missing_subcommand_is_usage_error(capsys):
    with pytest.raises(SystemExit) as info:
        main([])
    assert info.value.code == 2


def test_invalid_graph_is_domain_error(capsys, tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{\n  "n": 3,\n  "directed": false,\n  "edges": [[0, 0]]\n}\n')
    code, _, err = run(capsys, "check", "--graph", str(path), "--thresholds", "0")
    assert code == 1
    msg = json.loads(err)
    assert msg["error"] == "invalid_input" and "line 4" in msg["message"]


def test_missing_thresholds(capsys, tmp_path):
    path = tmp_path / "g.json"
    save_graph(path, Graph.complete(3))
    code, _, err = run(capsys, "check", "--graph", str(path))
    assert code == 1 and json.loads(err)["error"] == "missing_thresholds"
    code, out, _ = run(capsys, "check", "--graph", str(path), "--thresholds", "1,1,1")
    assert code == 0 and json.loads(out)["robust"] is True


def test_generate_outputs_valid_graph(capsys, tmp_path):
    for argv in (
        ["generate", "--model", "er", "--n", "20", "--r", "2", "--c", "lnlnln", "--threshold-dist", "default", "--r-bar", "4"],
        ["generate", "--model", "rin", "--n", "5", "--k", "3", "--c", "constant(1)"],
        ["generate", "--model", "figure1", "--n", "6"],
    ):
        code, out, _ = run(capsys, "--seed", "4", *argv)
        assert code == 0
        jsonschema.validate(json.loads(out), schema("graph"))
    pm = tmp_path / "p.json"
    pm.write_text(json.dumps([[0, 0.5, 0.5], [0.5, 0, 0.5], [0.5, 0.5, 0]]))
    code, out, _ = run(capsys, "--seed", "4", "generate", "--model", "hetero", "--n", "3", "--p-matrix", str(pm))
    assert code == 0 and json.loads(out)["n"] == 3


def test_generate_same_seed_same_bytes(capsys):
    argv = ["generate", "--model", "er", "--n", "40", "--c", "1", "--seed", "77"]
    assert run(capsys, *argv)[1] == run(capsys, *argv)[1]


def test_seed_position_and_printing(capsys):
    a = run(capsys, "--seed", "5", "generate", "--model", "er", "--n", "10", "--c", "1")[1]
    b = run(capsys, "generate", "--model", "er", "--n", "10", "--c", "1", "--seed", "5")[1]
    assert a == b
    code, _, err = run(capsys, "generate", "--model", "er", "--n", "10", "--c", "1")
    assert code == 0 and err.startswith("seed: ")


def test_simulate_witness_and_gaps(capsys, tmp_path, fig1_file):
    gaps = tmp_path / "gaps.csv"
    code, out, _ = run(capsys, "simulate", "--graph", str(fig1_file), "--init", "witness",
                       "--max-steps", "20", "--gaps-csv", str(gaps))
    res = json.loads(out)
    jsonschema.validate(res, schema("simulation"))
    assert code == 0 and res["verdict"] == "no-consensus-within-budget" and res["final_gap"] == 1.0
    lines = gaps.read_text().splitlines()
    assert lines[0] == "k,gap" and lines[-1] == "20,1.0" and len(lines) == 22


def test_simulate_inits(capsys, tmp_path, fig1_file):
    code, out, _ = run(capsys, "--seed", "2", "simulate", "--graph", str(fig1_file), "--init", "uniform-random")
    assert code == 0
    jsonschema.validate(json.loads(out), schema("simulation"))
    x0 = tmp_path / "x0.json"
    x0.write_text(json.dumps([0.5] * 10))
    code, out, _ = run(capsys, "simulate", "--graph", str(fig1_file), "--init", str(x0))
    assert json.loads(out)["verdict"] == "consensus" and json.loads(out)["steps"] == 0
    k4 = tmp_path / "k4.json"
    save_graph(k4, Graph.complete(4), [1] * 4)
    code, _, err = run(capsys, "simulate", "--graph", str(k4), "--init", "witness")
    assert code == 1 and json.loads(err)["error"] == "robust_graph"


def test_witness_subcommand(capsys, fig1_file, tmp_path):
    code, out, _ = run(capsys, "witness", "--graph", str(fig1_file))
    w = json.loads(out)
    jsonschema.validate(w, schema("witness"))
    assert code == 0 and w["init"] == [0.0] * 5 + [1.0] * 5
    k4 = tmp_path / "k4.json"
    save_graph(k4, Graph.complete(4), [1] * 4)
    w = json.loads(run(capsys, "witness", "--graph", str(k4))[1])
    jsonschema.validate(w, schema("witness"))
    assert w["robust"] is True and w["init"] is None


def test_experiment_outputs(capsys, tmp_path, small_spec):
    code, out, _ = run(capsys, "experiment", "--spec", str(small_spec))
    assert code == 0
    jsonschema.validate(json.loads(out), schema("summary"))
    code, out, _ = run(capsys, "--format", "csv", "experiment", "--spec", str(small_spec))
    assert out.startswith("trial,seed,outcome,steps,ms\n") and len(out.splitlines()) == 13
    code, _, _ = run(capsys, "--out-dir", str(tmp_path / "o"), "experiment", "--spec", str(small_spec))
    assert (tmp_path / "o" / "records.csv").read_text() == out
    jsonschema.validate(json.loads((tmp_path / "o" / "summary.json").read_text()), schema("summary"))


def test_experiment_rerun_byte_identical(capsys, tmp_path, small_spec):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    run(capsys, "experiment", "--spec", str(small_spec), "--records", str(a), "--summary", str(tmp_path / "a.json"))
    run(capsys, "--workers", "2", "experiment", "--spec", str(small_spec), "--records", str(b),
        "--summary", str(tmp_path / "b.json"))
    assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_experiment_bad_spec(capsys, tmp_path):
    path = tmp_path / "s.json"
    path.write_text('{"generator": {"model": "er", "n": 30, "p": 0.5}, "thresholds": {"fixed": 1}, '
                    '"mode": "robust-exact", "trials": 2, "seed": 1}')
    code, _, err = run(capsys, "experiment", "--spec", str(path))
    assert code == 1 and json.loads(err)["message"] == "n exceeds exact-check cap 24"
    path.write_text("{not json")
    code, _, err = run(capsys, "experiment", "--spec", str(path))
    assert code == 1 and json.loads(err)["error"] == "invalid_json"


def test_sweep(capsys, tmp_path, small_spec):
    code, out, _ = run(capsys, "sweep", "--spec", str(small_spec), "--variable", "p-scale", "--grid", "0.5,1.5")
    lines = out.splitlines()
    assert code == 0 and lines[0] == "grid_value,fraction,lo95,hi95,trials" and len(lines) == 3
    code, out, _ = run(capsys, "--format", "json", "sweep", "--spec", str(small_spec), "--variable", "c", "--grid=-3,3")
    rows = json.loads(out)
    jsonschema.validate(rows, schema("sweep"))
    assert [r["grid_value"] for r in rows] == [-3.0, 3.0]


def _help_texts():
    parser = build_parser()
    texts = {"hetfilter": parser.format_help()}
    sub = next(a for a in parser._actions if a.dest == "command")
    for name in SUBCOMMANDS:
        texts[name] = sub.choices[name].format_help()
    return texts


def test_help_golden(monkeypatch):
    monkeypatch.setenv("COLUMNS", "100")
    texts = _help_texts()
    blob = "".join(f"== {k} ==\n{v}" for k, v in texts.items())
    golden = GOLDEN / "help.txt"
    if os.environ.get("UPDATE_GOLDEN"):
        golden.write_text(blob)
    assert blob == golden.read_text()


def test_help_lists_everything(monkeypatch):
    monkeypatch.setenv("COLUMNS", "100")
    texts = _help_texts()
    for name in SUBCOMMANDS:
        assert name in texts["hetfilter"]
    for flag in ("--seed", "--out-dir", "--format", "--workers"):
        assert flag in texts["hetfilter"]
    expected = {
        "generate": ["--model", "--n", "--r", "--c", "--k", "--p-matrix", "--threshold-dist", "--out"],
        "check": ["--graph", "--thresholds", "--method"],
        "simulate": ["--graph", "--thresholds", "--init", "--epsilon", "--max-steps", "--gaps-csv"],
        "witness": ["--graph"],
        "experiment": ["--spec", "--records", "--summary"],
        "sweep": ["--spec", "--variable", "--grid", "--out"],
    }
    for name, flags in expected.items():
        for flag in flags:
            assert flag in texts[name], (name, flag)


def test_console_script_entry_point(fig1_file):
    proc = subprocess.run(
        [sys.executable, "-m", "hetfilter.cli", "check", "--graph", str(fig1_file)],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0 and json.loads(proc.stdout)["robust"] is False
