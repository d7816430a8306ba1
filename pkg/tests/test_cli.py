import json

import pytest

from autoqbench.cli import dispatch
from autoqbench.model import load_json


def run(args):
    return dispatch([str(a) for a in args])


def normalize_timing(data):
    """Zero every recorded wall time so outputs can be byte-compared."""
    if isinstance(data, dict):
        return {
            k: (0.0 if k == "wall_time_s" else normalize_timing(v))
            for k, v in data.items()
        }
    if isinstance(data, list):
        return [normalize_timing(v) for v in data]
    return data


def test_generate_is_idempotent(tmp_path):
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    assert run(["generate", "--family", "seams", "--n", 5, "--seed", 7, "--out", a]) == 0
    assert run(["generate", "--family", "seams", "--n", 5, "--seed", 7, "--out", b]) == 0
    assert a.read_bytes() == b.read_bytes()
    sidecar = load_json(str(a) + ".config.json")
    assert sidecar["seed"] == 7 and sidecar["num_seams"] == 5


def test_generate_sat_sidecar_records_plant(tmp_path):
    out = tmp_path / "sat.json"
    assert run(["generate", "--family", "sat", "--n", 6, "--seed", 3, "--out", out]) == 0
    sidecar = load_json(str(out) + ".config.json")
    assert len(sidecar["planted_assignment"]) == 6


def test_encode_reports_eighteen_variables_for_three_seams(tmp_path):
    inst = tmp_path / "inst.json"
    prob = tmp_path / "prob.json"
    run(["generate", "--family", "seams", "--n", 3, "--seed", 1, "--out", inst])
    assert run(["encode", "--in", inst, "--formulation", "qubo", "--out", prob]) == 0
    var_map = load_json(str(prob) + ".varmap.json")
    assert var_map["num_variables"] == 18
    assert len(var_map["vars"]) == 18
    assert load_json(prob)["n"] == 18


def test_encode_sat_both_formulations(tmp_path):
    inst = tmp_path / "sat.json"
    run(["generate", "--family", "sat", "--n", 7, "--seed", 2, "--out", inst])
    pubo_path = tmp_path / "pubo.json"
    qubo_path = tmp_path / "qubo.json"
    assert run(["encode", "--in", inst, "--formulation", "pubo", "--out", pubo_path]) == 0
    assert run(["encode", "--in", inst, "--formulation", "qubo", "--out", qubo_path]) == 0
    pubo = load_json(pubo_path)
    qubo = load_json(qubo_path)
    assert pubo["n"] == 7
    assert qubo["n"] >= 7  # ancillae may be appended
    quad_map = load_json(str(qubo_path) + ".varmap.json")
    assert quad_map["type"] == "quadratized"
    assert qubo["n"] == 7 + len(quad_map["ancillae"])


def test_solver_dominance_through_cli(tmp_path):
    inst = tmp_path / "inst.json"
    prob = tmp_path / "prob.json"
    run(["generate", "--family", "seams", "--n", 3, "--seed", 11, "--out", inst])
    run(["encode", "--in", inst, "--formulation", "qubo", "--out", prob])
    oracle_out = tmp_path / "oracle.json"
    anneal_out = tmp_path / "anneal.json"
    assert run(["solve", "--backend", "oracle", "--in", prob, "--out", oracle_out]) == 0
    assert run(
        ["solve", "--backend", "anneal", "--in", prob, "--out", anneal_out, "--seed", 5]
    ) == 0
    oracle = load_json(oracle_out)
    anneal = load_json(anneal_out)
    assert anneal["best_energy"] >= oracle["best_energy"] - 1e-9


def test_full_pipeline_is_deterministic(tmp_path):
    outputs = []
    for attempt in ("one", "two"):
        root = tmp_path / attempt
        root.mkdir()
        inst = root / "inst.json"
        prob = root / "prob.json"
        result = root / "result.json"
        records = root / "records.jsonl"
        report_csv = root / "report.csv"
        assert run(["generate", "--family", "sat", "--n", 8, "--seed", 9, "--out", inst]) == 0
        assert run(["encode", "--in", inst, "--formulation", "pubo", "--out", prob]) == 0
        assert run(
            ["solve", "--backend", "qaoa", "--in", prob, "--out", result,
             "--seed", 4, "--grid", 6, "--refine-iters", 20, "--samples", 128]
        ) == 0
        assert run(
            ["bench", "--family", "sat", "--sizes", "5,6", "--seeds", 2,
             "--solvers", "oracle,random", "--seed", 3, "--out", records]
        ) == 0
        assert run(["report", "--in", records, "--csv", report_csv]) == 0
        outputs.append(
            {
                "inst": inst.read_bytes(),
                "config": (str(inst) + ".config.json").encode()
                and (root / "inst.json.config.json").read_bytes(),
                "prob": prob.read_bytes(),
                "result": normalize_timing(load_json(result)),
                "records": [
                    normalize_timing(json.loads(line))
                    for line in records.read_text().splitlines()
                ],
                "report": report_csv.read_bytes(),
            }
        )
    assert outputs[0] == outputs[1]


def test_report_groups_by_solver_and_size(tmp_path, capsys):
    records = tmp_path / "records.jsonl"
    assert run(
        ["bench", "--family", "sat", "--sizes", "5,6", "--seeds", 3,
         "--solvers", "oracle,anneal", "--seed", 1, "--out", records]
    ) == 0
    capsys.readouterr()
    assert run(["report", "--in", records]) == 0
    out = capsys.readouterr().out
    lines = [l for l in out.splitlines() if l.strip()]
    # header + 4 groups (2 solvers x 2 sizes) + footer
    assert len(lines) == 6
    assert "12 records, 4 solver/size groups" in lines[-1]


def test_report_empty_file(tmp_path, capsys):
    records = tmp_path / "empty.jsonl"
    records.write_text("")
    assert run(["report", "--in", records]) == 0
    out = capsys.readouterr().out
    assert "0 records" in out


def test_report_skips_malformed_lines(tmp_path, capsys):
    records = tmp_path / "records.jsonl"
    run(
        ["bench", "--family", "sat", "--sizes", "5", "--seeds", 1,
         "--solvers", "oracle", "--seed", 1, "--out", records]
    )
    good = records.read_text()
    records.write_text("this is not json\n" + good + "{\"half\": true}\n")
    capsys.readouterr()
    assert run(["report", "--in", records]) == 0
    captured = capsys.readouterr()
    assert "line 1" in captured.err
    assert "line 3" in captured.err
    assert "1 records" in captured.out


def test_qscore_subcommand(tmp_path, capsys):
    out = tmp_path / "qscore.json"
    assert run(
        ["qscore", "--family", "sat", "--solver", "oracle", "--sizes", "5,6",
         "--seeds", 2, "--seed", 1, "--out", out]
    ) == 0
    captured = capsys.readouterr().out
    assert "largest passing size: 6" in captured
    data = load_json(out)
    assert data["largest_passing"] == 6


def test_unknown_flag_is_rejected(tmp_path, capsys):
    rc = run(["generate", "--family", "seams", "--n", 3, "--out", tmp_path / "i.json",
              "--frobnicate", 1])
    assert rc == 1
    err = capsys.readouterr().err
    assert "--frobnicate" in err


def test_unknown_solver_named_in_error(tmp_path, capsys):
    records = tmp_path / "r.jsonl"
    rc = run(["bench", "--family", "sat", "--sizes", "5", "--solvers", "psychic",
              "--out", records])
    assert rc == 1
    assert "psychic" in capsys.readouterr().err


def test_missing_input_file(tmp_path, capsys):
    rc = run(["encode", "--in", tmp_path / "nope.json", "--formulation", "qubo",
              "--out", tmp_path / "x.json"])
    assert rc == 1


def test_sizes_flag_rejected_with_both_families(tmp_path):
    rc = run(["bench", "--family", "both", "--sizes", "3,4",
              "--out", tmp_path / "r.jsonl"])
    assert rc == 1
