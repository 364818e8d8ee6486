import json
import os

import yaml

from skillbo.cli import EXIT_CONFIG, EXIT_OK, EXIT_UNSOLVABLE, main
from conftest import scenario_path


def write_tiny_scenario(tmp_path, base="peg", **bo):
    with open(scenario_path(base)) as fh:
        doc = yaml.safe_load(fh)
    doc["bo"]["iterations"] = bo.get("iterations", 3)
    doc["bo"]["warmup"] = bo.get("warmup", 2)
    doc["randomization"]["worlds"] = 2
    doc["episode"]["horizon"] = 3.0
    path = tmp_path / f"{base}_tiny.yaml"
    with open(path, "w") as fh:
        yaml.safe_dump(doc, fh, sort_keys=False)
    return str(path)


def test_plan_command_writes_artifacts(tmp_path, capsys):
    rc = main(["plan", scenario_path("push"), "--out-dir", str(tmp_path), "--show-bt"])
    assert rc == EXIT_OK
    out = capsys.readouterr().out
    assert "(go-to-linear" in out and "(push" in out
    assert "sequence-star" in out  # the --show-bt dump
    assert (tmp_path / "domain.pddl").exists()
    assert (tmp_path / "problem.pddl").exists()
    plan_doc = yaml.safe_load(open(tmp_path / "plan.yaml"))
    assert [s["skill"] for s in plan_doc] == ["go-to-linear", "push"]


def test_plan_unsolvable_exit_code(tmp_path):
    with open(scenario_path("peg")) as fh:
        doc = yaml.safe_load(fh)
    doc["relations"] = [r for r in doc["relations"] if r["predicate"] != "holding"]
    path = tmp_path / "broken.yaml"
    yaml.safe_dump(doc, open(path, "w"), sort_keys=False)
    assert main(["plan", str(path)]) == EXIT_UNSOLVABLE


def test_config_error_exit_code(tmp_path):
    path = tmp_path / "bad.yaml"
    with open(scenario_path("peg")) as fh:
        doc = yaml.safe_load(fh)
    doc["randomization"]["worlds"] = 0
    yaml.safe_dump(doc, open(path, "w"), sort_keys=False)
    assert main(["plan", str(path)]) == EXIT_CONFIG
    assert main(["plan", str(tmp_path / "missing.yaml")]) == EXIT_CONFIG


def test_learn_pareto_replay_round_trip(tmp_path, capsys):
    scen = write_tiny_scenario(tmp_path)
    out = str(tmp_path / "results.jsonl")
    assert main(["learn", scen, "--seed", "5", "--out", out]) == EXIT_OK
    assert os.path.exists(out)

    assert main(["pareto", out, "--list"]) == EXIT_OK
    listing = capsys.readouterr().out
    assert "success" in listing and "applied-force" in listing

    export = str(tmp_path / "front.json")
    assert main(["pareto", out, "--export", export]) == EXIT_OK
    capsys.readouterr()
    front = json.load(open(export))
    assert all("configuration" in row for row in front)

    record = str(tmp_path / "trace.tsv")
    assert main(["replay", out, "--trial", "0", "--record", record]) == EXIT_OK
    assert "success rate" in capsys.readouterr().out
    assert os.path.getsize(record) > 0


def test_replay_unknown_trial(tmp_path, capsys):
    scen = write_tiny_scenario(tmp_path)
    out = str(tmp_path / "results.jsonl")
    main(["learn", scen, "--seed", "5", "--out", out])
    capsys.readouterr()
    assert main(["replay", out, "--trial", "99"]) == EXIT_CONFIG


def test_learn_repeats_write_separate_files(tmp_path):
    scen = write_tiny_scenario(tmp_path)
    out = str(tmp_path / "multi.jsonl")
    assert main(["learn", scen, "--seed", "1", "--repeats", "2", "--out", out]) == EXIT_OK
    assert os.path.exists(str(tmp_path / "multi_r0.jsonl"))
    assert os.path.exists(str(tmp_path / "multi_r1.jsonl"))
