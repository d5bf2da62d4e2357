from __future__ import annotations

import json

import pytest

from helpers import validate
from ringout import cli
from ringout.spectra import REPORT_COLUMNS, read_report_csv

SPEC_MIXED = '{"groups":[{"theta":[4,1],"blocks":[[3,1],[1,1]]}]}'
SPEC_TWO = '{"groups":[{"theta":[4,1],"blocks":[[1,1]]},{"theta":[4,-1],"blocks":[[1,1]]}]}'


def test_ring_prints_radii(capsys, tmp_path):
    assert cli.main(["ring", "--profile", "uniform:0.5,4", "--out-dir", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "a = 1.41421" in out
    assert "b = 2.46644" in out
    validate(json.loads((tmp_path / "ring.json").read_text()), "ring.schema.json")


def test_ring_ginibre(capsys):
    assert cli.main(["ring", "--profile", "ginibre"]) == 0
    assert "a = 0.00000" in capsys.readouterr().out


def test_weingarten_table(capsys, tmp_path):
    assert cli.main(["weingarten", "--k", "2", "--n", "5", "--out-dir", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "1/24" in out and "-1/120" in out
    validate(json.loads((tmp_path / "weingarten.json").read_text()), "weingarten.schema.json")


def test_usage_errors_exit_one(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["ring", "--profile", "uniform:0.5,4", "--bogus"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        cli.main(["nope"])
    assert exc.value.code == 1
    assert cli.main(["ring", "--profile", "gauss:1"]) == 1
    assert cli.main(["weingarten", "--k", "9", "--n", "20"]) == 1
    assert cli.main(["experiment", "--n", "10"]) == 1


def test_numerical_failure_exit_two(capsys):
    # spike inside the outer radius has no limit law
    spec = '{"groups":[{"theta":[0.5,0],"blocks":[[1,1]]}]}'
    assert cli.main(["limit-sample", "--spec", spec, "--profile", "ginibre"]) == 2


def test_simulate_outputs(tmp_path, capsys):
    args = ["simulate", "--profile", "uniform:0.5,4", "--spec", SPEC_MIXED, "--n", "200",
            "--seed", "3", "--svg", "--out-dir", str(tmp_path)]
    assert cli.main(args) == 0
    rows = read_report_csv(tmp_path / "report.csv")
    assert rows and set(rows[0]) == set(REPORT_COLUMNS)
    assert (tmp_path / "spectrum.svg").read_text().startswith("<svg")
    assert len((tmp_path / "spectrum.csv").read_text().splitlines()) == 201


def test_limit_sample_outputs(tmp_path, capsys):
    args = ["limit-sample", "--profile", "uniform:0.5,4", "--spec", SPEC_MIXED, "--trials", "5",
            "--seed", "1", "--out-dir", str(tmp_path)]
    assert cli.main(args) == 0
    rows = read_report_csv(tmp_path / "constellation.csv")
    assert len(rows) == 5 * 4
    assert {r["draw"] for r in rows} == set(range(5))


def _run_dir(args: list[str], out) -> dict[str, bytes]:
    assert cli.main([*args, "--out-dir", str(out)]) == 0
    return {p.name: p.read_bytes() for p in sorted(out.iterdir())}


def test_experiment_from_config_is_byte_identical(tmp_path, monkeypatch, capsys):
    cfg = {
        "profile": {"kind": "uniform", "lo": 0.5, "hi": 4.0},
        "spec": json.loads(SPEC_TWO),
        "q": "identity",
        "n": 120,
        "trials": 4,
        "base_seed": 9,
    }
    validate(cfg, "config.schema.json")
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    a = _run_dir(["experiment", "--config", str(path), "--svg"], tmp_path / "a")
    monkeypatch.setenv("RING_JOBS", "2")
    b = _run_dir(["experiment", "--config", str(path), "--svg", "--jobs", "1"], tmp_path / "b")
    assert a == b
    summary = json.loads(a["summary.json"])
    validate(summary, "summary.schema.json")
    assert summary["stats"]["trials"] == 4
    rows = read_report_csv(tmp_path / "a" / "trials.csv")
    assert list(rows[0])[:2] == ["trial", "group_index"]


def test_experiment_seed_override(tmp_path, capsys):
    cfg = {"spec": json.loads(SPEC_TWO), "n": 60, "trials": 2, "profile": {"kind": "uniform", "lo": 0.5, "hi": 4.0}}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    a = _run_dir(["experiment", "--config", str(path)], tmp_path / "a")
    b = _run_dir(["experiment", "--config", str(path), "--seed", "5"], tmp_path / "b")
    assert a["trials.csv"] != b["trials.csv"]
    assert json.loads(b["summary.json"])["config"]["base_seed"] == 5


def test_experiment_from_flags_to_stdout(capsys):
    assert cli.main(["experiment", "--profile", "uniform:0.5,4", "--spec", SPEC_TWO,
                     "--n", "80", "--trials", "2"]) == 0
    doc = json.loads(capsys.readouterr().out)
    validate(doc, "summary.schema.json")


def test_table1_layout(tmp_path, capsys):
    args = ["table1", "--kappa", "0.7071067811865476", "--n", "80", "--trials", "6", "--seed", "2"]
    a = _run_dir(args, tmp_path / "a")
    b = _run_dir(args, tmp_path / "b")
    assert a == b
    doc = json.loads(a["table1.json"])
    validate(doc, "table1.schema.json")
    assert doc["theoretical"]["E|Z|^2"] == pytest.approx(13.0)
    assert set(doc["empirical"]) == set(doc["theoretical"])
    assert doc["reference_printed"]["E[Z conj Z']"] == [-8.755, -1.358]


def test_scaling_command(tmp_path, capsys):
    spec = '{"groups":[{"theta":[2,0],"blocks":[[1,1]]}]}'
    args = ["scaling", "--profile", "ginibre", "--spec", spec, "--n-list", "40,80,160",
            "--trials", "4", "--out-dir", str(tmp_path)]
    assert cli.main(args) == 0
    doc = json.loads((tmp_path / "scaling.json").read_text())
    assert doc["n_list"] == [40, 80, 160]
    assert doc["classes"][0]["expected"] == -0.5
    assert "slope" in capsys.readouterr().out


def test_bad_ring_jobs_env(monkeypatch, capsys):
    monkeypatch.setenv("RING_JOBS", "many")
    assert cli.main(["table1", "--n", "30", "--trials", "2"]) == 1
