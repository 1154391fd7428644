import json

import pytest

from ampc.cli import main


def _files(directory):
    return {p.relative_to(directory).as_posix(): p.read_bytes() for p in sorted(directory.rglob("*")) if p.is_file()}


def test_simulate_writes_trace_and_summary(tmp_path, root):
    args = ["simulate", "--scenario", str(root / "configs/scenarios/sc1.yaml"), "--controller", "mpc",
            "--config", str(root / "configs/default.yaml")]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    a, b = _files(tmp_path / "a"), _files(tmp_path / "b")
    assert set(a) == {"trace.csv", "summary.csv"} and a == b


def test_tune_and_validate(tmp_path, root):
    args = ["tune", "--grid", str(root / "configs/grid_smoke.yaml"), "--config", str(root / "configs/smoke.yaml"),
            "--seed", "3"]
    assert main(args + ["--out", str(tmp_path / "a" / "table.json")]) == 0
    assert main(args + ["--out", str(tmp_path / "b" / "table.json")]) == 0
    a, b = _files(tmp_path / "a"), _files(tmp_path / "b")
    assert "table_convergence/v9_y4.csv" in a and a == b
    doc = json.loads(a["table.json"])
    assert len(doc["entries"]) == 4 and doc["entries"][0]["seed"] == 3
    assert main(["validate", "--table", str(tmp_path / "a" / "table.json")]) == 0


def test_pso_bench(tmp_path):
    args = ["pso-bench", "--variant", "damped", "--dims", "3", "--gens", "5", "--seeds", "3"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    a = _files(tmp_path / "a")
    assert set(a) == {"seed_0.csv", "seed_1.csv", "seed_2.csv", "summary.csv"}
    assert a == _files(tmp_path / "b")


def test_validate_rejects_bad_table(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{"schema_version": 1, "entries": []}')
    assert main(["validate", "--table", str(path)]) == 1
    assert "at least one entry" in capsys.readouterr().err
    assert main(["validate", "--table", str(tmp_path / "missing.json")]) == 1


def test_bad_config_reports_error(tmp_path, root, capsys):
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text("mpc:\n  horizon: 3\n")
    args = ["simulate", "--scenario", str(root / "configs/scenarios/sc1.yaml"), "--controller", "pp",
            "--config", str(cfg), "--out", str(tmp_path / "o")]
    assert main(args) == 1
    assert "horizon" in capsys.readouterr().err


def test_unknown_controller_rejected(root):
    with pytest.raises(SystemExit):
        main(["simulate", "--scenario", str(root / "configs/scenarios/sc1.yaml"), "--controller", "lqr",
              "--out", "x"])
