import json
import os

import pytest

from qsurrogate.cli import main
from qsurrogate.surrogation import shot_budget


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def write_model(path, d=1, L=2, B=2, seed=3):
    path.write_text(json.dumps({"schema_version": 1, "d": d, "L": L, "B": B, "seed": seed}))
    return str(path)


def data_files(out):
    return {str(p.relative_to(out)): p.read_bytes() for p in sorted(out.rglob("*"))
            if p.is_file() and p.name != "manifest.json"}


def test_spectrum(workdir, capsys):
    assert main(["spectrum", write_model(workdir / "m.json", d=2, L=2)]) == 0
    assert "T=25" in capsys.readouterr().out
    assert main(["spectrum", write_model(workdir / "m.json", d=1, L=3)]) == 0
    out = capsys.readouterr().out
    assert "omega_max=[3]" in out and "T=7" in out


def test_missing_file_is_usage_error(workdir, capsys):
    assert main(["spectrum", "nope.json"]) == 2
    assert "no such file" in capsys.readouterr().err


def test_malformed_config_is_usage_error(workdir):
    (workdir / "bad.json").write_text("{not json")
    assert main(["spectrum", "bad.json"]) == 2
    (workdir / "bad2.json").write_text('{"d": 0, "L": 1, "B": 1}')
    assert main(["surrogate", "bad2.json"]) == 2


def test_argparse_usage_exit_code(workdir):
    with pytest.raises(SystemExit) as exc:
        main(["surrogate"])
    assert exc.value.code == 2


def test_surrogate_exact(workdir):
    model = write_model(workdir / "m.json")
    assert main(["surrogate", model, "--mode", "exact", "--out", "o"]) == 0
    cert = json.loads((workdir / "o" / "certificate.json").read_text())
    assert cert["N_total"] == 0 and cert["mode"] == "exact"
    assert cert["sup_error_estimate"] < 1e-9
    manifest = json.loads((workdir / "o" / "manifest.json").read_text())
    assert manifest["exit_code"] == 0 and manifest["command"] == "surrogate"
    assert set(manifest["artifacts"]) == {"surrogate.json", "certificate.json"}


def test_surrogate_shots_budget_and_determinism(workdir):
    model = write_model(workdir / "m.json")
    args = ["surrogate", model, "--mode", "shots", "--epsilon", "0.3", "--delta", "0.2", "--seed", "5"]
    assert main(args + ["--out", "a"]) == 0
    assert main(args + ["--out", "b"]) == 0
    cert = json.loads((workdir / "a" / "certificate.json").read_text())
    assert cert["N"] == shot_budget(0.3, 0.2, 5, 1.0).N
    assert data_files(workdir / "a") == data_files(workdir / "b")


def test_shots_mode_needs_epsilon(workdir):
    assert main(["surrogate", write_model(workdir / "m.json"), "--mode", "shots"]) == 2


def test_theta_file(workdir):
    model = write_model(workdir / "m.json", d=1, L=1, B=1)
    (workdir / "t.json").write_text(json.dumps({"theta": [0.0] * 6}))
    assert main(["surrogate", model, "--theta", "t.json", "--out", "o"]) == 0
    doc = json.loads((workdir / "o" / "surrogate.json").read_text())
    assert doc["coefficients"][0] == pytest.approx([0.5, 0.0], abs=1e-15)
    (workdir / "t.json").write_text(json.dumps([0.0] * 5))
    assert main(["surrogate", model, "--theta", "t.json"]) == 2


def test_resource_cap_exit_code(workdir, capsys):
    model = write_model(workdir / "m.json", d=3, L=2)
    assert main(["surrogate", model, "--cap", "100", "--out", "o"]) == 3
    assert "T=125" in capsys.readouterr().err
    assert json.loads((workdir / "o" / "manifest.json").read_text())["exit_code"] == 3


def test_verify_passes(workdir):
    model = write_model(workdir / "m.json")
    assert main(["verify", model, "--trials", "50", "--epsilon", "0.3", "--delta", "0.2",
                 "--jobs", "1", "--out", "v"]) == 0
    verdict = json.loads((workdir / "v" / "verdict.json").read_text())
    assert verdict["passed"] and verdict["failed"] == []
    assert (workdir / "v" / "budget.csv").read_text().startswith("T,N,N_total,N_inference,ratio\n")


def test_verify_violation_exit_code(workdir, capsys, monkeypatch):
    # one shot per grid point cannot reach a small epsilon at the required rate
    from qsurrogate import guarantees
    from qsurrogate.surrogation import SurrogationBudget
    monkeypatch.setattr(guarantees, "shot_budget", lambda e, d, T, m: SurrogationBudget(e, d, T, m, 1))
    code = main(["verify", write_model(workdir / "m.json"), "--trials", "20", "--epsilon", "0.05",
                 "--delta", "0.2", "--jobs", "1", "--out", "v"])
    assert code == 4
    assert "recovery_rate" in capsys.readouterr().err
    assert json.loads((workdir / "v" / "verdict.json").read_text())["failed"] == ["recovery_rate"]


def test_concentration(workdir):
    assert main(["concentration", "--T", "9", "--N", "50", "--trials", "5000", "--out", "c"]) == 0
    lines = (workdir / "c" / "concentration.csv").read_text().splitlines()
    assert len(lines) == 21
    assert lines[1].split(",")[1] == "1.0"
    (workdir / "cfg.json").write_text(json.dumps({"T": 3, "N": 10, "trials": 1000, "alphas": [0, 1, 2]}))
    assert main(["concentration", "cfg.json", "--out", "d"]) == 0
    assert len((workdir / "d" / "concentration.csv").read_text().splitlines()) == 4


def bench_config(path):
    path.write_text(json.dumps({
        "schema_version": 1,
        "dataset": {"kind": "synthetic", "n_samples": 40, "d": 1},
        "models": [{"name": "q", "kind": "quantum", "L": 1, "B": 1},
                   {"name": "s", "kind": "surrogate", "L": 1}],
        "optimizer": {"epochs": 10},
        "runs": 5,
    }))
    return str(path)


def test_bench_smoke_and_jobs_independence(workdir):
    cfg = bench_config(workdir / "b.json")
    assert main(["bench", cfg, "--runs", "2", "--epochs", "3", "--jobs", "1", "--out", "a"]) == 0
    assert main(["bench", cfg, "--runs", "2", "--epochs", "3", "--jobs", "2", "--out", "b"]) == 0
    assert data_files(workdir / "a") == data_files(workdir / "b")
    manifest = json.loads((workdir / "a" / "manifest.json").read_text())
    assert "report.json" in manifest["artifacts"] and manifest["config"]["runs"] == 2


def test_bench_violation_exit_code(workdir, capsys, monkeypatch):
    from qsurrogate import bench
    monkeypatch.setattr(bench, "LOWER_BOUND_RTOL", -2.0)
    assert main(["bench", bench_config(workdir / "b.json"), "--runs", "1", "--epochs", "2", "--jobs", "1"]) == 4
    assert "lower_bound" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    ["spectrum", "m.json", "--out", "o"],
    ["surrogate", "m.json", "--mode", "shots", "--epsilon", "0.4", "--delta", "0.1", "--seed", "2", "--out", "o"],
    ["verify", "m.json", "--trials", "10", "--jobs", "1", "--out", "o"],
    ["concentration", "--trials", "2000", "--seed", "4", "--out", "o"],
    ["bench", "b.json", "--runs", "2", "--epochs", "2", "--jobs", "1", "--out", "o"],
])
def test_replay_reproduces_artifacts(workdir, argv):
    write_model(workdir / "m.json")
    bench_config(workdir / "b.json")
    assert main(argv) == 0
    assert main(["replay", "o/manifest.json", "--out", "r"]) == 0
    assert data_files(workdir / "o") == data_files(workdir / "r")
    assert data_files(workdir / "o")


def test_replay_from_other_directory(workdir, monkeypatch):
    write_model(workdir / "m.json")
    assert main(["surrogate", "m.json", "--out", "o"]) == 0
    elsewhere = workdir / "sub"
    elsewhere.mkdir()
    monkeypatch.chdir(elsewhere)
    assert main(["replay", str(workdir / "o" / "manifest.json"), "--out", "r"]) == 0
    assert data_files(workdir / "o") == data_files(elsewhere / "r")
    assert os.getcwd() == str(elsewhere)
