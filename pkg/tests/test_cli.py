import csv
import json
import subprocess
import sys

import pytest

from invforge.cli import CSV_COLUMNS, EXIT_BOUND, EXIT_IO, EXIT_VALIDATION, run
from invforge.noisesim import CoherentNoiseModel, run_experiment
from invforge.synth import BenchmarkSpec


def invoke(*argv):
    return run([str(a) for a in argv])


def read_json(path):
    return json.loads(path.read_text())


def test_synth_deterministic(tmp_path):
    spec = tmp_path / "crz-folding.json"
    spec.write_text(json.dumps({"name": "crz-folding", "n_qubits": 2, "params": {"n_folds": 4}}))
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert invoke("synth", "--spec", spec, "--seed", 7, "--out", a) == 0
    assert invoke("synth", "--spec", spec, "--seed", 7, "--out", b) == 0
    assert a.read_bytes() == b.read_bytes()
    manifest = read_json(tmp_path / "a.json.manifest.json")
    assert manifest["subcommand"] == "synth"
    assert manifest["config"]["benchmark"]["params"]["seed"] == 7


def test_synth_by_name(tmp_path):
    out = tmp_path / "q.json"
    assert invoke("synth", "--name", "qaoa-maxcut", "--n-qubits", 4, "--param", "gamma=[0.1]",
                  "--param", "beta=[0.2]", "--out", out) == 0
    assert read_json(out)["n_qubits"] == 4


@pytest.mark.parametrize("name", ["qpe", "heisenberg", "qft-adder"])
def test_compile_off_then_zero_noise(tmp_path, name):
    raw, std, res = tmp_path / "c.json", tmp_path / "std.json", tmp_path / "res.json"
    assert invoke("synth", "--name", name, "--n-qubits", 5, "--out", raw) == 0
    assert invoke("compile", "--circuit", raw, "--hidden-inverse=false", "--out", std) == 0
    assert all(g["pair_id"] is None for g in read_json(std)["gates"])
    assert invoke("simulate", "--circuit", std, "--noise", "zero", "--out", res) == 0
    assert read_json(res)["fidelity"] == pytest.approx(1.0, abs=1e-9)


def test_stage_composability(tmp_path):
    spec = BenchmarkSpec("qaoa-maxcut", 4)
    report = run_experiment(spec, CoherentNoiseModel.default(), draws=1, seed=5)
    raw = tmp_path / "c.json"
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps(spec.to_dict()))
    assert invoke("synth", "--spec", spec_path, "--out", raw) == 0
    fids = {}
    for flag in ("false", "true"):
        comp, sched, res = (tmp_path / f"{stem}-{flag}.json" for stem in ("comp", "sched", "res"))
        assert invoke("compile", "--circuit", raw, f"--hidden-inverse={flag}", "--out", comp) == 0
        assert invoke("pulses", "--circuit", comp, "--out", sched) == 0
        assert invoke("simulate", "--schedules", sched, "--noise", "default", "--seed", 5, "--out", res) == 0
        fids[flag] = read_json(res)["fidelity"]
    assert fids["false"] == pytest.approx(report.f_std, abs=1e-12)
    assert fids["true"] == pytest.approx(report.f_hi, abs=1e-12)


def test_simulate_csv_and_shots(tmp_path, capsys):
    raw, comp = tmp_path / "c.json", tmp_path / "comp.json"
    invoke("synth", "--name", "qpe", "--n-qubits", 4, "--out", raw)
    invoke("compile", "--circuit", raw, "--out", comp)
    assert invoke("simulate", "--circuit", comp, "--format", "csv", "--shots", 500, "--seed", 2) == 0
    rows = list(csv.reader(capsys.readouterr().out.splitlines()))
    assert rows[0] == ["outcome", "ideal", "noisy"]
    assert sum(float(r[2]) for r in rows[1:]) == pytest.approx(1.0)


def test_bench_csv_and_gnuplot(tmp_path):
    spec = tmp_path / "s.json"
    spec.write_text(json.dumps({"name": "qaoa-maxcut", "n_qubits": 4}))
    out = tmp_path / "b.csv"
    prefix = tmp_path / "fig"
    assert invoke("bench", "--spec", spec, "--draws", 2, "--seed", 1, "--out", out,
                  "--emit-gnuplot", prefix) == 0
    rows = list(csv.DictReader(out.read_text().splitlines()))
    assert tuple(rows[0]) == CSV_COLUMNS and rows[0]["name"] == "qaoa-maxcut-4q"
    assert (tmp_path / "fig.dat").exists() and "plot" in (tmp_path / "fig.gp").read_text()
    manifest = read_json(tmp_path / "b.csv.manifest.json")
    assert manifest["config"]["seed"] == 1 and manifest["config"]["noise_model"]["sampling"]["seed"] == 1


def test_bench_json(tmp_path):
    spec = tmp_path / "s.json"
    spec.write_text(json.dumps({"name": "ising", "n_qubits": 4}))
    out = tmp_path / "b.json"
    assert invoke("bench", "--spec", spec, "--draws", 1, "--seed", 3, "--format", "json", "--out", out) == 0
    assert read_json(out)["rows"][0]["name"] == "ising-4q"


def test_manifest_replay(tmp_path):
    spec = tmp_path / "s.json"
    spec.write_text(json.dumps({"name": "xy", "n_qubits": 4}))
    out, again = tmp_path / "b.csv", tmp_path / "again.csv"
    assert invoke("bench", "--spec", spec, "--draws", 2, "--seed", 9, "--out", out) == 0
    assert invoke("--manifest", tmp_path / "b.csv.manifest.json", "--replay-out", again) == 0
    assert out.read_bytes() == again.read_bytes()


def test_exit_codes(tmp_path, capsys):
    assert invoke("bench", "--suite", "paper") == EXIT_VALIDATION  # seed is mandatory
    assert invoke("synth", "--name", "qpe", "--n-qubits", 30) == EXIT_VALIDATION
    assert invoke("compile", "--circuit", tmp_path / "missing.json") == EXIT_IO
    big = tmp_path / "big.json"
    big.write_text(json.dumps({"n_qubits": 30, "gates": []}))
    assert invoke("compile", "--circuit", big) == EXIT_BOUND
    raw = tmp_path / "raw.json"
    invoke("synth", "--name", "qpe", "--n-qubits", 4, "--out", raw)
    assert invoke("simulate", "--circuit", raw) == EXIT_VALIDATION
    err = capsys.readouterr().err
    assert "invforge simulate: error" in err and "compile" in err
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert invoke("pulses", "--circuit", bad) == EXIT_VALIDATION


def test_env_calibration(tmp_path, monkeypatch):
    from invforge.pulse import synthetic_calibration
    cal = tmp_path / "cal.json"
    cal.write_text(json.dumps(synthetic_calibration(4)))
    monkeypatch.setenv("INVFORGE_CAL", str(cal))
    raw, comp, sched = tmp_path / "c.json", tmp_path / "comp.json", tmp_path / "s.json"
    invoke("synth", "--name", "qaoa-maxcut", "--n-qubits", 4, "--out", raw)
    invoke("compile", "--circuit", raw, "--out", comp)
    assert invoke("pulses", "--circuit", comp, "--out", sched) == 0
    assert read_json(tmp_path / "s.json.manifest.json")["config"]["calibration"] == str(cal)


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "invforge", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and "invforge" in proc.stdout
