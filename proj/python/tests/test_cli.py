import csv
import json

from conftest import CONFIGS, run_bec


def test_stationary_outputs(bec, tmp_path, validator):
    r = run_bec(bec, "stationary", "--config", CONFIGS / "desk.json", "--out", tmp_path)
    assert r.returncode == 0, r.stderr
    sol = json.loads((tmp_path / "solution.json").read_text())
    validator(sol, "solution.schema.json")
    rows = list(csv.DictReader((tmp_path / "convergence.csv").open()))
    assert int(rows[-1]["iteration"]) == sol["iterations"]


def test_outputs_are_byte_identical(bec, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert run_bec(bec, "stationary", "--config", CONFIGS / "desk.json", "--out", out).returncode == 0
    for name in ("solution.json", "convergence.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_expand_validates(bec, tmp_path, validator):
    r = run_bec(bec, "expand", "--config", CONFIGS / "desk.json", "--out", tmp_path, "--order", 2)
    assert r.returncode == 0, r.stderr
    validator(json.loads((tmp_path / "expansion.json").read_text()), "expansion.schema.json")


def test_evolve_validates(bec, tmp_path, validator):
    r = run_bec(bec, "evolve", "--config", CONFIGS / "desk.json", "--out", tmp_path, "--tfinal", 0.1, "--dt", 0.01)
    assert r.returncode == 0, r.stderr
    validator(json.loads((tmp_path / "evolution.json").read_text()), "evolution.schema.json")
    validator(json.loads((tmp_path / "initial_state.json").read_text()), "solution.schema.json")
    rows = list(csv.DictReader((tmp_path / "observables.csv").open()))
    # desk config observes every 10 steps: t = 0 and the final row
    assert len(rows) == 2
    assert float(rows[-1]["t"]) == 0.1


def test_verify_asymptotics(bec, tmp_path, validator):
    r = run_bec(bec, "verify-asymptotics", "--config", CONFIGS / "desk.json", "--out", tmp_path, "--m", 3)
    assert r.returncode == 0, r.stderr
    doc = json.loads((tmp_path / "asymptotics.json").read_text())
    validator(doc, "asymptotics.schema.json")
    assert doc["passes"]


def test_small_sweep_validates(bec, tmp_path, validator):
    cfg = json.loads((CONFIGS / "sweep.json").read_text())
    cfg["microstructure"] = str(CONFIGS / "cosine.json")
    cfg["sweep"]["extrapolate_energy"] = False
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    r = run_bec(bec, "sweep", "--config", path, "--out", tmp_path, "--epsilons", "0.25,0.125")
    assert r.returncode == 0, r.stderr
    validator(json.loads((tmp_path / "sweep.json").read_text()), "sweep.schema.json")
    lines = (tmp_path / "sweep.csv").read_text().splitlines()
    assert lines[-1].startswith("slope,")
    assert len(lines) == 4


def test_malformed_config(bec, tmp_path, validator):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"thermo": {"beta": 1.0, "temperature": 3}}))
    r = run_bec(bec, "stationary", "--config", path, "--out", tmp_path / "o")
    assert r.returncode == 2
    err = json.loads(r.stderr.strip().splitlines()[-1])
    validator(err, "error.schema.json")
    assert err["error"]["key"] == "thermo.temperature"
    assert json.loads((tmp_path / "o" / "error.json").read_text()) == err


def test_module_error_exit(bec, tmp_path, validator):
    r = run_bec(bec, "full-eps", "--config", CONFIGS / "desk.json", "--out", tmp_path, "--epsilon", 0.5)
    assert r.returncode == 3
    err = json.loads((tmp_path / "error.json").read_text())
    validator(err, "error.schema.json")
    assert err["error"]["kind"] == "under_resolution"


def test_configs_validate(validator):
    for name in ("desk.json", "sweep.json"):
        validator(json.loads((CONFIGS / name).read_text()), "config.schema.json")
    validator(json.loads((CONFIGS / "cosine.json").read_text()), "microstructure.schema.json")
