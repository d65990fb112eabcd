import csv
import json
import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from cliffsolve.cli import main
from cliffsolve.config import DEFAULT_TOLERANCES, load_config, parse_config
from cliffsolve.errors import ConfigError
from cliffsolve.models import DiracModelSpec, HestenesModelSpec

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, json.loads(out)


def write(tmp_path, text, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


# -- config parsing ---------------------------------------------------------

def test_defaults():
    cfg = parse_config({})
    assert isinstance(cfg.model, DiracModelSpec)
    assert cfg.model.idempotent.name == "t2"
    assert cfg.tolerances == DEFAULT_TOLERANCES
    assert cfg.grid.points == (256,)


def test_parse_hestenes_and_tetrad():
    cfg = parse_config({
        "model": {"kind": "hestenes", "mass": 2.0, "covector": [0.1, 0, 0, 0], "parity": "odd"},
        "tetrad": {"boost": {"axis": 3, "rapidity": 0.2}},
    })
    assert isinstance(cfg.model, HestenesModelSpec)
    assert cfg.model.parity == "odd"
    assert cfg.tetrad.y[0, 2] == pytest.approx(np.sinh(0.2))


@pytest.mark.parametrize("raw,msg", [
    ({"signature": [1]}, "signature"),
    ({"signature": [1, 1], "model": {"idempotent": "t2"}}, "needs signature"),
    ({"model": {"kind": "dirac", "gauge": ["0"]}}, "gauge"),
    ({"model": {"kind": "hestenes", "K": "e^"}}, "model.K"),
    ({"model": {"idempotent": "0.5*e"}}, "idempotent"),
    ({"tetrad": {"matrix": [[2, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]]}}, "tetrad"),
    ({"tetrad": "rotated"}, "tetrad"),
    ({"grid": {"bogus": 1}}, "grid"),
    ({"tolerances": {"nope": 1}}, "tolerance"),
    ({"initial": {"element": "e", "profile": {"kind": "triangle"}}}, "initial"),
    ({"initial": {"profile": {}}}, "element"),
    ({"model": {"kind": "equipped", "terms": [["e"]]}}, "pair"),
    ([1, 2], "mapping"),
])
def test_config_errors(raw, msg):
    with pytest.raises(ConfigError, match=msg):
        parse_config(raw)


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.yaml")
    with pytest.raises(ConfigError):
        load_config(write(tmp_path, "model: [unclosed"))


# -- commands -----------------------------------------------------------------

def test_validate_default(capsys):
    code, rep = run(capsys, "validate")
    assert code == 0 and rep["passed"]
    assert rep["gamma"] == 1 and rep["lower_order_anti_hermiticity"] == 0


def test_validate_n2_flux(capsys):
    code, rep = run(capsys, "validate", "--config", str(CONFIGS / "validate_n2.yaml"))
    assert code == 0
    flux = {tuple(f["normal"]): f["min_eigenvalue"] for f in rep["boundary_flux"]}
    assert flux[(1, 0)] == pytest.approx(rep["gamma"])
    assert abs(flux[(1, 1)]) <= 1e-10 and abs(flux[(1, -1)]) <= 1e-10


def test_idempotents_deterministic(capsys, tmp_path):
    code, rep = run(capsys, "idempotents", "--seed", "5", "--out", str(tmp_path / "a"))
    assert code == 0 and rep["count"] == 5
    assert [e["rank"] for e in rep["idempotents"]] == [0, 1, 2, 3, 4]
    main(["idempotents", "--seed", "5", "--out", str(tmp_path / "b")])
    capsys.readouterr()
    assert (tmp_path / "a" / "report.json").read_bytes() == (tmp_path / "b" / "report.json").read_bytes()


def test_idempotents_wrong_signature(capsys, tmp_path):
    code, rep = run(capsys, "idempotents", "--config", write(tmp_path, "signature: [1, 1]\nmodel: {kind: equipped}\n"))
    assert code == 1 and rep["error"]["type"] == "ConfigError"


def test_solve_writes_fields(capsys, tmp_path):
    out = tmp_path / "run"
    code, rep = run(capsys, "solve", "--config", str(CONFIGS / "solve_plane_wave.yaml"), "--out", str(out))
    assert code == 0
    files = sorted(p.name for p in (out / "fields").iterdir())
    assert files == ["step_0000.csv", "step_0050.csv", "step_0100.csv", "step_0150.csv", "step_0200.csv"]
    with (out / "fields" / "step_0000.csv").open() as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["step", "x2", "component", "re", "im"]
    assert len(rows) == 1 + 64 * 16
    assert json.loads((out / "report.json").read_text()) == rep


def test_energy_writes_csv(capsys, tmp_path):
    cfg = write(tmp_path, "grid: {points: [64], extents: [12.0], steps: 40}\n")
    code, rep = run(capsys, "energy", "--config", cfg, "--out", str(tmp_path / "e"))
    assert code == 0 and rep["passed"]
    with (tmp_path / "e" / "energy.csv").open() as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["step", "time", "energy", "relative_drift"]
    assert len(rows) == 42


def test_energy_failure_exit_code(capsys, tmp_path):
    cfg = write(tmp_path, "grid: {points: [16], extents: [12.0], steps: 40}\ntolerances: {energy_drift: 1e-30}\n")
    code, rep = run(capsys, "energy", "--config", cfg)
    assert code == 2 and not rep["passed"]


def test_theorem_small(capsys, tmp_path):
    cfg = write(tmp_path, "grid: {points: [64], extents: [12.0], steps: 60}\n")
    code, rep = run(capsys, "theorem", "--config", cfg)
    assert code == 0 and rep["passed"]
    assert rep["leakage_max"] <= 1e-12


def test_theorem_needs_dirac(capsys, tmp_path):
    code, rep = run(capsys, "theorem", "--config", write(tmp_path, "model: {kind: hestenes}\n"))
    assert code == 1


def test_theorem_data_outside_ideal(capsys, tmp_path):
    cfg = write(tmp_path, "initial: {element: e, profile: {kind: gaussian}}\ngrid: {points: [32], steps: 2}\n")
    code, rep = run(capsys, "theorem", "--config", cfg)
    assert code == 2 and rep["error"]["type"] == "MembershipError"


def test_dispersion_default(capsys):
    code, rep = run(capsys, "dispersion")
    assert code == 0 and rep["max_error"] <= 1e-10


def test_check_failure_cfl(capsys, tmp_path):
    cfg = write(tmp_path, "grid: {points: [16], dt: 1.0, steps: 1}\n")
    code, rep = run(capsys, "solve", "--config", cfg)
    assert code == 2 and rep["error"]["type"] == "CFLError"


def test_friedrichs_refusal(capsys, tmp_path):
    cfg = write(tmp_path, "tetrad: {matrix: [[-1,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,1]]}\n")
    code, rep = run(capsys, "validate", "--config", cfg)
    assert code == 2 and rep["error"]["type"] == "FriedrichsError"


def test_usage_errors(capsys):
    code, rep = run(capsys, "frobnicate")
    assert code == 1 and "error" in rep
    code, rep = run(capsys, "validate", "--seed", str(2 ** 64))
    assert code == 1


def test_console_script_and_thread_env(tmp_path):
    env = dict(os.environ, CLIFFSOLVE_THREADS="1")
    out = subprocess.run([sys.executable, "-m", "cliffsolve.cli", "validate"], env=env,
                         capture_output=True, text=True)
    assert out.returncode == 0
    assert json.loads(out.stdout)["passed"] is True
