import csv
import json
import math
import subprocess
import sys

import pytest

from roughcm.cli import (DEFAULTS, ConfigError, config_hash, dumps, main, parse_config_text, resolve_config)

FAST = ["--set", "n_modes=8", "--set", "step_exponent=6"]
SMALL_MANIFOLD = FAST + ["--set", "k_past=8", "--set", "n_radii=2", "--set", "n_directions=2"]


def run(tmp_path, *args):
    code = main([*args, "--out", str(tmp_path)])
    return code


def report(tmp_path, name):
    return json.loads((tmp_path / f"{name}_report.json").read_text())


def test_config_parsing(tmp_path):
    text = "# comment\nmodel = torus_rd\nn_modes=6  # trailing\n\nseed=3\n"
    assert parse_config_text(text) == {"model": "torus_rd", "n_modes": "6", "seed": "3"}
    fn = tmp_path / "run.cfg"
    fn.write_text(text)
    cfg = resolve_config(str(fn), {"gamma": "0.4"})
    assert (cfg["model"], cfg["n_modes"], cfg["seed"], cfg["gamma"]) == ("torus_rd", 6, 3, 0.4)
    with pytest.raises(ConfigError):
        parse_config_text("no equals sign")
    for bad in ({"colour": "red"}, {"gamma": "0.2"}, {"n_modes": "many"}, {"model": "heat"}):
        with pytest.raises(ConfigError):
            resolve_config(None, bad)


def test_config_hash_is_order_free():
    a = dict(DEFAULTS)
    b = dict(reversed(list(DEFAULTS.items())))
    assert config_hash(a) == config_hash(b)
    b["seed"] = 1
    assert config_hash(a) != config_hash(b)


def test_dumps_full_precision():
    out = json.loads(dumps({"x": 0.1, "y": [1, math.nan], "s": 'q"'}))
    assert out == {"x": 0.1, "y": [1, None], "s": 'q"'}
    assert "0.10000000000000001" in dumps(0.1)


def test_lift_check_passes_and_detects_corruption(tmp_path):
    assert run(tmp_path, "lift-check", "--set", "triples=2000") == 0
    rep = report(tmp_path, "lift_check")
    assert rep["passed"] and rep["metrics"]["chen_max_defect"] <= 1e-12
    bad = tmp_path / "bad"
    assert run(bad, "lift-check", "--set", "corrupt_area=1", "--set", "triples=2000") == 1
    assert report(bad, "lift_check")["failed_metrics"] == ["area_identity_max"]


def test_lift_check_sweep(tmp_path):
    assert run(tmp_path, "lift-check", "--set", "sweep_seeds=3", "--set", "triples=500") == 0
    m = report(tmp_path, "lift_check")["metrics"]["chen_max_defect"]
    assert set(m) == {"min", "median", "max"}


def test_solve_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(a, "solve", *FAST) == 0
    assert run(b, "solve", *FAST) == 0
    assert (a / "trajectory.csv").read_bytes() == (b / "trajectory.csv").read_bytes()
    ra, rb = report(a, "solve"), report(b, "solve")
    assert ra["metrics"] == rb["metrics"]


def test_solve_with_zero_coefficients(tmp_path):
    assert run(tmp_path, "solve", *FAST, "--set", "drift=zero", "--set", "diffusion=zero") == 0
    m = report(tmp_path, "solve")["metrics"]
    assert m["semigroup_deviation"] <= 1e-12 and m["iterations"] == [1, 1]


def test_manifold_refuses_gap_violation(tmp_path):
    assert run(tmp_path, "manifold", *SMALL_MANIFOLD, "--set", "gap_k=closed_form") == 2
    assert not any(tmp_path.iterdir()) or not (tmp_path / "graph.csv").exists()


def test_manifold_zero_noise(tmp_path):
    assert run(tmp_path, "manifold", *SMALL_MANIFOLD, "--set", "noise=zero") == 0
    rep = report(tmp_path, "manifold")
    assert rep["metrics"]["gap_lhs"] < 0.25
    rows = list(csv.DictReader(open(tmp_path / "graph.csv")))
    origin = [r for r in rows if r["direction_index"] == "-1"]
    assert len(origin) == 8 and all(float(r["h_coeff"]) == 0.0 and float(r["radius"]) == 0.0 for r in origin)
    meta = json.loads((tmp_path / "graph_meta.json").read_text())
    assert meta["config_hash"] == rep["config_hash"]


def test_usage_errors(tmp_path):
    assert run(tmp_path, "validate", "--suite", "nope") == 2
    assert run(tmp_path, "solve", "--set", "novalue") == 2
    assert run(tmp_path, "solve", "--set", "hurst=0.9") == 2


def test_validate_chen(tmp_path):
    assert run(tmp_path, "validate", "--suite", "chen") == 0
    crit = report(tmp_path, "validate")["metrics"]["criteria"]
    assert [c["criterion"] for c in crit] == [1, 2, 11]


def test_console_module_entry(tmp_path):
    out = subprocess.run([sys.executable, "-m", "roughcm", "lift-check", "--set", "triples=100",
                          "--out", str(tmp_path)], capture_output=True, text=True)
    assert out.returncode == 0
    assert json.loads(out.stdout)["command"] == "lift-check"
