import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from birkhoff_mf.builtin import example_5_1
from birkhoff_mf.cli import EXIT_CHECK, EXIT_INVALID, EXIT_OK, RunConfig, load_system, main, read_curve_csv
from birkhoff_mf.pressure import bowen_parameter
from oracles import luroth_t


def run(tmp_path, *args):
    return main([*args, "--out", str(tmp_path)])


def test_spectrum_example_5_1(tmp_path, capsys):
    assert run(tmp_path, "spectrum", "--system", "example_5_1", "--grid", "1000") == EXIT_OK
    line = capsys.readouterr().out
    h = float(line.split("h=")[1].split()[0])
    assert h == pytest.approx(bowen_parameter(example_5_1()[0]), abs=1e-12)
    rows = read_curve_csv(open(tmp_path / "spectrum.csv"))
    assert len(rows) == 1000
    t = np.array([r["t"] for r in rows])
    k = int(np.argmax(t))
    assert np.all(np.diff(t[: k + 1]) > 0) and np.all(np.diff(t[k:]) < 0)
    head = json.load(open(tmp_path / "spectrum.json"))
    assert head["schema"] == 1 and head["range"]["xi_max"] == 2.0


def test_spectrum_luroth_matches_closed_form(tmp_path):
    code = run(tmp_path, "spectrum", "--system", "example_5_3", "--family", "lyapunov", "--grid", "1000", "--xi-cap", "10")
    assert code == EXIT_OK
    rows = read_curve_csv(open(tmp_path / "spectrum.csv"))
    assert max(abs(r["t"] - luroth_t(r["xi"])) for r in rows) <= 1e-8


def test_grid_zero_is_invalid(tmp_path, capsys):
    assert run(tmp_path, "spectrum", "--system", "example_5_1", "--grid", "0") == EXIT_INVALID
    assert "grid" in capsys.readouterr().err


def test_unit_ratio_config_is_invalid(tmp_path):
    ini = tmp_path / "bad.ini"
    ini.write_text("[system]\nkind = full_shift\nratios = 1.0, 0.5\npotential = 1, 2\n")
    assert run(tmp_path, "diagnostics", "--config", str(ini)) == EXIT_INVALID


def test_unknown_builtin_is_invalid(tmp_path):
    assert run(tmp_path, "spectrum", "--system", "nope") == EXIT_INVALID


def test_reducible_markov_is_invalid(tmp_path):
    ini = tmp_path / "loops.ini"
    ini.write_text("[system]\nkind = markov\nratios = 0.5, 0.25\npotential = 1, 2\nincidence = 1 0; 0 1\n")
    assert run(tmp_path, "spectrum", "--config", str(ini)) == EXIT_INVALID


def test_diagnostics_example_5_1(tmp_path, capsys):
    assert run(tmp_path, "diagnostics", "--system", "example_5_1") == EXIT_OK
    out = capsys.readouterr().out
    assert "FAIL" not in out and "translation_invariance" in out


def test_diagnostics_coarse_luroth_fails(tmp_path, capsys):
    assert run(tmp_path, "diagnostics", "--system", "example_5_3", "--truncation", "20") == EXIT_CHECK
    assert "failed: truncation_stability" in capsys.readouterr().out


def test_diagnostics_markov_config(tmp_path):
    ini = tmp_path / "mk.ini"
    ini.write_text("[system]\nkind = markov\nratios = 0.5, 0.25\npotential = 1, 3\nincidence = 1 1; 1 0\n")
    assert run(tmp_path, "diagnostics", "--config", str(ini)) == EXIT_OK


def _surface(path):
    return list(csv.DictReader(open(path / "pressure_surface.csv")))


def test_pressure_surface_luroth_region(tmp_path):
    code = run(tmp_path, "pressure-surface", "--system", "example_5_3", "--t-range", "0:2:21", "--q-range=-2:1:31")
    assert code == EXIT_OK
    rows = _surface(tmp_path)
    assert len(rows) == 21 * 31
    for r in rows:
        t, q = float(r["t"]), float(r["q"])
        assert (r["in_region"] == "true") == (q < t)
        assert (r["P"] == "inf") == (r["in_region"] == "false")
    mb = list(csv.DictReader(open(tmp_path / "manhattan_boundary.csv")))
    assert all(abs(float(m["q0"]) - float(m["t"])) <= 1e-12 for m in mb)


def test_pressure_surface_finite_all_in_region(tmp_path):
    assert run(tmp_path, "pressure-surface", "--system", "example_5_1", "--t-range", "0:2:5", "--q-range=-5:5:5") == EXIT_OK
    assert all(r["in_region"] == "true" for r in _surface(tmp_path))


def test_pressure_surface_outside_region(tmp_path):
    assert run(tmp_path, "pressure-surface", "--system", "example_5_3", "--t-range", "0:1:4", "--q-range", "2:3:4") == EXIT_OK
    assert all(r["P"] == "inf" and r["in_region"] == "false" for r in _surface(tmp_path))


def test_gibbs_json_lines(tmp_path, capsys):
    assert main(["gibbs", "--system", "example_5_1", "--point", "0,1", "--point", "0.5,-1", "--out", str(tmp_path)]) == EXIT_OK
    docs = [json.loads(x) for x in capsys.readouterr().out.splitlines()]
    assert len(docs) == 2 and docs[0]["schema"] == 1
    e = math.e
    assert docs[0]["stationary"][1] == pytest.approx(e * e / (2 * e + e * e), abs=1e-15)


def test_gibbs_outside_region_is_solver_failure(tmp_path):
    assert main(["gibbs", "--system", "example_5_3", "--point", "0.5,0.5", "--out", str(tmp_path)]) == 3


def test_csv_round_trip(tmp_path):
    from birkhoff_mf.cli import write_curve_csv
    from birkhoff_mf.spectrum import SolverSettings, SpectrumSolver

    curve = SpectrumSolver(*example_5_1(), SolverSettings(count=50)).sample()
    path = tmp_path / "c.csv"
    with open(path, "w", newline="") as fh:
        write_curve_csv(curve, fh)
    rows = read_curve_csv(open(path))
    for p, r in zip(curve.points, rows):
        assert (r["xi"], r["t"], r["q"], r["W_residual"], r["inner_residual"]) == (p.xi, p.t, p.q, p.W_residual, p.inner_residual)
        assert r["flags"] == p.flags


def test_deterministic_csv(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["spectrum", "--system", "example_5_2", "--grid", "200", "--out", str(d)]) == EXIT_OK
    assert (a / "spectrum.csv").read_bytes() == (b / "spectrum.csv").read_bytes()


def test_json_format(tmp_path):
    assert run(tmp_path, "spectrum", "--system", "example_5_1", "--grid", "20", "--format", "json") == EXIT_OK
    doc = json.load(open(tmp_path / "spectrum.json"))
    assert len(doc["points_data"]) == 20 and doc["resolved"]["system"]["builtin"] == "example_5_1"


def test_inline_family(tmp_path):
    cfg = RunConfig(system="example_5_1", family="1,2,2", out=str(tmp_path))
    _, fam = load_system(cfg)
    assert np.array_equal(fam.values, [1.0, 2.0, 2.0])


def test_geometric_tail_config(tmp_path, capsys):
    ini = tmp_path / "geo.ini"
    ini.write_text("[system]\nkind = full_shift\nratios = 0.5, 0.25, 0.125\n[truncation]\ntail = geometric\ntail_scale = 1\ntail_rate = 0.5\n")
    assert run(tmp_path, "spectrum", "--config", str(ini), "--grid", "50") == EXIT_OK
    assert "xi_max=inf" in capsys.readouterr().out


def test_list_builtins(capsys):
    assert main(["list-builtins"]) == EXIT_OK
    assert "example_5_3" in capsys.readouterr().out


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "birkhoff_mf", "spectrum", "--system", "example_5_1", "--grid", "0"],
                         capture_output=True, text=True)
    assert out.returncode == EXIT_INVALID
