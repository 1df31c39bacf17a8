import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from conftest import CLASSICAL_CUBIC_ENERGY
from pohozaev.cli import main
from pohozaev.errors import HYPOTHESIS_FAILURE_EXIT
from pohozaev.grids import read_csv

CLASSICAL = """
[problem]
family = "classical"
N = 3
nonlinearity = "cubic"

[grid]
kind = "radial"
R = 20.0
M = 512

[fiber]
points = 200
"""

ANISO = """
[problem]
family = "anisotropic"
N = 2
p = [1.7, 1.7]

[grid]
M = 32

[check]
samples = 20
small_samples = 30
"""


def _write(tmp_path, text, name="run.toml"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


def _summary(directory):
    return json.loads((directory / "summary.json").read_text())


@pytest.fixture(scope="module")
def solved(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("solve")
    cfg = _write(tmp, CLASSICAL)
    out = tmp / "out"
    code = main(["solve", cfg, "-o", str(out), "-q"])
    return code, out, cfg


def test_solve_writes_artifacts(solved):
    code, out, _ = solved
    assert code == 0
    s = _summary(out)
    assert s["exit_code"] == 0 and s["partial"] is False
    for name in ("report.toml", "solution.csv", "fiber.csv", "energy_trace.csv", "summary.json"):
        assert name in s["artifacts"]
        assert (out / name).exists()
    energy = s["results"]["solve"]["energy"]
    assert energy == pytest.approx(CLASSICAL_CUBIC_ENERGY, rel=0.02)
    u = read_csv(out / "solution.csv")
    assert u.grid.size == 513 and np.all(u.values >= 0)


def test_csv_dialect(solved):
    _, out, _ = solved
    raw = (out / "energy_trace.csv").read_bytes()
    assert b"\r" not in raw
    header = raw.split(b"\n", 1)[0].decode()
    assert "," in header and ";" not in header


def test_solve_fiber_marks_t_star(solved):
    _, out, _ = solved
    with open(out / "fiber.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == ["t", "h", "K", "t_star"]
    marked = [r for r in rows if r["t_star"] == "1"]
    assert len(marked) == 1
    t = np.array([float(r["t"]) for r in rows])
    assert np.all(np.diff(t) >= 0)
    h = np.array([float(r["h"]) for r in rows])
    assert float(marked[0]["h"]) >= h.max() - 1e-12


def test_fiber_on_stored_profile(solved, tmp_path):
    _, out, _ = solved
    text = CLASSICAL.replace("[fiber]", f'[fiber]\nprofile = "{out / "solution.csv"}"')
    cfg = _write(tmp_path, text)
    code = main(["fiber", cfg, "-o", str(tmp_path / "fib"), "-q"])
    assert code == 0
    res = _summary(tmp_path / "fib")["results"]["fiber"]
    # the stored profile is a ground state: its Pohozaev scale is close to 1
    assert res["t_star"] == pytest.approx(1.0, abs=0.02)
    assert res["K_residual"] <= 1e-7 * abs(res["h_star"])


def test_rerun_byte_identical(solved, tmp_path):
    _, out, cfg = solved
    again = tmp_path / "again"
    assert main(["solve", cfg, "-o", str(again), "-q"]) == 0
    for name in _summary(out)["artifacts"]:
        if name.endswith(".png"):
            continue
        assert (again / name).read_bytes() == (out / name).read_bytes(), name


def test_check_hypotheses_exit_codes(tmp_path):
    cfg = _write(tmp_path, ANISO)
    assert main(["check-hypotheses", cfg, "-o", str(tmp_path / "a"), "-q"]) == 0
    assert _summary(tmp_path / "a")["results"]["hypotheses"]["passed"] is True
    # a coarse radial grid resolves equimeasurability only to O(h^2)
    coarse = CLASSICAL.replace("[fiber]", "[check]\nsamples = 20\nsmall_samples = 30\n[fiber]")
    cfg = _write(tmp_path, coarse, "c.toml")
    code = main(["check-hypotheses", cfg, "-o", str(tmp_path / "c"), "-q"])
    failures = _summary(tmp_path / "c")["results"]["hypotheses"]["failures"]
    assert (code == HYPOTHESIS_FAILURE_EXIT) == bool(failures)
    data = json.loads((tmp_path / "c" / "hypotheses.json").read_text())
    assert {e["name"] for e in data["entries"] if not e["passed"] and not e["surrogate"]} == set(failures)


def test_sweep(tmp_path):
    text = CLASSICAL + '\n[sweep]\nparameter = "grid.M"\nvalues = [256, 512]\n[output]\nformats = ["csv", "json", "toml"]\n'
    cfg = _write(tmp_path, text)
    out = tmp_path / "sw"
    assert main(["sweep", cfg, "-o", str(out), "-q"]) == 0
    with open(out / "sweep.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["grid.M"] for r in rows] == ["256", "512"]
    assert all(r["exit_code"] == "0" for r in rows)
    for r in rows:
        sub = out / r["directory"]
        assert _summary(sub)["results"]["solve"]["energy"] == pytest.approx(float(r["energy"]))
    assert not list(out.glob("*.png")) and not list(out.glob("*/*.png"))


def test_validation_error_exit_code(tmp_path, capsys):
    cfg = _write(tmp_path, '[problem]\nfamily = "fractional"\nN = 1\ns = [0.6]\ngrid_bogus = 1\n')
    assert main(["solve", cfg, "-o", str(tmp_path / "x")]) == 2
    cfg = _write(tmp_path, '[problem]\nfamily = "fractional"\nN = 1\ns = [0.6]\n', "v.toml")
    assert main(["solve", cfg, "-o", str(tmp_path / "x")]) == 3
    assert "N > 2*s_n required" in capsys.readouterr().err
    assert not (tmp_path / "x").exists()


def test_output_root_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("POHOZAEV_OUTPUT_ROOT", str(tmp_path / "root"))
    cfg = _write(tmp_path, ANISO)
    assert main(["check-hypotheses", cfg, "-q"]) == 0
    assert (tmp_path / "root" / "check-hypotheses" / "summary.json").exists()


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "pohozaev.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    for cmd in ("solve", "fiber", "check-hypotheses", "sweep"):
        assert cmd in res.stdout
