import json
import os
from importlib import resources

import numpy as np
import pytest

from bohmfluid import cli
from bohmfluid.config import parse_text, set_value
from bohmfluid.errors import ValidationError


def bundled(name):
    return str(resources.files("bohmfluid.configs").joinpath(name))


def write_cfg(tmp_path, text, name="c.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


SMALL = """
[grid]
n = 128
length = 40
[scenario]
name = {name}
t_end = 0.2
stride = 50
{extra}
"""


def test_config_defaults_and_types():
    cfg = parse_text("[scenario]\nname = madelung\n[grid]\nn = 64\n")
    assert cfg["grid"]["n"] == 64 and cfg["physics"]["hbar"] == 1.0
    assert cfg["physics"]["c"] == float("inf")


@pytest.mark.parametrize("text,key", [
    ("[scenario]\nname = madelung\n[physics]\nkT = -1\n", "physics.kT"),
    ("[scenario]\nname = madelung\n[grid]\nn = 100\n", "grid.n"),
    ("[scenario]\nname = madelung\n[grid]\nsize = 3\n", "grid.size"),
    ("[scenario]\nname = madelung\n[physics]\nhbar = abc\n", "physics.hbar"),
    ("[scenario]\nname = relativistic\n", "physics.c"),
    ("[scenario]\nname = madelung\ninitial = ground\n", "scenario.potential"),
])
def test_validation_lists_keys(text, key):
    with pytest.raises(ValidationError) as exc:
        parse_text(text)
    assert key in exc.value.keys and key in str(exc.value)


def test_set_value():
    cfg = parse_text("[scenario]\nname = madelung\n")
    assert set_value(cfg, "scenario.dt", "1e-3")["scenario"]["dt"] == "0.001"
    assert set_value(cfg, "grid.n", "64")["grid"]["n"] == 64
    assert cfg["grid"]["n"] == 512
    with pytest.raises(ValidationError):
        set_value(cfg, "scenario.initial", "1")
    with pytest.raises(ValidationError):
        set_value(cfg, "grid.n", "abc")


def test_run_free_gaussian(tmp_path, capsys):
    out = tmp_path / "fg"
    assert cli.main(["run", bundled("free_gaussian.cfg"), "--out", str(out)]) == 0
    files = os.listdir(out)
    assert "density_t0000.csv" in files and "meta.json" in files and "plot_density.gp" in files
    meta = json.loads((out / "meta.json").read_text())
    assert {"config_hash", "version", "grid", "dt", "tolerances"} <= set(meta)
    assert meta["metrics"]["error"] < 1e-5
    head = (out / "density_t0000.csv").read_text().splitlines()
    assert head[0] == "x,rho,S,v"
    assert len(head[1].split(",")[1].replace("e", " ").split()[0].replace(".", "").lstrip("-")) >= 15


def test_output_root_env(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUT_ENV, str(tmp_path))
    cfg = write_cfg(tmp_path, SMALL.format(name="schrodinger", extra="dt = 0.01") + "[output]\ndir = envrun\n")
    assert cli.main(["run", cfg]) == 0
    assert (tmp_path / "envrun" / "times.csv").exists()


def test_duplicate_key_is_a_config_error(tmp_path):
    cfg = write_cfg(tmp_path, SMALL.format(name="madelung", extra="t_end = 50"))
    assert cli.main(["run", cfg]) == 2


def test_bad_config_exit_codes(tmp_path, capsys):
    bad = write_cfg(tmp_path, "[scenario]\nname = madelung\n[physics]\nkT = -1\n")
    assert cli.main(["run", bad]) == 2
    assert "physics.kT" in capsys.readouterr().err
    unk = write_cfg(tmp_path, "[scenario]\nname = hydro\n", "u.cfg")
    assert cli.main(["run", unk]) == 2
    assert "unknown scenario" in capsys.readouterr().err
    assert cli.main(["run", str(tmp_path / "missing.cfg")]) == 2


def test_numerical_abort_exit_code(tmp_path):
    cfg = write_cfg(tmp_path, "[grid]\nn = 128\nlength = 40\n[scenario]\nname = madelung\n"
                              "initial = pulse\ndt = 0.5\nt_end = 50\n")
    out = tmp_path / "boom"
    assert cli.main(["run", cfg, "--out", str(out)]) == 3
    diag = (out / "diagnostics.txt").read_text()
    assert diag.startswith("error:") and "step" in diag
    assert (out / "last_state.csv").exists()


def test_compare_writes_error_table(tmp_path):
    out = tmp_path / "cmp"
    cfg = write_cfg(tmp_path, SMALL.format(name="compare", extra="sigma0 = 1"))
    assert cli.main(["run", cfg, "--out", str(out)]) == 0
    rows = np.loadtxt(out / "error_vs_time.csv", delimiter=",", skiprows=1)
    head = (out / "error_vs_time.csv").read_text().splitlines()[0].split(",")
    assert head == ["t", "l2_madelung_vs_schrodinger", "l2_madelung_vs_closed_form"]
    assert rows[0, 1] < 1e-14 and rows[-1, 1] < 1e-3


@pytest.mark.parametrize("name", ["relativistic_pulse.cfg", "nonlocal_study.cfg", "retarded_study.cfg",
                                  "ground_state.cfg", "schrodinger_free.cfg"])
def test_bundled_configs_run(tmp_path, name):
    assert cli.main(["run", bundled(name), "--out", str(tmp_path / "o")]) == 0


def test_rerun_is_bit_identical(tmp_path):
    cfg = bundled("compare_coherent.cfg")
    for d in ("a", "b"):
        assert cli.main(["run", cfg, "--out", str(tmp_path / d)]) == 0
    for f in sorted(os.listdir(tmp_path / "a")):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes(), f


def test_sweep_dt_slope(tmp_path, capsys):
    out = tmp_path / "sw"
    rc = cli.main(["sweep", bundled("dt_convergence.cfg"), "--param", "scenario.dt",
                   "--values", "4e-3,2e-3,1e-3", "--out", str(out)])
    assert rc == 0
    slope = float((out / "slope.txt").read_text())
    assert abs(slope - 4) < 0.3
    assert (out / "sweep_summary.csv").exists()


def test_sweep_kernel_scale(tmp_path):
    out = tmp_path / "sk"
    assert cli.main(["sweep", bundled("nonlocal_sweep.cfg"), "--param", "kernel.scale",
                     "--values", "1,0.5,0.25", "--out", str(out)]) == 0
    assert abs(float((out / "slope.txt").read_text()) - 4) < 0.3


def test_sweep_rejects_non_numeric_key(tmp_path, capsys):
    assert cli.main(["sweep", bundled("free_gaussian.cfg"), "--param", "scenario.initial",
                     "--values", "1,2", "--out", str(tmp_path)]) == 2
    assert "not a numeric" in capsys.readouterr().err


def test_verify_identities(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUT_ENV, str(tmp_path))
    rc = cli.main(["verify", "identities"])
    assert "criterion  4: PASS" in (tmp_path / "verify_identities.txt").read_text()
    out = capsys.readouterr().out
    assert rc == 0
    assert "log form vs sqrt form" in out and "criterion  3: PASS" in out


def test_verify_unknown_suite():
    with pytest.raises(SystemExit) as exc:
        cli.main(["verify", "everything"])
    assert exc.value.code == 2
