import os
import subprocess
import sys

import numpy as np
import pytest

from pnpfd import cli, runner
from pnpfd.config import (MMS_N_LIST, fixed_charge_field, four_gaussians, load_config,
                          parse_config)
from pnpfd.errors import ConfigParseError, ConfigValidationError
from pnpfd.grid import Grid
from pnpfd.io import read_field, read_series, write_field


SMALL = """\
# small screening-like run
grid.N = 8
time.dt = 0.01
time.T_final = 0.05
physics.rho_f = gaussians: 1 -0.5 0 0.3; -1 0.5 0 0.3
io.snapshot_stride = 2
"""


def write(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_minimal_config_defaults():
    cfg = parse_config("grid.N = 16\ntime.dt = 0.01\n")
    assert cfg.mode == "simulate"
    assert cfg.scheme.omega_r == 0.2 and cfg.scheme.picard_tol == 1e-10
    assert cfg.physics.D == 1.0 and cfg.grid.dim == 2 and cfg.grid.L == 1.0
    assert cfg.time.T_final == 0.0 and cfg.initial.n == 0.1
    params = cfg.scheme_params()
    assert params.dt == 0.01 and params.preconditioner == "jacobi"


def test_omega_out_of_range():
    with pytest.raises(ConfigValidationError) as exc:
        parse_config("grid.N = 16\ntime.dt = 0.01\nscheme.omega_r = 1.5\n")
    assert exc.value.key == "scheme.omega_r"


def test_mms_convergence_grid_list():
    cfg = parse_config("mode = mms-convergence\ngrid.N = [20, 40, 80, 160]\n")
    hs = [2 * cfg.grid.L / N for N in cfg.grid.N]
    assert hs == pytest.approx([0.1, 0.05, 0.025, 0.0125])
    assert cfg.time.T_final == 0.1
    assert parse_config("mode = mms-convergence\n").grid.N == tuple(MMS_N_LIST)


def test_mms_single_dt_default():
    cfg = parse_config("mode = mms-single\ngrid.N = 20\n")
    assert cfg.time.dt == pytest.approx(0.01)


@pytest.mark.parametrize("text,line", [
    ("grid.N = 8\nbogus.key = 1\n", 2),
    ("grid.N = 8\n\n# c\ngrid.N = 9\n", 4),
    ("grid.N 8\n", 1),
    ("time.dt = fast\n", 1),
    ("grid.N = [8, 9.5]\n", 1),
    ("scheme.picard_max = 2.5\n", 1),
])
def test_parse_errors_carry_line(text, line):
    with pytest.raises(ConfigParseError) as exc:
        parse_config(text)
    assert exc.value.line == line and exc.value.kind == "ParseError"


@pytest.mark.parametrize("text,key", [
    ("grid.N = 8\n", "time.dt"),
    ("time.dt = 0.1\n", "grid.N"),
    ("grid.N = [8, 16]\ntime.dt = 0.1\n", "grid.N"),
    ("grid.N = 8\ntime.dt = 0.1\ngrid.dim = 4\n", "grid.dim"),
    ("grid.N = 8\ntime.dt = -0.1\n", "time.dt"),
    ("grid.N = 8\ntime.dt = 0.3\ntime.T_final = 1\n", "time.T_final"),
    ("grid.N = 8\ntime.dt = 0.1\nphysics.D = 0\n", "physics.D"),
    ("grid.N = 8\ntime.dt = 0.1\nscheme.preconditioner = ilu\n", "scheme.preconditioner"),
    ("grid.N = 8\ntime.dt = 0.1\ninitial.n = -1\n", "initial.n"),
    ("grid.N = 8\ntime.dt = 0.1\nphysics.rho_f = blob\n", "physics.rho_f"),
    ("mode = mms-convergence\ntime.dt = 0.1\n", "time.dt"),
    ("mode = mms-single\nphysics.D = 2\n", "physics.D"),
    ("mode = fast\n", "mode"),
    ("initial.case = mms\ngrid.N = 8\ntime.dt = 0.1\n", "initial.case"),
])
def test_validation_errors(text, key):
    with pytest.raises(ConfigValidationError) as exc:
        parse_config(text)
    assert exc.value.key == key


def test_screening_defaults():
    cfg = parse_config("initial.case = screening\n")
    assert cfg.grid.N == (128,) and cfg.time.dt == 1e-3 and cfg.time.T_final == 5.0
    assert cfg.physics.rho_f.kind == "four-gaussians"
    assert cfg.initial.n == cfg.initial.p == 0.1
    cfg = parse_config("initial.case = screening\ngrid.N = 32\n")
    assert cfg.grid.N == (32,)


def test_fixed_charge_fields(tmp_path):
    grid = Grid(2, 16)
    x, y = grid.coords()
    rho = fixed_charge_field(parse_config("initial.case = screening\n").physics.rho_f, grid)
    np.testing.assert_array_equal(rho, four_gaussians(x, y))
    assert abs(rho.mean()) < 1e-15 and rho.max() > 0.4
    spec = parse_config(SMALL).physics.rho_f
    assert len(spec.gaussians) == 2 and spec.gaussians[1].amplitude == -1
    expect = (np.exp(-((x + 0.5) ** 2 + y ** 2) / 0.09)
              - np.exp(-((x - 0.5) ** 2 + y ** 2) / 0.09))
    np.testing.assert_allclose(fixed_charge_field(spec, grid), expect, rtol=1e-14, atol=1e-16)
    write_field(tmp_path / "rho.txt", grid, rho, "rho", 0.0)
    cfg = parse_config("grid.N = 16\ntime.dt = 0.1\nphysics.rho_f = file:rho.txt\n",
                       base_dir=str(tmp_path))
    np.testing.assert_array_equal(fixed_charge_field(cfg.physics.rho_f, grid, cfg.base_dir), rho)
    with pytest.raises(ConfigValidationError):
        fixed_charge_field(cfg.physics.rho_f, Grid(2, 8), cfg.base_dir)


def test_load_config_base_dir(tmp_path):
    cfg = load_config(write(tmp_path, SMALL))
    assert cfg.base_dir == str(tmp_path)


def test_run_writes_outputs(tmp_path):
    path = write(tmp_path, SMALL + "io.output_dir = out\n")
    assert cli.main(["run", path]) == 0
    out = tmp_path / "out"
    series = read_series(out / "series.csv")
    assert len(series["time"]) == 6
    assert np.all(np.diff(series["energy"]) <= 0)
    assert np.all(series["c_min"] > 0)
    assert np.allclose(series["mass_p"], 0.4, rtol=1e-13, atol=0)
    snaps = sorted(os.listdir(out / "snapshots"))
    # initial, stride 2 and final
    assert snaps == sorted(f"{s}_{m:06d}.txt" for s in ("n", "p", "phi") for m in (0, 2, 4, 5))
    grid, n, name, t = read_field(out / "snapshots" / "n_000005.txt")
    assert name == "n" and t == pytest.approx(0.05) and grid == Grid(2, 8)
    manifest = (out / "manifest.txt").read_text().splitlines()
    assert manifest[0] == "series.csv\t-" and len(manifest) == 1 + 12


def test_run_out_flag_and_zero_steps(tmp_path):
    path = write(tmp_path, "grid.N = 8\ntime.dt = 0.01\n")
    out = tmp_path / "elsewhere"
    assert cli.main(["run", path, "--out", str(out), "--threads", "1"]) == 0
    series = read_series(out / "series.csv")
    assert list(series["time"]) == [0.0] and series["dissipation"][0] == 0.0
    assert not (tmp_path / "pnp-out").exists()


def test_determinism_single_thread(tmp_path):
    path = write(tmp_path, SMALL)
    for d in ("a", "b"):
        assert cli.main(["run", path, "--threads", "1", "--out", str(tmp_path / d)]) == 0
    for rel in ("series.csv", "manifest.txt", "snapshots/phi_000005.txt"):
        assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()


def test_config_error_exit_code(tmp_path, capsys):
    path = write(tmp_path, "grid.N = 8\nwhat = 1\n")
    assert cli.main(["run", path]) == 2
    err = capsys.readouterr().err
    assert err.startswith("pnp: error kind=ParseError") and "line 2" in err
    assert cli.main(["run", str(tmp_path / "missing.cfg")]) == 2


def test_non_neutral_setup_is_config_error(tmp_path, capsys):
    path = write(tmp_path, "grid.N = 8\ntime.dt = 0.01\ninitial.p = 0.2\n")
    assert cli.main(["run", path, "--out", str(tmp_path / "o")]) == 2
    assert "kind=ValidationError" in capsys.readouterr().err


def test_solver_failure_exit_code(tmp_path, capsys):
    path = write(tmp_path, SMALL + "scheme.picard_max = 1\n")
    out = tmp_path / "o"
    assert cli.main(["run", path, "--out", str(out)]) == 3
    err = capsys.readouterr().err
    assert "kind=PicardNoConvergence step=1 time=0.01" in err
    assert (out / "error.txt").read_text().strip() == err.strip()
    # the series written so far is complete and readable
    assert len(read_series(out / "series.csv")["time"]) == 1
    assert (out / "manifest.txt").read_text().splitlines()[-1] == "error.txt\t-"


def test_invariant_violation_exit_code(tmp_path, monkeypatch, capsys):
    from dataclasses import replace

    real = runner.step

    def leaky(*args, **kw):
        new, rep = real(*args, **kw)
        return new, replace(rep, energy=rep.energy + 1.0)

    monkeypatch.setattr(runner, "step", leaky)
    path = write(tmp_path, SMALL)
    assert cli.main(["run", path, "--out", str(tmp_path / "o")]) == 4
    assert "kind=InvariantViolation step=1" in capsys.readouterr().err


def test_invariant_monitor():
    from pnpfd.diagnostics import StepReport
    first = StepReport(0.0, 1.0, 0.4, 0.4, 0.1, 0.0, 0, 0.0)
    mon = runner.InvariantMonitor(first, forced=False)
    mon.check(StepReport(0.1, 0.9, 0.4, 0.4, 0.1, 0.05, 3, 0.0))
    for bad in (StepReport(0.2, 0.9, 0.4, 0.4, 0.0, 0.0, 3, 0.0),
                StepReport(0.2, 0.9, 0.4 * (1 + 1e-11), 0.4, 0.1, 0.0, 3, 0.0),
                StepReport(0.2, 0.8, 0.4, 0.4, 0.1, 0.2, 3, 0.0)):
        with pytest.raises(Exception) as exc:
            mon.check(bad)
        assert exc.value.kind == "InvariantViolation"


def test_mms_single_run(tmp_path, capsys):
    path = write(tmp_path, "mode = mms-single\ngrid.N = 10\ntime.T_final = 0.04\n")
    assert cli.main(["run", path, "--out", str(tmp_path / "o")]) == 0
    assert "linf err p" in capsys.readouterr().out
    text = (tmp_path / "o" / "mms_single.csv").read_text().splitlines()
    assert text[0] == "h,err_p,order_p,err_n,order_n,err_phi,order_phi"
    assert text[1].startswith("0.20000000000000001,")


def test_mms_table_command(tmp_path, capsys):
    path = write(tmp_path, "mode = mms-convergence\ngrid.N = [10, 20]\ntime.T_final = 0.04\n")
    assert cli.main(["mms-table", path, "--out", str(tmp_path / "o")]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 4
    rows = (tmp_path / "o" / "convergence.csv").read_text().splitlines()
    assert len(rows) == 3
    sim = write(tmp_path, SMALL, "sim.cfg")
    assert cli.main(["mms-table", sim]) == 2


def test_check_command(capsys):
    assert cli.main(["check"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert len(out) >= 5 and all(line.startswith("PASS") for line in out)


def test_console_script(tmp_path):
    res = subprocess.run([sys.executable, "-m", "pnpfd.cli", "check"], capture_output=True,
                         text=True, cwd=tmp_path)
    assert res.returncode == 0 and "FAIL" not in res.stdout
    res = subprocess.run([sys.executable, "-m", "pnpfd.cli", "run", "nope.cfg"],
                         capture_output=True, text=True, cwd=tmp_path)
    assert res.returncode == 2 and res.stderr.startswith("pnp: error")
