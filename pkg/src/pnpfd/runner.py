"""Execute a :class:`~pnpfd.config.RunConfig` and write its output files."""
import logging
import os
import sys
import time as _time

from . import mms
from .config import fixed_charge_field
from .elliptic import PoissonSolver
from .errors import (ConfigValidationError, InvariantViolationError,
                     NonPositiveConcentrationError, NonZeroMeanError, PNPError)
from .grid import Grid
from .io import SeriesWriter, read_field, write_field, write_manifest
from .scheme import Sources, initial_report, initial_state, step

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_INVARIANT = 4

ENERGY_SLACK = 1e-10
SHARP_SLACK = 1e-9
MASS_RTOL = 1e-12


def _error_line(exc, step_index=None, t=None):
    parts = [f"kind={exc.kind if isinstance(exc, PNPError) else type(exc).__name__}"]
    if step_index is not None:
        parts.append(f"step={step_index}")
    if t is not None:
        parts.append(f"time={t!r}")
    parts.append(f'detail="{exc}"')
    return "pnp: error " + " ".join(parts)


def _density(value, grid, base_dir, key):
    if isinstance(value, float):
        return grid.full(value)
    try:
        fgrid, values, _, _ = read_field(os.path.join(base_dir, value))
    except (OSError, ValueError) as exc:
        raise ConfigValidationError(key, str(exc)) from None
    if fgrid != grid:
        raise ConfigValidationError(key, f"file grid {fgrid} != run grid {grid}")
    return values


class InvariantMonitor:
    """Checks energy decay, the sharp dissipation inequality, mass and positivity."""

    def __init__(self, first, forced):
        self.prev = first
        self.first = first
        self.forced = forced

    def check(self, report):
        prev = self.prev
        if not report.c_min > 0:
            raise InvariantViolationError(f"c_min = {report.c_min:.6e} is not positive")
        if not self.forced:
            for name in ("mass_n", "mass_p"):
                m0 = getattr(self.first, name)
                if abs(getattr(report, name) - m0) > MASS_RTOL * abs(m0):
                    raise InvariantViolationError(
                        f"{name} drifted from {m0!r} to {getattr(report, name)!r}")
            if report.energy > prev.energy + ENERGY_SLACK * abs(prev.energy):
                raise InvariantViolationError(
                    f"energy rose from {prev.energy!r} to {report.energy!r}")
            if report.energy + report.dissipation > prev.energy + SHARP_SLACK * max(1.0, abs(prev.energy)):
                raise InvariantViolationError(
                    f"E_new + dissipation = {report.energy + report.dissipation!r} "
                    f"exceeds E_old = {prev.energy!r}")
        self.prev = report


def run_simulation(config, out_dir):
    grid = Grid(config.grid.dim, config.grid.N[0], config.grid.L)
    params = config.scheme_params()
    rho = fixed_charge_field(config.physics.rho_f, grid, config.base_dir)
    sources = Sources(rho_f=rho)
    solver = PoissonSolver(grid)
    n0 = _density(config.initial.n, grid, config.base_dir, "initial.n")
    p0 = _density(config.initial.p, grid, config.base_dir, "initial.p")
    try:
        state = initial_state(grid, n0, p0, sources, 0.0, solver)
    except NonZeroMeanError as exc:
        raise ConfigValidationError("initial", f"total charge is not neutral ({exc})") from None
    except NonPositiveConcentrationError as exc:
        raise ConfigValidationError("initial", str(exc)) from None

    nsteps = int(round(config.time.T_final / config.time.dt))
    snap_dir = os.path.join(out_dir, "snapshots")
    os.makedirs(snap_dir, exist_ok=True)
    manifest = []
    stride = config.io.snapshot_stride

    def snapshot(st, m):
        for name in ("n", "p", "phi"):
            fname = os.path.join("snapshots", f"{name}_{m:06d}.txt")
            write_field(os.path.join(out_dir, fname), grid, getattr(st, name), name, st.time)
            manifest.append((fname, st.time))

    series_path = os.path.join(out_dir, "series.csv")
    manifest.append(("series.csv", None))
    m = 0
    t0 = _time.perf_counter()
    writer = SeriesWriter(series_path)
    try:
        report = initial_report(state, sources, solver)
        writer.write(report)
        snapshot(state, 0)
        monitor = InvariantMonitor(report, sources.has_forcing)
        for m in range(1, nsteps + 1):
            new, report = step(state, params, sources, solver)
            state = new.__class__(grid, new.n, new.p, new.phi, m * params.dt)
            monitor.check(report)
            if m % config.io.report_stride == 0 or m == nsteps:
                writer.write(report)
            if (stride and m % stride == 0) or m == nsteps:
                snapshot(state, m)
            if m % 100 == 0:
                log.info("step %d/%d t=%.4g E=%.12g c_min=%.4g (%.1fs)", m, nsteps,
                         state.time, report.energy, report.c_min, _time.perf_counter() - t0)
    except PNPError as exc:
        exc.step_index = m
        exc.time = m * params.dt
        raise
    finally:
        writer.close()
        write_manifest(os.path.join(out_dir, "manifest.txt"), manifest)
    return state


def run_mms(config, out_dir, stream=None):
    stream = sys.stdout if stream is None else stream
    if config.mode == "mms-single":
        N = config.grid.N[0]
        en, ep, ephi, _ = mms.mms_errors(N, config.time.dt, config.time.T_final,
                                         config.scheme_params(dt=config.time.dt))
        rows = [mms.ConvergenceRow(h=2.0 / N, N=N, dt=config.time.dt,
                                   steps=int(round(config.time.T_final / config.time.dt)),
                                   err_n=en, err_p=ep, err_phi=ephi)]
        stem = "mms_single"
    else:
        params = config.scheme_params(dt=1.0)
        rows = mms.convergence_study(config.grid.N, config.time.T_final, params,
                                     progress=lambda r: log.info("N=%d done", r.N))
        stem = "convergence"
    table = mms.format_table(rows)
    mms.write_table_csv(os.path.join(out_dir, f"{stem}.csv"), rows)
    with open(os.path.join(out_dir, f"{stem}.txt"), "w") as fh:
        fh.write(table + "\n")
    write_manifest(os.path.join(out_dir, "manifest.txt"),
                   [(f"{stem}.csv", config.time.T_final), (f"{stem}.txt", config.time.T_final)])
    print(table, file=stream)
    return rows


def run(config, out_dir=None, threads=None, stream=None):
    """Run a configuration; returns the process exit status.

    Failures print one ``pnp: error kind=... detail="..."`` line to stderr and
    also leave it in ``error.txt`` in the output directory.
    """
    from threadpoolctl import threadpool_limits

    if out_dir is None:
        out_dir = os.path.join(config.base_dir, config.io.output_dir)
    os.makedirs(out_dir, exist_ok=True)
    code = EXIT_OK
    line = None
    try:
        with threadpool_limits(limits=threads):
            if config.mode == "simulate":
                run_simulation(config, out_dir)
            else:
                run_mms(config, out_dir, stream)
    except ConfigValidationError as exc:
        code, line = EXIT_CONFIG, _error_line(exc)
    except InvariantViolationError as exc:
        code = EXIT_INVARIANT
        line = _error_line(exc, getattr(exc, "step_index", None), getattr(exc, "time", None))
    except PNPError as exc:
        code = EXIT_SOLVER
        line = _error_line(exc, getattr(exc, "step_index", None), getattr(exc, "time", None))
    if line is not None:
        print(line, file=sys.stderr)
        with open(os.path.join(out_dir, "error.txt"), "w") as fh:
            fh.write(line + "\n")
        with open(os.path.join(out_dir, "manifest.txt"), "a") as fh:
            fh.write("error.txt\t-\n")
    return code
