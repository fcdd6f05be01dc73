"""Run configuration: a flat ``section.key = value`` text format.

Grammar, one assignment per line::

    # comment
    mode = simulate              # simulate | mms-single | mms-convergence
    grid.N = 128                 # a list [20, 40, 80, 160] for mms-convergence
    time.dt = 1e-3

Keys outside the table below are rejected. ``initial.case`` selects a
builtin experiment whose defaults are applied before explicit keys.
"""
import ast
import math
import os
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigParseError, ConfigValidationError

MODES = ("simulate", "mms-single", "mms-convergence")
CASES = ("none", "screening", "mms")

# key -> converter
_KEYS = {
    "mode": str,
    "grid.dim": int,
    "grid.N": "intlist",
    "grid.L": float,
    "physics.D": float,
    "physics.rho_f": str,
    "time.dt": float,
    "time.T_final": float,
    "scheme.omega_r": float,
    "scheme.picard_tol": float,
    "scheme.picard_max": int,
    "scheme.linear_tol": float,
    "scheme.preconditioner": str,
    "io.output_dir": str,
    "io.snapshot_stride": int,
    "io.report_stride": int,
    "initial.case": str,
    "initial.n": str,
    "initial.p": str,
}

SCREENING_DEFAULTS = {
    "grid.N": [128],
    "time.dt": 1e-3,
    "time.T_final": 5.0,
    "physics.rho_f": "four-gaussians",
    "initial.n": "0.1",
    "initial.p": "0.1",
}
MMS_N_LIST = [20, 40, 80, 160]


@dataclass(frozen=True)
class Gaussian:
    amplitude: float
    x: float
    y: float
    width: float


@dataclass(frozen=True)
class FixedChargeSpec:
    """``kind`` is ``none``, ``four-gaussians``, ``gaussians`` or ``file``."""

    kind: str = "none"
    gaussians: tuple = ()
    path: str = None


@dataclass(frozen=True)
class GridSpec:
    dim: int = 2
    N: tuple = ()
    L: float = 1.0


@dataclass(frozen=True)
class PhysicsSpec:
    D: float = 1.0
    rho_f: FixedChargeSpec = field(default_factory=FixedChargeSpec)


@dataclass(frozen=True)
class TimeSpec:
    dt: float = None
    T_final: float = 0.0


@dataclass(frozen=True)
class SchemeSpec:
    omega_r: float = 0.2
    picard_tol: float = 1e-10
    picard_max: int = 500
    linear_tol: float = 1e-12
    preconditioner: str = "jacobi"


@dataclass(frozen=True)
class IOSpec:
    output_dir: str = "pnp-out"
    snapshot_stride: int = 0
    report_stride: int = 1


@dataclass(frozen=True)
class InitialSpec:
    """Each density is a positive constant (``float``) or a snapshot path."""

    case: str = "none"
    n: object = 0.1
    p: object = 0.1


@dataclass(frozen=True)
class RunConfig:
    mode: str = "simulate"
    grid: GridSpec = field(default_factory=GridSpec)
    physics: PhysicsSpec = field(default_factory=PhysicsSpec)
    time: TimeSpec = field(default_factory=TimeSpec)
    scheme: SchemeSpec = field(default_factory=SchemeSpec)
    io: IOSpec = field(default_factory=IOSpec)
    initial: InitialSpec = field(default_factory=InitialSpec)
    base_dir: str = "."

    def scheme_params(self, dt=None):
        from .scheme import SchemeParams
        pre = None if self.scheme.preconditioner == "none" else self.scheme.preconditioner
        return SchemeParams(dt=self.time.dt if dt is None else dt, D=self.physics.D,
                            omega_r=self.scheme.omega_r, picard_tol=self.scheme.picard_tol,
                            picard_max=self.scheme.picard_max,
                            linear_tol=self.scheme.linear_tol, preconditioner=pre)


def _split_lines(text):
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigParseError(lineno, f"expected 'key = value', got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key or not value:
            raise ConfigParseError(lineno, "empty key or value")
        if key not in _KEYS:
            raise ConfigParseError(lineno, f"unknown key {key!r}")
        if key in raw:
            raise ConfigParseError(lineno, f"duplicate key {key!r}")
        raw[key] = (lineno, value)
    return raw


def _convert(key, lineno, value):
    kind = _KEYS[key]
    try:
        if kind == "intlist":
            parsed = ast.literal_eval(value)
            items = list(parsed) if isinstance(parsed, (list, tuple)) else [parsed]
            if not all(isinstance(v, int) and not isinstance(v, bool) for v in items):
                raise ValueError(value)
            return items
        if kind is int:
            v = float(value)
            if v != int(v):
                raise ValueError(value)
            return int(v)
        if kind is float:
            v = float(value)
            if not math.isfinite(v):
                raise ValueError(value)
            return v
        return value
    except (ValueError, SyntaxError):
        raise ConfigParseError(lineno, f"cannot read {key} = {value!r}") from None


def parse_rho_f(text):
    """Parse ``none``, ``four-gaussians``, ``file:PATH`` or
    ``gaussians: a x y w; a x y w; ...``."""
    text = text.strip()
    if text in ("none", "four-gaussians"):
        return FixedChargeSpec(text)
    if text.startswith("file:"):
        return FixedChargeSpec("file", path=text[5:].strip())
    if text.startswith("gaussians:"):
        bumps = []
        for chunk in text[len("gaussians:"):].split(";"):
            if not chunk.strip():
                continue
            vals = chunk.replace(",", " ").split()
            if len(vals) != 4:
                raise ConfigValidationError("physics.rho_f",
                                            f"gaussian needs 4 numbers, got {chunk.strip()!r}")
            a, x, y, w = map(float, vals)
            if not w > 0:
                raise ConfigValidationError("physics.rho_f", "gaussian width must be > 0")
            bumps.append(Gaussian(a, x, y, w))
        if not bumps:
            raise ConfigValidationError("physics.rho_f", "empty gaussian list")
        return FixedChargeSpec("gaussians", gaussians=tuple(bumps))
    raise ConfigValidationError("physics.rho_f", f"unrecognised fixed charge {text!r}")


def _density(key, text):
    try:
        v = float(text)
    except ValueError:
        path = text[5:].strip() if text.startswith("file:") else text
        return path
    if not v > 0:
        raise ConfigValidationError(key, "constant concentration must be > 0")
    return v


def parse_config(text, base_dir="."):
    """Parse and validate configuration text.

    Raises
    ------
    ConfigParseError
        Malformed line or unknown key (carries the line number).
    ConfigValidationError
        A value violates its range or the mode's requirements.
    """
    raw = _split_lines(text)
    vals = {k: _convert(k, ln, v) for k, (ln, v) in raw.items()}

    mode = vals.get("mode", "simulate")
    if mode not in MODES:
        raise ConfigValidationError("mode", f"must be one of {MODES}")
    case = vals.get("initial.case", "mms" if mode.startswith("mms") else "none")
    if case not in CASES:
        raise ConfigValidationError("initial.case", f"must be one of {CASES}")
    if case == "screening":
        if mode != "simulate":
            raise ConfigValidationError("initial.case", "screening runs in simulate mode")
        vals = {**SCREENING_DEFAULTS, **vals}
    if mode.startswith("mms"):
        if case != "mms":
            raise ConfigValidationError("initial.case", f"{mode} requires case mms")
        for k in ("physics.rho_f", "initial.n", "initial.p"):
            if k in vals:
                raise ConfigValidationError(k, f"fixed by the manufactured case in {mode}")
        if vals.get("physics.D", 1.0) != 1.0:
            raise ConfigValidationError("physics.D", "manufactured case uses D = 1")
        if vals.get("grid.L", 1.0) != 1.0 or vals.get("grid.dim", 2) != 2:
            raise ConfigValidationError("grid", "manufactured case lives on (-1, 1)^2")
        vals.setdefault("time.T_final", 0.1)
        vals.setdefault("grid.N", MMS_N_LIST if mode == "mms-convergence" else [20])
        if mode == "mms-convergence" and "time.dt" in vals:
            raise ConfigValidationError("time.dt", "mms-convergence always uses dt = h^2")
    elif case == "mms":
        raise ConfigValidationError("initial.case", "case mms requires an mms mode")

    Ns = vals.get("grid.N")
    if Ns is None:
        raise ConfigValidationError("grid.N", "required")
    if mode != "mms-convergence" and len(Ns) != 1:
        raise ConfigValidationError("grid.N", f"{mode} takes a single N")
    if any(N < 2 for N in Ns):
        raise ConfigValidationError("grid.N", "must be >= 2")
    grid = GridSpec(dim=vals.get("grid.dim", 2), N=tuple(Ns), L=vals.get("grid.L", 1.0))
    if grid.dim not in (2, 3):
        raise ConfigValidationError("grid.dim", "must be 2 or 3")
    if not grid.L > 0:
        raise ConfigValidationError("grid.L", "must be > 0")

    rho = parse_rho_f(vals.get("physics.rho_f", "none"))
    if rho.kind in ("four-gaussians", "gaussians") and grid.dim != 2:
        raise ConfigValidationError("physics.rho_f", "gaussian fixed charges are 2D")
    physics = PhysicsSpec(D=vals.get("physics.D", 1.0), rho_f=rho)
    if not physics.D > 0:
        raise ConfigValidationError("physics.D", "must be > 0")

    dt = vals.get("time.dt")
    if dt is None and mode == "mms-single":
        dt = (2.0 * grid.L / Ns[0]) ** 2
    if dt is None and mode == "simulate":
        raise ConfigValidationError("time.dt", "required")
    if dt is not None and not dt > 0:
        raise ConfigValidationError("time.dt", "must be > 0")
    tfin = vals.get("time.T_final", 0.0)
    if tfin < 0:
        raise ConfigValidationError("time.T_final", "must be >= 0")
    if dt is not None:
        steps = round(tfin / dt)
        if abs(steps * dt - tfin) > 1e-9 * max(1.0, tfin):
            raise ConfigValidationError("time.T_final", "must be a whole number of time steps")
    time = TimeSpec(dt=dt, T_final=tfin)

    scheme = SchemeSpec(**{k.split(".")[1]: v for k, v in vals.items()
                           if k.startswith("scheme.")})
    if not 0 < scheme.omega_r < 1:
        raise ConfigValidationError("scheme.omega_r", "must lie strictly in (0, 1)")
    for k in ("picard_tol", "linear_tol"):
        if not getattr(scheme, k) > 0:
            raise ConfigValidationError(f"scheme.{k}", "must be > 0")
    if scheme.picard_max < 1:
        raise ConfigValidationError("scheme.picard_max", "must be >= 1")
    if scheme.preconditioner not in ("jacobi", "none"):
        raise ConfigValidationError("scheme.preconditioner", "must be jacobi or none")

    io = IOSpec(**{k.split(".")[1]: v for k, v in vals.items() if k.startswith("io.")})
    if io.snapshot_stride < 0:
        raise ConfigValidationError("io.snapshot_stride", "must be >= 0")
    if io.report_stride < 1:
        raise ConfigValidationError("io.report_stride", "must be >= 1")

    initial = InitialSpec(case=case,
                          n=_density("initial.n", vals.get("initial.n", "0.1")),
                          p=_density("initial.p", vals.get("initial.p", "0.1")))
    return RunConfig(mode=mode, grid=grid, physics=physics, time=time, scheme=scheme,
                     io=io, initial=initial, base_dir=base_dir)


def load_config(path):
    with open(path) as fh:
        text = fh.read()
    return parse_config(text, base_dir=os.path.dirname(os.path.abspath(path)))


def four_gaussians(x, y):
    """Two positive and two negative bumps centred at ``(+-1/2, +-1/2)``."""
    return (np.exp(-100.0 * ((x + 0.5) ** 2 + (y + 0.5) ** 2))
            - np.exp(-100.0 * ((x + 0.5) ** 2 + (y - 0.5) ** 2))
            - np.exp(-100.0 * ((x - 0.5) ** 2 + (y + 0.5) ** 2))
            + np.exp(-100.0 * ((x - 0.5) ** 2 + (y - 0.5) ** 2)))


def fixed_charge_field(spec, grid, base_dir="."):
    """Evaluate a :class:`FixedChargeSpec` on ``grid`` (``None`` for no charge).

    A Gaussian with width ``w`` contributes ``a * exp(-r**2 / w**2)``.
    """
    from .io import read_field
    if spec.kind == "none":
        return None
    if spec.kind == "file":
        try:
            fgrid, values, _, _ = read_field(os.path.join(base_dir, spec.path))
        except (OSError, ValueError) as exc:
            raise ConfigValidationError("physics.rho_f", str(exc)) from None
        if fgrid != grid:
            raise ConfigValidationError("physics.rho_f", f"file grid {fgrid} != run grid {grid}")
        return values
    x, y = grid.coords()
    if spec.kind == "four-gaussians":
        return four_gaussians(x, y)
    out = np.zeros(grid.shape)
    for b in spec.gaussians:
        out += b.amplitude * np.exp(-((x - b.x) ** 2 + (y - b.y) ** 2) / b.width ** 2)
    return out


def with_output_dir(config, out):
    return replace(config, io=replace(config.io, output_dir=out))
