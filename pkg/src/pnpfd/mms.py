"""Manufactured-solution accuracy study on ``(-1, 1)**2``.

Exact fields (with ``k = 2 pi``)::

    n   = exp(-t) sin(kx) cos(ky) + 2
    p   = exp(-t) cos(kx) sin(ky) + 2
    phi = exp(-t) sin(kx) sin(ky)

The forcing below was derived symbolically and is hard-coded; the test suite
checks it against high-order finite differences of the exact fields.
"""
import math
from dataclasses import dataclass

import numpy as np

from . import grid as g
from .elliptic import PoissonSolver
from .errors import WrongDimensionError
from .scheme import SchemeParams, Sources, advance, initial_state

K = 2.0 * math.pi
T_FINAL = 0.1


def exact_n(t, x, y):
    return np.exp(-t) * np.sin(K * x) * np.cos(K * y) + 2.0


def exact_p(t, x, y):
    return np.exp(-t) * np.cos(K * x) * np.sin(K * y) + 2.0


def exact_phi(t, x, y):
    return np.exp(-t) * np.sin(K * x) * np.sin(K * y)


def _trig(x, y):
    return np.sin(K * x), np.cos(K * x), np.sin(K * y), np.cos(K * y)


def _f_n(a, sx, cx, sy, cy):
    k2 = K * K
    n = a * sx * cy + 2.0
    return ((2.0 * k2 - 1.0) * a * sx * cy
            + k2 * a * a * cy * sy * (cx * cx - sx * sx)
            - 2.0 * k2 * a * n * sx * sy)


def _f_p(a, sx, cx, sy, cy):
    k2 = K * K
    p = a * cx * sy + 2.0
    return ((2.0 * k2 - 1.0) * a * cx * sy
            - k2 * a * a * sx * cx * (cy * cy - sy * sy)
            + 2.0 * k2 * a * p * sx * sy)


def _rho(a, sx, cx, sy, cy):
    return 2.0 * K * K * a * sx * sy - a * (cx * sy - sx * cy)


def source_n(t, x, y):
    """``dn/dt - div(grad n - n grad phi)``."""
    return _f_n(np.exp(-t), *_trig(x, y))


def source_p(t, x, y):
    """``dp/dt - div(grad p + p grad phi)``."""
    return _f_p(np.exp(-t), *_trig(x, y))


def fixed_charge(t, x, y):
    """``-Delta phi - (p - n)``."""
    return _rho(np.exp(-t), *_trig(x, y))


def _check_grid(grid):
    if grid.dim != 2:
        raise WrongDimensionError(f"manufactured case is 2D, grid has dim={grid.dim}")
    if grid.L != 1.0:
        raise ValueError(f"manufactured case lives on (-1, 1)^2, grid has L={grid.L}")


def exact_state(t, grid):
    """Exact ``(n, p, phi)`` sampled at cell centers."""
    _check_grid(grid)
    x, y = grid.coords()
    return exact_n(t, x, y), exact_p(t, x, y), exact_phi(t, x, y)


def source_terms(t, grid):
    """``(f_n, f_p, rho_f)`` sampled at cell centers."""
    _check_grid(grid)
    x, y = grid.coords()
    return source_n(t, x, y), source_p(t, x, y), fixed_charge(t, x, y)


@dataclass(frozen=True)
class ManufacturedCase:
    """The manufactured problem bound to one grid."""

    grid: g.Grid

    def __post_init__(self):
        _check_grid(self.grid)

    def exact(self, t):
        return exact_state(t, self.grid)

    def sources(self):
        trig = _trig(*self.grid.coords())
        return Sources(
            f_n=lambda t: _f_n(np.exp(-t), *trig),
            f_p=lambda t: _f_p(np.exp(-t), *trig),
            rho_f=lambda t: _rho(np.exp(-t), *trig),
        )

    def initial_state(self, solver=None):
        n0, p0, _ = self.exact(0.0)
        return initial_state(self.grid, n0, p0, self.sources(), 0.0, solver)


@dataclass(frozen=True)
class ConvergenceRow:
    h: float
    N: int
    dt: float
    steps: int
    err_n: float
    err_p: float
    err_phi: float
    order_n: float = None
    order_p: float = None
    order_phi: float = None


def mms_errors(N, dt=None, t_final=T_FINAL, params=None):
    """Run the manufactured problem on an ``N x N`` grid and measure l-inf errors.

    ``dt`` defaults to ``h**2``. Returns ``(err_n, err_p, err_phi, state)``.
    """
    grid = g.Grid(2, N, 1.0)
    if dt is None:
        dt = grid.h ** 2
    if params is None:
        params = SchemeParams(dt=dt)
    else:
        params = SchemeParams(**{**params.__dict__, "dt": dt, "D": 1.0})
    case = ManufacturedCase(grid)
    solver = PoissonSolver(grid)
    state = case.initial_state(solver)
    state, _ = advance(state, params, t_final, case.sources(), solver, report=False)
    n_ex, p_ex, phi_ex = case.exact(state.time)
    phi = state.phi - state.phi.mean()
    return (float(np.max(np.abs(state.n - n_ex))),
            float(np.max(np.abs(state.p - p_ex))),
            float(np.max(np.abs(phi - (phi_ex - phi_ex.mean())))),
            state)


def _order(prev, cur, ratio):
    return math.log(prev / cur) / math.log(ratio)


def convergence_study(N_list=(20, 40, 80, 160), t_final=T_FINAL, params=None,
                      dt_rule=None, progress=None):
    """l-inf errors and observed orders over a sequence of grids.

    Parameters
    ----------
    N_list : sequence of int
        Cells per axis; ``h = 2 / N``.
    dt_rule : callable, optional
        ``h -> dt``; defaults to ``h**2``.
    progress : callable, optional
        Called with each finished :class:`ConvergenceRow`.
    """
    dt_rule = (lambda h: h * h) if dt_rule is None else dt_rule
    rows = []
    for N in N_list:
        h = 2.0 / N
        dt = dt_rule(h)
        en, ep, ephi, state = mms_errors(N, dt, t_final, params)
        row = ConvergenceRow(h=h, N=N, dt=dt, steps=int(round(t_final / dt)),
                             err_n=en, err_p=ep, err_phi=ephi)
        if rows:
            prev = rows[-1]
            r = prev.h / h
            row = ConvergenceRow(**{**row.__dict__,
                                    "order_n": _order(prev.err_n, en, r),
                                    "order_p": _order(prev.err_p, ep, r),
                                    "order_phi": _order(prev.err_phi, ephi, r)})
        rows.append(row)
        if progress is not None:
            progress(row)
    return rows


def temporal_order(N=32, dts=(0.02, 0.01, 0.005, 0.0025), t_final=T_FINAL, params=None):
    """Observed temporal orders at a fixed grid.

    The spatial error is common to every run on one grid, so the order is
    taken from successive differences ``||u_dt - u_{dt/2}||_inf``.

    Returns
    -------
    orders : list of float
    diffs : list of float
    """
    sols = []
    for dt in dts:
        *_, state = mms_errors(N, dt, t_final, params)
        sols.append(np.concatenate([state.n.ravel(), state.p.ravel()]))
    diffs = [float(np.max(np.abs(a - b))) for a, b in zip(sols, sols[1:])]
    ratios = [dts[i] / dts[i + 1] for i in range(len(dts) - 1)]
    orders = [_order(diffs[i], diffs[i + 1], ratios[i]) for i in range(len(diffs) - 1)]
    return orders, diffs


def _fmt_order(o):
    return "-" if o is None else f"{o:.2f}"


def format_table(rows):
    """Aligned plain-text table: h, then error/order for p, n and psi."""
    head = f"{'h':>8}  {'linf err p':>10}  {'order':>5}  {'linf err n':>10}  {'order':>5}  " \
           f"{'linf err psi':>12}  {'order':>5}"
    lines = [head, "-" * len(head)]
    for r in rows:
        lines.append(f"{r.h:>8.4g}  {r.err_p:>10.3E}  {_fmt_order(r.order_p):>5}  "
                     f"{r.err_n:>10.3E}  {_fmt_order(r.order_n):>5}  "
                     f"{r.err_phi:>12.3E}  {_fmt_order(r.order_phi):>5}")
    return "\n".join(lines)


TABLE_COLUMNS = ("h", "err_p", "order_p", "err_n", "order_n", "err_phi", "order_phi")


def write_table_csv(path, rows):
    import csv

    from .io import fmt
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TABLE_COLUMNS)
        for r in rows:
            w.writerow(["" if getattr(r, c) is None else fmt(getattr(r, c))
                        for c in TABLE_COLUMNS])
