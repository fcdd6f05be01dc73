"""Semi-implicit positivity-preserving time step for the PNP system.

One step solves, for the new densities ``n``, ``p``::

    (n - n_old) / dt = div_h(M_n grad_h mu_n) + f_n
    (p - p_old) / dt = div_h(M_p grad_h mu_p) + f_p
    mu_n = ln n - phi,   mu_p = ln p + phi,   -Delta_h phi = p - n + rho_f

with face mobilities ``M_n = A(n_old)``, ``M_p = D A(p_old)`` frozen at the
old time level. The nonlinear system is solved by a relaxed linearized
fixed-point iteration whose two linear stages are SPD after the substitution
``w = n_star / n_k``.
"""
from dataclasses import dataclass, replace

import numpy as np

from . import grid as g
from .diagnostics import StepReport, discrete_energy, dissipation, observables
from .elliptic import EllipticSystem, PoissonSolver, spd_solve, stiffness_matrix
from .errors import (NonPositiveConcentrationError, PicardNoConvergenceError,
                     PositivityLossError)


@dataclass(frozen=True)
class SchemeParams:
    """Time step, diffusivity ratio and iteration controls."""

    dt: float
    D: float = 1.0
    omega_r: float = 0.2
    picard_tol: float = 1e-10
    picard_max: int = 500
    linear_tol: float = 1e-12
    linear_max: int = 10_000
    preconditioner: str = "jacobi"

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if not self.D > 0:
            raise ValueError(f"D must be > 0, got {self.D}")
        if not 0 < self.omega_r < 1:
            raise ValueError(f"omega_r must lie in (0, 1), got {self.omega_r}")
        if not self.picard_tol > 0 or not self.linear_tol > 0:
            raise ValueError("tolerances must be > 0")
        if self.picard_max < 1 or self.linear_max < 1:
            raise ValueError("iteration caps must be >= 1")


class Sources:
    """Forcing for the Nernst-Planck equations and the fixed charge.

    Each of ``f_n``, ``f_p`` and ``rho_f`` may be ``None`` (zero), an array on
    the grid (constant in time) or a callable ``t -> array``.
    """

    def __init__(self, f_n=None, f_p=None, rho_f=None):
        self.f_n = f_n
        self.f_p = f_p
        self.rho_f = rho_f

    @staticmethod
    def _eval(src, t):
        if src is None:
            return None
        return np.asarray(src(t) if callable(src) else src, dtype=float)

    def forcing(self, t):
        return self._eval(self.f_n, t), self._eval(self.f_p, t)

    def rho(self, t):
        return self._eval(self.rho_f, t)

    @property
    def has_forcing(self):
        return self.f_n is not None or self.f_p is not None


@dataclass(frozen=True)
class State:
    grid: g.Grid
    n: np.ndarray
    p: np.ndarray
    phi: np.ndarray
    time: float = 0.0


def _require_positive(c, name):
    if not np.all(c > 0):
        idx = np.unravel_index(np.argmin(c), c.shape)
        raise NonPositiveConcentrationError(
            f"{name}{list(map(int, idx))} = {c[idx]:.6e} is not positive")


def face_mobility(grid, c, scale=1.0):
    """``scale`` times the two-cell arithmetic mean of ``c`` on every face."""
    c = grid.check_cell(c)
    _require_positive(c, "c")
    return scale * g.average_to_faces(grid, c)


def _potential(grid, n, p, rho_f, solver):
    charge = p - n
    scale = g.norm_l2(grid, n) + g.norm_l2(grid, p)
    if rho_f is not None:
        charge = charge + rho_f
        scale += g.norm_l2(grid, rho_f)
    return solver.solve(charge, scale=scale)


def chemical_potentials(grid, n, p, solver=None, rho_f=None):
    """Chemical potentials and the potential they imply.

    Returns
    -------
    mu_n, mu_p, phi : ndarray
        ``phi`` solves ``-Delta_h phi = p - n (+ rho_f)`` with zero mean,
        ``mu_n = ln n - phi`` and ``mu_p = ln p + phi``.
    """
    n = grid.check_cell(n, "n")
    p = grid.check_cell(p, "p")
    _require_positive(n, "n")
    _require_positive(p, "p")
    solver = PoissonSolver(grid) if solver is None else solver
    phi = _potential(grid, n, p, rho_f, solver)
    return np.log(n) - phi, np.log(p) + phi, phi


def initial_state(grid, n, p, sources=None, time=0.0, solver=None):
    """Build a :class:`State` from densities, computing the potential."""
    n = grid.check_cell(n, "n").copy()
    p = grid.check_cell(p, "p").copy()
    _require_positive(n, "n")
    _require_positive(p, "p")
    solver = PoissonSolver(grid) if solver is None else solver
    rho = None if sources is None else sources.rho(time)
    return State(grid, n, p, _potential(grid, n, p, rho, solver), float(time))


def picard_iteration(state, params, sources=None, solver=None, trace=None,
                     omega_r=None):
    """Relaxed linearized iteration for one time step.

    Starting from the old densities, each sweep solves the two SPD systems
    for the starred densities, blends them with the current iterate using
    ``omega_r``, and refreshes the potential from the blended densities.

    Parameters
    ----------
    trace : callable, optional
        Called as ``trace(k, increment, linear_iterations)`` after every sweep.
    omega_r : float, optional
        Overrides ``params.omega_r``.

    Returns
    -------
    n, p, phi : ndarray
    iterations : int
    linear_iterations : int
        Total CG iterations over all sweeps.
    """
    grid = state.grid
    solver = PoissonSolver(grid) if solver is None else solver
    omega = params.omega_r if omega_r is None else omega_r
    dt = params.dt
    t1 = state.time + dt
    sources = Sources() if sources is None else sources
    f_n, f_p = sources.forcing(t1)
    rho = sources.rho(t1)

    n_old, p_old = state.n, state.p
    mob_n = face_mobility(grid, n_old, 1.0)
    mob_p = face_mobility(grid, p_old, params.D)
    base_n = n_old if f_n is None else n_old + dt * f_n
    base_p = p_old if f_p is None else p_old + dt * f_p
    target_n, target_p = float(np.mean(base_n)), float(np.mean(base_p))
    stiff_n = stiffness_matrix(grid, mob_n)
    stiff_p = stiffness_matrix(grid, mob_p)

    # start on the right mass so relaxation cannot leave a mean defect behind;
    # without forcing the factors are exactly 1
    nk = n_old * (target_n / np.mean(n_old)) if f_n is not None else n_old
    pk = p_old * (target_p / np.mean(p_old)) if f_p is not None else p_old
    phik = _potential(grid, nk, pk, rho, solver)
    guesses = [np.ones(grid.shape), np.ones(grid.shape)]
    lin_total = 0
    incr = np.inf
    for k in range(1, params.picard_max + 1):
        stars = []
        lin = 0
        for s, (ck, base, mob, stiff, sign, target) in enumerate((
                (nk, base_n, mob_n, stiff_n, -1.0, target_n),
                (pk, base_p, mob_p, stiff_p, 1.0, target_p))):
            drive = (stiff @ (np.log(ck) + sign * phik).ravel()).reshape(grid.shape)
            rhs = base - dt * drive
            system = EllipticSystem(grid, mob, ck, dt, stiff)
            w, info = spd_solve(system, rhs, tol=params.linear_tol,
                                max_iters=params.linear_max, x0=guesses[s],
                                preconditioner=params.preconditioner)
            star = ck * w
            # the exact solve conserves the mean; remove the CG residual's share
            star += target - np.mean(star)
            stars.append(star)
            lin += info.iterations
        # the previous starred density is the best available guess for the next
        guesses = [stars[0] / (omega * nk + (1.0 - omega) * stars[0]),
                   stars[1] / (omega * pk + (1.0 - omega) * stars[1])]
        n_new = omega * nk + (1.0 - omega) * stars[0]
        p_new = omega * pk + (1.0 - omega) * stars[1]
        for name, c in (("n", n_new), ("p", p_new)):
            if not np.all(c > 0):
                idx = np.unravel_index(np.argmin(c), c.shape)
                raise PositivityLossError(idx, float(c[idx]), name)
        phi_new = _potential(grid, n_new, p_new, rho, solver)
        incr = g.norm_l2(grid, n_new - nk) + g.norm_l2(grid, p_new - pk)
        scale = 1.0 + g.norm_l2(grid, nk) + g.norm_l2(grid, pk)
        lin_total += lin
        if trace is not None:
            trace(k, incr, lin)
        nk, pk, phik = n_new, p_new, phi_new
        if incr <= params.picard_tol * scale:
            return nk, pk, phik, k, lin_total
    raise PicardNoConvergenceError(params.picard_max, incr)


def scheme_residual(state_old, state_new, params, sources=None, solver=None):
    """l2 residual of the discrete system, multiplied through by ``dt``.

    Returns ``||n - n_old - dt div(M_n grad mu_n) - dt f_n||_2`` plus the
    same for ``p``, with ``mu`` evaluated at the new state.
    """
    grid = state_old.grid
    sources = Sources() if sources is None else sources
    dt = params.dt
    f_n, f_p = sources.forcing(state_new.time)
    mob_n = face_mobility(grid, state_old.n, 1.0)
    mob_p = face_mobility(grid, state_old.p, params.D)
    mu_n, mu_p, _ = chemical_potentials(grid, state_new.n, state_new.p, solver,
                                        sources.rho(state_new.time))
    r_n = state_new.n - state_old.n - dt * g.divergence(grid, mob_n * g.gradient(grid, mu_n))
    r_p = state_new.p - state_old.p - dt * g.divergence(grid, mob_p * g.gradient(grid, mu_p))
    if f_n is not None:
        r_n -= dt * f_n
    if f_p is not None:
        r_p -= dt * f_p
    return g.norm_l2(grid, r_n) + g.norm_l2(grid, r_p)


def step(state, params, sources=None, solver=None, trace=None, report=True):
    """Advance ``state`` by one time step.

    If an iterate leaves the positive cone, the step is retried once with
    heavier damping ``(1 + omega_r) / 2``.

    Returns
    -------
    State
    StepReport
        ``None`` when ``report=False`` (skips the energy and residual work).

    Raises
    ------
    PositivityLossError
        If the retry also loses positivity.
    PicardNoConvergenceError
    """
    grid = state.grid
    _require_positive(state.n, "n")
    _require_positive(state.p, "p")
    solver = PoissonSolver(grid) if solver is None else solver
    omega = params.omega_r
    try:
        n1, p1, phi1, iters, lin = picard_iteration(state, params, sources, solver, trace)
    except PositivityLossError:
        omega = 0.5 * (1.0 + params.omega_r)
        n1, p1, phi1, iters, lin = picard_iteration(state, params, sources, solver, trace,
                                                    omega_r=omega)
    new = State(grid, n1, p1, phi1, state.time + params.dt)
    if not report:
        return new, None
    return new, make_report(state, new, params, sources, solver, iters, lin, omega)


def make_report(old, new, params, sources=None, solver=None, iters=0, lin=0,
                omega=float("nan")):
    grid = new.grid
    solver = PoissonSolver(grid) if solver is None else solver
    rho = None if sources is None else sources.rho(new.time)
    mob_n = face_mobility(grid, old.n, 1.0)
    mob_p = face_mobility(grid, old.p, params.D)
    mu_n, mu_p, _ = chemical_potentials(grid, new.n, new.p, solver, rho)
    obs = observables(grid, new.n, new.p)
    return StepReport(
        time=new.time,
        energy=discrete_energy(grid, new.n, new.p, rho, solver),
        mass_n=obs["mass_n"],
        mass_p=obs["mass_p"],
        c_min=obs["c_min"],
        dissipation=dissipation(grid, mob_n, mob_p, mu_n, mu_p, params.dt),
        picard_iters=iters,
        residual=scheme_residual(old, new, params, sources, solver),
        linear_iters=lin,
        omega_r=omega,
    )


def initial_report(state, sources=None, solver=None):
    """Report for the initial state (no step taken, zero dissipation)."""
    grid = state.grid
    rho = None if sources is None else sources.rho(state.time)
    obs = observables(grid, state.n, state.p)
    return StepReport(
        time=state.time,
        energy=discrete_energy(grid, state.n, state.p, rho, solver),
        mass_n=obs["mass_n"], mass_p=obs["mass_p"], c_min=obs["c_min"],
        dissipation=0.0, picard_iters=0, residual=0.0)


def advance(state, params, t_final, sources=None, solver=None, callback=None,
            report=True):
    """Step until ``t_final`` (the last step lands on it within round-off).

    ``callback(state, report)`` is called after every step. Returns the final
    state and the list of reports (empty when ``report=False``).
    """
    solver = PoissonSolver(state.grid) if solver is None else solver
    nsteps = int(round((t_final - state.time) / params.dt))
    if nsteps < 0 or abs(state.time + nsteps * params.dt - t_final) > 1e-9 * max(1.0, t_final):
        raise ValueError(f"t_final={t_final} is not reachable with dt={params.dt}")
    t0 = state.time
    reports = []
    for m in range(1, nsteps + 1):
        new, rep = step(state, params, sources, solver, report=report)
        # avoid accumulating dt round-off in the clock
        state = replace(new, time=t0 + m * params.dt)
        if rep is not None:
            if rep.time != state.time:
                rep = replace(rep, time=state.time)
            reports.append(rep)
        if callback is not None:
            callback(state, rep)
    return state, reports
