"""Finite-volume solver for the two-population system

    a_t = -c(t) a_x + lambda(t) (b - a)
    b_t = +c(t) b_x + lambda(t) (a - b),     a(x,0) = b(x,0) = delta(x - x0)/2,

in the original time variable.  ``a`` and ``b`` are the right- and left-moving
densities; p = a + b is the position density.

Each step transports by first-order upwind and relaxes a - b exactly,
d(a-b)/dt = -2 lambda(t) (a-b), in a Strang split (half relaxation, transport,
half relaxation).  Steps are uniform on the tau clock, so every step moves
mass by the same Courant number nu = c0 dtau / dx <= cfl, with the physical
time step following from t(tau).  Relaxation uses the exact integrated rate
Lambda(t_{n+1}) - Lambda(t_n), so the coefficient singularities of the
reduced equation on the tau clock never enter.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .analytic import TelegraphParams, cdf_tau
from .errors import DomainError
from .grids import DensityGrid
from .profiles import RateProfile, TimeProfile
from .stats import L1Result, l1_distance

__all__ = [
    "GridSpec",
    "ConvergenceReport",
    "solve_ab_system",
    "solve_tau_system",
    "analytic_grid",
    "collapse_fronts",
    "front_window",
    "front_collapsed_l1",
    "convergence_study",
]


# L1 errors below this are accumulated rounding; no order is reported for them
ROUNDOFF_L1 = 1e-10


@dataclass(frozen=True)
class GridSpec:
    x_min: float
    x_max: float
    n_cells: int
    cfl: float = 0.9

    def __post_init__(self):
        if not self.x_min < self.x_max:
            raise DomainError("x_min must be < x_max")
        if int(self.n_cells) != self.n_cells or self.n_cells < 2:
            raise DomainError("n_cells must be an integer > 1")
        if not 0 < self.cfl <= 1:
            raise DomainError("cfl must lie in (0, 1]")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n_cells

    @property
    def centers(self) -> np.ndarray:
        return self.x_min + (np.arange(self.n_cells) + 0.5) * self.dx

    @classmethod
    def around(cls, params: TelegraphParams, profile: TimeProfile, t_end: float, n_cells: int, margin: float = 0.1, cfl: float = 0.9):
        """Grid symmetric about x0 covering the support with a relative margin.

        The margin is widened if needed so that ten widths of the upwind
        smearing kernel fit beyond each front.
        """
        front = params.c0 * float(profile.tau(t_end))
        half = front * (1.0 + margin)
        for _ in range(3):
            dx = 2.0 * half / n_cells
            half = max(half, front + 10.0 * math.sqrt(front * dx * (1.0 - cfl)) + 5.0 * dx)
        return cls(params.x0 - half, params.x0 + half, n_cells, cfl)

    def to_dict(self):
        return {"x_min": self.x_min, "x_max": self.x_max, "n_cells": self.n_cells, "cfl": self.cfl}


@dataclass
class ConvergenceReport:
    reference: str
    errors: list
    orders: list = field(default_factory=list)
    # (n_cells, largest |mass change| over one step) for every solve
    mass_changes: list = field(default_factory=list)

    @property
    def min_order(self) -> Optional[float]:
        finite = [o for o in self.orders if o is not None]
        return min(finite) if finite else None


def _initial_deposit(grid: GridSpec, x0: float) -> np.ndarray:
    """Unit mass at x0 shared linearly between the two nearest cell centres."""
    mass = np.zeros(grid.n_cells)
    s = (x0 - grid.x_min) / grid.dx - 0.5
    i = int(math.floor(s))
    frac = s - i
    if frac < 1e-12:
        frac = 0.0
    elif frac > 1 - 1e-12:
        i, frac = i + 1, 0.0
    mass[i] += 1.0 - frac
    if frac:
        mass[i + 1] += frac
    return mass / grid.dx


def _check_support(params, profile, grid, t_end):
    front = params.c0 * float(profile.tau(t_end))
    lo, hi = params.x0 - front, params.x0 + front
    if not (grid.x_min < lo and hi < grid.x_max):
        raise DomainError(f"support [{lo:g}, {hi:g}] leaves the grid [{grid.x_min:g}, {grid.x_max:g}]")
    return front


def _march(params, grid, tau_end, exchange, n_steps=None):
    """Shared time loop; ``exchange(n)`` returns the two half-step relaxation amounts."""
    dx, c0 = grid.dx, params.c0
    if n_steps is None:
        n_steps = max(1, math.ceil(c0 * tau_end / (grid.cfl * dx) - 1e-9))
    dtau = tau_end / n_steps
    nu = c0 * dtau / dx
    half = 0.5 * _initial_deposit(grid, params.x0)
    a, b = half.copy(), half.copy()
    mass = float(np.sum(a + b)) * dx
    max_change = 0.0
    outflow = 0.0
    h1, h2 = exchange(n_steps)
    for n in range(n_steps):
        if h1[n]:
            d = (a - b) * math.exp(-2.0 * h1[n])
            p = a + b
            a, b = 0.5 * (p + d), 0.5 * (p - d)
        out = nu * (a[-1] + b[0]) * dx
        a_new = a - nu * a
        a_new[1:] += nu * a[:-1]
        b_new = b - nu * b
        b_new[:-1] += nu * b[1:]
        a, b = a_new, b_new
        if h2[n]:
            d = (a - b) * math.exp(-2.0 * h2[n])
            p = a + b
            a, b = 0.5 * (p + d), 0.5 * (p - d)
        new_mass = float(np.sum(a + b)) * dx
        max_change = max(max_change, abs(new_mass - mass))
        outflow += out
        mass = new_mass
    return a, b, {
        "n_steps": n_steps,
        "courant": nu,
        "max_step_mass_change": max_change,
        "outflow": outflow,
        "mass": mass,
        # variance of the upwind kernel after n_steps shifts of Courant number nu
        "front_spread": dx * math.sqrt(n_steps * nu * (1.0 - nu)),
    }


def _validate(params, profile, rate, t_end):
    if not (t_end > 0 and math.isfinite(t_end)):
        raise DomainError("t_end must be positive")
    lam = getattr(rate, "lambda0", None)
    if lam is not None and lam != params.lambda0:
        raise DomainError(f"rate lambda0={lam} disagrees with params.lambda0={params.lambda0}")


def solve_ab_system(params: TelegraphParams, profile: TimeProfile, rate: RateProfile, grid: GridSpec, t_end: float, n_steps=None) -> DensityGrid:
    """Density p = a + b at ``t_end`` on ``grid`` (no atoms; fronts are smeared)."""
    _validate(params, profile, rate, t_end)
    _check_support(params, profile, grid, t_end)
    tau_end = float(profile.tau(t_end))

    def exchange(n):
        tau_nodes = np.linspace(0.0, tau_end, 2 * n + 1)
        t_nodes = np.empty_like(tau_nodes)
        t_nodes[:-1] = profile.t_of_tau(tau_nodes[:-1])
        t_nodes[-1] = t_end
        lam_int = np.asarray(rate.integrated(profile, t_nodes), dtype=float)
        inc = np.diff(lam_int)
        if np.any(inc < -1e-12):
            raise DomainError("tumbling rate must be nonnegative")
        inc = np.maximum(inc, 0.0)
        return inc[0::2], inc[1::2]

    a, b, info = _march(params, grid, tau_end, exchange, n_steps)
    info.update({"scheme": "upwind+strang-exact-exchange", "formulation": "t", "grid": grid.to_dict()})
    return DensityGrid(grid.centers, a + b, time=float(t_end), meta=info)


def solve_tau_system(params: TelegraphParams, profile: TimeProfile, rate: RateProfile, grid: GridSpec, t_end: float, n_steps=None) -> DensityGrid:
    """Same system written on the tau clock with rate lambda_eff(tau).

    The relaxation uses the midpoint value of lambda_eff on each half step,
    as a direct discretisation of the reduced equation would.
    """
    from .profiles import eval_lambda_eff

    _validate(params, profile, rate, t_end)
    _check_support(params, profile, grid, t_end)
    tau_end = float(profile.tau(t_end))

    def exchange(n):
        dtau = tau_end / n
        q = (np.arange(2 * n) + 0.5) * (0.5 * dtau)
        lam_eff = np.asarray(eval_lambda_eff(rate, profile, q), dtype=float)
        inc = lam_eff * 0.5 * dtau
        return inc[0::2], inc[1::2]

    a, b, info = _march(params, grid, tau_end, exchange, n_steps)
    info.update({"scheme": "upwind+strang-midpoint-exchange", "formulation": "tau", "grid": grid.to_dict()})
    return DensityGrid(grid.centers, a + b, time=float(t_end), meta=info)


def analytic_grid(params: TelegraphParams, profile: TimeProfile, grid: GridSpec, t: float) -> DensityGrid:
    """Exact law on ``grid``: cell-averaged density plus the two front atoms."""
    tau = float(profile.tau(t))
    edges = grid.x_min + np.arange(grid.n_cells + 1) * grid.dx
    front = params.c0 * tau
    atom = 0.5 * math.exp(-params.lambda0 * tau)
    cum = np.asarray(cdf_tau(params, tau, edges), dtype=float)
    cum = cum - atom * (edges >= params.x0 - front) - atom * (edges >= params.x0 + front)
    values = np.maximum(np.diff(cum), 0.0) / grid.dx
    atoms = [(params.x0 - front, atom), (params.x0 + front, atom)]
    return DensityGrid(grid.centers, values, time=float(t), atoms=atoms, meta={"source": "analytic"})


def collapse_fronts(grid: DensityGrid, fronts, halfwidth: float) -> DensityGrid:
    """Move all mass within ``halfwidth`` of each front into an atom at that front."""
    values = grid.values.copy()
    atoms = []
    used = np.zeros(values.size, dtype=bool)
    for pos in fronts:
        window = (np.abs(grid.centers - pos) <= halfwidth) & ~used
        m = float(np.sum(values[window]) * grid.dx)
        m += sum(am for ap, am in grid.atoms if abs(ap - pos) <= halfwidth)
        values[window] = 0.0
        used |= window
        atoms.append((pos, m))
    rest = [(ap, am) for ap, am in grid.atoms if all(abs(ap - f) > halfwidth for f in fronts)]
    return DensityGrid(grid.centers, values, time=grid.time, atoms=atoms + rest, meta=dict(grid.meta))


def front_window(numeric: DensityGrid) -> float:
    """Half-width of the comparison window around each front: 8 kernel widths plus 3 cells."""
    return 8.0 * numeric.meta.get("front_spread", 0.0) + 3.0 * numeric.dx


def front_collapsed_l1(numeric: DensityGrid, reference: DensityGrid, fronts, halfwidth: Optional[float] = None) -> L1Result:
    """L1 distance with the front regions of both grids compared as masses."""
    if halfwidth is None:
        halfwidth = front_window(numeric)
    return l1_distance(collapse_fronts(numeric, fronts, halfwidth), collapse_fronts(reference, fronts, halfwidth))


def _coarsen(fine: DensityGrid, factor: int, like: DensityGrid) -> DensityGrid:
    vals = fine.values.reshape(-1, factor).mean(axis=1)
    return DensityGrid(like.centers, vals, time=fine.time, meta=dict(fine.meta))


def convergence_study(params, profile, rate, t_end, n_cells_list, grid: Optional[GridSpec] = None, cfl: float = 0.9) -> ConvergenceReport:
    """Front-collapsed L1 errors on successively doubled grids over a fixed domain.

    The reference is the exact law for the proportional-rate case and the
    finest solution (block-averaged) otherwise.  Observed orders are
    log2(e_k / e_{k+1}); an order is ``None`` when an error is below ROUNDOFF_L1.
    """
    sizes = [int(n) for n in n_cells_list]
    if len(sizes) < 3:
        raise DomainError("convergence_study needs at least three grid sizes")
    if any(b != 2 * a for a, b in zip(sizes, sizes[1:])):
        raise DomainError("grid sizes must double")
    base = grid or GridSpec.around(params, profile, t_end, sizes[0], cfl=cfl)
    front = params.c0 * float(profile.tau(t_end))
    fronts = (params.x0 - front, params.x0 + front)
    solutions = [solve_ab_system(params, profile, rate, replace(base, n_cells=n), t_end) for n in sizes]
    errors = []
    if rate.proportional:
        reference = "analytic"
        for n, sol in zip(sizes, solutions):
            ref = analytic_grid(params, profile, replace(base, n_cells=n), t_end)
            errors.append((n, front_collapsed_l1(sol, ref, fronts).total))
    else:
        reference = "finest"
        finest = solutions[-1]
        for n, sol in zip(sizes[:-1], solutions[:-1]):
            ref = _coarsen(finest, sizes[-1] // n, sol)
            errors.append((n, front_collapsed_l1(sol, ref, fronts).total))
    orders = []
    for (_, e1), (_, e2) in zip(errors, errors[1:]):
        if e1 <= ROUNDOFF_L1 or e2 <= ROUNDOFF_L1:
            orders.append(None)
        else:
            orders.append(math.log2(e1 / e2))
    changes = [(n, sol.meta["max_step_mass_change"]) for n, sol in zip(sizes, solutions)]
    return ConvergenceReport(reference, errors, orders, changes)
