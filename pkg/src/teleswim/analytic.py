"""Closed-form law of the run-and-tumble particle when lambda(t) = lambda0 w(t).

On the clock tau = int_0^t w the process is the classical telegraph process with
speed c0 and rate lambda0, so everything below depends on t only through tau.
At time t the law of X(t) - x0 is

* two atoms of mass e^{-lambda0 tau}/2 at the fronts +-c0 tau (no tumble yet),
* an absolutely continuous part on (-c0 tau, c0 tau):

      p(y) = e^{-lambda0 tau}/2 * [ (lambda0/c0) I0(z) + (lambda0^2 tau / c0) I1(z)/z ],
      z    = lambda0 * sqrt(tau^2 - (y/c0)^2).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp

from .errors import DegenerateLawError, DomainError
from .profiles import ConstantRate, ExponentialDecay, RateProfile, TimeProfile
from .special import bessel_i0_scaled, bessel_i1_over_z_scaled

__all__ = [
    "TelegraphParams",
    "LawAtTime",
    "Regime",
    "RegimeReport",
    "law_at_time",
    "density_ac",
    "density_ac_tau",
    "boundary_atoms",
    "cdf",
    "cdf_tau",
    "msd",
    "msd_tau",
    "msd_moment_ode",
    "msd_limit",
    "classify_regime",
    "FRONT_RTOL",
]

# points within FRONT_RTOL * c0 tau of a front belong to the atoms
FRONT_RTOL = 1e-12
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


@dataclass(frozen=True)
class TelegraphParams:
    c0: float
    lambda0: float
    x0: float = 0.0

    def __post_init__(self):
        if not (self.c0 > 0 and math.isfinite(self.c0)):
            raise DomainError(f"c0 must be positive, got {self.c0!r}")
        if not (self.lambda0 >= 0 and math.isfinite(self.lambda0)):
            raise DomainError(f"lambda0 must be >= 0, got {self.lambda0!r}")
        if not math.isfinite(self.x0):
            raise DomainError("x0 must be finite")

    def to_dict(self):
        return {"c0": self.c0, "lambda0": self.lambda0, "x0": self.x0}


@dataclass(frozen=True)
class LawAtTime:
    t: float
    tau: float
    front: float
    atom_mass: float
    ac_mass: float


class Regime(str, enum.Enum):
    CONFINED = "Confined"
    LOGARITHMIC = "Logarithmic"
    SUBDIFFUSIVE = "Subdiffusive"
    NORMAL = "Normal"
    SUPERDIFFUSIVE = "Superdiffusive"


@dataclass(frozen=True)
class RegimeReport:
    beta: float
    regime: Regime
    msd_exponent: Optional[float]

    def __str__(self):
        if self.msd_exponent is None:
            return self.regime.value
        return f"{self.regime.value}, exponent {self.msd_exponent:g}"


def _tau_of(profile, t, allow_zero=True):
    t_arr = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(t_arr)):
        raise DomainError("t must be finite")
    if np.any(t_arr < 0) or (not allow_zero and np.any(t_arr <= 0)):
        raise DomainError(f"t must be {'>=' if allow_zero else '>'} 0, got {t!r}")
    return float(profile.tau(float(t_arr))) if t_arr.ndim == 0 else np.asarray(profile.tau(t_arr))


def law_at_time(params: TelegraphParams, profile: TimeProfile, t: float) -> LawAtTime:
    tau = _tau_of(profile, t)
    atom = 0.5 * math.exp(-params.lambda0 * tau)
    return LawAtTime(t=float(t), tau=tau, front=params.c0 * tau, atom_mass=atom, ac_mass=-math.expm1(-params.lambda0 * tau))


def _density_centered(c0, lam, tau, y):
    """Absolutely continuous density at offsets ``y`` from x0 (array)."""
    y = np.abs(np.asarray(y, dtype=float))
    out = np.zeros_like(y)
    u = y / c0
    inside = u < tau * (1.0 - FRONT_RTOL)
    if not inside.any():
        return out
    ui = u[inside]
    r = np.sqrt((tau - ui) * (tau + ui))
    z = lam * r
    # z - lam*tau written without cancellation
    expo = -lam * ui * ui / (tau + r)
    out[inside] = 0.5 * np.exp(expo) * (
        (lam / c0) * bessel_i0_scaled(z) + (lam * lam * tau / c0) * bessel_i1_over_z_scaled(z)
    )
    return out


def _check_ac(params):
    if params.lambda0 == 0:
        raise DegenerateLawError("lambda0 = 0: the law is two atoms, there is no density")


def density_ac_tau(params: TelegraphParams, tau: float, x):
    """Absolutely continuous density at clock value ``tau`` (> 0)."""
    _check_ac(params)
    if not tau > 0:
        raise DomainError("tau must be > 0")
    x_arr = np.asarray(x, dtype=float)
    out = _density_centered(params.c0, params.lambda0, float(tau), np.atleast_1d(x_arr - params.x0))
    return float(out[0]) if x_arr.ndim == 0 else out.reshape(x_arr.shape)


def density_ac(params: TelegraphParams, profile: TimeProfile, x, t: float):
    """Absolutely continuous part of the law of X(t), evaluated at ``x``."""
    _check_ac(params)
    tau = _tau_of(profile, t, allow_zero=False)
    if tau == 0:
        raise DomainError("tau(t) = 0: no motion yet, the law is a point mass")
    return density_ac_tau(params, tau, x)


def boundary_atoms(params: TelegraphParams, profile: TimeProfile, t: float):
    """((x0 - c0 tau, m), (x0 + c0 tau, m)) with m = e^{-lambda0 tau}/2."""
    law = law_at_time(params, profile, t)
    return (params.x0 - law.front, law.atom_mass), (params.x0 + law.front, law.atom_mass)


def _ac_cumulative(c0, lam, tau, u):
    """int_0^u p(y) dy for sorted nonnegative ``u`` strictly inside the support.

    Composite 8-point Gauss-Legendre over the union of the query points and a
    panel grid fine enough to resolve the O(c0 sqrt(tau/lam)) bulk width.
    """
    front = c0 * tau
    n_panels = int(max(128, min(200_000, 8.0 * math.sqrt(lam * tau))))
    knots = np.union1d(np.linspace(0.0, front, n_panels + 1), u)
    a, b = knots[:-1], knots[1:]
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    nodes = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    vals = _density_centered(c0, lam, tau, nodes.ravel()).reshape(nodes.shape)
    pieces = half * (vals @ _GL_WEIGHTS)
    cum = np.concatenate([[0.0], np.cumsum(pieces)])
    return cum[np.searchsorted(knots, u)]


def cdf_tau(params: TelegraphParams, tau: float, x):
    """P{X <= x} at clock value ``tau``; right-continuous, atoms included."""
    x_arr = np.asarray(x, dtype=float)
    y = np.atleast_1d(x_arr - params.x0).ravel()
    front = params.c0 * tau
    atom = 0.5 * math.exp(-params.lambda0 * tau)
    out = np.where(y < -front, 0.0, np.where(y >= front, 1.0, atom))
    inside = (y > -front) & (y < front)
    if params.lambda0 > 0 and tau > 0 and inside.any():
        yi = y[inside]
        uniq, inv = np.unique(np.abs(yi), return_inverse=True)
        half_mass = _ac_cumulative(params.c0, params.lambda0, tau, uniq)[inv]
        out[inside] = 0.5 + np.sign(yi) * half_mass
    elif inside.any():
        # lambda0 == 0: only the two atoms
        out[inside] = atom
    if tau == 0:
        out = np.where(y >= 0, 1.0, 0.0)
    out = np.clip(out, 0.0, 1.0)
    return float(out[0]) if x_arr.ndim == 0 else out.reshape(x_arr.shape)


def cdf(params: TelegraphParams, profile: TimeProfile, x, t: float):
    """P{X(t) <= x}, vectorised over ``x``."""
    tau = _tau_of(profile, t, allow_zero=False)
    return cdf_tau(params, tau, x)


def msd_tau(params: TelegraphParams, tau):
    """(c0^2 / 2 lambda0^2) [2 lambda0 tau - 1 + e^{-2 lambda0 tau}]; (c0 tau)^2 when lambda0 = 0."""
    tau = np.asarray(tau, dtype=float)
    c0, lam = params.c0, params.lambda0
    if lam == 0:
        out = (c0 * tau) ** 2
    else:
        u = lam * tau
        us = np.minimum(u, 1e-4)
        bracket = np.where(
            u < 1e-4,
            2 * us**2 - (4.0 / 3.0) * us**3 + (2.0 / 3.0) * us**4 - (4.0 / 15.0) * us**5,
            2 * u + np.expm1(-2 * u),
        )
        out = c0 * c0 / (2 * lam * lam) * bracket
    return float(out) if out.ndim == 0 else out


def msd(params: TelegraphParams, profile: TimeProfile, t):
    """Mean-square displacement about x0 for the proportional-rate process."""
    return msd_tau(params, _tau_of(profile, t))


def msd_moment_ode(params: TelegraphParams, profile: TimeProfile, rate: RateProfile, times, rtol=1e-10):
    """MSD for any rate mode from the moment equations of the (p, a-b) system.

    With M2 = E[(X-x0)^2] and C = E[sigma (X-x0)]:
        M2' = 2 c(t) C,    C' = c(t) - 2 lambda(t) C.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if np.any(times < 0) or np.any(np.diff(times) < 0):
        raise DomainError("times must be nonnegative and ascending")
    c0 = params.c0

    def rhs(t, y):
        c = c0 * profile.w(t)
        return [2.0 * c * y[1], c - 2.0 * rate.rate(profile, t) * y[1]]

    if times[-1] == 0:
        return np.zeros_like(times)
    sol = solve_ivp(rhs, (0.0, float(times[-1])), [0.0, 0.0], t_eval=times, method="DOP853", rtol=rtol, atol=1e-14)
    if not sol.success:
        raise DomainError(f"moment ODE failed: {sol.message}")
    return sol.y[0]


def msd_limit(params: TelegraphParams, profile: TimeProfile, rate: RateProfile) -> float:
    """t -> inf limit of the MSD where it is finite and known in closed form.

    Proportional rate with a saturating clock gives the tau -> tau_inf limit of
    the MSD formula; a constant rate with exponential speed decay gives
    c0^2 / (gamma (gamma + 2 lambda0)) from the moment equations.
    """
    if rate.proportional:
        return msd_tau(TelegraphParams(params.c0, rate.lambda0, params.x0), profile.tau_inf)
    if isinstance(rate, ConstantRate) and isinstance(profile, ExponentialDecay):
        g = profile.gamma
        return params.c0**2 / (g * (g + 2.0 * rate.lambda0))
    return math.inf if profile.tau_inf == math.inf else math.nan


def classify_regime(beta: float) -> RegimeReport:
    """Long-time MSD regime for w(t) ~ t^{-beta}."""
    if not math.isfinite(beta):
        raise DomainError("beta must be finite")
    if beta > 1:
        return RegimeReport(beta, Regime.CONFINED, None)
    if beta == 1:
        return RegimeReport(beta, Regime.LOGARITHMIC, None)
    if beta > 0:
        return RegimeReport(beta, Regime.SUBDIFFUSIVE, 1.0 - beta)
    if beta == 0:
        return RegimeReport(beta, Regime.NORMAL, 1.0)
    return RegimeReport(beta, Regime.SUPERDIFFUSIVE, 1.0 - beta)
