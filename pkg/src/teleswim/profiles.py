"""Speed-shape profiles w(t), tumbling-rate profiles lambda(t) and the clock tau(t).

The particle moves at speed ``c0 * w(t)``.  Every quantity of the process that
only involves the speed is a function of the integrated clock

    tau(t) = int_0^t w(s) ds,

so each profile knows its closed-form ``tau`` and inverse ``t_of_tau`` wherever
one exists.  All methods accept scalars or numpy arrays and return the same
shape.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import DomainError, ExtrapolationError, SaturationError, SingularityError, CapabilityError

__all__ = [
    "TimeProfile",
    "Constant",
    "PowerLaw",
    "ExponentialDecay",
    "PiecewiseConstant",
    "Tabulated",
    "RateProfile",
    "ProportionalToSpeed",
    "ConstantRate",
    "ExplicitRate",
    "eval_w",
    "eval_tau",
    "eval_t_of_tau",
    "eval_lambda_eff",
    "profile_from_config",
    "rate_from_config",
]


def _as_times(t, name="t"):
    arr = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite")
    if np.any(arr < 0):
        raise DomainError(f"{name} must be >= 0, got {t!r}")
    return arr


def _ret(arr, like):
    return float(arr) if np.ndim(like) == 0 else arr


def _bisect_inverse(fun, target, hi):
    """Vectorised bisection for the increasing map ``fun`` on [0, inf).

    The upper bracket doubles until it covers every target.
    """
    target = np.atleast_1d(np.asarray(target, dtype=float))
    hi = np.full_like(target, max(float(hi), 1e-300))
    for _ in range(2100):
        short = fun(hi) < target
        if not short.any():
            break
        hi = np.where(short, 2.0 * hi, hi)
    else:
        raise DomainError("could not bracket the inverse of tau")
    lo = np.zeros_like(target)
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        below = fun(mid) < target
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.all(hi - lo <= 1e-13 * hi):
            break
    return hi


class TimeProfile:
    """Base class for speed shapes; subclasses are frozen dataclasses."""

    kind = "abstract"

    def w(self, t):
        raise NotImplementedError

    def tau(self, t):
        raise NotImplementedError

    def t_of_tau(self, tau):
        tau_arr = _as_times(tau, "tau")
        self._check_saturation(tau_arr)
        out = _bisect_inverse(lambda s: np.asarray(self.tau(s)), tau_arr.ravel(), 1.0)
        return _ret(out.reshape(tau_arr.shape), tau)

    @property
    def tau_inf(self) -> float:
        """lim_{t->inf} tau(t); ``inf`` when the clock is unbounded."""
        return math.inf

    def max_on(self, a, b: float):
        """Upper bound of w on [a, b] (exact maximum), vectorised over ``a``."""
        raise NotImplementedError

    def to_dict(self) -> dict[str, Any]:
        raise NotImplementedError

    def _check_saturation(self, tau_arr):
        tau_inf = self.tau_inf
        if np.any(tau_arr >= tau_inf):
            bad = tau_arr[tau_arr >= tau_inf]
            raise SaturationError(float(bad.flat[0]), tau_inf)


@dataclass(frozen=True)
class Constant(TimeProfile):
    kind = "constant"

    def w(self, t):
        t_arr = _as_times(t)
        return _ret(np.ones_like(t_arr), t)

    def tau(self, t):
        t_arr = _as_times(t)
        return _ret(t_arr.copy(), t)

    def t_of_tau(self, tau):
        tau_arr = _as_times(tau, "tau")
        return _ret(tau_arr.copy(), tau)

    def max_on(self, a, b):
        return np.ones_like(np.asarray(a, dtype=float))

    def to_dict(self):
        return {"kind": self.kind}


@dataclass(frozen=True)
class PowerLaw(TimeProfile):
    """w(t) = (1 + t/t_ref)**(-beta): w(0) = 1 and w ~ t**(-beta) at long times."""

    beta: float
    t_ref: float = 1.0
    kind = "power_law"

    def __post_init__(self):
        if not math.isfinite(self.beta):
            raise DomainError("beta must be finite")
        if not (self.t_ref > 0 and math.isfinite(self.t_ref)):
            raise DomainError("t_ref must be positive")

    def w(self, t):
        t_arr = _as_times(t)
        return _ret(np.exp(-self.beta * np.log1p(t_arr / self.t_ref)), t)

    def tau(self, t):
        t_arr = _as_times(t)
        log_s = np.log1p(t_arr / self.t_ref)
        one_m_beta = 1.0 - self.beta
        if one_m_beta == 0.0:
            out = self.t_ref * log_s
        else:
            out = self.t_ref * np.expm1(one_m_beta * log_s) / one_m_beta
        return _ret(out, t)

    def t_of_tau(self, tau):
        tau_arr = _as_times(tau, "tau")
        self._check_saturation(tau_arr)
        one_m_beta = 1.0 - self.beta
        if one_m_beta == 0.0:
            out = self.t_ref * np.expm1(tau_arr / self.t_ref)
        else:
            out = self.t_ref * np.expm1(np.log1p(one_m_beta * tau_arr / self.t_ref) / one_m_beta)
        return _ret(out, tau)

    @property
    def tau_inf(self):
        return self.t_ref / (self.beta - 1.0) if self.beta > 1.0 else math.inf

    def max_on(self, a, b):
        return np.maximum(np.asarray(self.w(a)), float(self.w(b)))

    def to_dict(self):
        return {"kind": self.kind, "beta": self.beta, "t_ref": self.t_ref}


@dataclass(frozen=True)
class ExponentialDecay(TimeProfile):
    """w(t) = exp(-gamma t); the clock saturates at tau_inf = 1/gamma."""

    gamma: float
    kind = "exponential_decay"

    def __post_init__(self):
        if not (self.gamma > 0 and math.isfinite(self.gamma)):
            raise DomainError("gamma must be positive")

    def w(self, t):
        t_arr = _as_times(t)
        return _ret(np.exp(-self.gamma * t_arr), t)

    def tau(self, t):
        t_arr = _as_times(t)
        return _ret(-np.expm1(-self.gamma * t_arr) / self.gamma, t)

    def t_of_tau(self, tau):
        tau_arr = _as_times(tau, "tau")
        self._check_saturation(tau_arr)
        return _ret(-np.log1p(-self.gamma * tau_arr) / self.gamma, tau)

    @property
    def tau_inf(self):
        return 1.0 / self.gamma

    def max_on(self, a, b):
        return np.asarray(self.w(a), dtype=float)

    def to_dict(self):
        return {"kind": self.kind, "gamma": self.gamma}


def _suffix_max_from(values, start_idx, stop_idx):
    """max(values[start:stop+1]) for vector ``start_idx`` and scalar ``stop_idx``."""
    head = np.asarray(values[: stop_idx + 1], dtype=float)
    suffix = np.maximum.accumulate(head[::-1])[::-1]
    start_idx = np.minimum(start_idx, stop_idx)
    return suffix[start_idx]


@dataclass(frozen=True)
class PiecewiseConstant(TimeProfile):
    """w = values[0] on [0, b_1), values[i] on [b_i, b_{i+1}), values[-1] after b_m.

    ``values`` has one more entry than ``breakpoints``.
    """

    breakpoints: tuple
    values: tuple
    kind = "piecewise_constant"
    _edges: np.ndarray = field(init=False, repr=False, compare=False)
    _cum: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        b = np.asarray(self.breakpoints, dtype=float)
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "breakpoints", tuple(b.tolist()))
        object.__setattr__(self, "values", tuple(v.tolist()))
        if v.size != b.size + 1:
            raise DomainError("values must have len(breakpoints) + 1 entries")
        if b.size and (b[0] <= 0 or np.any(np.diff(b) <= 0)):
            raise DomainError("breakpoints must be positive and strictly ascending")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise DomainError("values must be finite and >= 0")
        edges = np.concatenate([[0.0], b])
        cum = np.concatenate([[0.0], np.cumsum(v[:-1] * np.diff(edges))])
        object.__setattr__(self, "_edges", edges)
        object.__setattr__(self, "_cum", cum)

    def _segment(self, t_arr):
        return np.searchsorted(np.asarray(self.breakpoints), t_arr, side="right")

    def w(self, t):
        t_arr = _as_times(t)
        return _ret(np.asarray(self.values)[self._segment(t_arr)], t)

    def tau(self, t):
        t_arr = _as_times(t)
        idx = self._segment(t_arr)
        out = self._cum[idx] + np.asarray(self.values)[idx] * (t_arr - self._edges[idx])
        return _ret(out, t)

    @property
    def tau_inf(self):
        return math.inf if self.values[-1] > 0 else float(self._cum[-1])

    def t_of_tau(self, tau):
        tau_arr = _as_times(tau, "tau")
        self._check_saturation(tau_arr)
        v = np.asarray(self.values)
        j = np.searchsorted(self._cum, tau_arr, side="left")
        on_edge = (j < self._cum.size) & (self._cum[np.minimum(j, self._cum.size - 1)] == tau_arr)
        seg = np.maximum(j - 1, 0)
        with np.errstate(divide="ignore", invalid="ignore"):
            inside = self._edges[seg] + (tau_arr - self._cum[seg]) / v[seg]
        out = np.where(on_edge, self._edges[np.minimum(j, self._cum.size - 1)], inside)
        return _ret(out, tau)

    def max_on(self, a, b):
        a_arr = _as_times(a)
        return _suffix_max_from(self.values, self._segment(a_arr), int(self._segment(float(b))))

    def to_dict(self):
        return {"kind": self.kind, "breakpoints": list(self.breakpoints), "values": list(self.values)}


@dataclass(frozen=True)
class Tabulated(TimeProfile):
    """Sampled (t, w) pairs starting at t = 0, linearly interpolated.

    Integration is exact for the interpolant (trapezoid nodes plus the
    quadratic partial-segment term); evaluation past the last sample raises.
    """

    times: tuple
    values: tuple
    kind = "tabulated"
    _cum: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "times", tuple(t.tolist()))
        object.__setattr__(self, "values", tuple(v.tolist()))
        if t.size < 2 or t.size != v.size:
            raise DomainError("need at least two (t, w) samples of equal length")
        if t[0] != 0.0 or np.any(np.diff(t) <= 0):
            raise DomainError("sample times must start at 0 and be strictly ascending")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise DomainError("sampled w must be finite and >= 0")
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (v[1:] + v[:-1]) * np.diff(t))])
        object.__setattr__(self, "_cum", cum)

    @classmethod
    def from_samples(cls, samples):
        arr = np.asarray(samples, dtype=float)
        return cls(tuple(arr[:, 0]), tuple(arr[:, 1]))

    def _check_range(self, t_arr):
        if np.any(t_arr > self.times[-1]):
            raise ExtrapolationError(f"t beyond last sample {self.times[-1]}")

    def w(self, t):
        t_arr = _as_times(t)
        self._check_range(t_arr)
        return _ret(np.interp(t_arr, self.times, self.values), t)

    def tau(self, t):
        t_arr = _as_times(t)
        self._check_range(t_arr)
        tt = np.asarray(self.times)
        vv = np.asarray(self.values)
        i = np.clip(np.searchsorted(tt, t_arr, side="right") - 1, 0, tt.size - 2)
        h = t_arr - tt[i]
        slope = (vv[i + 1] - vv[i]) / (tt[i + 1] - tt[i])
        out = self._cum[i] + vv[i] * h + 0.5 * slope * h * h
        return _ret(out, t)

    def t_of_tau(self, tau):
        tau_arr = _as_times(tau, "tau")
        if np.any(tau_arr > self._cum[-1]):
            raise ExtrapolationError(f"tau beyond tau(last sample) = {self._cum[-1]}")
        t_last = self.times[-1]
        out = _bisect_inverse(lambda s: np.asarray(self.tau(np.minimum(s, t_last))), tau_arr.ravel(), t_last)
        return _ret(np.minimum(out, t_last).reshape(tau_arr.shape), tau)

    def max_on(self, a, b):
        a_arr = _as_times(a)
        self._check_range(np.asarray(b))
        tt = np.asarray(self.times)
        stop = int(np.searchsorted(tt, b, side="left")) - 1
        ends = np.maximum(np.asarray(self.w(a_arr)), float(self.w(b)))
        if stop < 0:
            return ends
        start = np.searchsorted(tt, a_arr, side="right")
        inner = np.where(start <= stop, _suffix_max_from(self.values, start, stop), 0.0)
        return np.maximum(ends, inner)

    def to_dict(self):
        return {"kind": self.kind, "samples": [[a, b] for a, b in zip(self.times, self.values)]}


# --- tumbling-rate profiles -------------------------------------------------


class RateProfile:
    """Tumbling rate lambda(t); methods take the speed profile as context."""

    mode = "abstract"
    proportional = False

    def rate(self, profile: TimeProfile, t):
        raise NotImplementedError

    def integrated(self, profile: TimeProfile, t):
        """Lambda(t) = int_0^t lambda(s) ds."""
        raise NotImplementedError

    def bound(self, profile: TimeProfile, a, b: float):
        """Exact maximum of lambda on [a, b], vectorised over ``a``."""
        raise NotImplementedError

    def to_dict(self) -> dict[str, Any]:
        raise NotImplementedError


def _check_rate(lambda0):
    if not (lambda0 >= 0 and math.isfinite(lambda0)):
        raise DomainError(f"lambda0 must be finite and >= 0, got {lambda0!r}")


@dataclass(frozen=True)
class ProportionalToSpeed(RateProfile):
    """lambda(t) = lambda0 * w(t) exactly."""

    lambda0: float
    mode = "proportional"
    proportional = True

    def __post_init__(self):
        _check_rate(self.lambda0)

    def rate(self, profile, t):
        return self.lambda0 * profile.w(t)

    def integrated(self, profile, t):
        return self.lambda0 * profile.tau(t)

    def bound(self, profile, a, b):
        return self.lambda0 * profile.max_on(a, b)

    def to_dict(self):
        return {"mode": self.mode, "lambda0": self.lambda0}


@dataclass(frozen=True)
class ConstantRate(RateProfile):
    """lambda(t) = lambda0 regardless of the speed."""

    lambda0: float
    mode = "constant"

    def __post_init__(self):
        _check_rate(self.lambda0)

    def rate(self, profile, t):
        t_arr = _as_times(t)
        return _ret(np.full_like(t_arr, self.lambda0), t)

    def integrated(self, profile, t):
        t_arr = _as_times(t)
        return _ret(self.lambda0 * t_arr, t)

    def bound(self, profile, a, b):
        return np.full_like(np.asarray(a, dtype=float), self.lambda0)

    def to_dict(self):
        return {"mode": self.mode, "lambda0": self.lambda0}


@dataclass(frozen=True)
class ExplicitRate(RateProfile):
    """Tabulated lambda(t) >= 0, linearly interpolated, no extrapolation."""

    times: tuple
    values: tuple
    mode = "explicit"
    _table: Tabulated = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if not np.all(np.isfinite(values)):
            raise CapabilityError("explicit rate must be finite (bounded) on its domain")
        # interpolation and exact integrals come from the tabulated-profile machinery
        table = Tabulated(tuple(self.times), tuple(values))
        object.__setattr__(self, "times", table.times)
        object.__setattr__(self, "values", table.values)
        object.__setattr__(self, "_table", table)

    @classmethod
    def from_samples(cls, samples):
        arr = np.asarray(samples, dtype=float)
        return cls(tuple(arr[:, 0]), tuple(arr[:, 1]))

    def rate(self, profile, t):
        return self._table.w(t)

    def integrated(self, profile, t):
        return self._table.tau(t)

    def bound(self, profile, a, b):
        return self._table.max_on(a, b)

    def to_dict(self):
        return {"mode": self.mode, "samples": [[a, b] for a, b in zip(self.times, self.values)]}


# --- operation-level functions ----------------------------------------------


def eval_w(profile: TimeProfile, t):
    return profile.w(t)


def eval_tau(profile: TimeProfile, t):
    return profile.tau(t)


def eval_t_of_tau(profile: TimeProfile, tau):
    return profile.t_of_tau(tau)


def eval_lambda_eff(rate: RateProfile, profile: TimeProfile, tau):
    """Tumbling rate seen on the tau clock, lambda(t(tau)) / w(t(tau))."""
    tau_arr = _as_times(tau, "tau")
    if rate.proportional:
        return _ret(np.full_like(tau_arr, rate.lambda0), tau)
    t = np.asarray(profile.t_of_tau(tau_arr))
    w = np.asarray(profile.w(t))
    if np.any(w == 0):
        raise SingularityError("w(t(tau)) = 0: effective rate undefined")
    return _ret(np.asarray(rate.rate(profile, t)) / w, tau)


_PROFILE_KINDS = {
    "constant": lambda cfg: Constant(),
    "power_law": lambda cfg: PowerLaw(float(cfg["beta"]), float(cfg.get("t_ref", 1.0))),
    "exponential_decay": lambda cfg: ExponentialDecay(float(cfg["gamma"])),
    "piecewise_constant": lambda cfg: PiecewiseConstant(tuple(cfg["breakpoints"]), tuple(cfg["values"])),
    "tabulated": lambda cfg: Tabulated.from_samples(cfg["samples"]),
}


def profile_from_config(cfg: dict) -> TimeProfile:
    """Build a profile from ``{kind, beta, t_ref, gamma, breakpoints, values, samples}``."""
    kind = str(cfg.get("kind", "")).lower().replace("-", "_")
    try:
        return _PROFILE_KINDS[kind](cfg)
    except KeyError as exc:
        raise DomainError(f"bad profile config {cfg!r}: missing {exc}") from None


def rate_from_config(cfg: dict) -> RateProfile:
    """Build a rate from ``{mode: proportional|constant|explicit, lambda0, samples}``."""
    mode = str(cfg.get("mode", "")).lower()
    try:
        if mode == "proportional":
            return ProportionalToSpeed(float(cfg["lambda0"]))
        if mode == "constant":
            return ConstantRate(float(cfg["lambda0"]))
        if mode == "explicit":
            return ExplicitRate.from_samples(cfg["samples"])
    except KeyError as exc:
        raise DomainError(f"bad rate config {cfg!r}: missing {exc}") from None
    raise DomainError(f"unknown rate mode {mode!r}")
