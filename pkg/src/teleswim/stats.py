"""Comparison metrics and exponent fits used by validation and the CLI."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy.stats import linregress

from .errors import DomainError
from .grids import DensityGrid

__all__ = ["FitResult", "L1Result", "ks_distance", "fit_exponent", "fit_logarithmic", "l1_distance"]


@dataclass(frozen=True)
class FitResult:
    exponent: float
    intercept: float
    r_squared: float
    stderr: float


class L1Result(NamedTuple):
    density: float
    atoms: float

    @property
    def total(self) -> float:
        return self.density + self.atoms


def ks_distance(samples, cdf: Callable) -> float:
    """sup_x |F_n(x) - F(x)| for a law that may have atoms.

    F is evaluated at every distinct sample value and just to its left, so a
    jump of the law that coincides with tied samples is matched exactly.
    """
    xs = np.sort(np.asarray(samples, dtype=float).ravel())
    n = xs.size
    if n == 0:
        raise DomainError("ks_distance needs at least one sample")
    values, counts = np.unique(xs, return_counts=True)
    upper = np.cumsum(counts) / n
    lower = upper - counts / n
    f_at = np.asarray(cdf(values), dtype=float)
    f_left = np.asarray(cdf(np.nextafter(values, -np.inf)), dtype=float)
    return float(max(np.max(np.abs(upper - f_at)), np.max(np.abs(lower - f_left))))


def fit_exponent(points) -> FitResult:
    """Least-squares line through (log t, log value): value ~ e^intercept t^exponent."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 3 or pts.shape[1] != 2:
        raise DomainError("fit_exponent needs at least three (t, value) points")
    if np.any(pts <= 0) or not np.all(np.isfinite(pts)):
        raise DomainError("fit_exponent needs positive finite t and values")
    res = linregress(np.log(pts[:, 0]), np.log(pts[:, 1]))
    return FitResult(float(res.slope), float(res.intercept), float(min(1.0, res.rvalue**2)), float(res.stderr))


def fit_logarithmic(points) -> FitResult:
    """Least-squares line through (log t, value): value ~ intercept + exponent * ln t."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 3:
        raise DomainError("fit_logarithmic needs at least three (t, value) points")
    if np.any(pts[:, 0] <= 0):
        raise DomainError("fit_logarithmic needs positive t")
    res = linregress(np.log(pts[:, 0]), pts[:, 1])
    return FitResult(float(res.slope), float(res.intercept), float(min(1.0, res.rvalue**2)), float(res.stderr))


def _atom_l1(a1, a2, tol):
    merged = {}
    for sign, atoms in ((1.0, a1), (-1.0, a2)):
        for pos, m in atoms:
            key = next((k for k in merged if abs(k - pos) <= tol), pos)
            merged[key] = merged.get(key, 0.0) + sign * m
    return math.fsum(abs(v) for v in merged.values())


def l1_distance(g1: DensityGrid, g2: DensityGrid) -> L1Result:
    """Sum |p1 - p2| dx over cells, with atoms compared separately as sum |m1 - m2|."""
    if not g1.same_grid(g2):
        raise DomainError("l1_distance needs identical spatial grids")
    dens = float(np.sum(np.abs(g1.values - g2.values)) * g1.dx)
    return L1Result(dens, _atom_l1(g1.atoms, g2.atoms, 1e-9 * max(1.0, g1.dx)))
