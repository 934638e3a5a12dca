"""Density on a uniform spatial grid, optionally carrying point masses."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

__all__ = ["DensityGrid"]


@dataclass
class DensityGrid:
    """Cell-centred density values plus optional atoms ``[(position, mass), ...]``.

    ``values`` are densities per unit length; the grid is uniform with spacing
    ``dx`` so that cell ``i`` covers ``[centers[i] - dx/2, centers[i] + dx/2)``.
    """

    centers: np.ndarray
    values: np.ndarray
    time: float
    atoms: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.centers = np.asarray(self.centers, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.centers.shape != self.values.shape or self.centers.ndim != 1:
            raise DomainError("centers and values must be 1-d arrays of equal length")
        if self.centers.size < 2:
            raise DomainError("a density grid needs at least two cells")
        self.atoms = [(float(p), float(m)) for p, m in self.atoms]

    @property
    def dx(self) -> float:
        return float(self.centers[1] - self.centers[0])

    @property
    def edges(self) -> np.ndarray:
        return np.concatenate([self.centers - 0.5 * self.dx, [self.centers[-1] + 0.5 * self.dx]])

    @property
    def atom_mass(self) -> float:
        return float(sum(m for _, m in self.atoms))

    def mass(self) -> float:
        return float(np.sum(self.values) * self.dx) + self.atom_mass

    def moment(self, order: int, about: float = 0.0) -> float:
        """Raw moment of the cell masses (placed at centres) and atoms."""
        cells = float(np.sum(self.values * (self.centers - about) ** order) * self.dx)
        return cells + float(sum(m * (p - about) ** order for p, m in self.atoms))

    def cdf(self, x):
        """Right-continuous CDF: piecewise linear within cells, jumps at atoms."""
        x = np.asarray(x, dtype=float)
        cum = np.concatenate([[0.0], np.cumsum(self.values) * self.dx])
        out = np.interp(x, self.edges, cum, left=0.0, right=cum[-1])
        for pos, m in self.atoms:
            out = out + np.where(x >= pos, m, 0.0)
        return out

    def same_grid(self, other: "DensityGrid", rtol: float = 1e-12) -> bool:
        if self.centers.shape != other.centers.shape:
            return False
        scale = max(np.max(np.abs(self.centers)), self.dx)
        return bool(np.all(np.abs(self.centers - other.centers) <= rtol * scale))
