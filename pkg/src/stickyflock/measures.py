"""Atomic probability measures, step cumulative functions and W1."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kernels import CommunicationKernel, phi_primitive

__all__ = [
    "DiscreteMeasure",
    "StepFunction",
    "StepCDF",
    "cdf",
    "generalized_inverse",
    "l1_distance",
    "wasserstein1",
    "conv_phi_M",
]

MASS_TOL = 1e-12


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """sum_i m_i delta(x - x_i) with unit total mass and sorted positions."""

    positions: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        x = _frozen(self.positions)
        m = _frozen(self.masses)
        if x.ndim != 1 or x.shape != m.shape or x.size == 0:
            raise ValueError("positions and masses must be nonempty 1d arrays of equal length")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(m))):
            raise ValueError("non-finite atom")
        if np.any(m <= 0):
            raise ValueError("atom masses must be positive")
        if np.any(np.diff(x) < 0):
            raise ValueError("atoms must be sorted by position")
        if abs(math.fsum(m) - 1.0) > MASS_TOL:
            raise ValueError(f"total mass {math.fsum(m)!r} differs from 1")
        object.__setattr__(self, "positions", x)
        object.__setattr__(self, "masses", m)

    @classmethod
    def dirac(cls, x: float = 0.0) -> "DiscreteMeasure":
        return cls([x], [1.0])

    def __len__(self):
        return self.positions.size

    def translate(self, shift: float) -> "DiscreteMeasure":
        return DiscreteMeasure(self.positions + shift, self.masses)

    @property
    def diameter(self) -> float:
        return float(self.positions[-1] - self.positions[0])

    def mean(self) -> float:
        return float(np.dot(self.masses, self.positions))


@dataclass(frozen=True, eq=False)
class StepFunction:
    """Right-continuous step function.

    ``values[0]`` holds left of ``breakpoints[0]``; on
    ``[breakpoints[k-1], breakpoints[k])`` the value is ``values[k]``.
    """

    breakpoints: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        bp = _frozen(self.breakpoints)
        vals = _frozen(self.values)
        if bp.ndim != 1 or vals.shape != (bp.size + 1,):
            raise ValueError("need len(values) == len(breakpoints) + 1")
        if np.any(np.diff(bp) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)

    def __call__(self, x):
        idx = np.searchsorted(self.breakpoints, x, side="right")
        out = self.values[idx]
        return float(out) if np.ndim(x) == 0 else out


class StepCDF(StepFunction):
    """Shifted cumulative function M(x) = mu((-inf, x]) - 1/2 of an atomic measure."""

    def __post_init__(self):
        super().__post_init__()
        vals = self.values
        if vals.size < 2:
            raise ValueError("a StepCDF needs at least one jump")
        if vals[0] != -0.5 or vals[-1] != 0.5:
            raise ValueError("a StepCDF runs from -1/2 to 1/2")
        if np.any(np.diff(vals) <= 0):
            raise ValueError("StepCDF values must increase strictly")

    @property
    def jumps(self) -> np.ndarray:
        return np.diff(self.values)

    def to_measure(self) -> DiscreteMeasure:
        return DiscreteMeasure(self.breakpoints, self.jumps)


def cdf(mu: DiscreteMeasure) -> StepCDF:
    """Shifted step cumulative function of an atomic measure (coincident atoms aggregate)."""
    x, inv = np.unique(mu.positions, return_inverse=True)
    mass = np.zeros(x.size)
    np.add.at(mass, inv, mu.masses)
    vals = np.concatenate(([-0.5], -0.5 + np.cumsum(mass)))
    vals[-1] = 0.5
    return StepCDF(x, vals)


def generalized_inverse(M: StepCDF, m):
    """M^{-1}(m) = inf{x : M(x) >= m} for m in (-1/2, 1/2]."""
    m_arr = np.asarray(m, dtype=float)
    if np.any(m_arr <= -0.5) or np.any(m_arr > 0.5):
        raise ValueError("generalized inverse is defined on (-1/2, 1/2]")
    idx = np.searchsorted(M.values[1:], m_arr, side="left")
    out = M.breakpoints[np.minimum(idx, M.breakpoints.size - 1)]
    return float(out) if np.ndim(m) == 0 else out


def l1_distance(F: StepFunction, G: StepFunction) -> float:
    """Exact int |F - G| dx for two step functions equal at +-infinity."""
    if F.values[0] != G.values[0] or F.values[-1] != G.values[-1]:
        raise ValueError("step functions must agree at +-infinity")
    grid = np.union1d(F.breakpoints, G.breakpoints)
    if grid.size < 2:
        return 0.0
    left = grid[:-1]
    diff = np.abs(F(left) - G(left))
    return float(math.fsum(diff * np.diff(grid)))


def wasserstein1(mu: DiscreteMeasure, nu: DiscreteMeasure) -> float:
    """W1 on the line: L1 distance between the cumulative functions."""
    return l1_distance(cdf(mu), cdf(nu))


def conv_phi_M(mu: DiscreteMeasure, kernel: CommunicationKernel, x):
    """(phi * M)(x) = (Phi * rho)(x) = sum_j m_j Phi(x - x_j)."""
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    vals = phi_primitive(kernel, x_arr[:, None] - mu.positions[None, :]) @ mu.masses
    return float(vals[0]) if np.ndim(x) == 0 else vals
