"""Initial data, its atomic discretization and the flux construction.

The pipeline from continuum data to particles is::

    density rho0, velocity u0
      -> psi0 = u0 + Phi * rho0
      -> quantile function a = psi0 o (M0)^{-1}, flux A = int a
      -> nodes/masses (vacuum-aware quantile nodes)
      -> piecewise linear flux A_N with slopes psi_i
      -> initial particle velocities v_i = psi_i - sum_j m_j Phi(x_i - x_j)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .kernels import CommunicationKernel, phi_primitive, phi_second_primitive
from .measures import DiscreteMeasure, StepCDF

__all__ = [
    "InitialDensity",
    "Velocity",
    "InitialData",
    "Discretization",
    "QuantileFlux",
    "PiecewiseLinearFlux",
    "ParticleData",
    "discretize_density",
    "cdf_l1_gap",
    "inverse_linf_gap",
    "build_flux",
    "discretize_flux",
    "initial_velocities",
    "prepare_particles",
]

MASS_TOL = 1e-9
GAUSS_POINTS = 16  # Gauss-Legendre points per smooth segment in the average mode


class InitialDensity:
    """Compactly supported probability measure made of atoms and uniform pieces.

    ``atoms`` is a sequence of ``(x, mass)`` and ``pieces`` a sequence of
    ``(lo, hi, mass)`` with ``lo < hi``; pieces may overlap.  Masses are
    rescaled to sum to exactly one when they already do so within 1e-9.
    """

    def __init__(self, atoms=(), pieces=()):
        atoms = np.asarray(list(atoms), dtype=float).reshape(-1, 2)
        pieces = np.asarray(list(pieces), dtype=float).reshape(-1, 3)
        if not (np.all(np.isfinite(atoms)) and np.all(np.isfinite(pieces))):
            raise ValueError("density spec must be finite")
        if np.any(atoms[:, 1] < 0) or np.any(pieces[:, 2] < 0):
            raise ValueError("negative mass in density spec")
        if np.any(pieces[:, 1] <= pieces[:, 0]):
            raise ValueError("density pieces need lo < hi")
        atoms = atoms[atoms[:, 1] > 0]
        pieces = pieces[pieces[:, 2] > 0]
        total = math.fsum(atoms[:, 1]) + math.fsum(pieces[:, 2])
        if abs(total - 1.0) > MASS_TOL:
            raise ValueError(f"density has total mass {total!r}, expected 1")
        atoms[:, 1] /= total
        pieces[:, 2] /= total
        if atoms.shape[0]:
            xs, inv = np.unique(atoms[:, 0], return_inverse=True)
            ms = np.zeros(xs.size)
            np.add.at(ms, inv, atoms[:, 1])
            atoms = np.column_stack([xs, ms])
        order = np.argsort(pieces[:, 0], kind="stable")
        pieces = pieces[order]
        self.atom_x = atoms[:, 0].copy()
        self.atom_m = atoms[:, 1].copy()
        self.piece_lo = pieces[:, 0].copy()
        self.piece_hi = pieces[:, 1].copy()
        self.piece_m = pieces[:, 2].copy()
        self._build_knots()

    # -- constructors ----------------------------------------------------------

    @classmethod
    def from_atoms(cls, positions, masses) -> "InitialDensity":
        return cls(atoms=list(zip(positions, masses)))

    @classmethod
    def uniform(cls, lo: float, hi: float) -> "InitialDensity":
        return cls(pieces=[(lo, hi, 1.0)])

    @classmethod
    def piecewise_constant(cls, cells) -> "InitialDensity":
        """``cells`` is a sequence of ``(lo, hi, height)``."""
        return cls(pieces=[(lo, hi, h * (hi - lo)) for lo, hi, h in cells])

    @classmethod
    def from_cdf_samples(cls, samples) -> "InitialDensity":
        """Tabulated M0 knots ``(x, M)``; linear between knots, repeated x gives an atom."""
        s = np.asarray(samples, dtype=float).reshape(-1, 2)
        if s.shape[0] < 1:
            raise ValueError("need at least one cdf sample")
        if np.any(np.diff(s[:, 0]) < 0) or np.any(np.diff(s[:, 1]) < 0):
            raise ValueError("cdf samples must be nondecreasing")
        if abs(s[0, 1] + 0.5) > MASS_TOL or abs(s[-1, 1] - 0.5) > MASS_TOL:
            raise ValueError("tabulated cdf must run from -1/2 to 1/2")
        atoms, pieces = [], []
        if s.shape[0] == 1:
            raise ValueError("a single cdf knot carries no mass")
        for (x0, m0), (x1, m1) in zip(s[:-1], s[1:]):
            dm = m1 - m0
            if dm <= 0:
                continue
            if x1 == x0:
                atoms.append((x0, dm))
            else:
                pieces.append((x0, x1, dm))
        return cls(atoms=atoms, pieces=pieces)

    @classmethod
    def from_config(cls, cfg: dict) -> "InitialDensity":
        if not isinstance(cfg, dict) or len(cfg) != 1:
            raise ValueError("density spec must have exactly one of atoms/piecewise_constant/cdf_samples")
        (kind, body), = cfg.items()
        if kind == "atoms":
            return cls(atoms=[tuple(a) for a in body])
        if kind == "piecewise_constant":
            return cls.piecewise_constant([tuple(c) for c in body])
        if kind == "uniform":
            return cls.uniform(*body)
        if kind == "cdf_samples":
            return cls.from_cdf_samples(body)
        raise ValueError(f"unknown density kind {kind!r}")

    # -- structure ---------------------------------------------------------------

    def _build_knots(self):
        knots = np.unique(np.concatenate([self.atom_x, self.piece_lo, self.piece_hi]))
        self.knots = knots
        # tabulated with fsum so that equal mass sets give bit-identical levels
        width = self.piece_hi - self.piece_lo
        at, left = [], []
        for x in knots:
            frac = np.clip((x - self.piece_lo) / width, 0.0, 1.0)
            pieces = list(frac * self.piece_m)
            at.append(math.fsum([-0.5, *self.atom_m[self.atom_x <= x], *pieces]))
            left.append(math.fsum([-0.5, *self.atom_m[self.atom_x < x], *pieces]))
        at[-1] = 0.5
        left[0] = -0.5
        self._M_at = np.array(at)
        self._M_left = np.array(left)

    @property
    def is_atomic(self) -> bool:
        return self.piece_m.size == 0

    @property
    def x_left(self) -> float:
        return float(self.knots[0])

    @property
    def x_right(self) -> float:
        return float(self.knots[-1])

    @property
    def diameter(self) -> float:
        return self.x_right - self.x_left

    def support_components(self) -> list:
        """Closed intervals whose union is the support; atoms give degenerate intervals."""
        ivs = [(x, x) for x in self.atom_x] + list(zip(self.piece_lo, self.piece_hi))
        ivs.sort()
        merged = []
        for lo, hi in ivs:
            if merged and lo <= merged[-1][1]:
                merged[-1][1] = max(merged[-1][1], hi)
            else:
                merged.append([lo, hi])
        return [(float(a), float(b)) for a, b in merged]

    def vacuum_intervals(self) -> list:
        """Open internal gaps (a, b) of the support, left to right."""
        comps = self.support_components()
        return [(comps[i][1], comps[i + 1][0]) for i in range(len(comps) - 1)]

    # -- cumulative function -------------------------------------------------

    def _cdf(self, x, strict: bool):
        x = np.asarray(x, dtype=float)
        xf = np.atleast_1d(x)
        kn, Mat, Mleft = self.knots, self._M_at, self._M_left
        k = np.searchsorted(kn, xf, side="right") - 1
        kc = np.clip(k, 0, kn.size - 1)
        kn1 = np.minimum(kc + 1, kn.size - 1)
        span = kn[kn1] - kn[kc]
        frac = np.divide(xf - kn[kc], span, out=np.zeros_like(xf), where=span > 0)
        out = Mat[kc] + frac * (Mleft[kn1] - Mat[kc])
        if strict:
            out = np.where(xf == kn[kc], Mleft[kc], out)
        out = np.where(k < 0, -0.5, np.where(k >= kn.size - 1, Mat[-1], out))
        if strict:
            out = np.where(xf == kn[-1], Mleft[-1], out)
        return float(out[0]) if x.ndim == 0 else out

    def cdf(self, x):
        """M0(x) = rho0((-inf, x]) - 1/2."""
        return self._cdf(x, strict=False)

    def cdf_left(self, x):
        """Left limit M0(x-)."""
        return self._cdf(x, strict=True)

    def quantile(self, m):
        """(M0)^{-1}(m) = inf{x : M0(x) >= m} for m in (-1/2, 1/2]."""
        m_arr = np.atleast_1d(np.asarray(m, dtype=float))
        if np.any(m_arr <= -0.5) or np.any(m_arr > 0.5 + 1e-15):
            raise ValueError("quantile is defined on (-1/2, 1/2]")
        kn, Mat, Mleft = self.knots, self._M_at, self._M_left
        k = np.searchsorted(Mat, m_arr, side="left")
        k = np.minimum(k, kn.size - 1)
        out = kn[k].copy()
        inside = (k > 0) & (Mleft[k] >= m_arr) & (Mleft[k] > Mat[np.maximum(k - 1, 0)])
        if np.any(inside):
            kk = k[inside]
            lo_x, hi_x = kn[kk - 1], kn[kk]
            lo_m, hi_m = Mat[kk - 1], Mleft[kk]
            out[inside] = lo_x + (m_arr[inside] - lo_m) / (hi_m - lo_m) * (hi_x - lo_x)
        return float(out[0]) if np.ndim(m) == 0 else out

    def right_quantile(self, m):
        """sup{x : M0(x) <= m} for m in [-1/2, 1/2)."""
        m_arr = np.atleast_1d(np.asarray(m, dtype=float))
        kn, Mat, Mleft = self.knots, self._M_at, self._M_left
        k = np.searchsorted(Mat, m_arr, side="right")
        k = np.minimum(k, kn.size - 1)
        out = kn[k].copy()
        inside = (k > 0) & (Mleft[k] > m_arr)
        if np.any(inside):
            kk = k[inside]
            lo_x, hi_x = kn[kk - 1], kn[kk]
            lo_m, hi_m = Mat[kk - 1], Mleft[kk]
            out[inside] = lo_x + (m_arr[inside] - lo_m) / (hi_m - lo_m) * (hi_x - lo_x)
        return float(out[0]) if np.ndim(m) == 0 else out

    def m_breakpoints(self) -> np.ndarray:
        """Levels in [-1/2, 1/2] where the quantile changes regime (atom or piece boundary)."""
        lv = np.unique(np.concatenate([[-0.5, 0.5], self._M_at, self._M_left]))
        return lv[(lv >= -0.5) & (lv <= 0.5)]

    # -- interaction ---------------------------------------------------------

    def conv_Phi(self, kernel: CommunicationKernel, x):
        """(Phi * rho0)(x), exact via the second primitive on uniform pieces."""
        x = np.asarray(x, dtype=float)
        xf = np.atleast_1d(x)
        val = np.zeros_like(xf)
        if self.atom_x.size:
            val += phi_primitive(kernel, xf[:, None] - self.atom_x[None, :]) @ self.atom_m
        if self.piece_m.size:
            dens = self.piece_m / (self.piece_hi - self.piece_lo)
            psi_lo = phi_second_primitive(kernel, xf[:, None] - self.piece_lo[None, :])
            psi_hi = phi_second_primitive(kernel, xf[:, None] - self.piece_hi[None, :])
            val += (psi_lo - psi_hi) @ dens
        return float(val[0]) if x.ndim == 0 else val


@dataclass(frozen=True)
class Velocity:
    """Initial velocity u0 from a small closed set of function specs.

    kinds: ``constant`` (value), ``polynomial`` (ascending coefficients),
    ``sine`` (amplitude * sin(2 pi frequency x + phase) + offset),
    ``piecewise_linear`` (knots, values; constant extension) and
    ``per_atom`` (atom positions, values; only evaluable at those atoms).
    """

    kind: str
    params: tuple = ()
    knots: tuple = ()

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        k, p = self.kind, self.params
        if k == "constant":
            out = np.full_like(x, p[0])
        elif k == "polynomial":
            out = np.polynomial.polynomial.polyval(x, np.asarray(p, dtype=float))
        elif k == "sine":
            amp, freq, phase, offset = p
            out = amp * np.sin(2.0 * np.pi * freq * x + phase) + offset
        elif k == "piecewise_linear":
            out = np.interp(x, np.asarray(self.knots), np.asarray(p))
        elif k == "per_atom":
            pos = np.asarray(self.knots)
            idx = np.clip(np.searchsorted(pos, x), 0, pos.size - 1)
            if np.any(pos[idx] != x):
                raise ValueError("per-atom velocity evaluated away from an atom")
            out = np.asarray(p)[idx]
        else:
            raise ValueError(f"unknown velocity kind {k!r}")
        if not np.all(np.isfinite(out)):
            raise ValueError("initial velocity is not finite")
        return float(out) if x.ndim == 0 else out

    @classmethod
    def constant(cls, c: float) -> "Velocity":
        return cls("constant", (float(c),))

    @classmethod
    def sine(cls, amplitude=1.0, frequency=1.0, phase=0.0, offset=0.0) -> "Velocity":
        return cls("sine", (float(amplitude), float(frequency), float(phase), float(offset)))

    @classmethod
    def polynomial(cls, coeffs) -> "Velocity":
        return cls("polynomial", tuple(float(c) for c in coeffs))

    @classmethod
    def piecewise_linear(cls, knots, values) -> "Velocity":
        return cls("piecewise_linear", tuple(float(v) for v in values), tuple(float(k) for k in knots))

    @classmethod
    def per_atom(cls, positions, values) -> "Velocity":
        pos = np.asarray(positions, dtype=float)
        val = np.asarray(values, dtype=float)
        if pos.shape != val.shape:
            raise ValueError("per-atom velocities must match the atoms")
        order = np.argsort(pos, kind="stable")
        return cls("per_atom", tuple(val[order]), tuple(pos[order]))

    @classmethod
    def from_config(cls, cfg: dict, density: Optional[InitialDensity] = None) -> "Velocity":
        if not isinstance(cfg, dict) or len(cfg) != 1:
            raise ValueError("velocity spec must have exactly one key")
        (kind, body), = cfg.items()
        if kind == "constant":
            return cls.constant(body)
        if kind == "polynomial":
            return cls.polynomial(body)
        if kind == "sine":
            return cls.sine(**body)
        if kind == "piecewise_linear":
            pts = np.asarray(body, dtype=float).reshape(-1, 2)
            return cls.piecewise_linear(pts[:, 0], pts[:, 1])
        if kind == "per_atom":
            if density is None or not density.is_atomic:
                raise ValueError("per_atom velocities need an atomic density")
            vals = np.asarray(body, dtype=float)
            if vals.size != density.atom_x.size:
                raise ValueError("per_atom velocity count must match the (distinct) atoms")
            return cls.per_atom(density.atom_x, vals)
        raise ValueError(f"unknown velocity kind {kind!r}")


@dataclass(frozen=True)
class InitialData:
    density: InitialDensity
    velocity: Callable
    holder_beta: float = 1.0

    @classmethod
    def from_config(cls, cfg: dict) -> "InitialData":
        if "density" not in cfg or "velocity" not in cfg:
            raise ValueError("initial data needs 'density' and 'velocity'")
        dens = InitialDensity.from_config(cfg["density"])
        vel = Velocity.from_config(cfg["velocity"], dens)
        beta = float(cfg.get("holder_beta", 1.0))
        if not 0 < beta <= 1:
            raise ValueError("holder_beta must lie in (0, 1]")
        return cls(dens, vel, beta)


# ---------------------------------------------------------------------------
# discretization of the density


@dataclass(frozen=True)
class Discretization:
    nodes: np.ndarray
    masses: np.ndarray
    companions: np.ndarray

    @property
    def theta(self) -> np.ndarray:
        th = np.concatenate(([-0.5], -0.5 + np.cumsum(self.masses)))
        th[-1] = 0.5
        return th

    def measure(self) -> DiscreteMeasure:
        return DiscreteMeasure(self.nodes, self.masses)

    def cdf(self) -> StepCDF:
        return StepCDF(self.nodes, self.theta)


def discretize_density(density: InitialDensity, N: int) -> Discretization:
    """Vacuum-aware quantile nodes with at most N atoms.

    Internal vacuum intervals longer than D0/N contribute their left
    endpoints as nodes; the remaining nodes are equally spaced on the
    support with the large vacua collapsed.  Masses are the density of
    the half-open cells between consecutive nodes; zero-mass cells are
    dropped.
    """
    if N < 1:
        raise ValueError("N must be a positive integer")
    xl, xr = density.x_left, density.x_right
    D0 = xr - xl
    if D0 == 0.0:
        return Discretization(np.array([xl]), np.array([1.0]), np.array([xl]))
    if density.is_atomic and density.atom_x.size <= N:
        x = density.atom_x.copy()
        comp = np.concatenate(([xl], x[:-1]))
        return Discretization(x, density.atom_m.copy(), comp)

    large = [(a, b) for a, b in density.vacuum_intervals() if b - a > D0 / N]
    K = len(large)
    lens = np.array([b - a for a, b in large])
    a_k = np.array([a for a, _ in large])
    b_k = np.array([b for _, b in large])
    removed_before = np.concatenate(([0.0], np.cumsum(lens)))[:-1] if K else np.zeros(0)
    y_a = a_k - xl - removed_before
    L = D0 - float(lens.sum()) if K else D0
    n2 = N - K
    h = L / n2
    y = np.arange(1, n2 + 1) * h
    y[-1] = L
    tol = 1e-12 * max(L, D0)
    for i in range(n2 - 1):
        if K and np.any(np.abs(y[i] - y_a) <= tol):
            gap_left = y[i] - (y[i - 1] if i > 0 else 0.0)
            gap_right = y[i + 1] - y[i]
            y[i] += min(gap_left, gap_right) / 4.0
    # back to real coordinates; a node hitting a collapsed vacuum exactly goes left
    shift = np.zeros(n2)
    for yk, ln in zip(y_a, lens):
        shift += np.where(y > yk, ln, 0.0)
    x2 = xl + y + shift
    x2[-1] = xr
    x2 = np.minimum(x2, xr)

    tags = np.concatenate([np.arange(K), np.full(n2, -1)])
    allx = np.concatenate([a_k, x2])
    order = np.lexsort((tags, allx))
    allx, tags = allx[order], tags[order]
    keep = np.concatenate(([True], np.diff(allx) > 0))
    allx, tags = allx[keep], tags[keep]

    comp = np.empty_like(allx)
    comp[0] = xl
    for i in range(1, allx.size):
        prev = tags[i - 1]
        comp[i] = b_k[prev] if prev >= 0 else allx[i - 1]

    theta = density.cdf(allx)
    theta[-1] = 0.5
    masses = np.diff(np.concatenate(([-0.5], theta)))
    pos = masses > 0
    nodes, comp = allx[pos], comp[pos]
    nodes = _round_into_bound(density, nodes, D0 / N)
    theta = density.cdf(nodes)
    theta[-1] = 0.5
    masses = np.diff(np.concatenate(([-0.5], theta)))
    return Discretization(nodes, masses, comp)


def _round_into_bound(density: InitialDensity, nodes: np.ndarray, bound: float) -> np.ndarray:
    """Move nodes by a few ulps so the measured quantile gap stays <= bound.

    Without large vacua the cells are exactly D0/N wide, and rounding in
    the node placement can overshoot that width in the last bits.
    """
    x = nodes.copy()
    best, best_excess = x, math.inf
    for _ in range(4 * x.size + 8):
        theta = density.cdf(x)
        theta[-1] = 0.5
        theta = np.concatenate(([-0.5], theta))
        left = density.right_quantile(theta[:-1])
        right = density.quantile(theta[1:])
        gl, gr = np.abs(x - left), np.abs(x - right)
        excess = np.maximum(gl, gr) - bound
        worst = float(np.max(excess))
        if worst < best_excess:
            best, best_excess = x, worst
        if worst <= 0.0:
            break
        bad = excess > 0
        ref = np.where(gl >= gr, left, right)
        moved = x + np.sign(ref - x) * excess
        x = np.where(bad, np.nextafter(moved, ref), x)
    # a vacuum of length exactly D0/N can make the float bound unreachable
    return best


def _linear_abs_integral(d0, d1, length):
    """Exact int_0^length |linear from d0 to d1|."""
    d0 = np.asarray(d0)
    d1 = np.asarray(d1)
    same = d0 * d1 >= 0
    denom = np.where(same, 1.0, np.abs(d0) + np.abs(d1))
    crossing = (d0 * d0 + d1 * d1) / (2.0 * denom)
    return length * np.where(same, 0.5 * (np.abs(d0) + np.abs(d1)), crossing)


LEVEL_SNAP = 1e-13


def _node_levels(density: InitialDensity, nodes, masses) -> np.ndarray:
    """Cumulative levels of (nodes, masses), snapped to M0(nodes) when they agree to rounding.

    Summed masses can miss a flat level of M0 by an ulp, which would move a
    quantile across a whole vacuum.
    """
    nodes = np.asarray(nodes, float)
    theta = Discretization(nodes, masses, nodes).theta
    exact = density.cdf(nodes)
    inner = theta[1:-1]
    snap = np.abs(inner - exact[:-1]) <= LEVEL_SNAP
    theta[1:-1] = np.where(snap, exact[:-1], inner)
    return theta


def cdf_l1_gap(density: InitialDensity, nodes, masses) -> float:
    """Exact ||M0 - M_N||_{L1} for an atomic approximation (nodes, masses)."""
    MN = StepCDF(np.asarray(nodes, float), _node_levels(density, nodes, masses))
    grid = np.union1d(density.knots, MN.breakpoints)
    lo, hi = grid[:-1], grid[1:]
    c = MN(lo)
    d0 = density.cdf(lo) - c
    d1 = density.cdf_left(hi) - c
    return float(math.fsum(_linear_abs_integral(d0, d1, hi - lo)))


def inverse_linf_gap(density: InitialDensity, nodes, masses) -> float:
    """sup over m in (-1/2, 1/2] of |(M0)^{-1}(m) - (M_N)^{-1}(m)|."""
    nodes = np.asarray(nodes, float)
    theta = _node_levels(density, nodes, masses)
    left = density.right_quantile(theta[:-1])
    right = density.quantile(theta[1:])
    return float(max(np.max(np.abs(nodes - left)), np.max(np.abs(nodes - right))))


# ---------------------------------------------------------------------------
# fluxes


def _gauss(f: Callable, lo: float, hi: float, points: int) -> float:
    t, w = np.polynomial.legendre.leggauss(points)
    vals = np.asarray(f(0.5 * (hi - lo) * t + 0.5 * (hi + lo)), dtype=float)
    return 0.5 * (hi - lo) * math.fsum(w * vals)


class QuantileFlux:
    """psi0 = u0 + Phi * rho0, its quantile composition a and the flux A = int a."""

    def __init__(self, density: InitialDensity, velocity: Callable, kernel: CommunicationKernel):
        self.density = density
        self.velocity = velocity
        self.kernel = kernel
        self._levels = density.m_breakpoints()

    def psi0(self, x):
        vals = np.asarray(self.velocity(x), dtype=float) + self.density.conv_Phi(self.kernel, x)
        if not np.all(np.isfinite(vals)):
            raise ValueError("psi0 is not finite")
        return float(vals) if np.ndim(x) == 0 else vals

    def a(self, m):
        return self.psi0(self.density.quantile(m))

    def integral(self, lo: float, hi: float, points: int = GAUSS_POINTS) -> float:
        """int_lo^hi a(m) dm; exact on atom levels, Gauss-Legendre between density knots."""
        if hi <= lo:
            return 0.0
        cuts = self._levels[(self._levels > lo) & (self._levels < hi)]
        edges = np.concatenate(([lo], cuts, [hi]))
        total = []
        for s0, s1 in zip(edges[:-1], edges[1:]):
            if s1 <= s0:
                continue
            mid = 0.5 * (s0 + s1)
            q0 = self.density.quantile(mid)
            # an atom level: the quantile is constant across the whole segment
            if self.density.quantile(s1) == q0 and self.density.right_quantile(s0) == q0:
                total.append((s1 - s0) * self.psi0(q0))
                continue
            total.append(_gauss(self.a, s0, s1, points))
        return math.fsum(total)

    def A(self, m):
        m_arr = np.atleast_1d(np.asarray(m, dtype=float))
        out = np.array([self.integral(-0.5, mm) for mm in m_arr])
        return float(out[0]) if np.ndim(m) == 0 else out


def build_flux(velocity: Callable, density: InitialDensity, kernel: CommunicationKernel) -> QuantileFlux:
    """Quantile function a = psi0 o (M0)^{-1} and its primitive A."""
    return QuantileFlux(density, velocity, kernel)


@dataclass(frozen=True, eq=False)
class PiecewiseLinearFlux:
    """Continuous piecewise linear A_N on [-1/2, 1/2] with slope psi_i on [theta_{i-1}, theta_i]."""

    theta: np.ndarray
    slopes: np.ndarray
    base: float = 0.0

    def __post_init__(self):
        th = np.array(self.theta, dtype=float)
        sl = np.array(self.slopes, dtype=float)
        if th.ndim != 1 or sl.shape != (th.size - 1,) or sl.size == 0:
            raise ValueError("need len(theta) == len(slopes) + 1")
        if th[0] != -0.5 or th[-1] != 0.5 or np.any(np.diff(th) <= 0):
            raise ValueError("breakpoints must increase from -1/2 to 1/2")
        if not np.all(np.isfinite(sl)):
            raise ValueError("flux slopes must be finite")
        th.setflags(write=False)
        sl.setflags(write=False)
        object.__setattr__(self, "theta", th)
        object.__setattr__(self, "slopes", sl)
        nodes = np.concatenate(([0.0], np.cumsum(np.diff(th) * sl)))
        nodes.setflags(write=False)
        object.__setattr__(self, "_values", nodes + self.base)

    @classmethod
    def from_masses(cls, masses, slopes, base: float = 0.0) -> "PiecewiseLinearFlux":
        th = np.concatenate(([-0.5], -0.5 + np.cumsum(masses)))
        th[-1] = 0.5
        return cls(th, slopes, base)

    @property
    def masses(self) -> np.ndarray:
        return np.diff(self.theta)

    @property
    def lipschitz(self) -> float:
        return float(np.max(np.abs(self.slopes)))

    @property
    def values_at_breakpoints(self) -> np.ndarray:
        return self._values

    def __call__(self, m):
        m_arr = np.asarray(m, dtype=float)
        out = np.interp(m_arr, self.theta, self._values)
        return float(out) if m_arr.ndim == 0 else out

    def slope_at(self, m):
        """Slope of the piece containing m (left-open cells, matching the quantile)."""
        idx = np.clip(np.searchsorted(self.theta, m, side="left") - 1, 0, self.slopes.size - 1)
        return self.slopes[idx]

    def lip_distance(self, other: "PiecewiseLinearFlux") -> float:
        """|A - B|_Lip: largest slope difference over the common breakpoint refinement."""
        grid = np.union1d(self.theta, other.theta)
        mids = 0.5 * (grid[:-1] + grid[1:])
        return float(np.max(np.abs(self.slope_at(mids) - other.slope_at(mids))))

    def shifted(self, c: float) -> "PiecewiseLinearFlux":
        """A(m) + c (m + 1/2): every slope raised by c."""
        return PiecewiseLinearFlux(self.theta, self.slopes + c, self.base)


def discretize_flux(source, nodes, masses, mode: str = "sample") -> PiecewiseLinearFlux:
    """Slopes psi_i by point sampling psi0 at the nodes or by cell averages of a.

    ``source`` is a QuantileFlux or a plain callable, read as psi0 in the
    sample mode and as the quantile function a in the average mode.
    """
    nodes = np.asarray(nodes, dtype=float)
    masses = np.asarray(masses, dtype=float)
    theta = np.concatenate(([-0.5], -0.5 + np.cumsum(masses)))
    theta[-1] = 0.5
    if mode == "sample":
        f = source.psi0 if isinstance(source, QuantileFlux) else source
        slopes = np.asarray(f(nodes), dtype=float)
    elif mode == "average":
        if isinstance(source, QuantileFlux):
            slopes = np.array(
                [source.integral(lo, hi) / mi for lo, hi, mi in zip(theta[:-1], theta[1:], masses)]
            )
        else:
            slopes = np.empty(masses.size)
            for i, (lo, hi) in enumerate(zip(theta[:-1], theta[1:])):
                slopes[i] = _gauss(source, lo, hi, GAUSS_POINTS) / (hi - lo)
    else:
        raise ValueError(f"unknown flux mode {mode!r}")
    return PiecewiseLinearFlux(theta, slopes)


def initial_velocities(flux: PiecewiseLinearFlux, nodes, masses, kernel: CommunicationKernel) -> np.ndarray:
    """v_i = psi_i - sum_j m_j Phi(x_i - x_j)."""
    x = np.asarray(nodes, dtype=float)
    m = np.asarray(masses, dtype=float)
    return flux.slopes - phi_primitive(kernel, x[:, None] - x[None, :]) @ m


@dataclass(frozen=True)
class ParticleData:
    """Atomic data ready for the sticky particle integrator."""

    positions: np.ndarray
    masses: np.ndarray
    flux: PiecewiseLinearFlux
    velocities: np.ndarray

    @property
    def psi(self) -> np.ndarray:
        return self.flux.slopes

    def measure(self) -> DiscreteMeasure:
        return DiscreteMeasure(self.positions, self.masses)


def prepare_particles(
    data: InitialData, kernel: CommunicationKernel, N: int, mode: str = "sample"
) -> ParticleData:
    disc = discretize_density(data.density, N)
    qf = build_flux(data.velocity, data.density, kernel)
    flux = discretize_flux(qf, disc.nodes, disc.masses, mode)
    v0 = initial_velocities(flux, disc.nodes, disc.masses, kernel)
    return ParticleData(disc.nodes, disc.masses, flux, v0)
