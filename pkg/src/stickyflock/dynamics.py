"""Sticky-particle Cucker-Smale dynamics in the conserved psi variables.

Between collisions every cluster carries a constant

    psi_k = v_k + sum_j m_j Phi(x_k - x_j)

so the positions obey the autonomous ODE dx_k/dt = psi_k - sum_j m_j Phi(x_k - x_j)
with only the continuous Phi appearing.  Collisions are located on the cubic
Hermite interpolant of each RK4 step and resolved by the barycentric merge
(mass-weighted psi, mass-weighted position).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np

from .fastsum import interaction_sum
from .kernels import CommunicationKernel, phi
from .measures import DiscreteMeasure

__all__ = [
    "ClusterState",
    "CollisionEvent",
    "SimulationTrace",
    "ReferenceTrajectory",
    "initial_state",
    "velocity_from_psi",
    "step",
    "locate_collision",
    "merge",
    "simulate",
    "direct_cs_reference",
    "merge_tolerance",
]

DT_MAX = 0.01
OVERSHOOT = 1.5  # trial step relative to the linearly predicted contact time
SAMPLES = 65
TIME_TOL = 1e-12
SIMULTANEITY_TOL = 1e-11
CONSERVATION_TOL = 1e-13


def merge_tolerance(x) -> np.ndarray:
    """Coincidence threshold eps_merge = 1e-12 (1 + |x|)."""
    return 1e-12 * (1.0 + np.abs(x))


@dataclass(frozen=True, eq=False)
class ClusterState:
    """Live sticky-particle configuration.

    Cluster k holds the original particles ``start[k] <= i < stop[k]``.
    """

    t: float
    x: np.ndarray
    m: np.ndarray
    psi: np.ndarray
    start: np.ndarray
    stop: np.ndarray

    def __post_init__(self):
        arrs = {}
        for name, dt in (("x", float), ("m", float), ("psi", float), ("start", np.int64), ("stop", np.int64)):
            a = np.array(getattr(self, name), dtype=dt, copy=True)
            a.setflags(write=False)
            arrs[name] = a
            object.__setattr__(self, name, a)
        K = arrs["x"].size
        if K == 0 or any(a.shape != (K,) for a in arrs.values()):
            raise ValueError("cluster arrays must be nonempty and of equal length")
        if not (np.all(np.isfinite(arrs["x"])) and np.all(np.isfinite(arrs["psi"]))):
            raise ValueError("non-finite cluster data")
        if np.any(arrs["m"] <= 0):
            raise ValueError("cluster masses must be positive")
        st, sp = arrs["start"], arrs["stop"]
        if st[0] != 0 or np.any(sp <= st) or np.any(st[1:] != sp[:-1]):
            raise ValueError("member ranges must partition the particles contiguously")

    @property
    def K(self) -> int:
        return self.x.size

    @property
    def N(self) -> int:
        return int(self.stop[-1])

    @property
    def ordered(self) -> bool:
        return bool(np.all(np.diff(self.x) > 0))

    def momentum_psi(self) -> float:
        return math.fsum(self.m * self.psi)

    def measure(self) -> DiscreteMeasure:
        return DiscreteMeasure(self.x, self.m)

    def particle_positions(self) -> np.ndarray:
        """Position of every original particle (that of its cluster)."""
        return np.repeat(self.x, self.stop - self.start)

    def replace(self, **kw) -> "ClusterState":
        d = dict(t=self.t, x=self.x, m=self.m, psi=self.psi, start=self.start, stop=self.stop)
        d.update(kw)
        return ClusterState(**d)


@dataclass
class CollisionEvent:
    """One merged chain.  ``members`` is the range [first, last] of original particles."""

    t: float
    members: tuple
    position: float
    pre_m: np.ndarray
    pre_psi: np.ndarray
    pre_v: np.ndarray
    psi_post: float
    v_post: float = math.nan
    oleinik_margin: float = math.nan


@dataclass
class SimulationTrace:
    """Snapshots (states and their velocities), collision events and the run setup."""

    kernel: CommunicationKernel
    particle_m: np.ndarray
    particle_psi: np.ndarray
    states: List[ClusterState] = field(default_factory=list)
    velocities: List[np.ndarray] = field(default_factory=list)
    events: List[CollisionEvent] = field(default_factory=list)
    config: dict = field(default_factory=dict)
    psi_drift: float = 0.0

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.states])

    def state_at(self, t: float) -> ClusterState:
        for s in self.states:
            if s.t == t:
                return s
        raise KeyError(f"no snapshot at t={t!r}")

    def velocity_at(self, t: float) -> np.ndarray:
        for s, v in zip(self.states, self.velocities):
            if s.t == t:
                return v
        raise KeyError(f"no snapshot at t={t!r}")

    @property
    def first_collision_time(self) -> float:
        return self.events[0].t if self.events else math.inf


def velocity_from_psi(state: ClusterState, kernel: CommunicationKernel) -> np.ndarray:
    """v_k = psi_k - sum_j m_j Phi(x_k - x_j)."""
    return _velocity(state.x, state.m, state.psi, kernel)


def _velocity(x, m, psi, kernel) -> np.ndarray:
    return psi - interaction_sum(kernel, x, m)


# ---------------------------------------------------------------------------
# merging


def _touching(x, v) -> np.ndarray:
    """Gaps within the merge tolerance that are not opening (or exactly closed)."""
    tol = merge_tolerance(x)
    gaps = np.diff(x)
    near = gaps <= np.maximum(tol[:-1], tol[1:])
    return np.nonzero(near & ((v[:-1] >= v[1:]) | (gaps == 0.0)))[0]


def _merge_chains(x, m, psi, start, stop, chains):
    """Merge disjoint runs of clusters [lo, hi] (inclusive); returns new arrays."""
    keep = np.ones(x.size, dtype=bool)
    x, m, psi, stop = x.copy(), m.copy(), psi.copy(), stop.copy()
    for lo, hi in chains:
        sl = slice(lo, hi + 1)
        mass = math.fsum(m[sl])
        x[lo] = math.fsum(m[sl] * x[sl]) / mass
        psi[lo] = math.fsum(m[sl] * psi[sl]) / mass
        m[lo] = mass
        stop[lo] = stop[hi]
        keep[lo + 1 : hi + 1] = False
    return x[keep], m[keep], psi[keep], start[keep], stop[keep]


def _chains_from_gaps(gaps: np.ndarray) -> list:
    """Group sorted gap indices into inclusive cluster runs."""
    chains = []
    for g in np.unique(gaps):
        if chains and chains[-1][1] == g:
            chains[-1][1] = g + 1
        else:
            chains.append([int(g), int(g) + 1])
    return [tuple(c) for c in chains]


def merge(state: ClusterState, chain: Sequence[int]) -> ClusterState:
    """Replace the adjacent clusters ``chain`` by their barycentric merge."""
    idx = sorted(int(i) for i in chain)
    if not idx or idx != list(range(idx[0], idx[-1] + 1)) or idx[0] < 0 or idx[-1] >= state.K:
        raise ValueError("chain must list adjacent cluster indices")
    x, m, psi, st, sp = _merge_chains(state.x, state.m, state.psi, state.start, state.stop, [(idx[0], idx[-1])])
    return ClusterState(state.t, x, m, psi, st, sp)


# ---------------------------------------------------------------------------
# time stepping


def _rk4(x, m, psi, kernel, h, k1):
    k2 = _velocity(x + 0.5 * h * k1, m, psi, kernel)
    k3 = _velocity(x + 0.5 * h * k2, m, psi, kernel)
    k4 = _velocity(x + h * k3, m, psi, kernel)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def step(state: ClusterState, kernel: CommunicationKernel, dt_max: float, safety: float = 0.5):
    """One RK4 step with dt = min(dt_max, safety * min gap / max closing speed).

    Returns ``(new_state, dt)``; ``new_state.ordered`` is False when the step
    overshot a contact, in which case the caller should locate the collision.
    """
    if not dt_max > 0:
        raise ValueError("dt_max must be positive")
    v = velocity_from_psi(state, kernel)
    dt = dt_max
    if state.K > 1:
        closing = v[:-1] - v[1:]
        gaps = np.diff(state.x)
        if np.any(closing > 0):
            dt = min(dt, safety * float(np.min(gaps[closing > 0] / closing[closing > 0])))
    x1 = _rk4(state.x, state.m, state.psi, kernel, dt, v)
    return state.replace(t=state.t + dt, x=x1), dt


def _hermite_coeffs(y0, y1, d0, d1):
    """Power-basis coefficients of the cubic with values y0, y1 and slopes d0, d1 on [0, 1]."""
    c = 3.0 * (y1 - y0) - 2.0 * d0 - d1
    d = 2.0 * (y0 - y1) + d0 + d1
    return y0, d0, c, d


def _cubic(coef, tau):
    a, b, c, d = coef
    return a + tau * (b + tau * (c + tau * d))


def _cubic_deriv(coef, tau):
    _, b, c, d = coef
    return b + tau * (2.0 * c + 3.0 * tau * d)


def _critical_points(coef):
    """Roots of the derivative in (0, 1), as an (n, 2) array padded with nan."""
    _, b, c, d = (np.atleast_1d(np.asarray(v, float)) for v in coef)
    A, B, C = 3.0 * d, 2.0 * c, b
    out = np.full((b.size, 2), np.nan)
    with np.errstate(divide="ignore", invalid="ignore"):
        disc = B * B - 4.0 * A * C
        sq = np.sqrt(np.where(disc >= 0, disc, np.nan))
        quad = np.abs(A) > 1e-300
        q = -0.5 * (B + np.copysign(sq, B))
        r1 = np.where(quad, q / A, np.where(np.abs(B) > 0, -C / B, np.nan))
        r2 = np.where(quad, C / q, np.nan)
    for j, r in enumerate((r1, r2)):
        out[:, j] = np.where((r > 0) & (r < 1), r, np.nan)
    return out


def _first_contact(x0, x1, v0, v1, h, t):
    """Earliest tau in (0, 1] where some Hermite gap reaches eps_merge, and the gaps merging then."""
    eps = merge_tolerance(np.maximum(np.abs(x0), np.abs(x1)))
    eps = np.maximum(eps[:-1], eps[1:])
    coef = _hermite_coeffs(np.diff(x0), np.diff(x1), h * np.diff(v0), h * np.diff(v1))
    crit = _critical_points(coef)
    gmin = np.minimum(coef[0], _cubic(coef, 1.0))
    for j in range(2):
        cj = crit[:, j]
        val = np.where(np.isnan(cj), np.inf, _cubic(coef, np.nan_to_num(cj)))
        gmin = np.minimum(gmin, val)
    flagged = np.nonzero(gmin <= eps)[0]
    if flagged.size == 0:
        return None
    tol = TIME_TOL * (1.0 + t) / h
    base = np.linspace(0.0, 1.0, SAMPLES)
    opening = np.diff(v0) > 0
    taus = np.full(flagged.size, np.inf)
    for n, k in enumerate(flagged):
        ck = tuple(c[k] for c in coef)
        pts = np.concatenate([base, crit[k][~np.isnan(crit[k])]])
        pts.sort()
        vals = _cubic(ck, pts)
        inside = vals <= eps[k]
        if inside[0] and opening[k]:
            # separating from within eps: only a later return counts
            left = np.nonzero(~inside)[0]
            if left.size == 0:
                continue
            inside[: left[0]] = False
        below = np.nonzero(inside)[0]
        if below.size == 0:
            continue
        first = int(below[0])
        if first == 0:
            taus[n] = 0.0
            continue
        lo, hi = pts[first - 1], pts[first]
        for _ in range(200):
            if hi - lo <= tol:
                break
            mid = 0.5 * (lo + hi)
            if _cubic(ck, mid) <= eps[k]:
                hi = mid
            else:
                lo = mid
        taus[n] = hi
    tau = float(taus.min())
    if math.isinf(tau):
        return None
    sim = SIMULTANEITY_TOL * (1.0 + t) / h
    return tau, flagged[taus <= tau + sim]


def locate_collision(state: ClusterState, kernel: CommunicationKernel, h: float):
    """Trial RK4 step of length h; returns (t_hit, gap indices) or None.

    Gap k joins clusters k and k+1.
    """
    v0 = velocity_from_psi(state, kernel)
    x1 = _rk4(state.x, state.m, state.psi, kernel, h, v0)
    v1 = _velocity(x1, state.m, state.psi, kernel)
    hit = _first_contact(state.x, x1, v0, v1, h, state.t)
    if hit is None:
        return None
    tau, gaps = hit
    return state.t + tau * h, [int(g) for g in gaps]


# ---------------------------------------------------------------------------
# driver


def initial_state(positions, masses, *, psi=None, velocities=None, kernel: Optional[CommunicationKernel] = None):
    """Particle arrays (sorted) -> (unmerged particle data, psi per particle).

    Exactly one of ``psi`` and ``velocities`` must be given; velocities need
    the kernel to build psi.  Ties in position are ordered by decreasing psi.
    """
    x = np.asarray(positions, dtype=float)
    m = np.asarray(masses, dtype=float)
    if x.ndim != 1 or x.shape != m.shape or x.size == 0:
        raise ValueError("positions and masses must be nonempty 1d arrays of equal length")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(m))):
        raise ValueError("non-finite particle data")
    if np.any(np.diff(x) < 0):
        raise ValueError("positions must be sorted")
    if np.any(m <= 0) or abs(math.fsum(m) - 1.0) > 1e-12:
        raise ValueError("masses must be positive with unit total")
    if (psi is None) == (velocities is None):
        raise ValueError("give exactly one of psi and velocities")
    if psi is None:
        if kernel is None:
            raise ValueError("velocities need a kernel to form psi")
        v = np.asarray(velocities, dtype=float)
        if v.shape != x.shape or not np.all(np.isfinite(v)):
            raise ValueError("bad velocities")
        p = v + np.asarray(interaction_sum(kernel, x, m))
    else:
        p = np.asarray(psi, dtype=float)
        if p.shape != x.shape or not np.all(np.isfinite(p)):
            raise ValueError("bad psi")
    order = np.lexsort((-p, x))
    return x[order], m[order], p[order]


def simulate(
    initial,
    kernel: CommunicationKernel,
    T: float,
    snapshot_times: Optional[Sequence[float]] = None,
    *,
    dt_max: float = DT_MAX,
    on_event: Optional[Callable[[CollisionEvent, ClusterState], None]] = None,
    force_merge: Sequence[Sequence[int]] = (),
    config: Optional[dict] = None,
) -> SimulationTrace:
    """Run the sticky dynamics on [0, T].

    ``initial`` is a ParticleData, a ClusterState, or a tuple
    ``(positions, masses, psi)``.  ``on_event`` is called with every event
    and the post-merge state.  ``force_merge`` lists inclusive particle
    index ranges merged at t = 0 regardless of position (test hook).
    """
    if not (np.isfinite(T) and T > 0):
        raise ValueError("T must be positive and finite")
    if not dt_max > 0:
        raise ValueError("dt_max must be positive")
    x, m, psi = _unpack_initial(initial)
    N = x.size
    start = np.arange(N)
    stop = start + 1
    times = np.unique(np.asarray([0.0, T] if snapshot_times is None else snapshot_times, dtype=float))
    if times.size == 0 or times[0] < 0 or times[-1] > T:
        raise ValueError("snapshot times must lie in [0, T]")

    trace = SimulationTrace(kernel, m.copy(), psi.copy(), config=dict(config or {}))
    total = math.fsum(m * psi)
    scale = math.fsum(m * np.abs(psi)) + 1e-300
    t = 0.0

    def do_merges(t, x, m, psi, start, stop, gap_idx, pre_v):
        """Merge the given gaps, then any gap still below eps; record events."""
        pending = list(gap_idx)
        recorded = []
        while True:
            chains = _chains_from_gaps(np.asarray(pending, dtype=int))
            if not chains:
                break
            for lo, hi in chains:
                sl = slice(lo, hi + 1)
                recorded.append(
                    CollisionEvent(
                        t=t,
                        members=(int(start[lo]), int(stop[hi] - 1)),
                        position=math.fsum(m[sl] * x[sl]) / math.fsum(m[sl]),
                        pre_m=m[sl].copy(),
                        pre_psi=psi[sl].copy(),
                        pre_v=pre_v[sl].copy(),
                        psi_post=math.fsum(m[sl] * psi[sl]) / math.fsum(m[sl]),
                    )
                )
            x, m, psi, start, stop = _merge_chains(x, m, psi, start, stop, chains)
            # barycentric positions may touch a neighbour
            tol = merge_tolerance(x)
            pending = []
            if np.any(np.diff(x) <= np.maximum(tol[:-1], tol[1:])):
                pre_v = _velocity(x, m, psi, kernel)
                pending = list(_touching(x, pre_v))
        return x, m, psi, start, stop, recorded

    def finish_events(recorded, x, m, psi, start, stop, v):
        drift = abs(math.fsum(m * psi) - total) / scale
        trace.psi_drift = max(trace.psi_drift, drift)
        if drift > CONSERVATION_TOL:
            raise RuntimeError(f"psi momentum drifted by {drift:.3e}")
        state = None
        for ev in recorded:
            k = int(np.searchsorted(start, ev.members[0], side="right")) - 1
            ev.v_post = float(v[k])
            trace.events.append(ev)
            if on_event is not None:
                if state is None:
                    state = ClusterState(t, x, m, psi, start, stop)
                on_event(ev, state)

    # t = 0: coincident particles and forced merges
    v_pre = _velocity(x, m, psi, kernel)
    gaps0 = list(_touching(x, v_pre))
    for lo, hi in force_merge:
        lo, hi = int(lo), int(hi)
        if not 0 <= lo < hi < N:
            raise ValueError(f"bad force_merge range {(lo, hi)!r}")
        gaps0.extend(range(lo, hi))
    if gaps0:
        x, m, psi, start, stop, rec = do_merges(0.0, x, m, psi, start, stop, gaps0, v_pre)
        v = _velocity(x, m, psi, kernel)
        finish_events(rec, x, m, psi, start, stop, v)
    else:
        v = _velocity(x, m, psi, kernel)

    si = 0
    while True:
        while si < times.size and times[si] <= t:
            state = ClusterState(t, x, m, psi, start, stop)
            if not state.ordered:
                raise RuntimeError(f"ordering lost at t={t!r}")
            trace.states.append(state)
            trace.velocities.append(v.copy())
            si += 1
        if si >= times.size or t >= T:
            break
        t_next = float(times[si])
        if x.size == 1:
            x = x + psi * (t_next - t)
            v = psi.copy()
            t = t_next
            continue
        closing = v[:-1] - v[1:]
        pos = closing > 0
        pred = float(np.min(np.diff(x)[pos] / closing[pos])) if np.any(pos) else math.inf
        h = min(dt_max, OVERSHOOT * pred)
        h = max(h, 4.0 * np.spacing(max(t, 1.0)))
        if t + h >= t_next:
            h, t_new = t_next - t, t_next
        else:
            t_new = t + h
        x1 = _rk4(x, m, psi, kernel, h, v)
        v1 = _velocity(x1, m, psi, kernel)
        hit = _first_contact(x, x1, v, v1, h, t)
        if hit is None:
            x, v, t = x1, v1, t_new
            continue
        tau, gap_idx = hit
        if tau >= 1.0:
            xh, vh, t = x1, v1, t_new
        else:
            coef = _hermite_coeffs(x, x1, h * v, h * v1)
            xh = _cubic(coef, tau)
            vh = _cubic_deriv(coef, tau) / h
            t = t + tau * h
        gap_idx = np.union1d(gap_idx, _touching(xh, vh))
        x, m, psi, start, stop, rec = do_merges(t, xh, m, psi, start, stop, gap_idx, vh)
        v = _velocity(x, m, psi, kernel)
        finish_events(rec, x, m, psi, start, stop, v)
    return trace


def _unpack_initial(initial):
    if isinstance(initial, ClusterState):
        if initial.K != initial.N:
            raise ValueError("initial ClusterState must hold one particle per cluster")
        return initial_state(initial.x, initial.m, psi=initial.psi)
    if hasattr(initial, "positions") and hasattr(initial, "flux"):
        return initial_state(initial.positions, initial.masses, psi=initial.flux.slopes)
    positions, masses, psi = initial
    return initial_state(positions, masses, psi=psi)


# ---------------------------------------------------------------------------
# (x, v) oracle


@dataclass
class ReferenceTrajectory:
    times: np.ndarray
    positions: np.ndarray  # (len(times), N) particle positions
    velocities: np.ndarray  # (len(times), N) particle velocities
    collision_times: List[float]

    @property
    def first_collision_time(self) -> float:
        return self.collision_times[0] if self.collision_times else math.inf


def _cs_field(X, V, M, kernel):
    W = phi(kernel, X[None, :] - X[:, None])
    return (W * (V[None, :] - V[:, None])) @ M


def _cs_rk4(X, V, M, kernel, h):
    a1 = _cs_field(X, V, M, kernel)
    X2, V2 = X + 0.5 * h * V, V + 0.5 * h * a1
    a2 = _cs_field(X2, V2, M, kernel)
    X3, V3 = X + 0.5 * h * V2, V + 0.5 * h * a2
    a3 = _cs_field(X3, V3, M, kernel)
    X4, V4 = X + h * V3, V + h * a3
    a4 = _cs_field(X4, V4, M, kernel)
    Xn = X + (h / 6.0) * (V + 2.0 * V2 + 2.0 * V3 + V4)
    Vn = V + (h / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
    return Xn, Vn


def direct_cs_reference(
    positions, masses, velocities, kernel: CommunicationKernel, T: float, dt: float = 1e-3, sample_times=None
) -> ReferenceTrajectory:
    """Brute-force fixed-step RK4 of the (x, v) Cucker-Smale system with sticky merges.

    Bounded kernels only.  Contacts inside a step are located on the cubic
    Hermite gap (positions and their exact derivatives v), the step is redone
    up to the contact and the colliding particles merge conserving momentum.
    """
    if not kernel.bounded:
        raise ValueError("the (x, v) oracle needs a bounded kernel")
    X = np.asarray(positions, dtype=float).copy()
    M = np.asarray(masses, dtype=float).copy()
    V = np.asarray(velocities, dtype=float).copy()
    N = X.size
    if np.any(np.diff(X) < 0):
        raise ValueError("positions must be sorted")
    owner = np.arange(N)  # cluster index of each particle
    samples = np.unique(np.asarray([0.0, T] if sample_times is None else sample_times, dtype=float))
    out_x = np.empty((samples.size, N))
    out_v = np.empty((samples.size, N))
    collisions: List[float] = []

    def merge_where(X, V, M, owner, gaps):
        chains = _chains_from_gaps(np.asarray(gaps, dtype=int))
        keep = np.ones(X.size, dtype=bool)
        X, V, M = X.copy(), V.copy(), M.copy()
        for lo, hi in chains:
            sl = slice(lo, hi + 1)
            mass = M[sl].sum()
            X[lo] = np.dot(M[sl], X[sl]) / mass
            V[lo] = np.dot(M[sl], V[sl]) / mass
            M[lo] = mass
            keep[lo + 1 : hi + 1] = False
        new_index = np.cumsum(keep) - 1
        return X[keep], V[keep], M[keep], new_index[owner]

    def coincident(X, V):
        return _touching(X, V)

    t = 0.0
    gaps = coincident(X, V)
    if gaps.size:
        X, V, M, owner = merge_where(X, V, M, owner, gaps)
    si = 0
    while True:
        while si < samples.size and samples[si] <= t:
            out_x[si] = X[owner]
            out_v[si] = V[owner]
            si += 1
        if si >= samples.size:
            break
        target = samples[si]
        h = min(dt, target - t)
        t_new = target if t + h >= target else t + h
        Xn, Vn = _cs_rk4(X, V, M, kernel, h)
        if X.size > 1:
            hit = _first_contact(X, Xn, V, Vn, h, t)
        else:
            hit = None
        if hit is None:
            X, V, t = Xn, Vn, t_new
            continue
        tau, gap_idx = hit
        h_hit = tau * h
        if tau < 1.0:
            X, V = _cs_rk4(X, V, M, kernel, h_hit)
            t = t + h_hit
        else:
            X, V, t = Xn, Vn, t_new
        gap_idx = np.union1d(gap_idx, coincident(X, V))
        collisions.append(t)
        X, V, M, owner = merge_where(X, V, M, owner, gap_idx)
        while True:
            more = coincident(X, V)
            if more.size == 0:
                break
            X, V, M, owner = merge_where(X, V, M, owner, more)
    return ReferenceTrajectory(samples, out_x, out_v, collisions)
