"""Flocking, convergence-rate and stability diagnostics for sticky-particle runs."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .dynamics import DT_MAX, SimulationTrace, simulate
from .initial_data import InitialData, PiecewiseLinearFlux, prepare_particles
from .kernels import CommunicationKernel, flocking_threshold_holds, phi, phi_primitive, phi_primitive_inverse
from .measures import DiscreteMeasure, cdf, l1_distance, wasserstein1

__all__ = [
    "FlockingReport",
    "flocking_report",
    "RateTable",
    "convergence_study",
    "fit_slope",
    "StabilityResult",
    "stability_study",
    "strong_flocking_gap",
    "time_regularity_violation",
]


@dataclass
class FlockingReport:
    times: np.ndarray
    D: np.ndarray
    V: np.ndarray
    E: np.ndarray
    D_bar: float
    rate: float
    envelope: np.ndarray
    threshold_holds: bool

    @property
    def D0(self) -> float:
        return float(self.D[0])

    @property
    def V0(self) -> float:
        return float(self.V[0])

    def lyapunov_increase(self) -> float:
        """Largest increase of E between consecutive snapshots (<= 0 when monotone)."""
        return float(np.max(np.diff(self.E))) if self.E.size > 1 else 0.0

    def diameter_excess(self) -> float:
        return float(np.max(self.D) - self.D_bar)

    def alignment_excess(self, rel: float = 1e-6) -> float:
        """max of V - envelope (1 + rel); nonpositive when the envelope holds."""
        return float(np.max(self.V - self.envelope * (1.0 + rel)))

    def holds(self, slack: float = 1e-8, rel: float = 1e-6) -> bool:
        return (
            self.threshold_holds
            and self.lyapunov_increase() <= slack
            and self.diameter_excess() <= slack
            and self.alignment_excess(rel) <= 0.0
        )


def _alignment_rate(kernel: CommunicationKernel, D_bar: float) -> float:
    if math.isinf(D_bar):
        return 0.0
    if D_bar == 0.0:
        return math.inf if not kernel.bounded else float(phi(kernel, 0.0))
    return float(phi(kernel, D_bar))


def flocking_report(trace: SimulationTrace, kernel: Optional[CommunicationKernel] = None) -> FlockingReport:
    """Diameter, velocity variation, Lyapunov functional and the uniform bounds of a run."""
    kernel = trace.kernel if kernel is None else kernel
    if not trace.states:
        raise ValueError("empty trace")
    if trace.states[0].t != 0.0:
        raise ValueError("the trace must start with a snapshot at t = 0")
    times = trace.times
    D = np.array([s.x[-1] - s.x[0] for s in trace.states])
    V = np.array([float(np.max(v) - np.min(v)) for v in trace.velocities])
    E = phi_primitive(kernel, D) + V
    holds = flocking_threshold_holds(kernel, D[0], V[0])
    D_bar = phi_primitive_inverse(kernel, float(E[0])) if holds else math.inf
    rate = _alignment_rate(kernel, D_bar)
    if math.isinf(rate):
        env = np.where(times == 0.0, V[0], 0.0)
    else:
        env = V[0] * np.exp(-rate * times)
    return FlockingReport(times, D, V, np.asarray(E, float), D_bar, rate, env, holds)


def strong_flocking_gap(trace: SimulationTrace, kernel: Optional[CommunicationKernel], t1: float, t2: float) -> float:
    """Envelope (2 V0 / phi(D_bar)) exp(-phi(D_bar) t1) minus W1(rho(t1), rho(t2)) in the zero-momentum frame."""
    kernel = trace.kernel if kernel is None else kernel
    rep = flocking_report(trace, kernel)
    if not rep.threshold_holds:
        raise ValueError("flocking threshold fails; the Cauchy envelope is undefined")
    s1, s2 = trace.state_at(t1), trace.state_at(t2)
    ubar = math.fsum(trace.particle_m * trace.particle_psi)
    mu1 = DiscreteMeasure(s1.x - ubar * t1, s1.m)
    mu2 = DiscreteMeasure(s2.x - ubar * t2, s2.m)
    measured = wasserstein1(mu1, mu2)
    if rep.V0 == 0.0:
        envelope = 0.0
    elif math.isinf(rep.rate):
        envelope = 0.0 if t1 > 0 else math.inf
    else:
        envelope = 2.0 * rep.V0 / rep.rate * math.exp(-rep.rate * t1)
    return envelope - measured


def time_regularity_violation(trace: SimulationTrace, kernel: Optional[CommunicationKernel] = None) -> float:
    """max over snapshot pairs of ||M(t) - M(s)||_L1 - (|A|_Lip + Phi(2 R0)) (t - s)."""
    kernel = trace.kernel if kernel is None else kernel
    lip = float(np.max(np.abs(trace.particle_psi)))
    x0 = trace.states[0].x
    R0 = float(np.max(np.abs(x0)))
    speed = lip + float(phi_primitive(kernel, 2.0 * R0))
    cdfs = [cdf(s.measure()) for s in trace.states]
    worst = -math.inf
    for i in range(len(cdfs)):
        for j in range(i + 1, len(cdfs)):
            dt = trace.states[j].t - trace.states[i].t
            worst = max(worst, l1_distance(cdfs[i], cdfs[j]) - speed * dt)
    return worst


# ---------------------------------------------------------------------------
# convergence


@dataclass
class RateTable:
    Ns: np.ndarray
    probe_times: np.ndarray
    errors: np.ndarray  # (len(Ns), len(probe_times))
    slopes: np.ndarray  # per probe time
    gamma: float
    N_ref: int

    def rows(self):
        for i, N in enumerate(self.Ns):
            for j, t in enumerate(self.probe_times):
                yield int(N), float(t), float(self.errors[i, j]), float(self.slopes[j]), self.gamma

    @property
    def worst_slope(self) -> float:
        return float(np.max(self.slopes))


def fit_slope(Ns, errors, discard: int = 2) -> float:
    """Least-squares slope of log(error) against log(N), skipping the smallest N."""
    Ns = np.asarray(Ns, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if Ns.size - discard >= 2:
        Ns, errors = Ns[discard:], errors[discard:]
    ok = errors > 0
    if np.count_nonzero(ok) < 2:
        return math.nan
    return float(np.polyfit(np.log(Ns[ok]), np.log(errors[ok]), 1)[0])


def _run_member(args):
    data, kernel, N, mode, T, snaps, dt_max = args
    particles = prepare_particles(data, kernel, N, mode)
    trace = simulate(particles, kernel, T, snaps, dt_max=dt_max)
    return [(s.x.copy(), s.m.copy()) for s in trace.states]


def convergence_study(
    initial: InitialData,
    kernel: CommunicationKernel,
    Ns: Sequence[int],
    N_ref: int,
    probe_times: Sequence[float],
    mode: str = "sample",
    *,
    dt_max: float = DT_MAX,
    workers: int = 1,
    discard: int = 2,
) -> RateTable:
    """W1 self-convergence of the particle solutions against an N_ref reference."""
    Ns = np.array(sorted(int(n) for n in Ns))
    if Ns.size == 0 or Ns[0] < 1:
        raise ValueError("Ns must be positive integers")
    if np.any(np.diff(Ns) == 0):
        raise ValueError("Ns must be distinct")
    if N_ref < 8 * Ns[-1]:
        raise ValueError("N_ref must be at least 8 max(Ns)")
    probes = np.unique(np.asarray(probe_times, dtype=float))
    if probes.size == 0 or probes[0] < 0:
        raise ValueError("probe times must be nonnegative")
    T = float(probes[-1]) if probes[-1] > 0 else 1.0
    jobs = [(initial, kernel, int(n), mode, T, probes, dt_max) for n in list(Ns) + [N_ref]]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_member, jobs))
    else:
        results = [_run_member(j) for j in jobs]
    ref = results[-1]
    errors = np.empty((Ns.size, probes.size))
    for i, res in enumerate(results[:-1]):
        for j in range(probes.size):
            errors[i, j] = wasserstein1(DiscreteMeasure(*res[j]), DiscreteMeasure(*ref[j]))
    slopes = np.array([fit_slope(Ns, errors[:, j], discard) for j in range(probes.size)])
    gamma = min(kernel.holder_exponent, initial.holder_beta)
    return RateTable(Ns, probes, errors, slopes, gamma, int(N_ref))


# ---------------------------------------------------------------------------
# stability


@dataclass
class StabilityResult:
    times: np.ndarray
    l1: np.ndarray
    bound: np.ndarray

    @property
    def violation(self) -> np.ndarray:
        return self.l1 - self.bound

    @property
    def worst(self) -> float:
        return float(np.max(self.violation))


def _as_measure(data) -> DiscreteMeasure:
    if isinstance(data, DiscreteMeasure):
        return data
    if hasattr(data, "positions") and hasattr(data, "masses"):
        return DiscreteMeasure(data.positions, data.masses)
    positions, masses = data
    return DiscreteMeasure(positions, masses)


def stability_study(
    data1,
    flux1: PiecewiseLinearFlux,
    data2,
    flux2: PiecewiseLinearFlux,
    kernel: CommunicationKernel,
    T: float,
    probes: Sequence[float],
    *,
    dt_max: float = DT_MAX,
) -> StabilityResult:
    """||M - M~||_L1(t) against ||M0 - M~0||_L1 + t |A - A~|_Lip at the probe times."""
    mu1, mu2 = _as_measure(data1), _as_measure(data2)
    for mu, fl in ((mu1, flux1), (mu2, flux2)):
        if len(mu) != fl.slopes.size:
            raise ValueError("flux must have one slope per atom")
    probes = np.unique(np.concatenate(([0.0], np.asarray(probes, dtype=float))))
    if probes[-1] > T:
        raise ValueError("probe times must lie in [0, T]")
    tr1 = simulate((mu1.positions, mu1.masses, flux1.slopes), kernel, T, probes, dt_max=dt_max)
    tr2 = simulate((mu2.positions, mu2.masses, flux2.slopes), kernel, T, probes, dt_max=dt_max)
    d0 = wasserstein1(mu1, mu2)
    lip = flux1.lip_distance(flux2)
    l1 = np.array([wasserstein1(a.measure(), b.measure()) for a, b in zip(tr1.states, tr2.states)])
    return StabilityResult(probes, l1, d0 + probes * lip)
