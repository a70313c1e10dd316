"""Discrete entropy solution of the balance law and its shock checks.

For a cluster state the shifted cumulative function is

    M_N(x) = -1/2 + sum_k m_k H(x - x_k),   H right-continuous, H(0) = 1,

and every cluster k is a shock from M_l = theta_{start_k} to M_r = theta_{stop_k}
moving with speed sigma = v_k.  It is admissible when

    sigma + (phi * M_N)(x_k) = (A_N(M_r) - A_N(M_l)) / (M_r - M_l)         (RH)
    (A_N(theta) - A_N(M_l)) / (theta - M_l) >= sigma + (phi * M_N)(x_k)   (Oleinik)

for the interior breakpoints theta of A_N between M_l and M_r.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .dynamics import ClusterState, CollisionEvent, SimulationTrace, velocity_from_psi
from .fastsum import direct_sum
from .initial_data import PiecewiseLinearFlux
from .kernels import CommunicationKernel, phi_primitive
from .measures import DiscreteMeasure, StepCDF, StepFunction, cdf

__all__ = [
    "ShockRecord",
    "AtomicMomentum",
    "reconstruct_M",
    "reconstruct_Q",
    "reconstruct_fields",
    "rankine_hugoniot_residual",
    "oleinik_margin",
    "shock_record",
    "verify_state",
    "verify_trace",
    "EventVerifier",
    "trace_flux",
    "RH_TOL",
    "OLEINIK_TOL",
]

RH_TOL = 1e-8
OLEINIK_TOL = -1e-10


@dataclass(frozen=True)
class ShockRecord:
    t: float
    cluster: int
    x: float
    sigma: float
    M_left: float
    M_right: float
    conv: float
    rh_residual: float
    oleinik_margin: float

    @property
    def admissible(self) -> bool:
        return abs(self.rh_residual) <= RH_TOL and self.oleinik_margin >= OLEINIK_TOL


@dataclass(frozen=True)
class AtomicMomentum:
    """Signed atomic measure sum_k p_k delta(x - x_k)."""

    positions: np.ndarray
    weights: np.ndarray

    @property
    def total(self) -> float:
        return math.fsum(self.weights)


def trace_flux(trace: SimulationTrace) -> PiecewiseLinearFlux:
    """A_N of the original particles of a run."""
    return PiecewiseLinearFlux.from_masses(trace.particle_m, trace.particle_psi)


def _check_partition(state: ClusterState, flux: PiecewiseLinearFlux):
    th = flux.theta
    if th.size != state.N + 1:
        raise ValueError("flux breakpoints do not match the particle count")
    jumps = th[state.stop] - th[state.start]
    if np.any(np.abs(jumps - state.m) > 1e-12):
        raise ValueError("flux breakpoints do not match the cluster masses")


def reconstruct_M(state: ClusterState) -> StepCDF:
    return cdf(state.measure())


def reconstruct_Q(state: ClusterState, flux: PiecewiseLinearFlux) -> StepFunction:
    """Q_N(x) = A_N(-1/2) + sum_k m_k psi_k H(x - x_k)."""
    _check_partition(state, flux)
    base = float(flux.values_at_breakpoints[0])
    vals = base + np.concatenate(([0.0], np.cumsum(state.m * state.psi)))
    return StepFunction(state.x, vals)


def reconstruct_fields(state: ClusterState, kernel: CommunicationKernel, v: Optional[np.ndarray] = None):
    """(rho_N, P_N) with P_N = sum_k m_k v_k delta(x - x_k)."""
    if v is None:
        v = velocity_from_psi(state, kernel)
    return state.measure(), AtomicMomentum(state.x.copy(), state.m * v)


def _conv_at(state: ClusterState, kernel: CommunicationKernel, k: int) -> float:
    """(phi * M_N)(x_k) = sum_j m_j Phi(x_k - x_j), exact atom sum."""
    return float(np.dot(state.m, phi_primitive(kernel, state.x[k] - state.x)))


def _chord(flux: PiecewiseLinearFlux, i: int, j: int) -> float:
    A, th = flux.values_at_breakpoints, flux.theta
    return (A[j] - A[i]) / (th[j] - th[i])


def rankine_hugoniot_residual(
    state: ClusterState, flux: PiecewiseLinearFlux, kernel: CommunicationKernel, k: int, v=None
) -> float:
    return shock_record(state, flux, kernel, k, v).rh_residual


def oleinik_margin(
    state: ClusterState, flux: PiecewiseLinearFlux, kernel: CommunicationKernel, k: int, v=None
) -> float:
    return shock_record(state, flux, kernel, k, v).oleinik_margin


def shock_record(
    state: ClusterState,
    flux: PiecewiseLinearFlux,
    kernel: CommunicationKernel,
    k: int,
    v: Optional[np.ndarray] = None,
    conv: Optional[float] = None,
) -> ShockRecord:
    """RH residual and Oleinik margin of the shock carried by cluster k."""
    if not 0 <= k < state.K:
        raise IndexError(k)
    if v is None:
        v = velocity_from_psi(state, kernel)
    if conv is None:
        conv = _conv_at(state, kernel, k)
    i0, i1 = int(state.start[k]), int(state.stop[k])
    th = flux.theta
    lhs = float(v[k]) + conv
    rh = lhs - _chord(flux, i0, i1)
    if i1 - i0 > 1:
        A = flux.values_at_breakpoints
        inner = (A[i0 + 1 : i1] - A[i0]) / (th[i0 + 1 : i1] - th[i0])
        margin = float(np.min(inner)) - lhs
    else:
        margin = math.inf
    return ShockRecord(state.t, k, float(state.x[k]), float(v[k]), float(th[i0]), float(th[i1]), conv, rh, margin)


def verify_state(
    state: ClusterState,
    flux: PiecewiseLinearFlux,
    kernel: CommunicationKernel,
    v: Optional[np.ndarray] = None,
) -> List[ShockRecord]:
    """Shock records for every cluster of the state."""
    _check_partition(state, flux)
    if v is None:
        v = velocity_from_psi(state, kernel)
    conv = direct_sum(kernel, state.x, state.m)
    return [shock_record(state, flux, kernel, k, v, float(conv[k])) for k in range(state.K)]


def verify_trace(trace: SimulationTrace, flux: Optional[PiecewiseLinearFlux] = None) -> List[ShockRecord]:
    """Shock records at every snapshot of a run."""
    flux = trace_flux(trace) if flux is None else flux
    out: List[ShockRecord] = []
    for state, v in zip(trace.states, trace.velocities):
        out.extend(verify_state(state, flux, trace.kernel, v))
    return out


class EventVerifier:
    """``on_event`` hook: checks the merged shock right after every merge."""

    def __init__(self, flux: PiecewiseLinearFlux, kernel: CommunicationKernel):
        self.flux = flux
        self.kernel = kernel
        self.records: List[ShockRecord] = []

    def __call__(self, event: CollisionEvent, state: ClusterState):
        k = int(np.searchsorted(state.start, event.members[0], side="right")) - 1
        v = np.full(state.K, np.nan)
        v[k] = event.v_post
        rec = shock_record(state, self.flux, self.kernel, k, v)
        event.oleinik_margin = rec.oleinik_margin
        self.records.append(rec)
