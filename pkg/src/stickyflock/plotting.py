"""Figures written next to the CSV reports (non-interactive backend)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["plot_trajectories", "plot_rates", "plot_flocking", "plot_stability", "plot_entropy"]

# no timestamps or version strings, so identical runs give identical files
_PNG_META = {"Software": None}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata=_PNG_META)
    plt.close(fig)


def plot_trajectories(trace, path):
    """Cluster positions at every snapshot, dot area proportional to mass."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for s in trace.states:
        ax.scatter(s.x, np.full(s.K, s.t), s=4 + 200 * s.m, c="k", alpha=0.6, linewidths=0)
    for ev in trace.events:
        ax.plot(ev.position, ev.t, "r+", ms=4)
    ax.set_xlabel("x")
    ax.set_ylabel("t")
    ax.set_title("clusters (dots) and collisions (+)")
    _save(fig, path)


def plot_rates(table, path):
    fig, ax = plt.subplots(figsize=(5, 4))
    for j, t in enumerate(table.probe_times):
        ax.loglog(table.Ns, table.errors[:, j], "o-", label=f"t={t:g}, slope {table.slopes[j]:.2f}")
    ref = table.errors[0, -1] * (table.Ns / table.Ns[0]) ** (-table.gamma)
    ax.loglog(table.Ns, ref, "k--", label=f"N^-{table.gamma:g}")
    ax.set_xlabel("N")
    ax.set_ylabel("W1 error")
    ax.legend(fontsize=8)
    _save(fig, path)


def plot_flocking(report, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(report.times, report.D, label="D")
    ax.plot(report.times, report.V, label="V")
    ax.plot(report.times, report.envelope, "--", label="V envelope")
    ax.plot(report.times, report.E, ":", label="E")
    if np.isfinite(report.D_bar):
        ax.axhline(report.D_bar, color="gray", lw=0.8, label="D bound")
    ax.set_xlabel("t")
    ax.legend(fontsize=8)
    _save(fig, path)


def plot_stability(result, path):
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.plot(result.times, result.bound, "k--", label="bound")
    ax.plot(result.times, result.l1, "o-", label="L1 distance")
    ax.set_xlabel("t")
    ax.legend(fontsize=8)
    _save(fig, path)


def plot_entropy(records, path):
    fig, (a1, a2) = plt.subplots(1, 2, figsize=(8, 3.5))
    t = np.array([r.t for r in records])
    rh = np.array([abs(r.rh_residual) for r in records])
    om = np.array([r.oleinik_margin for r in records])
    a1.semilogy(t, np.maximum(rh, 1e-18), ".", ms=3)
    a1.set_title("|RH residual|")
    a1.set_xlabel("t")
    fin = np.isfinite(om)
    a2.plot(t[fin], om[fin], ".", ms=3)
    a2.axhline(0.0, color="r", lw=0.8)
    a2.set_title("Oleinik margin")
    a2.set_xlabel("t")
    _save(fig, path)
