"""Command-line front end.

Exit codes: 0 pass, 1 property violation, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .balance_law import EventVerifier, trace_flux, verify_trace
from .config import ConfigError, ScenarioConfig, load_config
from .diagnostics import (
    convergence_study,
    flocking_report,
    stability_study,
    strong_flocking_gap,
)
from .dynamics import simulate
from .initial_data import (
    InitialData,
    cdf_l1_gap,
    discretize_density,
    inverse_linf_gap,
    prepare_particles,
)

__all__ = ["main", "build_parser"]

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE = 0, 1, 2
CONVERGE_FACTOR = 0.8
FLOCK_SLACK = 1e-8
STABILITY_SLACK = 1e-8


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    if isinstance(v, str):
        return v
    return format(float(v), ".17g")


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _particles(cfg: ScenarioConfig, N: Optional[int] = None):
    return prepare_particles(cfg.initial, cfg.kernel, cfg.N if N is None else N, cfg.mode)


def _run(cfg: ScenarioConfig, on_event=None):
    particles = _particles(cfg)
    return simulate(
        particles,
        cfg.kernel,
        cfg.T,
        cfg.snapshots,
        dt_max=cfg.dt_max,
        on_event=on_event,
        force_merge=cfg.force_merge,
        config=cfg.raw,
    )


def _write_trace(trace, out: Path):
    rows = []
    fields = []
    for s, v in zip(trace.states, trace.velocities):
        for k in range(s.K):
            rows.append((s.t, k, s.x[k], s.m[k], s.psi[k], v[k]))
            fields.append((s.t, k, s.x[k], s.m[k], s.m[k] * v[k]))
    write_csv(out / "trace.csv", ("t", "cluster_index", "x", "m", "psi", "v"), rows)
    write_csv(out / "fields.csv", ("t", "cluster_index", "x", "rho_mass", "P_momentum"), fields)
    write_csv(
        out / "events.csv",
        ("t", "members", "psi_post", "v_post"),
        ((e.t, f"{e.members[0]}-{e.members[1]}", e.psi_post, e.v_post) for e in trace.events),
    )


def cmd_simulate(cfg: ScenarioConfig, out: Path, plots: bool) -> int:
    trace = _run(cfg)
    _write_trace(trace, out)
    if plots:
        from .plotting import plot_trajectories

        plot_trajectories(trace, out / "trajectories.png")
    print(f"simulate: {len(trace.events)} collision events, {trace.states[-1].K} clusters at t={cfg.T:g}")
    return EXIT_OK


def cmd_verify(cfg: ScenarioConfig, out: Path, plots: bool) -> int:
    particles = _particles(cfg)
    verifier = EventVerifier(particles.flux, cfg.kernel)
    trace = simulate(
        particles,
        cfg.kernel,
        cfg.T,
        cfg.snapshots,
        dt_max=cfg.dt_max,
        on_event=verifier,
        force_merge=cfg.force_merge,
        config=cfg.raw,
    )
    records = verifier.records + verify_trace(trace, trace_flux(trace))
    records.sort(key=lambda r: (r.t, r.cluster))
    write_csv(
        out / "verify.csv",
        ("t", "cluster", "rh_residual", "oleinik_margin", "M_left", "M_right", "sigma"),
        ((r.t, r.cluster, r.rh_residual, r.oleinik_margin, r.M_left, r.M_right, r.sigma) for r in records),
    )
    if plots:
        from .plotting import plot_entropy

        plot_entropy(records, out / "entropy.png")
    bad = [r for r in records if not r.admissible]
    worst_rh = max(abs(r.rh_residual) for r in records)
    worst_ol = min(r.oleinik_margin for r in records)
    print(f"verify: {len(records)} shocks, max |RH| {worst_rh:.3e}, min Oleinik margin {worst_ol:.3e}")
    if bad:
        w = min(bad, key=lambda r: (r.oleinik_margin, -abs(r.rh_residual)))
        print(
            f"entropy violation at t={float(w.t)!r} cluster {w.cluster}: "
            f"RH residual {float(w.rh_residual)!r}, Oleinik margin {float(w.oleinik_margin)!r}",
            file=sys.stderr,
        )
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_converge(cfg: ScenarioConfig, out: Path, plots: bool) -> int:
    if not cfg.Ns:
        raise ConfigError("converge needs Ns")
    probes = cfg.probe_times or tuple(t for t in cfg.snapshots if t > 0)
    table = convergence_study(
        cfg.initial,
        cfg.kernel,
        cfg.Ns,
        cfg.N_ref,
        probes,
        cfg.mode,
        dt_max=cfg.dt_max,
        workers=int(cfg.raw.get("workers", 1)),
    )
    write_csv(out / "rate.csv", ("N", "t", "w1_error", "fitted_slope", "gamma_theory"), table.rows())
    rows = [(int(n), *(disc_gaps(cfg.initial, int(n)))) for n in table.Ns]
    write_csv(out / "discretization.csv", ("N", "l1_cdf_gap", "linf_inverse_gap"), rows)
    if plots:
        from .plotting import plot_rates

        plot_rates(table, out / "rate.png")
    target = -CONVERGE_FACTOR * table.gamma
    print(f"converge: slopes {np.round(table.slopes, 3).tolist()} (pass if <= {target:.3f})")
    return EXIT_OK if np.all(table.slopes <= target) else EXIT_VIOLATION


def disc_gaps(initial: InitialData, N: int):
    d = discretize_density(initial.density, N)
    return cdf_l1_gap(initial.density, d.nodes, d.masses), inverse_linf_gap(initial.density, d.nodes, d.masses)


def cmd_flock(cfg: ScenarioConfig, out: Path, plots: bool) -> int:
    trace = _run(cfg)
    rep = flocking_report(trace, cfg.kernel)
    write_csv(
        out / "flocking.csv",
        ("t", "D", "V", "E", "envelope"),
        zip(rep.times, rep.D, rep.V, rep.E, rep.envelope),
    )
    if plots:
        from .plotting import plot_flocking

        plot_flocking(rep, out / "flocking.png")
    if not rep.threshold_holds:
        print("flock: flocking threshold fails", file=sys.stderr)
        return EXIT_VIOLATION
    ok = rep.holds(FLOCK_SLACK)
    t_strong = float(cfg.flock.get("strong_from", 1.0))
    late = [t for t in rep.times if t >= t_strong]
    gaps = [strong_flocking_gap(trace, cfg.kernel, a, b) for i, a in enumerate(late) for b in late[i + 1 :]]
    worst_gap = min(gaps) if gaps else math.inf
    print(
        f"flock: D_bar {rep.D_bar:.6g}, Lyapunov increase {rep.lyapunov_increase():.3e}, "
        f"alignment excess {rep.alignment_excess():.3e}, strong-flocking gap {worst_gap:.3e}"
    )
    if not ok or worst_gap < -FLOCK_SLACK:
        print("flock: flocking estimate violated", file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_stability(cfg: ScenarioConfig, out: Path, plots: bool) -> int:
    p1 = _particles(cfg)
    spec = cfg.stability
    if "initial2" in spec:
        other = InitialData.from_config(spec["initial2"])
        p2 = prepare_particles(other, cfg.kernel, cfg.N, cfg.mode)
        flux2 = p2.flux
    else:
        p2 = p1
        flux2 = p1.flux.shifted(float(spec.get("shift", 0.0)))
    probes = cfg.probe_times or tuple(t for t in cfg.snapshots if t > 0)
    res = stability_study(p1, p1.flux, p2, flux2, cfg.kernel, cfg.T, probes, dt_max=cfg.dt_max)
    write_csv(
        out / "stability.csv",
        ("t", "l1_distance", "bound", "violation"),
        zip(res.times, res.l1, res.bound, res.violation),
    )
    if plots:
        from .plotting import plot_stability

        plot_stability(res, out / "stability.png")
    print(f"stability: worst violation {res.worst:.3e}")
    return EXIT_OK if res.worst <= STABILITY_SLACK else EXIT_VIOLATION


COMMANDS = {
    "simulate": cmd_simulate,
    "verify": cmd_verify,
    "converge": cmd_converge,
    "flock": cmd_flock,
    "stability": cmd_stability,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stickyflock",
        description="Sticky-particle Euler-alignment solver with entropy, rate and flocking checks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="scenario manifest (JSON)")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--T", type=float, help="final time")
        p.add_argument("--N", type=int, help="number of particles")
        p.add_argument("--Ns", help="comma separated particle counts")
        p.add_argument("--mode", choices=("sample", "average"))
        p.add_argument("--dt-max", type=float, dest="dt_max")
        p.add_argument("--snapshots", help="count or comma separated times")
        p.add_argument("--no-plots", action="store_true", help="skip the PNG figures")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {
        "T": args.T,
        "N": args.N,
        "Ns": args.Ns,
        "mode": args.mode,
        "dt_max": args.dt_max,
        "snapshots": args.snapshots,
    }
    try:
        cfg = load_config(args.config, overrides)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](cfg, out, not args.no_plots)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
