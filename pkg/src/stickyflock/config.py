"""Scenario manifests: JSON files plus command-line overrides."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .dynamics import DT_MAX
from .initial_data import InitialData
from .kernels import CommunicationKernel

__all__ = ["ScenarioConfig", "ConfigError", "load_config", "parse_config"]

DEFAULT_SNAPSHOTS = 11


class ConfigError(ValueError):
    pass


@dataclass
class ScenarioConfig:
    kernel: CommunicationKernel
    initial: InitialData
    T: float
    N: int = 100
    Ns: tuple = ()
    N_ref: int = 0
    snapshots: tuple = ()
    probe_times: tuple = ()
    mode: str = "sample"
    dt_max: float = DT_MAX
    seed: int = 0
    force_merge: tuple = ()
    flock: dict = field(default_factory=dict)
    stability: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)


def _snapshot_grid(spec, T: float) -> tuple:
    if isinstance(spec, int) and not isinstance(spec, bool):
        if spec < 2:
            raise ConfigError("snapshot count must be at least 2")
        return tuple(float(t) for t in np.linspace(0.0, T, spec))
    times = sorted({float(t) for t in spec} | {0.0})
    if times[-1] > T or any(not math.isfinite(t) for t in times):
        raise ConfigError("snapshot times must lie in [0, T]")
    return tuple(times)


def _override_list(text: str, kind=float) -> list:
    try:
        return [kind(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse list {text!r}") from None


def parse_config(raw: dict, overrides: Optional[dict] = None) -> ScenarioConfig:
    """Validate a manifest dictionary; ``overrides`` holds command-line values (None = unset)."""
    if not isinstance(raw, dict) or not raw:
        raise ConfigError("empty scenario")
    raw = dict(raw)
    for key, val in (overrides or {}).items():
        if val is not None:
            raw[key] = val
    try:
        if "kernel" not in raw or "initial" not in raw:
            raise ConfigError("scenario needs 'kernel' and 'initial'")
        kernel = CommunicationKernel.from_config(raw["kernel"])
        initial = InitialData.from_config(raw["initial"])
        T = float(raw.get("T", 1.0))
        if not (math.isfinite(T) and T > 0):
            raise ConfigError("T must be positive")
        N = int(raw.get("N", 100))
        if N < 1:
            raise ConfigError("N must be at least 1")
        Ns = raw.get("Ns", ())
        if isinstance(Ns, str):
            Ns = _override_list(Ns, int)
        Ns = tuple(int(n) for n in Ns)
        if any(n < 1 for n in Ns):
            raise ConfigError("Ns must be positive")
        mode = raw.get("mode", "sample")
        if mode not in ("sample", "average"):
            raise ConfigError("mode must be 'sample' or 'average'")
        snaps = raw.get("snapshots", DEFAULT_SNAPSHOTS)
        if isinstance(snaps, str):
            snaps = int(snaps) if snaps.strip().isdigit() else _override_list(snaps)
        snapshots = _snapshot_grid(snaps, T)
        probes = raw.get("probe_times", ())
        if isinstance(probes, str):
            probes = _override_list(probes)
        probes = tuple(float(t) for t in probes)
        if any(not 0 <= t <= T for t in probes):
            raise ConfigError("probe times must lie in [0, T]")
        dt_max = float(raw.get("dt_max", DT_MAX))
        if not dt_max > 0:
            raise ConfigError("dt_max must be positive")
        hooks = raw.get("test_hooks", {}) or {}
        force = tuple(tuple(int(i) for i in pair) for pair in hooks.get("force_merge", ()))
        return ScenarioConfig(
            kernel=kernel,
            initial=initial,
            T=T,
            N=N,
            Ns=Ns,
            N_ref=int(raw.get("N_ref", 8 * max(Ns) if Ns else 0)),
            snapshots=snapshots,
            probe_times=probes,
            mode=mode,
            dt_max=dt_max,
            seed=int(raw.get("seed", 0)),
            force_merge=force,
            flock=dict(raw.get("flock", {}) or {}),
            stability=dict(raw.get("stability", {}) or {}),
            raw=raw,
        )
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid scenario: {exc}") from exc


def load_config(path, overrides: Optional[dict] = None) -> ScenarioConfig:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    try:
        raw = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return parse_config(raw, overrides)
