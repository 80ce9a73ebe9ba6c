"""Explicit time integration of the expanding curvature flow.

The scalar form evolved here is

    d phi / dt = v / F(lambda h^i_j),

equal by 1-homogeneity to v / (lambda F(h^i_j)); both are computed each
step and must agree to rounding, which cross-checks the scaling path.
The radius field is refreshed from phi through the tabulated gauge
inverse after every substep.

Stepping is explicit (forward Euler or midpoint) under a parabolic
stability bound: the linearized diffusion coefficient is
F'_max gtilde_max v / (lambda F)^2, so dt ~ cfl h_min^2 (lambda F)^2 and
grows geometrically as the surface expands; total work to reach a fixed
time is small and no nonlinear solves are needed. An admissibility guard
re-tries a failed step with halved dt up to eight times before giving up,
so transient excursions toward the cone boundary are handled without
interpreting them.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import curvature as cf
from . import diagnostics as dg
from .background import BackgroundParams, build_warp_profile
from .errors import (
    ConfigError,
    FlowError,
    InadmissibleState,
    StepUnderflow,
    TableExtentError,
)
from .geometry import GraphState, compute_extrinsic, state_from_gauge, state_from_radius
from .sphere import ScalarField, build_grid

CHECKPOINT_FORMAT_VERSION = 1


@dataclass(frozen=True)
class InitialData:
    kind: str                      # constant | cosine_perturbation | custom_table
    r0: float = 0.0
    amplitude: float = 0.0
    wavenumber: int = 1
    table_theta: Optional[tuple] = None
    table_r: Optional[tuple] = None

    def radius_on(self, grid) -> np.ndarray:
        if self.kind == "constant":
            base = np.full(grid.n_theta, self.r0)
        elif self.kind == "cosine_perturbation":
            base = self.r0 + self.amplitude * np.cos(self.wavenumber * grid.theta)
        elif self.kind == "custom_table":
            base = np.interp(grid.theta, np.asarray(self.table_theta), np.asarray(self.table_r))
        else:
            raise ConfigError(f"unknown initial data kind {self.kind!r}")
        if np.any(base <= 0):
            raise ConfigError("initial radius must be positive everywhere")
        if grid.mode == "latlong2d":
            base = np.repeat(base[:, None], grid.n_psi, axis=1)
        return base


@dataclass(frozen=True)
class FlowConfig:
    background: BackgroundParams
    grid_mode: str
    grid_resolution: tuple
    initial: InitialData
    f: cf.CurvatureFunction
    t_end: float
    cfl: float = 0.2
    dt_max: float = 1e-3
    dt_min: float = 1e-12
    integrator: str = "rk2"
    output_every: float = 0.1

    def __post_init__(self):
        if not (0.0 < self.cfl <= 0.5):
            raise ConfigError(f"cfl must lie in (0, 0.5], got {self.cfl}")
        if not (self.dt_min < self.dt_max):
            raise ConfigError("dt_min must be smaller than dt_max")
        if self.t_end < 0:
            raise ConfigError("t_end must be nonnegative")
        if self.integrator not in ("euler", "rk2"):
            raise ConfigError(f"unknown integrator {self.integrator!r}")
        if self.output_every <= 0:
            raise ConfigError("output_every must be positive")
        if self.background.n != 2:
            raise ConfigError("time integration is implemented for n = 2 grids")


@dataclass
class FlowEvent:
    kind: str                      # snapshot | admissibility_violation | table_extent | completed
    t: float
    payload: dict = field(default_factory=dict)


def rhs(state: GraphState, F: cf.CurvatureFunction) -> ScalarField:
    """d phi / dt = v / F(lambda h^i_j). Raises InadmissibleState when any
    node leaves the cone, carrying the worst offender."""
    out, _ = _rhs(state, F)
    return out


def _rhs(state, F, ext=None):
    if ext is None:
        ext = compute_extrinsic(state)
    kappa = ext.kappa
    ok = cf.cone_contains(F, kappa)
    if not np.all(ok):
        margins = cf.cone_margin(F, kappa)
        worst = int(np.argmin(margins))
        idx = np.unravel_index(worst, margins.shape)
        raise InadmissibleState(
            f"state left the admissibility cone at t={state.t}",
            t=state.t, node=idx, kappa=kappa[idx],
        )
    scaled = cf.f_eval(F, ext.lam[..., None] * kappa)
    plain = ext.lam * cf.f_eval(F, kappa)
    if np.max(np.abs(scaled - plain)) > 1e-12 * np.max(np.abs(scaled)):
        raise FlowError("homogeneity cross-check failed in speed evaluation")
    if np.min(scaled) <= 0.0:
        worst = int(np.argmin(scaled))
        idx = np.unravel_index(worst, scaled.shape)
        raise InadmissibleState(
            f"curvature function not positive at t={state.t}",
            t=state.t, node=idx, kappa=kappa[idx],
        )
    speed = ext.v / scaled
    return ScalarField(state.grid, speed, t=state.t), ext


def stable_dt(state: GraphState, F: cf.CurvatureFunction, cfl: float,
              dt_min: float = 0.0, dt_max: float = math.inf,
              ext=None) -> float:
    """Parabolic stability bound cfl h_min^2 / max(diffusion scale)."""
    if ext is None:
        ext = compute_extrinsic(state)
    fp = cf.f_grad(F, ext.kappa)
    fval = cf.f_eval(F, ext.kappa)
    # largest eigenvalue of gtilde relative to sigma is exactly 1
    scale = ext.v / (ext.lam * fval) ** 2 * np.max(fp, axis=-1)
    h_min = state.grid.min_spacing()
    dt = cfl * h_min * h_min / float(np.max(scale))
    if dt < dt_min:
        raise StepUnderflow(f"stability requires dt={dt:.3e} below dt_min={dt_min:.3e}")
    return min(dt, dt_max)


def _advance(state, F, dt, integrator):
    k1, _ = _rhs(state, F)
    if integrator == "euler":
        phi_new = state.phi.values + dt * k1.values
    else:
        mid = state_from_gauge(
            state.grid, state.profile,
            state.phi.values + 0.5 * dt * k1.values,
            state.base_radius, t=state.t + 0.5 * dt,
        )
        k2, _ = _rhs(mid, F)
        phi_new = state.phi.values + dt * k2.values
    return state_from_gauge(state.grid, state.profile, phi_new,
                            state.base_radius, t=state.t + dt)


def step(state: GraphState, F: cf.CurvatureFunction, dt: float,
         integrator: str = "rk2", events: Optional[list] = None) -> GraphState:
    """One explicit step; on admissibility failure the step is retried with
    halved dt, up to eight times."""
    last = None
    for _ in range(9):
        try:
            return _advance(state, F, dt, integrator)
        except InadmissibleState as exc:
            last = exc
            if events is not None:
                events.append(FlowEvent(
                    "admissibility_violation", state.t,
                    {"dt": dt, "node": exc.node,
                     "kappa": None if exc.kappa is None else list(np.atleast_1d(exc.kappa))},
                ))
            dt *= 0.5
    raise last


def _snapshot_times(t0, t_end, every):
    k0 = math.floor(t0 / every + 1e-9) + 1
    times = []
    t = k0 * every
    while t < t_end - 1e-12:
        if t > t0 + 1e-12:
            times.append(t)
        t += every
    times.append(t_end)
    return times


def run(config: FlowConfig, initial_state: Optional[GraphState] = None):
    """Integrate to t_end, returning (final state, diagnostics series, events).

    Deterministic for a given config: fixed node order, no randomized
    reductions. Snapshots are taken at t = 0 (or the resume time), every
    output_every, and at t_end.
    """
    F = config.f
    if initial_state is None:
        grid = build_grid(config.grid_mode, config.grid_resolution)
        r0 = config.initial.radius_on(grid)
        r_max = float(np.max(r0)) + config.t_end / config.background.n + 2.0
        profile = build_warp_profile(config.background, r_max)
        state = state_from_radius(grid, profile, r0, t=0.0)
    else:
        state = initial_state
        grid = state.grid
        r0 = state.r.values

    series = dg.DiagnosticsSeries.start(state, F)
    events: list[FlowEvent] = []
    if config.t_end <= state.t:
        events.append(FlowEvent("completed", state.t, {"steps": 0}))
        return state, series, events

    def take_snapshot(s):
        ext = compute_extrinsic(s)
        rec = dg.snapshot(s, ext, F, pinch_ref=series.pinch_ref)
        series.append(s, rec)
        events.append(FlowEvent("snapshot", s.t, {"index": len(series.records) - 1}))

    take_snapshot(state)
    snap_times = _snapshot_times(state.t, config.t_end, config.output_every)
    steps = 0
    try:
        for target in snap_times:
            while state.t < target - 1e-12:
                dt = stable_dt(state, F, config.cfl,
                               dt_min=config.dt_min, dt_max=config.dt_max)
                dt = min(dt, target - state.t)
                state = step(state, F, dt, config.integrator, events=events)
                steps += 1
            take_snapshot(state)
    except Exception as exc:
        if isinstance(exc, TableExtentError):
            events.append(FlowEvent("table_extent", state.t, {"error": str(exc)}))
        exc.t = state.t
        exc.events = events
        raise
    events.append(FlowEvent("completed", state.t, {"steps": steps}))
    return state, series, events


# -- checkpointing -----------------------------------------------------------

def save_checkpoint(state: GraphState, path) -> None:
    grid = state.grid
    doc = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "t": state.t,
        "params": {
            "m": state.profile.params.m,
            "n": state.profile.params.n,
            "tol_root": state.profile.params.tol_root,
            "tol_ode": state.profile.params.tol_ode,
        },
        "grid": {
            "mode": grid.mode,
            "n_theta": grid.n_theta,
            "n_psi": grid.n_psi,
        },
        "base_radius": state.base_radius,
        "phi": [float(x) for x in state.phi.values.ravel()],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True)
        fh.write("\n")


def load_checkpoint(path, config: FlowConfig) -> GraphState:
    """Rebuild a state from a checkpoint document, validated against config."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format_version") != CHECKPOINT_FORMAT_VERSION:
        raise ConfigError(f"unsupported checkpoint format {doc.get('format_version')!r}")
    p = doc["params"]
    if p["m"] != config.background.m or p["n"] != config.background.n:
        raise ConfigError("checkpoint background parameters do not match the configuration")
    g = doc["grid"]
    if g["mode"] != config.grid_mode:
        raise ConfigError("checkpoint grid mode does not match the configuration")
    grid = build_grid(config.grid_mode, config.grid_resolution)
    if (grid.n_theta, grid.n_psi) != (g["n_theta"], g["n_psi"]):
        raise ConfigError("checkpoint grid resolution does not match the configuration")
    phi = np.asarray(doc["phi"], dtype=float).reshape(grid.field_shape)
    t = float(doc["t"])
    base = float(doc["base_radius"])
    # grow the table until it covers the checkpointed radii, then extend it
    # for the remaining integration window
    guess = abs(base) + 4.0
    r_now = None
    for _ in range(24):
        profile = build_warp_profile(config.background, guess)
        try:
            r_now = profile.radius_from_gauge(phi, base)
            break
        except TableExtentError:
            guess *= 2.0
    if r_now is None:
        raise ConfigError("checkpoint gauge values outside any reasonable table extent")
    r_max = float(np.max(r_now)) + (config.t_end - t) / config.background.n + 2.0
    if r_max > profile.r_max:
        profile = build_warp_profile(config.background, r_max)
    return state_from_gauge(grid, profile, phi, base, t=t)
