"""Explicit time stepping of the physical and rescaled curve shortening flows.

Physical flow:  d/dt g = kappa nu.
Rescaled flow:  d/dtau g = g/2 + g' x (g'' x g') / |g'|^4,
obtained from tau = -log(T - t), g_rescaled = (T - t)^(-1/2) g.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .curve import (IMMERSION_RTOL, CurveState, check_immersion, cross,
                    derivatives, norm, resample_arclength)

log = logging.getLogger(__name__)

#: keeps the time-step rule finite on flat curves
SIGMA_FLOOR = 1e-8

#: largest dt * gap_min^-2 that classical RK4 keeps stable for the order-4
#: second-difference stencil (spectral radius 16/3 per h^2, real-axis
#: stability interval 2.785).  Since kappa_max * speed_max >= 1 on any closed
#: curve, the step rule never reaches it for dt_safety <= 1.
DIFFUSIVE_LIMIT = 2.785 * 3.0 / 16.0


class SingularityError(RuntimeError):
    """The integrator can no longer resolve the curvature scale."""

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


def curvature_vector(positions: np.ndarray, h: float) -> np.ndarray:
    """kappa nu = g' x (g'' x g') / |g'|^4, continuous through flat points."""
    d1, d2 = derivatives(positions, h)
    speed = check_immersion(d1)
    return cross(d1, cross(d2, d1)) / (speed ** 4)[:, None]


def _kernel(P: np.ndarray, h: float, stats: bool = True):
    """Curvature vector (and step statistics) on a ``(3, n)`` position array.

    Uses g' x (g'' x g') = g'' |g'|^2 - g' <g', g''>, which needs no cross
    products.  Returns ``(kappa_nu, kappa_max, speed_max, gap_min)``; the
    statistics are None when ``stats`` is false.
    """
    pad = np.concatenate((P[:, -2:], P, P[:, :2]), axis=1)
    near_m, near_p = pad[:, 1:-3], pad[:, 3:-1]
    far_m, far_p = pad[:, :-4], pad[:, 4:]
    d1 = (8.0 * (near_p - near_m) - (far_p - far_m)) * (1.0 / (12.0 * h))
    d2 = (16.0 * (near_p + near_m) - (far_p + far_m) - 30.0 * P) * (1.0 / (12.0 * h * h))
    s2 = np.einsum("ij,ij->j", d1, d1)
    dd = np.einsum("ij,ij->j", d1, d2)
    if not s2.min() >= IMMERSION_RTOL ** 2 * s2.max():
        # min |g'| >= rtol * max |g'| implies the mean-based rule; otherwise
        # defer to the exact check
        check_immersion(d1.T)
    inv = 1.0 / (s2 * s2)
    kv = (d2 * s2 - d1 * dd) * inv
    if not stats:
        return kv, None, None, None
    k2 = (np.einsum("ij,ij->j", d2, d2) * s2 - dd * dd) * (inv / s2)
    chord = np.diff(P, axis=1, append=P[:, :1])
    gap = math.sqrt(float(np.einsum("ij,ij->j", chord, chord).min()))
    kappa_max = math.sqrt(max(float(k2.max()), 0.0))
    return kv, kappa_max, math.sqrt(float(s2.max())), gap


def rhs_physical(curve: CurveState) -> np.ndarray:
    return curvature_vector(curve.positions, curve.grid.spacing)


def rhs_rescaled(curve: CurveState) -> np.ndarray:
    return 0.5 * curve.positions + curvature_vector(curve.positions, curve.grid.spacing)


RHS = {"physical": rhs_physical, "rescaled": rhs_rescaled}

# the built-in right sides as kappa nu + c g, so RK stages can run on raw arrays
_LINEAR_PART = {rhs_physical: 0.0, rhs_rescaled: 0.5}


@dataclass
class FlowConfig:
    """Integrator settings.

    The step is ``dt = dt_safety * gap_min**2 / (2 * kappa_max * speed_max + sigma_floor)``
    with ``gap_min`` the smallest chord between neighbouring nodes, recomputed
    every step.  Integration stops at ``t_end`` (in the curve's own time
    variable) or after ``n_steps`` steps, whichever is given.
    """

    t_end: float | None = None
    n_steps: int | None = None
    dt_safety: float = 0.2
    resample_every: int = 0
    snapshot_every: int = 1
    scheme: str = "rk4"
    sigma_floor: float = SIGMA_FLOOR

    def __post_init__(self):
        if self.scheme != "rk4":
            raise ValueError(f"unsupported scheme {self.scheme!r}")
        if not 0 < self.dt_safety:
            raise ValueError("dt_safety must be positive")
        if self.t_end is None and self.n_steps is None:
            raise ValueError("one of t_end or n_steps is required")
        if self.resample_every < 0 or self.snapshot_every < 1:
            raise ValueError("resample_every must be >= 0 and snapshot_every >= 1")


@dataclass
class StepInfo:
    dt: float
    min_cos2_psi: float
    min_radius: float
    max_kappa: float


@dataclass
class Trajectory:
    frame: str
    times: list = field(default_factory=list)
    states: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)

    def append(self, state: CurveState, info: StepInfo | None):
        if self.states:
            if state.n_nodes != self.states[0].n_nodes:
                raise ValueError("all snapshots must share n_nodes")
            if state.time <= self.times[-1]:
                raise ValueError("snapshot times must increase strictly")
        self.times.append(state.time)
        self.states.append(state)
        self.diagnostics.append(info)

    def __len__(self):
        return len(self.states)

    def __getitem__(self, i):
        return self.states[i]


def _step_size(curve: CurveState, config: FlowConfig) -> tuple[float, float, float]:
    pos = curve.positions
    d1, d2 = derivatives(pos, curve.grid.spacing)
    speed = check_immersion(d1)
    k_max = float(np.max(norm(cross(d2, d1)) / speed ** 3))
    gap = norm(np.diff(pos, axis=0, append=pos[:1])).min()
    dt = config.dt_safety * gap ** 2 / (2.0 * k_max * speed.max() + config.sigma_floor)
    return float(dt), k_max, float(gap)


def step_size(curve: CurveState, config: FlowConfig) -> float:
    return _step_size(curve, config)[0]


def diagnostics(curve: CurveState, dt: float) -> StepInfo:
    pos = curve.positions
    h = curve.grid.spacing
    d1, d2 = derivatives(pos, h)
    speed = norm(d1)
    kappa = norm(cross(d2, d1)) / speed ** 3
    radius = norm(pos)
    with np.errstate(invalid="ignore", divide="ignore"):
        cos2 = (norm(cross(pos, d1)) / (radius * speed)) ** 2
    return StepInfo(float(dt), float(np.nanmin(cos2)), float(radius.min()), float(kappa.max()))


def _dt_rule(config: FlowConfig, kappa_max, speed_max, gap) -> float:
    return config.dt_safety * gap ** 2 / (2.0 * kappa_max * speed_max + config.sigma_floor)


def _guard(dt, kappa_max, gap):
    if not math.isfinite(kappa_max) or kappa_max * dt > 1.0 or dt > DIFFUSIVE_LIMIT * gap ** 2:
        raise SingularityError("singularity resolution exceeded")


def _rk4_linear(curve: CurveState, c: float, config: FlowConfig, dt=None, t_cap=None):
    """RK4 for d/dt g = kappa nu + c g on the transposed array; returns (state, dt)."""
    h = curve.grid.spacing
    P = np.ascontiguousarray(curve.positions.T)
    try:
        kv, k_max, v_max, gap = _kernel(P, h)
        if dt is None:
            dt = _dt_rule(config, k_max, v_max, gap)
            if t_cap is not None and curve.time + dt >= t_cap:
                dt = t_cap - curve.time
        _guard(dt, k_max, gap)
        k1 = kv + c * P if c else kv
        Q = P + 0.5 * dt * k1
        k2 = _kernel(Q, h, False)[0] + (c * Q if c else 0.0)
        Q = P + 0.5 * dt * k2
        k3 = _kernel(Q, h, False)[0] + (c * Q if c else 0.0)
        Q = P + dt * k3
        k4 = _kernel(Q, h, False)[0] + (c * Q if c else 0.0)
        new = P + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    except (ValueError, FloatingPointError) as exc:
        raise SingularityError("singularity resolution exceeded") from exc
    if not np.all(np.isfinite(new)):
        raise SingularityError("singularity resolution exceeded")
    return curve.with_positions(new.T, curve.time + dt), dt


def step(curve: CurveState, rhs: Callable[[CurveState], np.ndarray],
         config: FlowConfig, dt: float | None = None) -> CurveState:
    """One classical RK4 step; ``dt`` defaults to the adaptive rule.

    Raises :class:`SingularityError` when ``max kappa * dt > 1`` or when
    ``dt`` exceeds the RK4 stability limit of the spatial stencil.
    """
    if rhs in _LINEAR_PART:
        return _rk4_linear(curve, _LINEAR_PART[rhs], config, dt)[0]
    computed, k_max, gap = _step_size(curve, config)
    if dt is None:
        dt = computed
    _guard(dt, k_max, gap)

    def at(positions, t):
        return rhs(curve.with_positions(positions, t))

    try:
        p, t = curve.positions, curve.time
        k1 = at(p, t)
        k2 = at(p + 0.5 * dt * k1, t + 0.5 * dt)
        k3 = at(p + 0.5 * dt * k2, t + 0.5 * dt)
        k4 = at(p + dt * k3, t + dt)
        new = p + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        return curve.with_positions(new, t + dt)
    except ValueError as exc:
        # non-finite or collapsed intermediate stages
        raise SingularityError("singularity resolution exceeded") from exc


def integrate(curve: CurveState, config: FlowConfig, rhs=None) -> Trajectory:
    """Advance ``curve`` with its frame's RHS and collect snapshots.

    The initial state is always the first snapshot; the final state is always
    the last one.  On a singularity the partial trajectory is attached to the
    raised :class:`SingularityError`.
    """
    rhs = RHS[curve.frame] if rhs is None else rhs
    traj = Trajectory(curve.frame)
    traj.append(curve, diagnostics(curve, 0.0))
    state = curve
    n = 0
    linear = _LINEAR_PART.get(rhs)
    while True:
        if config.n_steps is not None and n >= config.n_steps:
            break
        if config.t_end is not None:
            remaining = config.t_end - state.time
            if remaining <= 1e-14 * max(1.0, abs(config.t_end)):
                break
        try:
            if linear is not None:
                state, dt = _rk4_linear(state, linear, config, t_cap=config.t_end)
            else:
                dt = step_size(state, config)
                if config.t_end is not None and state.time + dt >= config.t_end:
                    dt = config.t_end - state.time
                state = step(state, rhs, config, dt)
        except SingularityError as exc:
            exc.trajectory = traj
            log.warning("integration aborted at %s=%g", "t" if curve.frame == "physical" else "tau",
                        state.time)
            raise
        n += 1
        last = config.t_end is not None and state.time >= config.t_end
        if config.resample_every and n % config.resample_every == 0:
            state = resample_arclength(state)
        final = last or (config.n_steps is not None and n >= config.n_steps)
        if n % config.snapshot_every == 0 or final:
            traj.append(state, diagnostics(state, dt))
        if last:
            break
    return traj


def rescale_transform(curve: CurveState, T: float, direction: str) -> CurveState:
    """Map between physical (t, g) and rescaled (tau, g~) coordinates.

    tau = -log(T - t) and g~ = (T - t)^(-1/2) g.
    """
    if direction == "to_rescaled":
        if curve.frame != "physical":
            raise ValueError("expected a physical-frame curve")
        gap = T - curve.time
        if not gap > 0:
            raise ValueError(f"need t < T, got t={curve.time}, T={T}")
        return CurveState(curve.grid, curve.positions / math.sqrt(gap), -math.log(gap), "rescaled")
    if direction == "to_physical":
        if curve.frame != "rescaled":
            raise ValueError("expected a rescaled-frame curve")
        if not math.isfinite(curve.time):
            raise ValueError("tau must be finite")
        gap = math.exp(-curve.time)
        return CurveState(curve.grid, curve.positions * math.sqrt(gap), T - gap, "physical")
    raise ValueError(f"direction must be 'to_rescaled' or 'to_physical', got {direction!r}")
