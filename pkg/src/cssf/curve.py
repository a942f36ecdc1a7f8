"""Closed curves in R^3 sampled on a uniform periodic grid.

A curve is stored as an ``(n, 3)`` array of positions at the parameter
values ``x_i = 2*pi*i/n``.  Derivatives in ``x`` use fourth-order centered
finite differences with periodic wraparound, and integrals over the circle
use the periodic trapezoid rule.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import make_interp_spline

#: formal order of the centered difference stencils
FD_ORDER = 4

#: reject a curve when |gamma'| < IMMERSION_RTOL * mean |gamma'| somewhere
IMMERSION_RTOL = 1e-8

#: periodic interpolating spline used by resample_arclength
SPLINE_DEGREE = 5

FRAMES = ("physical", "rescaled")


class ImmersionError(ValueError):
    """The curve has (numerically) vanishing speed at some node."""


@dataclass(frozen=True)
class ParamGrid:
    """Uniform grid on [0, 2*pi) with an even number of nodes (at least 16)."""

    n_nodes: int

    def __post_init__(self):
        n = self.n_nodes
        if int(n) != n or n < 16 or n % 2:
            raise ValueError(f"n_nodes must be an even integer >= 16, got {n!r}")
        object.__setattr__(self, "n_nodes", int(n))

    @property
    def spacing(self) -> float:
        return 2.0 * np.pi / self.n_nodes

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.n_nodes) * self.spacing


@dataclass(frozen=True)
class CurveState:
    """Positions of a closed curve at one instant of the flow.

    ``time`` is the physical time ``t`` when ``frame == "physical"`` and the
    rescaled time ``tau`` when ``frame == "rescaled"``.
    """

    grid: ParamGrid
    positions: np.ndarray
    time: float = 0.0
    frame: str = "rescaled"
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float)
        if pos.shape != (self.grid.n_nodes, 3):
            raise ValueError(
                f"positions must have shape ({self.grid.n_nodes}, 3), got {pos.shape}"
            )
        if not np.all(np.isfinite(pos)):
            raise ValueError("positions contain non-finite values")
        if self.frame not in FRAMES:
            raise ValueError(f"frame must be one of {FRAMES}, got {self.frame!r}")
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "time", float(self.time))

    @classmethod
    def from_positions(cls, positions, time=0.0, frame="rescaled"):
        positions = np.asarray(positions, dtype=float)
        return cls(ParamGrid(len(positions)), positions, time, frame)

    @property
    def n_nodes(self) -> int:
        return self.grid.n_nodes

    def with_positions(self, positions, time=None) -> "CurveState":
        return CurveState(self.grid, positions,
                          self.time if time is None else time, self.frame)

    def length(self) -> float:
        speed = np.linalg.norm(differentiate(self, 1), axis=1)
        return integrate_periodic(speed, self.grid)


def _pad(values: np.ndarray) -> np.ndarray:
    return np.concatenate((values[-2:], values, values[:2]), axis=0)


def _d1(values: np.ndarray, h: float, padded=None) -> np.ndarray:
    p = _pad(values) if padded is None else padded
    return (8.0 * (p[3:-1] - p[1:-3]) - (p[4:] - p[:-4])) / (12.0 * h)


def _d2(values: np.ndarray, h: float, padded=None) -> np.ndarray:
    p = _pad(values) if padded is None else padded
    return (16.0 * (p[3:-1] + p[1:-3]) - (p[4:] + p[:-4]) - 30.0 * values) / (12.0 * h * h)


def derivatives(values: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray]:
    """First and second centered differences sharing one padded copy."""
    p = _pad(values)
    return _d1(values, h, p), _d2(values, h, p)


def cross(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Row-wise cross product of two ``(n, 3)`` arrays."""
    out = np.empty_like(u)
    out[:, 0] = u[:, 1] * v[:, 2] - u[:, 2] * v[:, 1]
    out[:, 1] = u[:, 2] * v[:, 0] - u[:, 0] * v[:, 2]
    out[:, 2] = u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0]
    return out


def norm(u: np.ndarray) -> np.ndarray:
    return np.sqrt(np.einsum("ij,ij->i", u, u))


def periodic_derivative(values: np.ndarray, h: float, order: int = 1) -> np.ndarray:
    """Fourth-order centered difference of periodic samples along axis 0."""
    if order == 1:
        return _d1(values, h)
    if order == 2:
        return _d2(values, h)
    raise ValueError(f"order must be 1 or 2, got {order!r}")


def check_immersion(d1: np.ndarray) -> np.ndarray:
    """Return the speed |gamma'| and raise if the curve is not immersed."""
    speed = norm(d1)
    if not np.all(speed >= IMMERSION_RTOL * speed.mean()) or speed.mean() == 0:
        i = int(np.argmin(speed))
        raise ImmersionError(f"curve is not immersed: |gamma'| = {speed[i]:.3e} at node {i}")
    return speed


def differentiate(curve: CurveState, order: int = 1) -> np.ndarray:
    """gamma' (order 1) or gamma'' (order 2) at every node, shape ``(n, 3)``."""
    h = curve.grid.spacing
    if order == 1:
        d = _d1(curve.positions, h)
        check_immersion(d)
        return d
    if order == 2:
        check_immersion(_d1(curve.positions, h))
        return _d2(curve.positions, h)
    raise ValueError(f"order must be 1 or 2, got {order!r}")


def integrate_periodic(values, grid: ParamGrid) -> float:
    """Periodic trapezoid rule over [0, 2*pi)."""
    values = np.asarray(values, dtype=float)
    if values.shape[0] != grid.n_nodes:
        raise ValueError(f"expected {grid.n_nodes} values, got {values.shape[0]}")
    return float(grid.spacing * np.sum(values, axis=0))


def spectral_derivative(values: np.ndarray) -> np.ndarray:
    """Derivative in x of periodic samples via the FFT (Nyquist mode dropped)."""
    n = values.shape[0]
    k = np.fft.rfftfreq(n, d=1.0 / n)
    coeffs = np.fft.rfft(values, axis=0)
    coeffs *= (1j * k)[:, None] if values.ndim > 1 else 1j * k
    if n % 2 == 0:
        coeffs[-1] = 0.0
    return np.fft.irfft(coeffs, n, axis=0)


def cumulative_arclength(curve: CurveState) -> tuple[np.ndarray, float]:
    """Arclength from node 0 to every node, and the total length.

    Both the speed and its antiderivative are computed spectrally so the
    table does not depend on how the nodes are distributed.
    """
    n = curve.n_nodes
    check_immersion(_d1(curve.positions, curve.grid.spacing))
    speed = np.linalg.norm(spectral_derivative(curve.positions), axis=1)
    coeffs = np.fft.rfft(speed) / n
    k = np.arange(coeffs.size)
    mean = coeffs[0].real
    anti = np.zeros_like(coeffs)
    anti[1:] = coeffs[1:] / (1j * k[1:])
    if n % 2 == 0:
        # Nyquist mode integrates to a non-periodic sawtooth; drop it
        anti[-1] = 0.0
    periodic = np.fft.irfft(anti * n, n)
    s = mean * curve.grid.nodes + periodic - periodic[0]
    total = 2.0 * np.pi * mean
    if np.any(np.diff(s) <= 0):
        raise ImmersionError("cumulative arclength is not monotone")
    return s, total


def resample_arclength(curve: CurveState) -> CurveState:
    """Redistribute the nodes uniformly in arclength along the same locus.

    Node 0 is kept fixed; positions are interpolated against cumulative
    arclength with a periodic quintic spline.
    """
    s, total = cumulative_arclength(curve)
    knots = np.append(s, total)
    values = np.vstack([curve.positions, curve.positions[:1]])
    spline = make_interp_spline(knots, values, k=SPLINE_DEGREE, axis=0, bc_type="periodic")
    target = np.arange(curve.n_nodes) * (total / curve.n_nodes)
    return curve.with_positions(spline(target))
