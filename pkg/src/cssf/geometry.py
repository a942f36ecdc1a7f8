"""Pointwise differential geometry of a sampled space curve.

Everything is measured relative to the origin, which plays the role of the
blow-up point of the rescaled flow.  The angle ``psi`` is the signed angle
between the position vector and the plane orthogonal to the tangent, so
``sin(psi) = <g, g'> / (|g| |g'|)`` and ``cos(psi) >= 0``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curve import CurveState, check_immersion, periodic_derivative

#: normal is flagged undefined where |g'' x g'| < EPS_FLAT |g'| |g''|
EPS_FLAT = 1e-10

#: cos^2(psi) below this counts as a tangency (position vector along the tangent)
THETA_TAN = 1e-4

#: nodes on each side of a tangency dropped from singular integrands
EXCLUSION_WINDOW = 2


class OriginHitError(ValueError):
    """The curve passes through the reference point."""


@dataclass(frozen=True)
class GeometryFrame:
    d1: np.ndarray
    d2: np.ndarray
    position: np.ndarray
    speed: np.ndarray
    kappa: np.ndarray
    normal: np.ndarray
    binormal_dir: np.ndarray
    normal_defined: np.ndarray
    sin_psi: np.ndarray
    cos_psi: np.ndarray
    psi: np.ndarray
    radius: np.ndarray
    proj_tangent_sq: np.ndarray
    proj_normal: np.ndarray
    proj_binormal_sq: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.kappa)

    @property
    def perp_sq(self) -> np.ndarray:
        """|g|^2 cos^2(psi): squared length of the part of g orthogonal to g'."""
        return self.proj_normal ** 2 + self.proj_binormal_sq

    @property
    def binormal_fraction(self) -> np.ndarray:
        """|Proj_B g|^2 / (|g|^2 cos^2 psi), bounded by 1; 0 where g is along g'."""
        perp = self.perp_sq
        out = np.zeros_like(perp)
        np.divide(self.proj_binormal_sq, perp, out=out, where=perp > 0)
        return out


def _fallback_normal(tangent: np.ndarray) -> np.ndarray:
    # any unit vector orthogonal to the tangent, chosen deterministically
    axis = np.zeros_like(tangent)
    axis[np.arange(len(tangent)), np.argmin(np.abs(tangent), axis=1)] = 1.0
    v = np.cross(tangent, axis)
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def frame_eval(curve: CurveState, origin=None) -> GeometryFrame:
    pos = curve.positions if origin is None else curve.positions - np.asarray(origin, float)
    h = curve.grid.spacing
    d1 = periodic_derivative(pos, h, 1)
    d2 = periodic_derivative(pos, h, 2)
    speed = check_immersion(d1)
    radius = np.linalg.norm(pos, axis=1)
    if np.any(radius == 0):
        raise OriginHitError(f"origin hit at node {int(np.argmin(radius))}")

    cross = np.cross(d2, d1)
    cross_norm = np.linalg.norm(cross, axis=1)
    kappa = cross_norm / speed ** 3
    defined = cross_norm >= EPS_FLAT * speed * np.linalg.norm(d2, axis=1)
    defined &= cross_norm > 0

    tangent = d1 / speed[:, None]
    normal = _fallback_normal(tangent)
    nu = np.cross(d1, cross)
    safe = np.where(defined, speed * cross_norm, 1.0)
    normal[defined] = (nu / safe[:, None])[defined]
    binormal = np.cross(normal, tangent)

    dot = np.einsum("ij,ij->i", pos, d1)
    sin_psi = np.clip(dot / (radius * speed), -1.0, 1.0)
    cos_psi = np.clip(np.linalg.norm(np.cross(pos, d1), axis=1) / (radius * speed), 0.0, 1.0)
    psi = np.arctan2(sin_psi, cos_psi)

    proj_t = np.einsum("ij,ij->i", pos, tangent)
    proj_n = np.einsum("ij,ij->i", pos, normal)
    proj_b = np.einsum("ij,ij->i", pos, binormal)
    return GeometryFrame(
        d1=d1, d2=d2, position=pos, speed=speed, kappa=kappa, normal=normal,
        binormal_dir=binormal, normal_defined=defined, sin_psi=sin_psi,
        cos_psi=cos_psi, psi=psi, radius=radius, proj_tangent_sq=proj_t ** 2,
        proj_normal=proj_n, proj_binormal_sq=proj_b ** 2,
    )


@dataclass(frozen=True)
class TangencyPoint:
    """Sub-grid location where the position vector is tangent to the curve."""

    x_star: float
    kappa_star: float
    radius_star: float
    node: int
    cos2_min: float
    #: |d cos(psi)/dx| at the tangency, from the fitted parabola
    slope: float
    degenerate: bool = False


def _quad_interp(y_m, y_0, y_p, t):
    return y_0 + 0.5 * t * (y_p - y_m) + 0.5 * t * t * (y_p - 2.0 * y_0 + y_m)


def tangency_detect(frame: GeometryFrame, curve: CurveState,
                    theta_tan: float = THETA_TAN) -> list[TangencyPoint]:
    """Locate the parameters where cos(psi) vanishes.

    Candidates are local minima of cos^2(psi) over the nodes.  A parabola
    through the minimum and its two neighbours gives the sub-grid location
    and the minimum value; the candidate is kept when that value is below
    ``theta_tan``.  Curvature and radius are interpolated quadratically at
    the refined location.
    """
    c2 = frame.cos_psi ** 2
    n = len(c2)
    h = curve.grid.spacing
    c2m, c2p = np.roll(c2, 1), np.roll(c2, -1)
    candidates = np.flatnonzero((c2 <= c2m) & (c2 < c2p))
    points = []
    for i in candidates:
        y_m, y_0, y_p = c2[(i - 1) % n], c2[i], c2[(i + 1) % n]
        curv = 0.5 * (y_p - 2.0 * y_0 + y_m)
        slope_b = 0.5 * (y_p - y_m)
        if curv > 0:
            t = float(np.clip(-slope_b / (2.0 * curv), -1.0, 1.0))
            vmin = y_0 + slope_b * t + curv * t * t
        else:
            t, vmin = 0.0, y_0
        if vmin > theta_tan:
            continue
        idx = [(i - 1) % n, i, (i + 1) % n]
        kappa_star = max(_quad_interp(*frame.kappa[idx], t), 0.0)
        radius_star = _quad_interp(*frame.radius[idx], t)
        speed_star = _quad_interp(*frame.speed[idx], t)
        slope = np.sqrt(max(curv, 0.0)) / h
        # at a simple zero |d cos(psi)/dx| = kappa |g'|, since (g x g')' = g x g''
        # there; a vanishing kappa or a much smaller fitted slope means
        # cos(psi) touches zero to higher order
        floor = 1e-3 * speed_star / radius_star
        degenerate = slope < floor or kappa_star * speed_star < floor
        x_star = (curve.grid.nodes[i] + t * h) % (2.0 * np.pi)
        points.append(TangencyPoint(float(x_star), float(kappa_star), float(radius_star),
                                    int(i), float(max(vmin, 0.0)), float(slope),
                                    bool(degenerate)))
    return points


def exclusion_mask(frame: GeometryFrame, tangencies=None, theta_tan: float = THETA_TAN,
                   window: int = EXCLUSION_WINDOW) -> np.ndarray:
    """Boolean mask of nodes to drop from integrands carrying 1/cos(psi) or tan(psi)."""
    bad = frame.cos_psi ** 2 <= theta_tan
    seeds = set(np.flatnonzero(bad).tolist())
    if tangencies:
        seeds.update(tp.node for tp in tangencies)
    mask = np.zeros(frame.n_nodes, dtype=bool)
    n = frame.n_nodes
    for i in seeds:
        for k in range(-window, window + 1):
            mask[(i + k) % n] = True
    return mask
