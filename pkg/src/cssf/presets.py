"""Analytic test curves sampled on the uniform grid.

=================  ====================================================
name               positions at parameter x
=================  ====================================================
circle             center + R (cos x, sin x, 0)
ellipse            center + (a cos x, b sin x, 0)
offset_circle      (d, 0, 0) + R (cos x, sin x, 0)
wave3d             (R cos x, R sin x, amp sin(mode x))
perturbed_circle   R (1 + eps cos(mode x)) (cos x, sin x, 0) + (0, 0, amp sin 2x)
trefoil            scale ((2 + cos 2x) cos 3x, (2 + cos 2x) sin 3x, sin 2x) / 2
=================  ====================================================
"""

from __future__ import annotations

import math

import numpy as np

from .curve import CurveState, ParamGrid

SQRT2 = math.sqrt(2.0)


def _vec3(value):
    v = np.asarray(value, dtype=float).reshape(-1)
    if v.shape != (3,):
        raise ValueError(f"expected a 3-vector, got {value!r}")
    return v


def circle(x, R=SQRT2, center=(0.0, 0.0, 0.0)):
    if R <= 0:
        raise ValueError("circle needs R > 0")
    return _vec3(center) + np.c_[R * np.cos(x), R * np.sin(x), np.zeros_like(x)]


def ellipse(x, a=2.0, b=1.0, center=(0.0, 0.0, 0.0)):
    if a <= 0 or b <= 0:
        raise ValueError("ellipse needs a, b > 0")
    return _vec3(center) + np.c_[a * np.cos(x), b * np.sin(x), np.zeros_like(x)]


def offset_circle(x, R=1.0, d=2.0):
    if R <= 0:
        raise ValueError("offset_circle needs R > 0")
    if math.isclose(abs(d), R, rel_tol=1e-12):
        raise ValueError("offset_circle with d == R puts the origin on the curve")
    return circle(x, R, (d, 0.0, 0.0))


def wave3d(x, R=SQRT2, amp=0.2, mode=2):
    if R <= 0:
        raise ValueError("wave3d needs R > 0")
    if int(mode) != mode:
        raise ValueError("wave3d mode must be an integer")
    return np.c_[R * np.cos(x), R * np.sin(x), amp * np.sin(mode * x)]


def perturbed_circle(x, R=SQRT2, eps=0.1, mode=3, amp=0.2):
    if R <= 0 or not abs(eps) < 1:
        raise ValueError("perturbed_circle needs R > 0 and |eps| < 1")
    if int(mode) != mode:
        raise ValueError("perturbed_circle mode must be an integer")
    rad = R * (1.0 + eps * np.cos(mode * x))
    return np.c_[rad * np.cos(x), rad * np.sin(x), amp * np.sin(2 * x)]


def trefoil(x, scale=1.0):
    if scale <= 0:
        raise ValueError("trefoil needs scale > 0")
    w = 2.0 + np.cos(2 * x)
    return scale * np.c_[w * np.cos(3 * x), w * np.sin(3 * x), np.sin(2 * x)] / 2.0


PRESETS = {
    "circle": circle,
    "ellipse": ellipse,
    "offset_circle": offset_circle,
    "wave3d": wave3d,
    "perturbed_circle": perturbed_circle,
    "trefoil": trefoil,
}

DEFAULTS = {
    "circle": {"R": SQRT2, "center": (0.0, 0.0, 0.0)},
    "ellipse": {"a": 2.0, "b": 1.0, "center": (0.0, 0.0, 0.0)},
    "offset_circle": {"R": 1.0, "d": 2.0},
    "wave3d": {"R": SQRT2, "amp": 0.2, "mode": 2},
    "perturbed_circle": {"R": SQRT2, "eps": 0.1, "mode": 3, "amp": 0.2},
    "trefoil": {"scale": 1.0},
}


def preset(name: str, n_nodes: int = 256, frame: str = "rescaled", time: float = 0.0,
           origin_shift=None, **params) -> CurveState:
    """Sample a named preset; ``origin_shift`` moves the reference point.

    Shifting the reference point to ``p`` is the same as translating the
    curve by ``-p``.
    """
    try:
        fn = PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    unknown = set(params) - set(DEFAULTS[name])
    if unknown:
        raise ValueError(f"unknown parameters for {name}: {sorted(unknown)}")
    grid = ParamGrid(n_nodes)
    pos = fn(grid.nodes, **params)
    if origin_shift is not None:
        pos = pos - _vec3(origin_shift)
    if np.any(np.linalg.norm(pos, axis=1) == 0):
        raise ValueError(f"preset {name} passes through the reference point")
    return CurveState(grid, pos, time, frame)
