import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from cssf.curve import CurveState, ParamGrid, cumulative_arclength, resample_arclength
from cssf.geometry import (OriginHitError, exclusion_mask, frame_eval, tangency_detect)
from cssf.presets import PRESETS, preset


def sampled(fn, n):
    g = ParamGrid(n)
    return CurveState(g, fn(g.nodes))


def test_sqrt2_circle():
    f = frame_eval(preset("circle", 256))
    assert np.max(np.abs(f.kappa - 1 / math.sqrt(2))) <= 1e-7
    assert np.max(np.abs(f.psi)) <= 1e-12
    assert np.max(f.proj_binormal_sq) <= 1e-24
    assert f.normal_defined.all()


def test_radial_tangent_gives_right_angle():
    # at x = 0 the position is (1, 0, 0); y and z are mirrored exactly about
    # node 0, so their centered differences vanish and g' = (c, 0, 0)
    g = ParamGrid(64)
    x = g.nodes
    pts = np.c_[1 + 2 * np.sin(x), 0.5 * (1 - np.cos(x)), 0.1 * (1 - np.cos(2 * x))]
    pts[1:, 1:] = 0.5 * (pts[1:, 1:] + pts[:0:-1, 1:])
    f = frame_eval(CurveState(g, pts))
    assert np.array_equal(f.position[0], [1.0, 0.0, 0.0])
    assert f.cos_psi[0] == 0.0
    assert f.psi[0] == math.pi / 2


def test_helix_curvature_matches_symbolic():
    fn = lambda x: np.c_[np.cos(x), np.sin(x), 0.2 * np.sin(2 * x)]
    c = sampled(fn, 512)
    x = c.grid.nodes
    d1 = np.c_[-np.sin(x), np.cos(x), 0.4 * np.cos(2 * x)]
    d2 = np.c_[-np.cos(x), -np.sin(x), -0.8 * np.sin(2 * x)]
    kappa = np.linalg.norm(np.cross(d2, d1), axis=1) / np.linalg.norm(d1, axis=1) ** 3
    assert np.max(np.abs(frame_eval(c).kappa - kappa)) <= 1e-6


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_frame_invariants(name):
    f = frame_eval(preset(name, 256))
    d = f.normal_defined
    r2 = f.radius ** 2
    total = f.proj_tangent_sq + f.proj_normal ** 2 + f.proj_binormal_sq
    assert np.max(np.abs(total - r2)[d] / r2[d]) <= 1e-9
    lhs = f.sin_psi * f.radius * f.speed
    rhs = np.einsum("ij,ij->i", f.position, f.d1)
    assert np.max(np.abs(lhs - rhs) / (f.radius * f.speed)) <= 1e-12
    tang = f.d1 / f.speed[:, None]
    assert np.max(np.abs(np.einsum("ij,ij->i", f.normal, tang))[d]) <= 1e-10
    assert np.allclose(np.linalg.norm(f.normal, axis=1), 1.0)
    assert np.all(f.cos_psi >= 0) and np.all(np.abs(f.psi) <= math.pi / 2)


def test_origin_hit():
    pts = preset("circle", 64, R=1.0).positions.copy()
    pts -= pts[5]
    with pytest.raises(OriginHitError, match="origin hit"):
        frame_eval(CurveState(ParamGrid(64), pts))


def test_inflections_keep_a_unit_normal():
    # a dented plane curve: the signed curvature changes sign, so kappa passes
    # through zero between nodes
    fn = lambda x: np.c_[np.cos(x), np.sin(x) + 0.6 * np.sin(x) ** 3 * np.cos(x) * 2, 0 * x]
    c = sampled(fn, 256).with_positions(sampled(fn, 256).positions + [0.0, 0.0, 0.0])
    f = frame_eval(c)
    signed = f.d1[:, 0] * f.d2[:, 1] - f.d1[:, 1] * f.d2[:, 0]
    assert signed.min() < 0 < signed.max()
    assert np.all(np.isfinite(f.normal))
    assert np.allclose(np.linalg.norm(f.normal, axis=1), 1.0)
    assert np.all(f.kappa >= 0)


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(["ellipse", "wave3d", "trefoil", "perturbed_circle"]),
       st.integers(0, 2 ** 31 - 1))
def test_rotation_invariance(name, seed):
    c = preset(name, 256)
    Q = Rotation.random(random_state=seed).as_matrix()
    a, b = frame_eval(c), frame_eval(c.with_positions(c.positions @ Q.T))
    assert np.max(np.abs(a.psi - b.psi)) <= 1e-12
    assert np.max(np.abs(a.radius - b.radius)) <= 1e-12
    # kappa carries the rounding of the second difference, about
    # eps * |g| / h^2 ~ 2e-12 at n = 256
    assert np.max(np.abs(a.kappa - b.kappa)) <= 1e-11
    # the binormal direction is ill-conditioned where kappa -> 0 (the planar
    # part of perturbed_circle is flat at x = pi), so compare kappa |Proj_B g|,
    # the combination every formula consumes
    pa = a.kappa * np.sqrt(a.proj_binormal_sq)
    pb = b.kappa * np.sqrt(b.proj_binormal_sq)
    assert np.max(np.abs(pa - pb)) <= 1e-11


def _arclength_reference(name):
    # uniform-in-arclength samples of a very fine curve: node j of an n-node
    # arclength grid is node j * 16384 / n here
    return resample_arclength(preset(name, 16384))


@pytest.mark.parametrize("name", ["ellipse", "trefoil", "wave3d", "perturbed_circle"])
def test_reparametrization_invariance(name):
    ref = frame_eval(_arclength_reference(name))
    r = frame_eval(resample_arclength(preset(name, 512)))
    for field in ("kappa", "psi", "radius"):
        assert np.max(np.abs(getattr(r, field) - getattr(ref, field)[::32])) <= 1e-5


@pytest.mark.parametrize("name", ["ellipse", "trefoil", "wave3d", "perturbed_circle"])
def test_resampling_adds_no_error_beyond_differencing(name):
    # at n = 256 the frame of the resampled curve equals the frame of exact
    # arclength samples; what remains against the continuum is the stencil's
    # own truncation on that grid
    fine = _arclength_reference(name)
    exact = frame_eval(CurveState(ParamGrid(256), fine.positions[::64]))
    r = frame_eval(resample_arclength(preset(name, 256)))
    for field in ("kappa", "psi", "radius"):
        assert np.max(np.abs(getattr(r, field) - getattr(exact, field))) <= 1e-7


def test_plane_curve_has_no_binormal_part():
    for name in ("circle", "ellipse", "offset_circle"):
        assert np.max(frame_eval(preset(name, 256)).proj_binormal_sq) <= 1e-18


class TestTangency:
    def test_centered_circle_has_none(self):
        c = preset("circle", 256, R=1.0)
        assert tangency_detect(frame_eval(c), c) == []

    def test_offset_circle_two_points(self):
        c = preset("offset_circle", 512)
        pts = tangency_detect(frame_eval(c), c)
        assert len(pts) == 2
        for p in pts:
            assert p.radius_star == pytest.approx(math.sqrt(3), abs=1e-3)
            assert p.kappa_star == pytest.approx(1.0, abs=1e-3)
            assert not p.degenerate
        # tangent lines from the origin touch the unit circle at (2,0)+(cos x, sin x)
        # with cos x = -1/2
        xs = sorted(p.x_star for p in pts)
        assert xs[0] == pytest.approx(2 * math.pi / 3, abs=1e-3)
        assert xs[1] == pytest.approx(4 * math.pi / 3, abs=1e-3)

    def test_ellipse_star_shaped(self):
        c = preset("ellipse", 256)
        f = frame_eval(c)
        assert tangency_detect(f, c) == []
        x = np.linspace(0, 2 * math.pi, 200001)
        p = np.c_[2 * np.cos(x), np.sin(x)]
        t = np.c_[-2 * np.sin(x), np.cos(x)]
        cos2 = (p[:, 0] * t[:, 1] - p[:, 1] * t[:, 0]) ** 2 / (
            np.sum(p * p, 1) * np.sum(t * t, 1))
        assert cos2.min() == pytest.approx(0.64, abs=1e-6)

    @pytest.mark.parametrize("n", [256, 512, 1024])
    def test_count_stable_under_refinement(self, n):
        c = preset("offset_circle", n)
        assert len(tangency_detect(frame_eval(c), c)) == 2

    def test_exclusion_window(self):
        c = preset("offset_circle", 512)
        f = frame_eval(c)
        pts = tangency_detect(f, c)
        mask = exclusion_mask(f, pts)
        for p in pts:
            for k in range(-2, 3):
                assert mask[(p.node + k) % 512]
        assert not mask[0] and not mask[256]
