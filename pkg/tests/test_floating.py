import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import brentq

from floatdual.bodies import BpBall, Ellipsoid, RadialGridBody, bp_volume
from floatdual.directions import circle_grid, fibonacci_sphere, fold
from floatdual.errors import DomainError
from floatdual.floating import (_fold_signs, cap_height, cap_heights, dupin_points, floating_body,
                                floating_boundary_dupin, floating_radial, floating_radial_envelope,
                                gamma_bounds, sandwich_violations)
from floatdual.illumination import bp_contact_constants
from floatdual.invariants import G, fit_correction
from floatdual.measure import CapSpec, cap_volume, caps

DISC = BpBall(2, 2.0)
B4 = BpBall(2, 4.0)
B15 = BpBall(2, 1.5)
ELL = Ellipsoid((2.0, 1.0))


def disc_depth(delta):
    return brentq(lambda h: math.acos(1 - h) - (1 - h) * math.sqrt(1 - (1 - h) ** 2) - delta * math.pi,
                  0.0, 1.0, xtol=1e-15)


def sphere_depth(delta):
    return brentq(lambda h: math.pi * h * h * (3 - h) / 3 - delta * 4 * math.pi / 3, 0.0, 1.0, xtol=1e-15)


def pulled_back(radial_of_disc, axes, v):
    """Radial function of A K_delta along v from that of K_delta, A = diag(axes)."""
    w = v / np.asarray(axes)
    nw = np.linalg.norm(w, axis=-1)
    return radial_of_disc(w / nw[..., None]) / nw


@pytest.mark.parametrize("delta", [1e-6, 1e-3, 0.1, 0.4])
def test_disc_cap_height_closed_form(delta):
    assert cap_height(DISC, [0.6, 0.8], delta) == pytest.approx(disc_depth(delta), rel=1e-10)


def test_half_volume_cap_height_is_support():
    assert cap_height(DISC, [1.0, 0.0], 0.5) == pytest.approx(1.0, abs=1e-12)
    u = np.array([math.cos(0.3), math.sin(0.3)])
    assert cap_height(B4, u, 0.5) == pytest.approx(float(B4.support(u)), rel=1e-12)


def test_sphere_cap_height_closed_form():
    assert cap_height(BpBall(3, 2.0), [0.0, 0.6, 0.8], 0.01) == pytest.approx(sphere_depth(0.01), rel=1e-8)


def test_bp_axis_cap_height_asymptotic():
    d = 1e-4
    ref = (5.0 * d * bp_volume(2, 4.0) / bp_volume(1, 4.0)) ** 0.8 / 4.0
    assert cap_height(B4, [1.0, 0.0], d) == pytest.approx(ref, rel=0.02)


@pytest.mark.parametrize("body", [DISC, B4, B15, ELL, BpBall(3, 4.0)], ids=repr)
def test_height_profile_residuals(body):
    u = circle_grid(64) if body.dim == 2 else fibonacci_sphere(32)
    prof = cap_heights(body, u, 1e-3)
    assert prof.max_relative_residual <= 1e-10
    assert np.all(prof.heights > 0)
    assert len(prof.entries) == len(u)
    for uu, h, _, _ in prof.entries[:5]:
        assert cap_volume(body, CapSpec(uu, h)) == pytest.approx(1e-3 * body.volume(), rel=1e-9)


@given(a=st.floats(1e-6, 0.49), b=st.floats(1e-6, 0.49), th=st.floats(0, 2 * math.pi))
def test_cap_height_monotone_in_delta(a, b, th):
    u = [math.cos(th), math.sin(th)]
    lo, hi = sorted((a, b))
    assert cap_height(B4, u, lo) <= cap_height(B4, u, hi) * (1 + 1e-12)


def test_delta_domain():
    for d in (0.0, -0.1, 0.6):
        with pytest.raises(DomainError):
            cap_height(DISC, [1.0, 0.0], d)


def test_ball_floating_radius():
    d = 1e-3
    u = circle_grid(32)
    assert np.allclose(floating_radial_envelope(DISC, d, u), 1 - disc_depth(d), rtol=1e-12)
    assert np.allclose(floating_radial(DISC, d, u), 1 - disc_depth(d), rtol=1e-12)
    fb = floating_body(DISC, d, circle_grid(256))
    assert np.allclose(fb.radial(circle_grid(1000)), 1 - disc_depth(d), rtol=1e-12)


def test_ellipse_envelope_is_affine_image_of_disc():
    d = 1e-3
    e1 = np.array([[1.0, 0.0]])
    assert floating_radial_envelope(ELL, d, e1)[0] == pytest.approx(2 * floating_radial_envelope(DISC, d, e1)[0],
                                                                     rel=1e-10)
    v = circle_grid(128)
    ref = pulled_back(lambda w: floating_radial(DISC, d, w), ELL.axes, v)
    assert np.allclose(floating_radial(ELL, d, v), ref, rtol=1e-6)
    fb = floating_body(ELL, d, circle_grid(1024))
    assert np.allclose(fb.radial(v), ref, rtol=1e-6)


def test_axis_contact_scaling():
    c1 = bp_contact_constants(2, 4.0).c1
    sweep = [1e-2, 3e-3, 1e-3, 3e-4, 1e-4, 3e-5, 1e-5]
    y = [(1 - floating_radial_envelope(B4, d, np.array([[1.0, 0.0]]))[0]) / d ** 0.8 for d in sweep]
    assert y[4] == pytest.approx(c1, rel=0.03)
    assert fit_correction(sweep, y).limit == pytest.approx(c1, rel=0.03)


def test_dupin_points_examples():
    d = 1e-3
    for th in (0.0, 0.7, 2.0):
        u = np.array([math.cos(th), math.sin(th)])
        x = floating_boundary_dupin(DISC, d, u)
        assert np.linalg.norm(x) == pytest.approx(1 - disc_depth(d), abs=1e-10)
        assert np.allclose(x / np.linalg.norm(x), u, atol=1e-12)
    x = floating_boundary_dupin(B4, d, np.array([1.0, 1.0]) / math.sqrt(2))
    assert x[0] == pytest.approx(x[1], abs=1e-14)


def test_dupin_points_lie_on_the_envelope(rng):
    d = 1e-3
    th = rng.uniform(0, 2 * math.pi, 64)
    u = np.stack([np.cos(th), np.sin(th)], axis=1)
    bary, _ = dupin_points(B4, u, d)
    r = np.linalg.norm(bary, axis=1)
    env = floating_radial_envelope(B4, d, bary / r[:, None])
    assert np.max(np.abs(r / env - 1)) < 1e-6


@pytest.mark.parametrize("body", [DISC, ELL, B4, B15], ids=repr)
def test_dupin_matches_envelope(body):
    v = circle_grid(64)
    assert np.max(np.abs(floating_radial(body, 1e-3, v) / floating_radial_envelope(body, 1e-3, v) - 1)) < 1e-6


def test_dupin_matches_envelope_in_space():
    b = BpBall(3, 4.0)
    v = np.array([[1.0, 0.0, 0.0], [0.5, 0.3, 0.8]])
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    dup = floating_radial(b, 1e-3, v)
    env = floating_radial_envelope(b, 1e-3, v)
    assert np.max(np.abs(dup / env - 1)) < 1e-6


@pytest.mark.parametrize("body", [DISC, ELL, B4, B15], ids=repr)
def test_containment_and_monotonicity(body):
    v = circle_grid(128)
    r = [floating_radial(body, d, v) for d in (1e-4, 1e-3, 1e-2)]
    assert np.all(r[0] < body.radial(v))
    assert np.all(r[1] < r[0]) and np.all(r[2] < r[1])


def test_floating_body_of_grid_body():
    g = RadialGridBody.sample(B4, 1024)
    v = circle_grid(64)
    assert np.allclose(floating_radial(g, 1e-3, v), floating_radial(B4, 1e-3, v), rtol=1e-8)


@pytest.mark.parametrize("body", [BpBall(3, 4.0), Ellipsoid((1.5, 1.0, 0.5))], ids=repr)
def test_spatial_dupin_points_reuse_the_last_cap(body):
    # barycenters from the height search match a separate section pass, also on coordinate planes
    u = np.vstack([fibonacci_sphere(64), [[0, 0, -1.0], [0.6, 0, -0.8], [0, -1.0, 0]]])
    bary, prof = dupin_points(body, u, 1e-3)
    _, _, ref, _ = caps(body, prof.directions, prof.heights)
    assert np.max(np.abs(bary - ref)) < 1e-13


@given(x=st.lists(st.floats(-1, 1), min_size=3, max_size=3).filter(lambda v: sum(t * t for t in v) > 1e-6),
       sym=st.sampled_from([None, "central", "octant"]))
def test_fold_signs_undo_the_fold(x, sym):
    u = np.array([x])
    assert np.array_equal(_fold_signs(u, sym) * fold(u, sym), u)


def test_gamma_bounds_reuse_a_profile():
    prof = cap_heights(B4, circle_grid(1024), 1e-3)
    a = gamma_bounds(B4, 1e-3, circle_grid(1024))
    b = gamma_bounds(B4, 1e-3, profile=prof)
    assert (a.gamma_min, a.gamma_max) == (b.gamma_min, b.gamma_max)
    with pytest.raises(DomainError):
        gamma_bounds(B4, 1e-2, profile=prof)


def test_spatial_gamma_extrema_are_polished():
    # the minimum of Gamma for B_4^3 sits on the axes, between grid points
    gb = gamma_bounds(BpBall(3, 4.0), 1e-3, fibonacci_sphere(256))
    assert np.allclose(np.abs(gb.argmin), np.eye(3)[np.argmax(np.abs(gb.argmin))], atol=1e-6)
    axis = cap_height(BpBall(3, 4.0), [1.0, 0.0, 0.0], 1e-3)
    assert gb.gamma_min == pytest.approx(axis, rel=1e-10)


def test_gamma_bounds_ball():
    gb = gamma_bounds(DISC, 1e-3, circle_grid(256))
    assert gb.gamma_min == pytest.approx(disc_depth(1e-3), rel=1e-10)
    assert gb.gamma_max == pytest.approx(disc_depth(1e-3), rel=1e-10)


def test_sandwich_on_4096_directions():
    count, gb = sandwich_violations(B4, 1e-4, circle_grid(4096))
    assert count == 0
    assert gb.gamma_min < gb.gamma_max


def test_ellipse_gamma_is_constant():
    # floating bodies of an ellipse are homothetic to it
    for d in (1e-2, 1e-3, 1e-4, 1e-5):
        gb = gamma_bounds(ELL, d, circle_grid(512))
        assert gb.gamma_min == pytest.approx(gb.gamma_max, rel=1e-12)
        assert gb.gamma_max == pytest.approx(1 - floating_radial(DISC, d, [1.0, 0.0]), rel=1e-9)


@pytest.mark.parametrize("body,th", [(DISC, 0.3), (ELL, 0.0), (ELL, 1.0), (B4, math.pi / 4), (B4, 0.5)],
                         ids=["disc", "ellipse-axis", "ellipse-oblique", "B4-diagonal", "B4-oblique"])
def test_radial_limit_is_G(body, th):
    """(1 - r_{K_delta} / r_K) / delta^(2/3) tends to G at the boundary point on the ray."""
    v = np.array([[math.cos(th), math.sin(th)]])
    x = body.boundary(v[0])
    sweep = [1e-2, 1e-3, 1e-4, 1e-5]
    y = [(1 - floating_radial(body, d, v)[0] / float(body.radial(v[0]))) / d ** (2 / 3) for d in sweep]
    assert fit_correction(sweep, y).limit == pytest.approx(float(G(body, x)), rel=0.03)
