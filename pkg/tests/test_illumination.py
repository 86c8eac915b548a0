import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import brentq

from floatdual.bodies import BpBall, Ellipsoid, RadialGridBody, affine_constant, bp_volume
from floatdual.directions import circle_grid
from floatdual.errors import DomainError
from floatdual.illumination import (HatSpec, bp_contact_constants, bp_profile, g_diagonal_bp, hat_asymptotic_bp,
                                    hat_asymptotic_smooth, hat_volume, hat_volume_bp, illumination_body,
                                    illumination_radial, iota_body, iota_radial, tangent_point_1d)
from floatdual.invariants import G, fit_correction
from floatdual.kernels import _np3d
from floatdual.measure import hull_point_volume

DISC = BpBall(2, 2.0)
B4 = BpBall(2, 4.0)
ELL = Ellipsoid((2.0, 1.0))


def disc_hat(t):
    return math.sqrt(t * t - 1.0) - math.acos(1.0 / t)


def ball_hat(t):
    h = 1.0 - 1.0 / t
    return -math.pi * h * h * (3.0 - h) / 3.0 + math.pi * (1.0 - 1.0 / t ** 2) * (t - 1.0 / t) / 3.0


def disc_illumination_radius(delta):
    return brentq(lambda t: disc_hat(t) - delta * math.pi, 1.0, 10.0, xtol=1e-15)


@pytest.mark.parametrize("excess", [1e-6, 1e-3, 0.2, 1.0])
def test_disc_hat_closed_form(excess):
    assert hat_volume(DISC, HatSpec([0.6, 0.8], excess)) == pytest.approx(disc_hat(1 + excess), rel=1e-10)
    assert hat_volume_bp(2, 2.0, excess).volume == pytest.approx(disc_hat(1 + excess), rel=1e-10)


def test_ball_hat_closed_form():
    for excess in (1e-3, 0.3):
        assert hat_volume_bp(3, 2.0, excess).volume == pytest.approx(ball_hat(1 + excess), rel=1e-10)


@pytest.mark.parametrize("n,p", [(2, 4.0), (2, 1.5), (2, 3.0), (3, 2.0), (3, 4.0)])
@pytest.mark.parametrize("excess", [1e-3, 0.1])
def test_bp_hat_matches_numerical_hull(n, p, excess):
    b = BpBall(n, p)
    e1 = np.eye(n)[0]
    num = hull_point_volume(b, (1 + excess) * e1, tol=1e-11) - b.volume()
    assert hat_volume_bp(n, p, excess).volume == pytest.approx(num, rel=1e-8)


def test_spatial_hat_converges_for_odd_exponent():
    # |x_i|^3 is only C^2 across the coordinate planes: the angular rule converges like N^-4
    b = BpBall(3, 3.0)
    exact = hat_volume_bp(3, 3.0, 0.1).volume
    errs = [abs(_np3d.hat(b, np.eye(3)[:1], 1.1, n_beta=nb)[0][0] / exact - 1) for nb in (32, 64, 128)]
    assert errs[0] / errs[1] > 12 and errs[1] / errs[2] > 12
    assert abs(hull_point_volume(b, [1.1, 0, 0]) - b.volume() - exact) < 1e-5 * exact


def test_hat_zero_and_domain():
    assert hat_volume(B4, HatSpec([1.0, 0.0], 0.0)) == 0.0
    z = hat_volume_bp(3, 4.0, 0.0)
    assert (z.volume, z.t0) == (0.0, 1.0)
    with pytest.raises(DomainError):
        hat_volume_bp(2, 1.0, 0.1)
    with pytest.raises(DomainError):
        hat_volume_bp(2, 0.5, 0.1)
    with pytest.raises(DomainError):
        HatSpec([1.0, 0.0], -0.1)


def test_tangent_point_of_parabola():
    t0 = tangent_point_1d(lambda t: t * t, 0.04)
    assert t0 == pytest.approx(0.2, rel=1e-13)
    assert tangent_point_1d(lambda t: t * t, 0.04, fprime=lambda t: 2 * t) == pytest.approx(0.2, rel=1e-14)
    assert tangent_point_1d(lambda t: t * t, 0.0) == 0.0
    with pytest.raises(DomainError):
        tangent_point_1d(lambda t: t * t, 1.0, t_max=0.5)


@pytest.mark.parametrize("p", [1.5, 2.0, 4.0, 7.0])
@pytest.mark.parametrize("excess", [1e-4, 1e-2, 0.3])
def test_tangency_height_matches_profile(p, excess):
    f, fp = bp_profile(p)
    s0 = tangent_point_1d(f, excess, fprime=fp, t_max=1.0 - 1e-12)
    assert 1.0 - f(s0) == pytest.approx(hat_volume_bp(2, p, excess).t0, rel=1e-12)
    # the tangent line from the apex touches the profile at s0
    assert fp(s0) * s0 - f(s0) == pytest.approx(excess, rel=1e-12)


@pytest.mark.parametrize("p", [1.5, 4.0, 7.0])
def test_tangency_bracket_stays_in_the_profile_domain(p):
    # B_p profiles are defined on |s| < 1 only; doubling the bracket would leave it
    f, fp = bp_profile(p)
    for excess in (0.1, 1.0):
        s0 = tangent_point_1d(f, excess, fprime=fp)
        assert (1.0 - s0 ** p) ** (1.0 / p) == pytest.approx((1 + excess) ** (-1 / (p - 1)), abs=1e-12)
        # the five-point derivative loses accuracy as f' blows up toward |s| = 1
        assert tangent_point_1d(f, excess) == pytest.approx(s0, abs=1e-8)


@pytest.mark.parametrize("n", [2, 3])
def test_bp_hat_asymptotic(n):
    for p in (1.5, 4.0):
        assert hat_volume_bp(n, p, 1e-6).volume / hat_asymptotic_bp(n, p, 1e-6) == pytest.approx(1.0, rel=0.01)


def test_smooth_hat_asymptotic():
    assert hat_asymptotic_smooth(2, 1.0, 1e-6) == pytest.approx(disc_hat(1 + 1e-6), rel=1e-4)
    assert hat_asymptotic_smooth(3, 1.0, 1e-6) == pytest.approx(ball_hat(1 + 1e-6), rel=1e-4)


def test_disc_illumination_radius():
    for d in (1e-4, 1e-2, 0.3):
        r = illumination_radial(DISC, d, circle_grid(16))
        assert np.allclose(r, disc_illumination_radius(d), rtol=1e-11)


def test_ball_illumination_radius():
    d = 1e-2
    t = brentq(lambda t: ball_hat(t) - d * 4 * math.pi / 3, 1.0, 5.0, xtol=1e-15)
    assert illumination_radial(BpBall(3, 2.0), d, [0.0, 0.6, 0.8]) == pytest.approx(t, rel=1e-8)


def test_ellipse_illumination_is_affine_image():
    d = 1e-3
    v = circle_grid(64)
    w = v / np.array(ELL.axes)
    nw = np.linalg.norm(w, axis=1)
    assert np.allclose(illumination_radial(ELL, d, v), disc_illumination_radius(d) / nw, rtol=1e-10)


def test_polygon_stays_polygon():
    sq = RadialGridBody.from_polygon([[1, 0], [0, 1], [-1, 0], [0, -1]])
    ib = illumination_body(sq, 0.05, grid=circle_grid(64))
    assert ib.interpolation == "polygon"
    assert np.all(ib.radial(circle_grid(64)) > sq.radial(circle_grid(64)))


@pytest.mark.parametrize("body", [DISC, B4, BpBall(2, 1.5), ELL], ids=repr)
def test_illumination_contains_and_grows(body):
    v = circle_grid(64)
    r = [illumination_radial(body, d, v) for d in (1e-4, 1e-3, 1e-2)]
    assert np.all(r[0] > body.radial(v))
    assert np.all(r[1] > r[0]) and np.all(r[2] > r[1])


@given(th=st.floats(0, 2 * math.pi), d=st.floats(1e-5, 0.4))
def test_illumination_hull_volume(th, d):
    v = np.array([math.cos(th), math.sin(th)])
    r = illumination_radial(B4, d, v)
    assert hull_point_volume(B4, r * v) == pytest.approx((1 + d) * B4.volume(), rel=1e-10)


def test_iota_of_disc():
    dp = 1e-3
    ref = 1.0 / disc_illumination_radius(dp)
    assert np.allclose(iota_radial(DISC, dp, circle_grid(8)), ref, rtol=1e-10)
    ib = iota_body(DISC, dp, grid=circle_grid(256))
    assert np.allclose(ib.radial(circle_grid(100)), ref, rtol=1e-10)


def test_iota_is_contained_and_monotone():
    v = circle_grid(16)
    a = iota_radial(B4, 1e-3, v)
    b = iota_radial(B4, 1e-2, v)
    assert np.all(a < B4.radial(v)) and np.all(b < a)


def test_iota_radial_matches_tabulated_body():
    v = circle_grid(32)
    ib = iota_body(B4, 1e-3, grid=circle_grid(2048))
    assert np.allclose(iota_radial(B4, 1e-3, v), ib.radial(v), rtol=1e-7)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_contact_constants_of_the_ball(n):
    c = affine_constant(bp_volume(n, 2.0), n)
    cc = bp_contact_constants(n, 2.0)
    assert cc.c1 == pytest.approx(c, rel=1e-12)
    assert cc.c2 == pytest.approx(c, rel=1e-12)
    assert cc.c3 == pytest.approx(n ** (2 / (n + 1)) * c, rel=1e-12)
    assert cc.c4 == pytest.approx(n ** (2 / (n + 1)) * c, rel=1e-12)
    assert cc.exponents == pytest.approx((2 / (n + 1),) * 4)


def test_contact_constants_of_B4():
    cc = bp_contact_constants(2, 4.0)
    assert tuple(cc) == pytest.approx((1.48463, 1.79680, 1.29523, 1.69211), rel=1e-5)
    assert cc.exponents == pytest.approx((0.8, 2 / 3, 4 / 7, 2 / 3))


def test_diagonal_constant_closed_form():
    for n, p in ((2, 4.0), (3, 4.0), (2, 1.5), (3, 3.0)):
        c = affine_constant(bp_volume(n, p), n)
        ref = c * (p - 1) ** ((n - 1) / (n + 1)) * n ** (-n * (p - 2) / ((n + 1) * p))
        assert g_diagonal_bp(n, p) == pytest.approx(ref, rel=1e-12)
        x = np.full(n, n ** (-1 / p))
        assert g_diagonal_bp(n, p) == pytest.approx(float(G(BpBall(n, p), x)), rel=1e-12)


def test_diagonal_constant_with_extra_dimension_factor():
    # c(B_4^2, 2) 3^(1/3) 2^(8/12) carries one factor n = 2 on top of the diagonal constant
    c = affine_constant(bp_volume(2, 4.0), 2)
    assert c * 3 ** (1 / 3) * 2 ** (8 / 12) == pytest.approx(2 * bp_contact_constants(2, 4.0).c2, rel=1e-12)


def test_contact_domain():
    with pytest.raises(DomainError):
        bp_contact_constants(2, 1.0)


@pytest.mark.parametrize("body,th", [(DISC, 0.3), (ELL, 0.7), (B4, math.pi / 4)], ids=["disc", "ellipse", "B4"])
def test_illumination_radial_limit(body, th):
    """(r_{K^delta} / r_K - 1) / delta^(2/3) tends to n^(2/(n+1)) G."""
    v = np.array([math.cos(th), math.sin(th)])
    sweep = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6]
    y = [(illumination_radial(body, d, v) / float(body.radial(v)) - 1) / d ** (2 / 3) for d in sweep]
    ref = 2 ** (2 / 3) * float(G(body, body.boundary(v)))
    assert fit_correction(sweep, y).limit == pytest.approx(ref, rel=0.03)


def test_polygon_illumination_against_convex_hull():
    from scipy.spatial import ConvexHull
    half = np.array([[1.0, 0.0], [0.5, 0.8], [-0.4, 0.9]])
    verts = np.vstack([half, -half])
    body = RadialGridBody.from_polygon(half)
    v = circle_grid(64)
    r = illumination_radial(body, 1e-3, v)
    for x in r[:, None] * v:
        assert ConvexHull(np.vstack([verts, x])).volume == pytest.approx((1 + 1e-3) * body.volume(), rel=1e-11)
