import math
import os
import subprocess
import sys

import numpy as np
import pytest

from floatdual import _backend, kernels
from floatdual.bodies import BpBall, Ellipsoid, RadialGridBody
from floatdual.directions import circle_angles
from floatdual.floating import cap_height, floating_radial
from floatdual.illumination import illumination_radial

BODIES = {
    "disc": BpBall(2, 2.0),
    "B4": BpBall(2, 4.0),
    "B1.5": BpBall(2, 1.5),
    "ellipse": Ellipsoid((2.0, 1.0)),
    "spline": RadialGridBody.sample(BpBall(2, 3.0), 256),
    "polygon": RadialGridBody.from_polygon([[1, 0], [0.5, 0.8], [-0.4, 0.9]]),
}

pytestmark = pytest.mark.skipif(not _backend.HAVE_NUMBA, reason="numba not importable")


def both(fn):
    prev = _backend.set_backend("numba")
    try:
        a = np.asarray(fn())
        _backend.set_backend("numpy")
        b = np.asarray(fn())
    finally:
        _backend.set_backend(prev)
    return a, b


def close(a, b, rtol, atol=0.0):
    return np.all(np.abs(a - b) <= rtol * np.maximum(np.abs(a), np.abs(b)) + atol)


# quadratures run to an absolute tolerance of 1e-12 in both backends
QUAD = dict(rtol=1e-12, atol=2e-11)


@pytest.mark.parametrize("name", list(BODIES))
def test_geometry_kernels_agree(name):
    kind, prm = BODIES[name].kernel()
    th = circle_angles(96) + 0.01
    a, b = both(lambda: kernels.radial(kind, prm, th))
    assert close(a, b, 1e-13)
    a, b = both(lambda: kernels.support(kind, prm, th))
    assert close(a[:, 0], b[:, 0], 1e-12)
    # splines locate the contact angle by golden-section search, good to about sqrt(eps)
    assert close(a[:, 1], b[:, 1], 1e-13, 1e-7 if name == "spline" else 0.0)
    a, b = both(lambda: kernels.area(kind, prm, 1e-12))
    assert close(a[0], b[0], **QUAD)


@pytest.mark.parametrize("name", list(BODIES))
def test_cap_kernels_agree(name):
    body = BODIES[name]
    kind, prm = body.kernel()
    vol = body.volume()
    th = circle_angles(64) + 0.02
    a, b = both(lambda: kernels.cap_eval(kind, prm, vol, th, 0.05, 1e-12))
    assert close(a[:, :4], b[:, :4], **QUAD)
    a, b = both(lambda: kernels.cap_height(kind, prm, vol, th, 1e-3 * vol, 1e-12, 1e-12))
    assert close(a[:, 0], b[:, 0], **QUAD)
    assert np.all(a[:, 3] == 0) and np.all(b[:, 3] == 0)
    a, b = both(lambda: kernels.floating_radial(kind, prm, vol, th, 1e-3 * vol, 1e-12, 1e-12))
    assert close(a[:, 0], b[:, 0], **QUAD)


@pytest.mark.parametrize("name", list(BODIES))
def test_hat_kernels_agree(name):
    body = BODIES[name]
    kind, prm = body.kernel()
    vol = body.volume()
    th = circle_angles(64) + 0.03
    a, b = both(lambda: kernels.hat_eval(kind, prm, th, 1.05, 1e-12))
    assert close(a[:, :2], b[:, :2], **QUAD)
    a, b = both(lambda: kernels.illum_t(kind, prm, vol, th, 1e-3 * vol, 1e-12, 1e-12))
    assert close(a[:, 0], b[:, 0], **QUAD)


@pytest.mark.parametrize("name", ["disc", "B4", "ellipse", "polygon"])
def test_masks_agree(name, rng):
    body = BODIES[name]
    kind, prm = body.gauge_kernel()
    pts = rng.uniform(-2.5, 2.5, size=(200_000, 2))
    a, b = both(lambda: kernels.gauge_mask(kind, prm, pts))
    assert np.array_equal(a, b)
    y = 1.3 * body.boundary(np.array([math.cos(0.4), math.sin(0.4)]))
    a, b = both(lambda: kernels.hull_mask(kind, prm, y, pts, body.rmax))
    assert np.array_equal(a, b)


def test_public_results_in_each_backend(backend):
    # closed forms for the disc hold whichever backend is active
    h = cap_height(BODIES["disc"], [0.6, 0.8], 1e-3)
    assert math.acos(1 - h) - (1 - h) * math.sqrt(1 - (1 - h) ** 2) == pytest.approx(1e-3 * math.pi, rel=1e-10)
    assert floating_radial(BODIES["disc"], 1e-3, [0.0, 1.0]) == pytest.approx(1 - h, rel=1e-12)
    t = illumination_radial(BODIES["disc"], 1e-3, [1.0, 0.0])
    assert math.sqrt(t * t - 1) - math.acos(1 / t) == pytest.approx(1e-3 * math.pi, rel=1e-10)


def test_backend_switching():
    prev = _backend.set_backend("numpy")
    try:
        assert _backend.backend() == "numpy" and not _backend.use_numba()
        assert _backend.set_backend("numba") == "numpy"
        with pytest.raises(ValueError):
            _backend.set_backend("cuda")
    finally:
        _backend.set_backend(prev)


def _run(env_value):
    env = dict(os.environ, FLOATDUAL_BACKEND=env_value)
    return subprocess.run([sys.executable, "-c", "from floatdual import _backend; print(_backend.backend())"],
                          env=env, capture_output=True, text=True)


def test_environment_flag():
    assert _run("numpy").stdout.strip() == "numpy"
    assert _run(" NumBa ").stdout.strip() == "numba"
    bad = _run("fortran")
    assert bad.returncode != 0 and "FLOATDUAL_BACKEND" in bad.stderr
