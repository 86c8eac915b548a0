"""Backend dispatch for the planar and Monte-Carlo kernels.

A planar body is passed to the kernels as ``(kind, prm)``:

* ``BP``:       ``[p, smooth]``, smooth = 1 when |t|^p is analytic (even integer p)
* ``ELLIPSE``:  ``[a, b]`` (also the per-axis scales for n-dimensional gauges)
* ``SPLINE``:   ``[N, c0..., c1..., c2..., c3...]`` periodic cubic in the angle
* ``POLYGON``:  ``[N, angles..., radii...]`` vertices sorted by angle in [0, 2 pi)
"""

import numpy as np

from .. import _backend
from . import _np2d, _npmc
from ._consts import BP, ELLIPSE, POLYGON, SPLINE  # noqa: F401

if _backend.HAVE_NUMBA:
    from . import _nb2d, _nbmc
else:  # pragma: no cover
    _nb2d = _nbmc = None


def _mod():
    return _nb2d if _backend.use_numba() else _np2d


def _arr(x):
    return np.ascontiguousarray(np.atleast_1d(np.asarray(x, dtype=float)))


def radial(kind, prm, th):
    """Rows of (r, dr/dtheta)."""
    return _mod().radial_batch(kind, prm, _arr(th))


def support(kind, prm, phi):
    """Rows of (h, contact angle)."""
    return _mod().support_batch(kind, prm, _arr(phi))


def area(kind, prm, tol):
    return _mod().area(kind, prm, tol)


def cap_eval(kind, prm, vol, phis, deltas, tol):
    """Rows of (area, chord, midpoint x, midpoint y, error)."""
    phis = _arr(phis)
    deltas = np.ascontiguousarray(np.broadcast_to(_arr(deltas), phis.shape))
    return _mod().cap_eval_batch(kind, prm, vol, phis, deltas, tol)


def cap_height(kind, prm, vol, phis, target, rtol, tol, maxit=80):
    """Rows of (depth, iterations, residual, status)."""
    return _mod().cap_height_batch(kind, prm, vol, _arr(phis), float(target), rtol, tol, maxit)


def hat_eval(kind, prm, thys, ts, tol):
    """Rows of (hat area, d area / dt, error)."""
    thys = _arr(thys)
    ts = np.ascontiguousarray(np.broadcast_to(_arr(ts), thys.shape))
    return _mod().hat_eval_batch(kind, prm, thys, ts, tol)


def illum_t(kind, prm, vol, thys, target, rtol, tol, guesses=None, maxit=80):
    """Rows of (t, iterations, residual, status)."""
    thys = _arr(thys)
    g = -np.ones_like(thys) if guesses is None else np.ascontiguousarray(
        np.broadcast_to(_arr(guesses), thys.shape))
    return _mod().illum_t_batch(kind, prm, vol, thys, float(target), g, rtol, tol, maxit)


def floating_radial(kind, prm, vol, thvs, target, rtol, tol):
    """Rows of (radius, cap normal angle, depth, status)."""
    return _mod().floating_radial_batch(kind, prm, vol, _arr(thvs), float(target), rtol, tol)


def gauge_mask(kind, prm, pts):
    pts = np.ascontiguousarray(pts, dtype=float)
    if _backend.use_numba():
        return _nbmc.gauge_mask(kind, prm, pts)
    return _npmc.gauge_mask(kind, prm, pts)


def hull_mask(kind, prm, y, pts, rmax):
    pts = np.ascontiguousarray(pts, dtype=float)
    y = np.ascontiguousarray(y, dtype=float)
    if _backend.use_numba():
        return _nbmc.hull_mask(kind, prm, y, pts, float(rmax))
    return _npmc.hull_mask(kind, prm, y, pts, float(rmax))
