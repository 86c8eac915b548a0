"""Vectorized membership tests for Monte-Carlo volume estimates."""

import math

import numpy as np

from ._consts import BP, ELLIPSE
from . import _np2d

_G = 0.5 * (math.sqrt(5.0) - 1.0)


def gauge(kind, prm, x):
    if kind == BP:
        return np.sum(np.abs(x) ** prm[0], axis=-1) ** (1.0 / prm[0])
    if kind == ELLIPSE:
        return np.sqrt(np.sum((x / prm[:x.shape[-1]]) ** 2, axis=-1))
    rr = np.hypot(x[..., 0], x[..., 1])
    r = _np2d.radial(kind, prm, np.arctan2(x[..., 1], x[..., 0]))
    return rr / r


def gauge_mask(kind, prm, pts):
    return gauge(kind, prm, pts) <= 1.0


def hull_mask(kind, prm, y, pts, rmax):
    inside = gauge_mask(kind, prm, pts)
    out = inside.copy()
    idx = np.nonzero(~inside)[0]
    if idx.size == 0:
        return out
    z = pts[idx]
    d = z - y
    dn = np.linalg.norm(d, axis=1)
    g0 = gauge(kind, prm, z)
    ok = (dn > 0.0) & (gauge(kind, prm, y + 1.000001 * d) < g0)
    idx, d, dn = idx[ok], d[ok], dn[ok]
    a = np.ones(idx.size)
    b = 1.0 + 2.0 * (rmax + np.linalg.norm(y)) / dn
    x1 = b - _G * (b - a)
    x2 = a + _G * (b - a)
    f1 = gauge(kind, prm, y + x1[:, None] * d)
    f2 = gauge(kind, prm, y + x2[:, None] * d)
    hit = (f1 <= 1.0) | (f2 <= 1.0)
    for _ in range(100):
        left = f1 < f2
        b = np.where(left, x2, b)
        a = np.where(left, a, x1)
        nx1 = np.where(left, b - _G * (b - a), x2)
        nx2 = np.where(left, x1, a + _G * (b - a))
        f1n = np.where(left, np.nan, f2)
        f2n = np.where(left, f1, np.nan)
        x1, x2 = nx1, nx2
        e1 = gauge(kind, prm, y + x1[:, None] * d)
        e2 = gauge(kind, prm, y + x2[:, None] * d)
        f1 = np.where(left, e1, f1n)
        f2 = np.where(left, f2n, e2)
        hit |= (f1 <= 1.0) | (f2 <= 1.0)
        if np.all(hit | (b - a < 1e-12 * b)):
            break
    out[idx] = hit
    return out
