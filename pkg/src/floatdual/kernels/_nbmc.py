"""Compiled membership tests for Monte-Carlo volume estimates."""

import math

import numpy as np
from numba import njit

from ._consts import BP, ELLIPSE
from ._nb2d import radial

jit = njit(cache=True)

_G = 0.5 * (math.sqrt(5.0) - 1.0)


@jit
def gauge(kind, prm, x):
    n = x.shape[0]
    if kind == BP:
        p = prm[0]
        acc = 0.0
        for i in range(n):
            acc += abs(x[i]) ** p
        return acc ** (1.0 / p)
    if kind == ELLIPSE:
        acc = 0.0
        for i in range(n):
            q = x[i] / prm[i]
            acc += q * q
        return math.sqrt(acc)
    # tabulated planar bodies
    rr = math.hypot(x[0], x[1])
    if rr == 0.0:
        return 0.0
    return rr / radial(kind, prm, math.atan2(x[1], x[0]))


@jit
def in_hull(kind, prm, y, z, smax, buf):
    """Whether z lies in conv[K, y]: some point y + s (z - y), s >= 1, is in K.

    The gauge along that ray is convex in s, so a golden-section search with
    an early exit decides membership.
    """
    g0 = gauge(kind, prm, z)
    if g0 <= 1.0:
        return True
    n = z.shape[0]
    for i in range(n):
        buf[i] = y[i] + 1.000001 * (z[i] - y[i])
    if gauge(kind, prm, buf) >= g0:
        return False
    a = 1.0
    b = smax
    x1 = b - _G * (b - a)
    x2 = a + _G * (b - a)
    for i in range(n):
        buf[i] = y[i] + x1 * (z[i] - y[i])
    f1 = gauge(kind, prm, buf)
    for i in range(n):
        buf[i] = y[i] + x2 * (z[i] - y[i])
    f2 = gauge(kind, prm, buf)
    for _ in range(100):
        if f1 <= 1.0 or f2 <= 1.0:
            return True
        if b - a < 1e-12 * b:
            break
        if f1 < f2:
            b = x2
            x2 = x1
            f2 = f1
            x1 = b - _G * (b - a)
            for i in range(n):
                buf[i] = y[i] + x1 * (z[i] - y[i])
            f1 = gauge(kind, prm, buf)
        else:
            a = x1
            x1 = x2
            f1 = f2
            x2 = a + _G * (b - a)
            for i in range(n):
                buf[i] = y[i] + x2 * (z[i] - y[i])
            f2 = gauge(kind, prm, buf)
    return False


@jit
def hull_mask(kind, prm, y, pts, rmax):
    m = pts.shape[0]
    out = np.empty(m, dtype=np.bool_)
    buf = np.empty(pts.shape[1])
    ny = 0.0
    for i in range(y.shape[0]):
        ny += y[i] * y[i]
    ny = math.sqrt(ny)
    for k in range(m):
        z = pts[k]
        dn = 0.0
        for i in range(z.shape[0]):
            dn += (z[i] - y[i]) ** 2
        dn = math.sqrt(dn)
        if dn == 0.0:
            out[k] = False
            continue
        out[k] = in_hull(kind, prm, y, z, 1.0 + 2.0 * (rmax + ny) / dn, buf)
    return out


@jit
def gauge_mask(kind, prm, pts):
    m = pts.shape[0]
    out = np.empty(m, dtype=np.bool_)
    for k in range(m):
        out[k] = gauge(kind, prm, pts[k]) <= 1.0
    return out
