"""Compiled planar kernels.

Every body is described by an integer ``kind`` and a flat float64 parameter
array ``prm`` (see :mod:`floatdual.kernels`).  Boundary points are written in
polar form ``r(theta) e(theta)``; caps and hats are integrated in the angle
with integrands that vanish at the end points, so errors in the located
end points enter only at second order.
"""

import math

import numpy as np
from numba import njit

from ._consts import BP, ELLIPSE, HALF_PI, POLYGON, SPLINE, STEP_TOL, TWO_PI, _WG, _WGK, _XGK  # noqa: F401

jit = njit(cache=True)


@jit
def _wrap(a):
    """Angle reduced to (-pi, pi]."""
    a = a + math.pi
    a = a - TWO_PI * math.floor(a / TWO_PI)
    if a <= 0.0:
        a += TWO_PI
    return a - math.pi


@jit
def radial_d(kind, prm, th):
    """Radial function and its angular derivative."""
    c = math.cos(th)
    s = math.sin(th)
    if kind == BP:
        p = prm[0]
        ac = abs(c)
        as_ = abs(s)
        r = (ac ** p + as_ ** p) ** (-1.0 / p)
        t1 = 0.0
        t2 = 0.0
        if ac > 0.0:
            t1 = math.copysign(ac ** (p - 1.0), c) * s
        if as_ > 0.0:
            t2 = math.copysign(as_ ** (p - 1.0), s) * c
        return r, r ** (p + 1.0) * (t1 - t2)
    if kind == ELLIPSE:
        ia = 1.0 / (prm[0] * prm[0])
        ib = 1.0 / (prm[1] * prm[1])
        r = 1.0 / math.sqrt(c * c * ia + s * s * ib)
        return r, r * r * r * c * s * (ia - ib)
    if kind == SPLINE:
        n = int(prm[0])
        step = TWO_PI / n
        x = th - TWO_PI * math.floor(th / TWO_PI)
        i = int(x / step)
        if i >= n:
            i = n - 1
        u = x - i * step
        c0 = prm[1 + i]
        c1 = prm[1 + n + i]
        c2 = prm[1 + 2 * n + i]
        c3 = prm[1 + 3 * n + i]
        return ((c0 * u + c1) * u + c2) * u + c3, (3.0 * c0 * u + 2.0 * c1) * u + c2
    # polygon: vertices sorted by angle in [0, 2pi)
    n = int(prm[0])
    x = th - TWO_PI * math.floor(th / TWO_PI)
    lo = 0
    hi = n
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if prm[1 + mid] <= x:
            lo = mid
        else:
            hi = mid
    i = lo
    if x < prm[1]:
        i = n - 1
    j = (i + 1) % n
    ai = prm[1 + i]
    aj = prm[1 + j]
    ri = prm[1 + n + i]
    rj = prm[1 + n + j]
    px = ri * math.cos(ai)
    py = ri * math.sin(ai)
    wx = rj * math.cos(aj) - px
    wy = rj * math.sin(aj) - py
    num = px * (py + wy) - py * (px + wx)
    den = c * wy - s * wx
    r = num / den
    return r, -r * (-s * wy - c * wx) / den


@jit
def radial(kind, prm, th):
    return radial_d(kind, prm, th)[0]


@jit
def support(kind, prm, phi):
    """Support value h(phi) and the polar angle of a contact point."""
    c = math.cos(phi)
    s = math.sin(phi)
    if kind == BP:
        p = prm[0]
        q = p / (p - 1.0)
        h = (abs(c) ** q + abs(s) ** q) ** (1.0 / q)
        x = math.copysign(abs(c) ** (q - 1.0), c)
        y = math.copysign(abs(s) ** (q - 1.0), s)
        return h, phi + _wrap(math.atan2(y, x) - phi)
    if kind == ELLIPSE:
        a2 = prm[0] * prm[0]
        b2 = prm[1] * prm[1]
        h = math.sqrt(a2 * c * c + b2 * s * s)
        return h, phi + _wrap(math.atan2(b2 * s, a2 * c) - phi)
    if kind == POLYGON:
        n = int(prm[0])
        best = -1.0
        arg = 0.0
        for i in range(n):
            v = prm[1 + n + i] * math.cos(prm[1 + i] - phi)
            if v > best:
                best = v
                arg = prm[1 + i]
        return best, phi + _wrap(arg - phi)
    # spline: golden-section maximization of <x(theta), u> on the visible half
    g = 0.5 * (math.sqrt(5.0) - 1.0)
    a = phi - HALF_PI
    b = phi + HALF_PI
    x1 = b - g * (b - a)
    x2 = a + g * (b - a)
    f1 = radial(kind, prm, x1) * math.cos(x1 - phi)
    f2 = radial(kind, prm, x2) * math.cos(x2 - phi)
    for _ in range(120):
        if b - a < 1e-13:
            break
        if f1 > f2:
            b = x2
            x2 = x1
            f2 = f1
            x1 = b - g * (b - a)
            f1 = radial(kind, prm, x1) * math.cos(x1 - phi)
        else:
            a = x1
            x1 = x2
            f1 = f2
            x2 = a + g * (b - a)
            f2 = radial(kind, prm, x2) * math.cos(x2 - phi)
    t = 0.5 * (a + b)
    return radial(kind, prm, t) * math.cos(t - phi), t


@jit
def next_break(kind, prm, x):
    """Smallest point > x where the radial function may lose smoothness."""
    if kind == BP:
        if prm[1] != 0.0:
            return np.inf
        k = math.floor(x / HALF_PI + 1e-12) + 1.0
        return k * HALF_PI
    if kind == POLYGON:
        n = int(prm[0])
        base = math.floor(x / TWO_PI) * TWO_PI
        xm = x - base
        for i in range(n):
            if prm[1 + i] > xm + 1e-14:
                return base + prm[1 + i]
        return base + TWO_PI + prm[1]
    return np.inf


@jit
def _gfun(gmode, kind, prm, th, a0, a1):
    r, dr = radial_d(kind, prm, th)
    c = math.cos(th)
    s = math.sin(th)
    if gmode == 0:
        # chord: <x(theta), u> - level
        return r * math.cos(th - a0) - a1
    # visibility: <y - x, N> with N = r e - r' e_perp
    return a0 * (r * c + dr * s) + a1 * (r * s - dr * c) - r * r


@jit
def _integrand(mode, kind, prm, th, a0, a1):
    r, dr = radial_d(kind, prm, th)
    if mode == 0:
        return 0.5 * r * r
    if mode == 1:
        q = a1 / math.cos(th - a0)
        return 0.5 * (r * r - q * q)
    c = math.cos(th)
    s = math.sin(th)
    if mode == 2:
        return 0.5 * (a0 * (r * c + dr * s) + a1 * (r * s - dr * c) - r * r)
    return 0.5 * (a0 * (r * c + dr * s) + a1 * (r * s - dr * c))


@jit
def brent_root(gmode, kind, prm, a, b, a0, a1, xtol):
    """Brent's method on a sign-changing bracket [a, b]."""
    fa = _gfun(gmode, kind, prm, a, a0, a1)
    fb = _gfun(gmode, kind, prm, b, a0, a1)
    if fa == 0.0:
        return a, 0
    if fb == 0.0:
        return b, 0
    if fa * fb > 0.0:
        return 0.5 * (a + b), -1
    c = a
    fc = fa
    d = b - a
    e = d
    for it in range(200):
        if fb * fc > 0.0:
            c = a
            fc = fa
            d = b - a
            e = d
        if abs(fc) < abs(fb):
            a = b
            b = c
            c = a
            fa = fb
            fb = fc
            fc = fa
        tol = 2.0 * 2.2e-16 * abs(b) + 0.5 * xtol
        m = 0.5 * (c - b)
        if abs(m) <= tol or fb == 0.0:
            return b, it
        if abs(e) < tol or abs(fa) <= abs(fb):
            d = m
            e = m
        else:
            s = fb / fa
            if a == c:
                p = 2.0 * m * s
                q = 1.0 - s
            else:
                q = fa / fc
                r = fb / fc
                p = s * (2.0 * m * q * (q - r) - (b - a) * (r - 1.0))
                q = (q - 1.0) * (r - 1.0) * (s - 1.0)
            if p > 0.0:
                q = -q
            else:
                p = -p
            if 2.0 * p < min(3.0 * m * q - abs(tol * q), abs(e * q)):
                e = d
                d = p / q
            else:
                d = m
                e = m
        a = b
        fa = fb
        if abs(d) > tol:
            b += d
        else:
            b += math.copysign(tol, m)
        fb = _gfun(gmode, kind, prm, b, a0, a1)
    return b, -1


@jit
def _gk15(mode, kind, prm, lo, hi, s0, s1, a0, a1):
    """Kronrod and Gauss estimates on [s0, s1] of the graded map onto [lo, hi]."""
    m = 0.5 * (s0 + s1)
    hl = 0.5 * (s1 - s0)
    span = hi - lo
    resk = 0.0
    resg = 0.0
    for j in range(15):
        if j < 7:
            x = m - hl * _XGK[j]
        elif j == 7:
            x = m
        else:
            x = m + hl * _XGK[14 - j]
        w = x * x * x * (10.0 - 15.0 * x + 6.0 * x * x)
        dw = 30.0 * x * x * (1.0 - x) * (1.0 - x)
        f = _integrand(mode, kind, prm, lo + span * w, a0, a1) * span * dw
        k = j if j < 8 else 14 - j
        resk += _WGK[k] * f
        if k % 2 == 1:
            resg += _WG[k // 2] * f
    return resk * hl, resg * hl


@jit
def _adapt(mode, kind, prm, lo, hi, a0, a1, tol):
    stack0 = np.empty(400)
    stack1 = np.empty(400)
    top = 1
    stack0[0] = 0.0
    stack1[0] = 1.0
    total = 0.0
    err = 0.0
    while top > 0:
        top -= 1
        s0 = stack0[top]
        s1 = stack1[top]
        k, g = _gk15(mode, kind, prm, lo, hi, s0, s1, a0, a1)
        e = abs(k - g)
        if e <= tol * (s1 - s0) or s1 - s0 < 1e-9 or top >= 398:
            total += k
            err += e
        else:
            sm = 0.5 * (s0 + s1)
            stack0[top] = s0
            stack1[top] = sm
            stack0[top + 1] = sm
            stack1[top + 1] = s1
            top += 2
    return total, err


@jit
def integrate(mode, kind, prm, a, b, a0, a1, tol):
    """Integral over [a, b] split at the body's non-smooth angles.

    Each piece gets its share of ``tol`` by length, so the errors add up to
    at most ``tol``.
    """
    total = 0.0
    err = 0.0
    x = a
    while x < b:
        nb = next_break(kind, prm, x)
        e = nb if nb < b else b
        if e - x > 1e-15:
            v, er = _adapt(mode, kind, prm, x, e, a0, a1, tol * (e - x) / (b - a))
            total += v
            err += er
        x = e
    return total, err


@jit
def area(kind, prm, tol):
    return integrate(0, kind, prm, 0.0, TWO_PI, 0.0, 0.0, tol)


@jit
def cap_eval(kind, prm, vol, phi, delta, tol):
    """Cap of depth ``delta`` below the supporting line with normal angle phi.

    Returns (area, chord length, section midpoint x, y, quadrature error).
    """
    h, thc = support(kind, prm, phi)
    if delta <= 0.0:
        r = radial(kind, prm, thc)
        return 0.0, 0.0, r * math.cos(thc), r * math.sin(thc), 0.0
    if delta >= 2.0 * h:
        return vol, 0.0, 0.0, 0.0, 0.0
    flip = False
    if delta > h:
        flip = True
        phi = phi + math.pi
        thc = thc + math.pi
        delta = 2.0 * h - delta
    c = h - delta
    if c <= 0.0:
        # the section runs through the origin, along the rays phi +- pi/2
        c = 0.0
        ta = phi + HALF_PI
        tb = phi - HALF_PI
    else:
        ta, _ = brent_root(0, kind, prm, thc, phi + HALF_PI, phi, c, 1e-15)
        tb, _ = brent_root(0, kind, prm, phi - HALF_PI, thc, phi, c, 1e-15)
    a, err = integrate(1, kind, prm, tb, ta, phi, c, tol)
    # chord ends lie on the boundary at the root angles
    qa = radial(kind, prm, ta)
    qb = radial(kind, prm, tb)
    xa = qa * math.cos(ta)
    ya = qa * math.sin(ta)
    xb = qb * math.cos(tb)
    yb = qb * math.sin(tb)
    chord = math.sqrt((xa - xb) ** 2 + (ya - yb) ** 2)
    if flip:
        a = vol - a
    return a, chord, 0.5 * (xa + xb), 0.5 * (ya + yb), err


@jit
def cap_height(kind, prm, vol, phi, target, guess, rtol, tol, maxit):
    """Depth whose cap has area ``target``; Newton in log-depth with a bracket.

    Returns (depth, iterations, residual, status) with status 0 on success.
    """
    h, _ = support(kind, prm, phi)
    if target >= 0.5 * vol:
        return h, 0, 0.5 * vol - target, 0 if target == 0.5 * vol else 1
    lo = -np.inf
    hi = math.log(h)
    if guess > 0.0 and guess < h:
        s = math.log(guess)
    else:
        s = math.log(min(0.5 * h, h * (2.0 * target / vol) ** (2.0 / 3.0)))
    resid = np.inf
    final = False
    for it in range(maxit):
        d = math.exp(s)
        a, chord, _, _, _ = cap_eval(kind, prm, vol, phi, d, tol)
        resid = a - target
        if final or abs(resid) <= rtol * target:
            return d, it + 1, resid, 0
        if a <= 0.0:
            lo = s
            s = s + 1.0 if hi - s > 1.0 else 0.5 * (s + hi)
            continue
        f = math.log(a / target)
        if f < 0.0:
            lo = s
        else:
            hi = s
        df = d * chord / a
        snew = s - f / df if df > 0.0 else np.nan
        if not (snew > lo and snew < hi):
            if lo == -np.inf:
                snew = s - 2.0
            else:
                snew = 0.5 * (lo + hi)
        final = abs(snew - s) < STEP_TOL
        s = snew
    return math.exp(s), maxit, resid, 1


@jit
def hat_eval(kind, prm, thy, t, tol):
    """Area of conv[K, t r(thy) e(thy)] minus K, its t-derivative and error."""
    if t <= 1.0:
        return 0.0, 0.0, 0.0
    r = radial(kind, prm, thy)
    wx = r * math.cos(thy)
    wy = r * math.sin(thy)
    yx = t * wx
    yy = t * wy
    ta, _ = brent_root(1, kind, prm, thy, thy + math.pi, yx, yy, 1e-15)
    tb, _ = brent_root(1, kind, prm, thy - math.pi, thy, yx, yy, 1e-15)
    a, err = integrate(2, kind, prm, tb, ta, yx, yy, tol)
    da, _ = integrate(3, kind, prm, tb, ta, wx, wy, tol)
    return a, da, err


@jit
def illum_t(kind, prm, vol, thy, target, guess, rtol, tol, maxit):
    """Dilation t > 1 with hat area ``target``; Newton in log(t - 1)."""
    lo = -np.inf
    hi = np.inf
    if guess > 1.0:
        s = math.log(guess - 1.0)
    else:
        s = math.log((2.0 * target / vol) ** (2.0 / 3.0))
    resid = np.inf
    final = False
    for it in range(maxit):
        t = 1.0 + math.exp(s)
        a, da, _ = hat_eval(kind, prm, thy, t, tol)
        resid = a - target
        if final or abs(resid) <= rtol * target:
            return t, it + 1, resid, 0
        if a <= 0.0:
            lo = s
            s = s + 1.0 if hi - s > 1.0 else 0.5 * (s + hi)
            continue
        f = math.log(a / target)
        if f < 0.0:
            lo = s
        else:
            hi = s
        df = (t - 1.0) * da / a
        snew = s - f / df if df > 0.0 else np.nan
        if not (snew > lo and snew < hi):
            if lo == -np.inf:
                snew = s - 2.0
            elif hi == np.inf:
                snew = s + 2.0
            else:
                snew = 0.5 * (lo + hi)
        final = abs(snew - s) < STEP_TOL
        s = snew
    return 1.0 + math.exp(s), maxit, resid, 1


@jit
def _dupin_angle(kind, prm, vol, psi, target, guess, rtol, tol):
    d, _, _, st = cap_height(kind, prm, vol, psi, target, guess, rtol, tol, 80)
    _, _, mx, my, _ = cap_eval(kind, prm, vol, psi, d, tol)
    return math.atan2(my, mx), math.hypot(mx, my), d, st


@jit
def floating_radial(kind, prm, vol, thv, target, rtol, tol):
    """Radial function of the floating body along thv via section midpoints.

    The cap normal psi whose chord midpoint lies on the ray thv is found by a
    safeguarded secant iteration; psi is bracketed by thv -+ pi/2.
    Returns (radius, psi, depth, status).
    """
    lo = thv - HALF_PI + 1e-9
    hi = thv + HALF_PI - 1e-9
    r, dr = radial_d(kind, prm, thv)
    c = math.cos(thv)
    s = math.sin(thv)
    psi0 = math.atan2(r * s - dr * c, r * c + dr * s)
    psi0 = thv + _wrap(psi0 - thv)
    if not (psi0 > lo and psi0 < hi):
        psi0 = thv
    ang, rad, d, st = _dupin_angle(kind, prm, vol, psi0, target, -1.0, rtol, tol)
    f0 = _wrap(ang - thv)
    if f0 == 0.0:
        return rad, psi0, d, st
    if f0 < 0.0:
        lo = psi0
    else:
        hi = psi0
    psi1 = psi0 - f0
    if not (psi1 > lo and psi1 < hi):
        psi1 = 0.5 * (lo + hi)
    status = 1
    for _ in range(100):
        ang, rad, d, st = _dupin_angle(kind, prm, vol, psi1, target, d, rtol, tol)
        f1 = _wrap(ang - thv)
        if abs(f1) < 1e-14 or hi - lo < 1e-14:
            status = st
            break
        if f1 < 0.0:
            lo = psi1
        else:
            hi = psi1
        if f1 != f0:
            psi2 = psi1 - f1 * (psi1 - psi0) / (f1 - f0)
        else:
            psi2 = 0.5 * (lo + hi)
        if not (psi2 > lo and psi2 < hi):
            psi2 = 0.5 * (lo + hi)
        psi0 = psi1
        f0 = f1
        psi1 = psi2
    return rad, psi1, d, status


# ---- batch drivers -------------------------------------------------------

@jit
def cap_eval_batch(kind, prm, vol, phis, deltas, tol):
    m = phis.shape[0]
    out = np.empty((m, 5))
    for i in range(m):
        a, ch, bx, by, er = cap_eval(kind, prm, vol, phis[i], deltas[i], tol)
        out[i, 0] = a
        out[i, 1] = ch
        out[i, 2] = bx
        out[i, 3] = by
        out[i, 4] = er
    return out


@jit
def cap_height_batch(kind, prm, vol, phis, target, rtol, tol, maxit):
    m = phis.shape[0]
    out = np.empty((m, 4))
    guess = -1.0
    for i in range(m):
        d, it, res, st = cap_height(kind, prm, vol, phis[i], target, guess, rtol, tol, maxit)
        out[i, 0] = d
        out[i, 1] = it
        out[i, 2] = res
        out[i, 3] = st
        guess = d
    return out


@jit
def hat_eval_batch(kind, prm, thys, ts, tol):
    m = thys.shape[0]
    out = np.empty((m, 3))
    for i in range(m):
        a, da, er = hat_eval(kind, prm, thys[i], ts[i], tol)
        out[i, 0] = a
        out[i, 1] = da
        out[i, 2] = er
    return out


@jit
def illum_t_batch(kind, prm, vol, thys, target, guesses, rtol, tol, maxit):
    m = thys.shape[0]
    out = np.empty((m, 4))
    for i in range(m):
        t, it, res, st = illum_t(kind, prm, vol, thys[i], target, guesses[i], rtol, tol, maxit)
        out[i, 0] = t
        out[i, 1] = it
        out[i, 2] = res
        out[i, 3] = st
    return out


@jit
def floating_radial_batch(kind, prm, vol, thvs, target, rtol, tol):
    m = thvs.shape[0]
    out = np.empty((m, 4))
    for i in range(m):
        r, psi, d, st = floating_radial(kind, prm, vol, thvs[i], target, rtol, tol)
        out[i, 0] = r
        out[i, 1] = psi
        out[i, 2] = d
        out[i, 3] = st
    return out


@jit
def radial_batch(kind, prm, ths):
    m = ths.shape[0]
    out = np.empty((m, 2))
    for i in range(m):
        r, dr = radial_d(kind, prm, ths[i])
        out[i, 0] = r
        out[i, 1] = dr
    return out


@jit
def support_batch(kind, prm, phis):
    m = phis.shape[0]
    out = np.empty((m, 2))
    for i in range(m):
        h, t = support(kind, prm, phis[i])
        out[i, 0] = h
        out[i, 1] = t
    return out
