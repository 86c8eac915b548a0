"""Vectorized numpy versions of the planar kernels.

Same batch signatures as the compiled module.  Iterations run in lockstep
over all requested directions: roots by the Illinois variant of regula falsi,
depths and dilations by bracketed Newton steps in log scale, and integrals by
a fixed graded Gauss-Kronrod rule whose Kronrod-Gauss gap is reported as the
error estimate.
"""

import math

import numpy as np

from ._consts import BP, ELLIPSE, HALF_PI, POLYGON, SPLINE, STEP_TOL, TWO_PI, _WG, _WGK, _XGK  # noqa: F401

_PANELS = 4

_kx = np.concatenate([-_XGK[:7], [0.0], _XGK[6::-1]])
_kw = np.concatenate([_WGK[:7], [_WGK[7]], _WGK[6::-1]])
_gw = np.zeros(15)
_gw[[1, 3, 5, 9, 11, 13]] = np.concatenate([_WG[:3], _WG[2::-1]])
_gw[7] = _WG[3]


def _panel_nodes(panels):
    edges = np.linspace(0.0, 1.0, panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    hl = 0.5 * (edges[1:] - edges[:-1])
    s = (mid[:, None] + hl[:, None] * _kx[None, :]).ravel()
    wk = (hl[:, None] * _kw[None, :]).ravel()
    wg = (hl[:, None] * _gw[None, :]).ravel()
    w = s ** 3 * (10.0 - 15.0 * s + 6.0 * s * s)
    dw = 30.0 * s * s * (1.0 - s) ** 2
    return w, dw * wk, dw * wg


_NODES = {}


def _nodes(panels):
    if panels not in _NODES:
        _NODES[panels] = _panel_nodes(panels)
    return _NODES[panels]


def _wrap(a):
    a = a + math.pi
    a = a - TWO_PI * np.floor(a / TWO_PI)
    a = np.where(a <= 0.0, a + TWO_PI, a)
    return a - math.pi


def radial_d(kind, prm, th):
    th = np.asarray(th, dtype=float)
    c = np.cos(th)
    s = np.sin(th)
    if kind == BP:
        p = prm[0]
        ac = np.abs(c)
        as_ = np.abs(s)
        r = (ac ** p + as_ ** p) ** (-1.0 / p)
        t1 = np.sign(c) * ac ** (p - 1.0) * s
        t2 = np.sign(s) * as_ ** (p - 1.0) * c
        return r, r ** (p + 1.0) * (t1 - t2)
    if kind == ELLIPSE:
        ia = 1.0 / prm[0] ** 2
        ib = 1.0 / prm[1] ** 2
        r = 1.0 / np.sqrt(c * c * ia + s * s * ib)
        return r, r ** 3 * c * s * (ia - ib)
    n = int(prm[0])
    x = th - TWO_PI * np.floor(th / TWO_PI)
    if kind == SPLINE:
        step = TWO_PI / n
        i = np.minimum((x / step).astype(np.int64), n - 1)
        u = x - i * step
        coef = prm[1:1 + 4 * n].reshape(4, n)
        c0, c1, c2, c3 = coef[0, i], coef[1, i], coef[2, i], coef[3, i]
        return ((c0 * u + c1) * u + c2) * u + c3, (3.0 * c0 * u + 2.0 * c1) * u + c2
    ang = prm[1:1 + n]
    rad = prm[1 + n:1 + 2 * n]
    i = np.searchsorted(ang, x, side="right") - 1
    i = np.where(i < 0, n - 1, i)
    j = (i + 1) % n
    px = rad[i] * np.cos(ang[i])
    py = rad[i] * np.sin(ang[i])
    wx = rad[j] * np.cos(ang[j]) - px
    wy = rad[j] * np.sin(ang[j]) - py
    num = px * (py + wy) - py * (px + wx)
    den = c * wy - s * wx
    r = num / den
    return r, -r * (-s * wy - c * wx) / den


def radial(kind, prm, th):
    return radial_d(kind, prm, th)[0]


def support(kind, prm, phi):
    phi = np.asarray(phi, dtype=float)
    c = np.cos(phi)
    s = np.sin(phi)
    if kind == BP:
        p = prm[0]
        q = p / (p - 1.0)
        h = (np.abs(c) ** q + np.abs(s) ** q) ** (1.0 / q)
        x = np.sign(c) * np.abs(c) ** (q - 1.0)
        y = np.sign(s) * np.abs(s) ** (q - 1.0)
        return h, phi + _wrap(np.arctan2(y, x) - phi)
    if kind == ELLIPSE:
        a2 = prm[0] ** 2
        b2 = prm[1] ** 2
        h = np.sqrt(a2 * c * c + b2 * s * s)
        return h, phi + _wrap(np.arctan2(b2 * s, a2 * c) - phi)
    if kind == POLYGON:
        n = int(prm[0])
        ang = prm[1:1 + n]
        rad = prm[1 + n:1 + 2 * n]
        v = rad[None, :] * np.cos(ang[None, :] - phi[..., None])
        k = np.argmax(v, axis=-1)
        return np.take_along_axis(v, k[..., None], -1)[..., 0], phi + _wrap(ang[k] - phi)
    g = 0.5 * (math.sqrt(5.0) - 1.0)
    a = phi - HALF_PI
    b = phi + HALF_PI
    x1 = b - g * (b - a)
    x2 = a + g * (b - a)
    f1 = radial(kind, prm, x1) * np.cos(x1 - phi)
    f2 = radial(kind, prm, x2) * np.cos(x2 - phi)
    for _ in range(80):
        left = f1 > f2
        b = np.where(left, x2, b)
        a = np.where(left, a, x1)
        x1n = np.where(left, b - g * (b - a), x2)
        x2n = np.where(left, x1, a + g * (b - a))
        x1, x2 = x1n, x2n
        f1 = radial(kind, prm, x1) * np.cos(x1 - phi)
        f2 = radial(kind, prm, x2) * np.cos(x2 - phi)
    t = 0.5 * (a + b)
    return radial(kind, prm, t) * np.cos(t - phi), t


def _gfun(gmode, kind, prm, th, a0, a1):
    r, dr = radial_d(kind, prm, th)
    if gmode == 0:
        return r * np.cos(th - a0) - a1
    c = np.cos(th)
    s = np.sin(th)
    return a0 * (r * c + dr * s) + a1 * (r * s - dr * c) - r * r


def _integrand(mode, kind, prm, th, a0, a1):
    r, dr = radial_d(kind, prm, th)
    if mode == 0:
        return 0.5 * r * r
    if mode == 1:
        q = a1 / np.cos(th - a0)
        return 0.5 * (r * r - q * q)
    c = np.cos(th)
    s = np.sin(th)
    val = a0 * (r * c + dr * s) + a1 * (r * s - dr * c)
    if mode == 2:
        val = val - r * r
    return 0.5 * val


def root(gmode, kind, prm, a, b, a0, a1, xtol=1e-15, maxit=200):
    """Illinois regula falsi in lockstep over rows of sign-changing brackets.

    A row whose bracket fails to halve over two steps takes a bisection
    step, which keeps jumps (polygon vertices) from stalling the iteration.
    """
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)
    fa = _gfun(gmode, kind, prm, a, a0, a1)
    fb = _gfun(gmode, kind, prm, b, a0, a1)
    x = np.where(fa == 0.0, a, b)
    done = (fa == 0.0) | (fb == 0.0)
    side = np.zeros(a.shape, dtype=np.int8)
    stall = np.zeros(a.shape, dtype=np.int8)
    for _ in range(maxit):
        if done.all():
            break
        den = fb - fa
        x = np.where(done, x, np.where(den != 0.0, (a * fb - b * fa) / np.where(den != 0.0, den, 1.0),
                                         0.5 * (a + b)))
        out = (x <= np.minimum(a, b)) | (x >= np.maximum(a, b)) | (stall >= 2)
        x = np.where(~done & out, 0.5 * (a + b), x)
        fx = _gfun(gmode, kind, prm, x, a0, a1)
        left = fx * fa > 0.0
        # replace the end with the same sign; halve the stale end value
        a_new = np.where(left, x, a)
        fa_new = np.where(left, fx, np.where(side == -1, 0.5 * fa, fa))
        b_new = np.where(left, b, x)
        fb_new = np.where(left, np.where(side == 1, 0.5 * fb, fb), fx)
        side = np.where(left, 1, -1).astype(np.int8)
        upd = ~done
        shrunk = np.abs(b_new - a_new) <= 0.5 * np.abs(b - a)
        stall = np.where(upd & ~shrunk & (stall < 2), stall + 1, 0).astype(np.int8)
        a = np.where(upd, a_new, a)
        b = np.where(upd, b_new, b)
        fa = np.where(upd, fa_new, fa)
        fb = np.where(upd, fb_new, fb)
        done = done | (fx == 0.0) | (np.abs(b - a) <= xtol + 4.4e-16 * np.abs(x))
    return x


def _breaks(kind, prm, a, b):
    """Per-row integration boundaries of shape (m, k), padded by repetition."""
    a = np.atleast_1d(a)
    b = np.atleast_1d(b)
    if kind == BP and prm[1] == 0.0:
        k0 = np.floor(a / HALF_PI + 1e-12)
        inner = (k0[:, None] + np.arange(1, 5)[None, :]) * HALF_PI
    elif kind == POLYGON:
        n = int(prm[0])
        ang = prm[1:1 + n]
        base = np.floor(a / TWO_PI) * TWO_PI
        ext = np.concatenate([ang, ang + TWO_PI, ang + 2 * TWO_PI])
        i0 = np.searchsorted(ext, a - base, side="right")
        i1 = np.searchsorted(ext, b - base, side="left")
        kmax = int(max(np.max(i1 - i0), 0)) if a.size else 0
        idx = np.minimum(i0[:, None] + np.arange(kmax)[None, :], ext.size - 1)
        inner = ext[idx] + base[:, None]
    else:
        return np.stack([a, b], axis=1)
    inner = np.clip(inner, a[:, None], b[:, None])
    return np.concatenate([a[:, None], inner, b[:, None]], axis=1)


def _fixed(mode, kind, prm, bnd, a0, a1, panels):
    w, wk, wg = _nodes(panels)
    lo = bnd[:, :-1]
    span = bnd[:, 1:] - lo
    th = lo[..., None] + span[..., None] * w
    f = _integrand(mode, kind, prm, th, a0[:, None, None], a1[:, None, None]) * span[..., None]
    f = np.where(span[..., None] > 0.0, f, 0.0)
    vk = (f * wk).sum(axis=(1, 2))
    vg = (f * wg).sum(axis=(1, 2))
    return vk, np.abs(vk - vg)


def integrate(mode, kind, prm, a, b, a0, a1, tol=1e-12, bnd=None):
    """Graded GK15 rule on every piece between break points; returns (value, error).

    Rows whose Kronrod-Gauss gap exceeds ``tol`` are recomputed with four
    times as many panels, up to 256 panels per piece.
    """
    if bnd is None:
        bnd = _breaks(kind, prm, a, b)
    m = bnd.shape[0]
    a0 = np.broadcast_to(np.atleast_1d(np.asarray(a0, dtype=float)), (m,))
    a1 = np.broadcast_to(np.atleast_1d(np.asarray(a1, dtype=float)), (m,))
    val, err = _fixed(mode, kind, prm, bnd, a0, a1, _PANELS)
    panels = _PANELS
    while panels < 256:
        bad = np.nonzero(err > tol)[0]
        if bad.size == 0:
            break
        panels *= 4
        v, e = _fixed(mode, kind, prm, bnd[bad], a0[bad], a1[bad], panels)
        val[bad] = v
        err[bad] = e
    return val, err


def area(kind, prm, tol=None):
    if kind == POLYGON:
        bnd = _breaks(kind, prm, np.array([0.0]), np.array([TWO_PI]))
    else:
        bnd = np.arange(9.0)[None, :] * (0.25 * math.pi)
    v, e = integrate(0, kind, prm, None, None, 0.0, 0.0, tol=1e-13 if tol is None else tol, bnd=bnd)
    return float(v[0]), float(e[0])


def _cap_core(kind, prm, vol, phi, delta, tol=1e-12):
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    delta = np.broadcast_to(np.asarray(delta, dtype=float), phi.shape).copy()
    h, thc = support(kind, prm, phi)
    flip = delta > h
    phi = np.where(flip, phi + math.pi, phi)
    thc = np.where(flip, thc + math.pi, thc)
    d = np.where(flip, 2.0 * h - delta, delta)
    d = np.clip(d, 0.0, h)
    c = h - d
    mid = c <= 0.0
    c = np.where(mid, 0.0, c)
    ta = root(0, kind, prm, thc, phi + HALF_PI, phi, c)
    tb = root(0, kind, prm, phi - HALF_PI, thc, phi, c)
    # sections through the origin run along the rays phi +- pi/2
    ta = np.where(mid, phi + HALF_PI, ta)
    tb = np.where(mid, phi - HALF_PI, tb)
    a, err = integrate(1, kind, prm, tb, ta, phi, c, tol)
    # chord ends lie on the boundary at the root angles
    qa = radial(kind, prm, ta)
    qb = radial(kind, prm, tb)
    xa, ya = qa * np.cos(ta), qa * np.sin(ta)
    xb, yb = qb * np.cos(tb), qb * np.sin(tb)
    chord = np.hypot(xa - xb, ya - yb)
    a = np.where(flip, vol - a, a)
    zero = delta <= 0.0
    full = delta >= 2.0 * h
    rc = radial(kind, prm, thc)
    out = np.stack([a, chord, 0.5 * (xa + xb), 0.5 * (ya + yb), err], axis=1)
    out[zero] = np.stack([np.zeros_like(rc), np.zeros_like(rc), rc * np.cos(thc), rc * np.sin(thc),
                          np.zeros_like(rc)], axis=1)[zero]
    out[full] = [vol, 0.0, 0.0, 0.0, 0.0]
    return out


def cap_eval_batch(kind, prm, vol, phis, deltas, tol):
    return _cap_core(kind, prm, vol, phis, deltas, tol)


def cap_height_batch(kind, prm, vol, phis, target, rtol, tol, maxit, guess=None):
    phis = np.atleast_1d(np.asarray(phis, dtype=float))
    h, _ = support(kind, prm, phis)
    m = phis.size
    if guess is None:
        s = np.log(np.minimum(0.5 * h, h * (2.0 * target / vol) ** (2.0 / 3.0)))
    else:
        s = np.log(np.where((guess > 0) & (guess < h), guess, 0.5 * h))
    lo = np.full(m, -np.inf)
    hi = np.log(h)
    it = np.zeros(m)
    resid = np.full(m, np.inf)
    done = np.zeros(m, dtype=bool)
    final = np.zeros(m, dtype=bool)
    if target >= 0.5 * vol:
        return np.stack([h, it, 0.5 * vol - np.full(m, target), np.ones(m)], axis=1)
    for _ in range(maxit):
        d = np.exp(s)
        out = _cap_core(kind, prm, vol, phis, d, tol)
        a, chord = out[:, 0], out[:, 1]
        r_new = a - target
        resid = np.where(done, resid, r_new)
        conv = (np.abs(r_new) <= rtol * target) | final
        it = np.where(done, it, it + 1)
        done_now = done | conv
        pos = a > 0.0
        f = np.log(np.where(pos, a, 1.0) / target)
        lo = np.where(~done_now & ((~pos) | (f < 0.0)), s, lo)
        hi = np.where(~done_now & pos & (f >= 0.0), s, hi)
        df = d * chord / np.where(pos, a, 1.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            snew = s - f / df
        bad = ~((snew > lo) & (snew < hi)) | ~pos
        fallback = np.where(np.isinf(lo), s - 2.0, 0.5 * (lo + hi))
        snew = np.where(bad, fallback, snew)
        final = ~done_now & (np.abs(snew - s) < STEP_TOL)
        s = np.where(done_now, s, snew)
        done = done_now
        if done.all():
            break
    status = (~done).astype(float)
    return np.stack([np.exp(s), it, resid, status], axis=1)


def hat_eval_batch(kind, prm, thys, ts, tol=1e-12):
    thys = np.atleast_1d(np.asarray(thys, dtype=float))
    ts = np.broadcast_to(np.asarray(ts, dtype=float), thys.shape)
    r = radial(kind, prm, thys)
    wx = r * np.cos(thys)
    wy = r * np.sin(thys)
    yx = ts * wx
    yy = ts * wy
    ta = root(1, kind, prm, thys, thys + math.pi, yx, yy)
    tb = root(1, kind, prm, thys - math.pi, thys, yx, yy)
    a, err = integrate(2, kind, prm, tb, ta, yx, yy, tol)
    da, _ = integrate(3, kind, prm, tb, ta, wx, wy, tol)
    out = np.stack([a, da, err], axis=1)
    out[ts <= 1.0] = 0.0
    return out


def illum_t_batch(kind, prm, vol, thys, target, guesses, rtol, tol, maxit):
    thys = np.atleast_1d(np.asarray(thys, dtype=float))
    m = thys.size
    guesses = np.broadcast_to(np.asarray(guesses, dtype=float), thys.shape)
    s0 = math.log((2.0 * target / vol) ** (2.0 / 3.0))
    s = np.where(guesses > 1.0, np.log(np.maximum(guesses - 1.0, 1e-300)), s0)
    lo = np.full(m, -np.inf)
    hi = np.full(m, np.inf)
    it = np.zeros(m)
    resid = np.full(m, np.inf)
    done = np.zeros(m, dtype=bool)
    final = np.zeros(m, dtype=bool)
    for _ in range(maxit):
        t = 1.0 + np.exp(s)
        out = hat_eval_batch(kind, prm, thys, t, tol)
        a, da = out[:, 0], out[:, 1]
        r_new = a - target
        resid = np.where(done, resid, r_new)
        it = np.where(done, it, it + 1)
        done_now = done | (np.abs(r_new) <= rtol * target) | final
        pos = a > 0.0
        f = np.log(np.where(pos, a, 1.0) / target)
        lo = np.where(~done_now & ((~pos) | (f < 0.0)), s, lo)
        hi = np.where(~done_now & pos & (f >= 0.0), s, hi)
        df = (t - 1.0) * da / np.where(pos, a, 1.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            snew = s - f / df
            fallback = np.where(np.isinf(lo), s - 2.0, np.where(np.isinf(hi), s + 2.0, 0.5 * (lo + hi)))
        bad = ~((snew > lo) & (snew < hi)) | ~pos
        snew = np.where(bad, fallback, snew)
        final = ~done_now & (np.abs(snew - s) < STEP_TOL)
        s = np.where(done_now, s, snew)
        done = done_now
        if done.all():
            break
    return np.stack([1.0 + np.exp(s), it, resid, (~done).astype(float)], axis=1)


def _dupin(kind, prm, vol, psi, target, rtol, tol, guess):
    hs = cap_height_batch(kind, prm, vol, psi, target, rtol, tol, 80, guess=guess)
    out = _cap_core(kind, prm, vol, psi, hs[:, 0], tol)
    return np.arctan2(out[:, 3], out[:, 2]), np.hypot(out[:, 2], out[:, 3]), hs[:, 0], hs[:, 3]


def floating_radial_batch(kind, prm, vol, thvs, target, rtol, tol):
    thv = np.atleast_1d(np.asarray(thvs, dtype=float))
    lo = thv - HALF_PI + 1e-9
    hi = thv + HALF_PI - 1e-9
    r, dr = radial_d(kind, prm, thv)
    c, s = np.cos(thv), np.sin(thv)
    psi0 = thv + _wrap(np.arctan2(r * s - dr * c, r * c + dr * s) - thv)
    psi0 = np.where((psi0 > lo) & (psi0 < hi), psi0, thv)
    ang, rad, d, st = _dupin(kind, prm, vol, psi0, target, rtol, tol, None)
    f0 = _wrap(ang - thv)
    lo = np.where(f0 < 0.0, psi0, lo)
    hi = np.where(f0 > 0.0, psi0, hi)
    psi1 = psi0 - f0
    psi1 = np.where((psi1 > lo) & (psi1 < hi), psi1, 0.5 * (lo + hi))
    done = f0 == 0.0
    psi1 = np.where(done, psi0, psi1)
    status = np.where(done, st, 1.0)
    for _ in range(100):
        ang, rad_new, d_new, st_new = _dupin(kind, prm, vol, psi1, target, rtol, tol, d)
        f1 = _wrap(ang - thv)
        rad = np.where(done, rad, rad_new)
        d = np.where(done, d, d_new)
        conv = (np.abs(f1) < 1e-14) | (hi - lo < 1e-14)
        status = np.where(~done & conv, st_new, status)
        lo = np.where(~done & (f1 < 0.0), psi1, lo)
        hi = np.where(~done & (f1 > 0.0), psi1, hi)
        den = f1 - f0
        with np.errstate(divide="ignore", invalid="ignore"):
            psi2 = np.where(den != 0.0, psi1 - f1 * (psi1 - psi0) / den, 0.5 * (lo + hi))
        psi2 = np.where((psi2 > lo) & (psi2 < hi), psi2, 0.5 * (lo + hi))
        done = done | conv
        if done.all():
            break
        psi0 = np.where(done, psi0, psi1)
        f0 = np.where(done, f0, f1)
        psi1 = np.where(done, psi1, psi2)
    return np.stack([rad, psi1, d, status], axis=1)


def radial_batch(kind, prm, ths):
    r, dr = radial_d(kind, prm, ths)
    return np.stack([r, dr], axis=1)


def support_batch(kind, prm, phis):
    h, t = support(kind, prm, np.atleast_1d(np.asarray(phis, dtype=float)))
    return np.stack([h, t], axis=1)
