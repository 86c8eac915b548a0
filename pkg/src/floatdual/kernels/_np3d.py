"""Caps, sections and hats of three-dimensional bodies (numpy only).

Integrals are taken in spherical coordinates about a pole: the contact
direction for caps, the apex direction for hats.  For every azimuth beta the
polar extent alpha*(beta) of the region is found by lockstep regula falsi;
the trapezoid rule in beta is spectrally accurate because alpha* is smooth
and periodic, and Gauss-Legendre handles alpha.

``body`` must provide vectorized ``radial``, ``contact`` and ``gauge_grad``.
"""

import math

import numpy as np

from ._consts import STEP_TOL

N_BETA = 48
N_ALPHA = 32


def _frame(pole):
    pole = pole / np.linalg.norm(pole, axis=-1, keepdims=True)
    ref = np.where(np.abs(pole[:, :1]) < 0.9, np.array([[1.0, 0.0, 0.0]]), np.array([[0.0, 1.0, 0.0]]))
    e1 = ref - np.sum(ref * pole, axis=-1, keepdims=True) * pole
    e1 /= np.linalg.norm(e1, axis=-1, keepdims=True)
    e2 = np.cross(pole, e1)
    return pole, e1, e2


def _rays(pole, e1, e2, alpha, beta):
    """Directions for alpha of shape (m, nb, ...) and beta of shape (nb,)."""
    extra = alpha.ndim - 2
    cb = np.cos(beta).reshape((1, -1) + (1,) * extra + (1,))
    sb = np.sin(beta).reshape((1, -1) + (1,) * extra + (1,))
    shp = (pole.shape[0], 1) + (1,) * extra + (3,)
    p = pole.reshape(shp)
    a = e1.reshape(shp)
    b = e2.reshape(shp)
    ca = np.cos(alpha)[..., None]
    sa = np.sin(alpha)[..., None]
    return ca * p + sa * (cb * a + sb * b)


def _falsi(f, lo, hi, flo, fhi, xtol=1e-14, maxit=200):
    x = 0.5 * (lo + hi)
    side = np.zeros(lo.shape, dtype=np.int8)
    done = np.zeros(lo.shape, dtype=bool)
    for _ in range(maxit):
        den = fhi - flo
        xn = np.where(den != 0.0, (lo * fhi - hi * flo) / np.where(den != 0.0, den, 1.0), 0.5 * (lo + hi))
        bad = (xn <= lo) | (xn >= hi)
        xn = np.where(bad, 0.5 * (lo + hi), xn)
        x = np.where(done, x, xn)
        fx = f(x)
        left = fx > 0.0
        upd = ~done
        lo_n = np.where(left, x, lo)
        flo_n = np.where(left, fx, np.where(side == -1, 0.5 * flo, flo))
        hi_n = np.where(left, hi, x)
        fhi_n = np.where(left, np.where(side == 1, 0.5 * fhi, fhi), fx)
        side = np.where(upd, np.where(left, 1, -1), side).astype(np.int8)
        lo = np.where(upd, lo_n, lo)
        hi = np.where(upd, hi_n, hi)
        flo = np.where(upd, flo_n, flo)
        fhi = np.where(upd, fhi_n, fhi)
        done = done | (fx == 0.0) | (hi - lo <= xtol)
        if done.all():
            break
    return x


def _gl(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def cap(body, U, deltas, n_beta=N_BETA, n_alpha=N_ALPHA):
    """Cap volumes, section areas and section barycenters for normals U.

    Returns (volume, section_area, barycenter) with shapes (m,), (m,), (m, 3).
    """
    U = np.atleast_2d(np.asarray(U, dtype=float))
    U = U / np.linalg.norm(U, axis=1, keepdims=True)
    deltas = np.broadcast_to(np.asarray(deltas, dtype=float), U.shape[:1]).copy()
    h = body.support(U)
    vol = body.volume()
    flip = deltas > h
    U = np.where(flip[:, None], -U, U)
    d = np.clip(np.where(flip, 2.0 * h - deltas, deltas), 0.0, h)
    c = h - d
    pole, e1, e2 = _frame(body.contact(U))
    beta = 2.0 * math.pi * np.arange(n_beta) / n_beta
    m = U.shape[0]
    cc = c[:, None]

    def F(alpha):
        w = _rays(pole, e1, e2, alpha, beta)
        return body.radial(w) * np.einsum("mbk,mk->mb", w, U) - cc

    lo = np.zeros((m, n_beta))
    hi = np.full((m, n_beta), math.pi)
    astar = _falsi(F, lo, hi, F(lo), F(hi))
    xs, ws = _gl(n_alpha)
    alpha = astar[..., None] * xs
    wa = astar[..., None] * ws
    w = _rays(pole, e1, e2, alpha, beta)
    cosu = np.einsum("mbak,mk->mba", w, U)
    r = body.radial(w)
    sa = np.sin(alpha)
    q = cc[..., None] / cosu
    dbeta = 2.0 * math.pi / n_beta
    vol_cap = np.sum((r ** 3 - q ** 3) / 3.0 * sa * wa, axis=(1, 2)) * dbeta
    dens = sa * wa / cosu ** 3
    area = c ** 2 * np.sum(dens, axis=(1, 2)) * dbeta
    bary = c[:, None] ** 3 * np.einsum("mba,mbak->mk", dens / cosu, w) * dbeta
    with np.errstate(invalid="ignore", divide="ignore"):
        bary = bary / area[:, None]
    vol_cap = np.where(flip, vol - vol_cap, vol_cap)
    vol_cap = np.where(deltas <= 0.0, 0.0, vol_cap)
    vol_cap = np.where(deltas >= 2.0 * h, vol, vol_cap)
    return vol_cap, area, bary


def cap_height(body, U, target, rtol=1e-12, maxit=60, n_beta=N_BETA, n_alpha=N_ALPHA, barycenters=False):
    """Depths with cap volume ``target`` by bracketed Newton in log-depth.

    Returns (depth, iterations, residual, status), and with ``barycenters``
    also the section barycenters at the returned depths.
    """
    U = np.atleast_2d(np.asarray(U, dtype=float))
    U = U / np.linalg.norm(U, axis=1, keepdims=True)
    h = body.support(U)
    vol = body.volume()
    m = U.shape[0]
    if target >= 0.5 * vol:
        out = h, np.zeros(m), np.full(m, 0.5 * vol - target), np.ones(m)
        return out + (cap(body, U, h, n_beta, n_alpha)[2],) if barycenters else out
    s = np.log(np.minimum(0.5 * h, h * (2.0 * target / vol) ** 0.5))
    bary = np.zeros((m, 3))
    lo = np.full(m, -np.inf)
    hi = np.log(h)
    done = np.zeros(m, dtype=bool)
    final = np.zeros(m, dtype=bool)
    it = np.zeros(m)
    resid = np.full(m, np.inf)
    for _ in range(maxit):
        idx = np.nonzero(~done)[0]
        if idx.size == 0:
            break
        d = np.exp(s[idx])
        v, area, b = cap(body, U[idx], d, n_beta, n_alpha)
        bary[idx] = b
        resid[idx] = v - target
        it[idx] += 1
        conv = (np.abs(v - target) <= rtol * target) | final[idx]
        pos = v > 0.0
        f = np.log(np.where(pos, v, 1.0) / target)
        lo[idx] = np.where(~conv & (~pos | (f < 0.0)), s[idx], lo[idx])
        hi[idx] = np.where(~conv & pos & (f >= 0.0), s[idx], hi[idx])
        df = d * area / np.where(pos, v, 1.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            snew = s[idx] - f / df
        bad = ~((snew > lo[idx]) & (snew < hi[idx])) | ~pos
        snew = np.where(bad, np.where(np.isinf(lo[idx]), s[idx] - 2.0, 0.5 * (lo[idx] + hi[idx])), snew)
        final[idx] = ~conv & (np.abs(snew - s[idx]) < STEP_TOL)
        s[idx] = np.where(conv, s[idx], snew)
        done[idx] = conv
    out = np.exp(s), it, resid, (~done).astype(float)
    return out + (bary,) if barycenters else out


def hat(body, apex_dirs, ts, n_beta=N_BETA, n_alpha=N_ALPHA):
    """Volume of conv[K, y] minus K for y = t r(v) v, and its t-derivative."""
    V = np.atleast_2d(np.asarray(apex_dirs, dtype=float))
    V = V / np.linalg.norm(V, axis=1, keepdims=True)
    ts = np.broadcast_to(np.asarray(ts, dtype=float), V.shape[:1])
    rv = body.radial(V)
    wv = rv[:, None] * V
    y = ts[:, None] * wv
    pole, e1, e2 = _frame(V)
    beta = 2.0 * math.pi * np.arange(n_beta) / n_beta
    m = V.shape[0]

    def G(alpha):
        w = _rays(pole, e1, e2, alpha, beta)
        x = body.radial(w)[..., None] * w
        grad = body.gauge_grad(x)
        return np.einsum("mbk,mbk->mb", y[:, None, :] - x, grad)

    lo = np.zeros((m, n_beta))
    hi = np.full((m, n_beta), math.pi)
    astar = _falsi(G, lo, hi, G(lo), G(hi))
    xs, ws = _gl(n_alpha)
    alpha = astar[..., None] * xs
    wa = astar[..., None] * ws
    w = _rays(pole, e1, e2, alpha, beta)
    r = body.radial(w)
    x = r[..., None] * w
    grad = body.gauge_grad(x)
    sa = np.sin(alpha)
    r3 = r ** 3 / 3.0 * sa * wa
    dbeta = 2.0 * math.pi / n_beta
    yn = np.einsum("mk,mbak->mba", y, grad)
    wn = np.einsum("mk,mbak->mba", wv, grad)
    vol = np.sum(r3 * (yn - 1.0), axis=(1, 2)) * dbeta
    dvol = np.sum(r3 * wn, axis=(1, 2)) * dbeta
    vol = np.where(ts <= 1.0, 0.0, vol)
    return vol, dvol


def illum_t(body, V, target, rtol=1e-12, maxit=60, guesses=None, n_beta=N_BETA, n_alpha=N_ALPHA):
    """Dilations t with hat volume ``target`` along directions V."""
    V = np.atleast_2d(np.asarray(V, dtype=float))
    m = V.shape[0]
    vol = body.volume()
    s = np.full(m, math.log((2.0 * target / vol) ** 0.5))
    if guesses is not None:
        g = np.broadcast_to(np.asarray(guesses, dtype=float), (m,))
        s = np.where(g > 1.0, np.log(np.maximum(g - 1.0, 1e-300)), s)
    lo = np.full(m, -np.inf)
    hi = np.full(m, np.inf)
    done = np.zeros(m, dtype=bool)
    final = np.zeros(m, dtype=bool)
    it = np.zeros(m)
    resid = np.full(m, np.inf)
    for _ in range(maxit):
        idx = np.nonzero(~done)[0]
        if idx.size == 0:
            break
        t = 1.0 + np.exp(s[idx])
        v, dv = hat(body, V[idx], t, n_beta, n_alpha)
        resid[idx] = v - target
        it[idx] += 1
        conv = (np.abs(v - target) <= rtol * target) | final[idx]
        pos = v > 0.0
        f = np.log(np.where(pos, v, 1.0) / target)
        lo[idx] = np.where(~conv & (~pos | (f < 0.0)), s[idx], lo[idx])
        hi[idx] = np.where(~conv & pos & (f >= 0.0), s[idx], hi[idx])
        df = (t - 1.0) * dv / np.where(pos, v, 1.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            snew = s[idx] - f / df
            mid = 0.5 * (lo[idx] + hi[idx])
        bad = ~((snew > lo[idx]) & (snew < hi[idx])) | ~pos
        fb = np.where(np.isinf(lo[idx]), s[idx] - 2.0,
                      np.where(np.isinf(hi[idx]), s[idx] + 2.0, mid))
        snew = np.where(bad, fb, snew)
        final[idx] = ~conv & (np.abs(snew - s[idx]) < STEP_TOL)
        s[idx] = np.where(conv, s[idx], snew)
        done[idx] = conv
    return 1.0 + np.exp(s), it, resid, (~done).astype(float)
