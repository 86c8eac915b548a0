"""Illumination bodies, the composite body iota^delta(C) = ((C°)^delta)°, hats and B_p constants."""

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize, minimize_scalar
from scipy.special import beta, betainc

from . import kernels
from .bodies import (RadialGridBody, affine_constant, ball_volume, bp_volume, conjugate,
                     curvature_bp, normal_bp, polar)
from .directions import UnitDirection, default_grid
from .errors import DomainError, SolverError
from .floating import _unique_folded
from .kernels import _np3d
from .measure import hats

RTOL = 1e-12
TOL_2D = 1e-12


@dataclass(frozen=True)
class HatSpec:
    """Apex on the ray through ``direction`` at relative excess ``excess``: y = (1 + excess) r_K(v) v."""

    direction: UnitDirection
    excess: float

    def __post_init__(self):
        if not isinstance(self.direction, UnitDirection):
            object.__setattr__(self, "direction", UnitDirection.of(self.direction))
        if not (self.excess >= 0.0):
            raise DomainError(f"hat excess must be >= 0, got {self.excess}")

    def apex(self, body):
        v = self.direction.coords
        return (1.0 + self.excess) * float(body.radial(v)) * v


def hat_volume(body, hat):
    """|conv[K, y]| - |K| for the apex of ``hat``; zero at excess 0."""
    if hat.excess == 0.0:
        return 0.0
    return float(hats(body, hat.direction.coords, 1.0 + hat.excess)[0][0])


def illumination_dilation(body, delta, v, rtol=RTOL, guesses=None):
    """t > 1 with |conv[K, t r_K(v) v]| = (1 + delta)|K| for every row of v."""
    vol = body.volume()
    if body.dim == 2:
        kind, prm = body.kernel()
        out = kernels.illum_t(kind, prm, vol, np.arctan2(v[:, 1], v[:, 0]), delta * vol, rtol, TOL_2D, guesses)
        t, st = out[:, 0], out[:, 3]
    elif body.dim == 3:
        t, _, _, st = _np3d.illum_t(body, v, delta * vol, rtol, guesses=guesses)
    else:
        raise DomainError("illumination bodies are computed for n = 2, 3")
    if np.any(st != 0.0):
        raise SolverError("illumination dilation did not converge", bracket=(1.0, float(np.max(t))))
    return t


def illumination_radial(body, delta, directions, rtol=RTOL):
    """r_{K^delta}(v): the apex distance along v at which the hull gains delta |K|."""
    if not delta > 0.0:
        raise DomainError(f"volume fraction must be positive, got {delta}")
    v = np.atleast_2d(np.asarray(directions, dtype=float))
    v = v / np.linalg.norm(v, axis=1, keepdims=True)
    rep, inv = _unique_folded(body, v)
    r = (illumination_dilation(body, delta, rep, rtol) * np.asarray(body.radial(rep)))[inv]
    return float(r[0]) if np.ndim(directions) == 1 else r


def illumination_body(body, delta, grid=None, interpolation=None):
    """K^delta tabulated on a grid.

    Polygonal inputs keep straight-edge interpolation, so the output is
    again polygon-like.
    """
    if grid is None:
        grid = default_grid(body.dim, 4096 if body.dim == 2 else 2048)
    grid = np.asarray(grid, dtype=float)
    if interpolation is None and getattr(body, "interpolation", None) == "polygon":
        interpolation = "polygon"
    return RadialGridBody(grid, illumination_radial(body, delta, grid), interpolation)


def iota_body(body, delta_prime, grid=None):
    """iota^{delta'}(C) = ((C°)^{delta'})° on a grid.

    Its radial function is 1 / h of the tabulated illumination body of the
    polar; the support function of the spline body is maximized exactly.
    """
    if not delta_prime > 0.0:
        raise DomainError(f"volume fraction must be positive, got {delta_prime}")
    return polar(illumination_body(polar(body), delta_prime, grid))


def iota_radial(body, delta_prime, directions, n_grid=None):
    """r of iota^{delta'}(C) along v without tabulation.

    h_{(C°)^{delta'}}(v) = max over w of r(w) <w, v>; the maximum is taken on a
    grid of directions w and polished with the illumination radial evaluated
    directly.
    """
    v = np.atleast_2d(np.asarray(directions, dtype=float))
    v = v / np.linalg.norm(v, axis=1, keepdims=True)
    p = polar(body)
    n = body.dim
    grid = default_grid(n, n_grid or (1024 if n == 2 else 2048))
    rg = illumination_radial(p, delta_prime, grid)
    out = np.empty(v.shape[0])
    for i, w in enumerate(v):
        vals = rg * (grid @ w)
        k = int(np.argmax(vals))
        if n == 2:
            th = math.atan2(w[1], w[0])
            step = 2.0 * math.pi / grid.shape[0]
            g0 = math.atan2(grid[k, 1], grid[k, 0])

            def neg(a, th=th):
                e = np.array([math.cos(a), math.sin(a)])
                return -illumination_radial(p, delta_prime, e) * math.cos(a - th)

            res = minimize_scalar(neg, bounds=(g0 - step, g0 + step), method="bounded",
                                  options={"xatol": 1e-11})
            h = max(-res.fun, vals[k])
        else:
            g0 = grid[k]
            a = np.cross(g0, [1.0, 0.0, 0.0] if abs(g0[0]) < 0.9 else [0.0, 1.0, 0.0])
            a /= np.linalg.norm(a)
            b = np.cross(g0, a)

            def neg3(s, g0=g0, a=a, b=b, w=w):
                e = g0 + s[0] * a + s[1] * b
                e = e / np.linalg.norm(e)
                return -illumination_radial(p, delta_prime, e) * float(e @ w)

            res = minimize(neg3, np.zeros(2), method="Nelder-Mead",
                           options={"xatol": 1e-8, "fatol": 1e-13,
                                    "initial_simplex": [[0, 0], [0.02, 0], [0, 0.02]]})
            h = max(-res.fun, vals[k])
        out[i] = 1.0 / h
    return float(out[0]) if np.ndim(directions) == 1 else out


# B_p hats and tangency -----------------------------------------------------

@dataclass(frozen=True)
class BpHat:
    volume: float
    t0: float


def _bp_slab(n, p, t0, one_minus_x):
    """|B_p^n cap {x_1 >= t0}| with 1 - t0^p passed separately for accuracy."""
    a, b = 1.0 / p, (n - 1) / p + 1.0
    return bp_volume(n - 1, p) / p * beta(a, b) * betainc(b, a, one_minus_x)


def hat_volume_bp(n, p, Delta):
    """Exact |conv[B_p^n, (1+Delta) e_1]| - |B_p^n| and the tangency height t0.

    The hull adds the cone from the apex over the section {x_1 = t0} and
    loses nothing, so the hat is that cone minus the cap of B_p^n above t0,
    with t0 = (1+Delta)^(-1/(p-1)).
    """
    if not p > 1.0:
        raise DomainError(f"exponent must exceed 1, got {p}")
    if not (0.0 <= Delta <= 1.0):
        raise DomainError(f"hat height must lie in [0, 1], got {Delta}")
    if Delta == 0.0:
        return BpHat(0.0, 1.0)
    lg = math.log1p(Delta)
    t0 = math.exp(-lg / (p - 1.0))
    one_minus = -math.expm1(-p * lg / (p - 1.0))  # 1 - t0^p
    section = bp_volume(n - 1, p) * one_minus ** ((n - 1) / p)
    cone = section * (1.0 + Delta - t0) / n
    return BpHat(cone - _bp_slab(n, p, t0, one_minus), t0)


def hat_asymptotic_bp(n, p, Delta):
    """(p-1)/(n(n-1+p)) |B_p^(n-1)| (p Delta/(p-1))^((n-1+p)/p)."""
    return (p - 1.0) / (n * (n - 1.0 + p)) * bp_volume(n - 1, p) * (p * Delta / (p - 1.0)) ** ((n - 1.0 + p) / p)


def hat_asymptotic_smooth(n, kappa, Delta):
    """Hat volume at a point of curvature kappa and normal excess Delta: (2 Delta)^((n+1)/2) |B_2^(n-1)| / (n(n+1) sqrt(kappa))."""
    return (2.0 * Delta) ** (0.5 * (n + 1)) * ball_volume(n - 1) / (n * (n + 1) * math.sqrt(kappa))


def _deriv5(f, t):
    h = 1e-3 * max(abs(t), 1e-3)
    return (f(t - 2 * h) - 8 * f(t - h) + 8 * f(t + h) - f(t + 2 * h)) / (12 * h)


def tangent_point_1d(f, Delta, fprime=None, t_max=None, xtol=1e-15):
    """t0 > 0 where the tangent to the convex profile f passes through (0, -Delta).

    Solves f'(t) t - f(t) = Delta; the left side is increasing for convex f
    with f(0) = f'(0) = 0.  Without ``t_max`` the bracket is doubled from
    1e-3 until it contains the root, halving back whenever f or f' is
    undefined there.
    """
    if Delta < 0.0:
        raise DomainError(f"tangency offset must be >= 0, got {Delta}")
    if Delta == 0.0:
        return 0.0
    df = fprime if fprime is not None else (lambda t: _deriv5(f, t))

    def g(t):
        return df(t) * t - f(t) - Delta

    if t_max is None:
        lo, hi = 0.0, 1e-3
        while True:
            try:
                val = g(hi)
            except (ValueError, ZeroDivisionError, OverflowError):
                val = math.nan
            if val >= 0.0:
                break
            if val < 0.0:
                lo, hi = hi, 2.0 * hi
            else:
                # past the end of the profile's domain: back off toward the last good point
                hi = 0.5 * (lo + hi)
            if hi > 1e6 or hi - lo < 1e-15 * hi:
                raise DomainError("no tangency point found; is the profile convex and unbounded?")
    else:
        hi = t_max
        if not g(hi) >= 0.0:
            raise DomainError(f"no tangency point in (0, {t_max}] for Delta = {Delta}")
    return brentq(g, 0.0, hi, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=200)


def bp_profile(p):
    """Profile of the boundary of B_p near e_1: x_1 = 1 - f(s), with f and f'."""
    def f(s):
        return -math.expm1(math.log1p(-abs(s) ** p) / p)

    def fp(s):
        return abs(s) ** (p - 1.0) * (1.0 - abs(s) ** p) ** (1.0 / p - 1.0)

    return f, fp


# contact constants ---------------------------------------------------------

def g_diagonal_bp(n, p):
    """G of B_p^n at (n^(-1/p), ..., n^(-1/p)), from the curvature oracle."""
    x = np.full(n, n ** (-1.0 / p))
    kappa = float(curvature_bp(x, p))
    hx = float(x @ normal_bp(x, p))
    return affine_constant(bp_volume(n, p), n) * kappa ** (1.0 / (n + 1)) / hx


@dataclass(frozen=True)
class ContactConstants:
    """Scalings of B_p^n_delta and iota^delta(B_p^n) at the axes and the diagonal.

    r_{(B_p)_delta}(e_i)  ~ 1 - c1 delta^(p/(n-1+p))
    r_{(B_p)_delta}(diag) ~ (1 - c2 delta^(2/(n+1))) r_{B_p}(diag)
    r_iota(e_i)           ~ 1 - c3 delta^(p'/(n-1+p'))
    r_iota(diag)          ~ (1 - c4 delta^(2/(n+1))) r_{B_p}(diag)
    """

    n: int
    p: float
    c1: float
    c2: float
    c3: float
    c4: float

    @property
    def exponents(self):
        q = conjugate(self.p)
        n = self.n
        return (self.p / (n - 1 + self.p), 2.0 / (n + 1), q / (n - 1 + q), 2.0 / (n + 1))

    def __iter__(self):
        return iter((self.c1, self.c2, self.c3, self.c4))


def bp_contact_constants(n, p):
    if not p > 1.0:
        raise DomainError(f"exponent must exceed 1, got {p}")
    q = conjugate(p)
    e1 = p / (n - 1.0 + p)
    c1 = (n - 1.0 + p) ** e1 / p * (bp_volume(n, p) / bp_volume(n - 1, p)) ** e1
    c2 = g_diagonal_bp(n, p)
    e3 = q / (n - 1.0 + q)
    c3 = (n * (n - 1.0 + q) / (q - 1.0) * bp_volume(n, q) / bp_volume(n - 1, q)) ** e3 * (q - 1.0) / q
    c4 = n ** (2.0 / (n + 1)) * g_diagonal_bp(n, q)
    return ContactConstants(n, float(p), c1, c2, c3, c4)


def bp_diagonal(n):
    return UnitDirection(np.full(n, 1.0 / math.sqrt(n)))


__all__ = [
    "HatSpec", "BpHat", "ContactConstants", "hat_volume", "illumination_dilation", "illumination_radial",
    "illumination_body", "iota_body", "iota_radial", "hat_volume_bp", "hat_asymptotic_bp",
    "hat_asymptotic_smooth", "tangent_point_1d", "bp_profile", "g_diagonal_bp",
    "bp_contact_constants", "bp_diagonal",
]
