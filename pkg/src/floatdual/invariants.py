"""The affine invariant G, cone densities, radial distance, the duality gap and rate fits.

The duality gap d_C(delta) = inf over delta' of d(C_delta, iota^{delta'}(C))
is evaluated through polarity.  Since d(A, B) = d(A°, B°), and

* r of (C_delta)° along u is 1 / h_{C_delta}(u) = 1 / (h_C(u) - Delta_u(delta)),
* r of (iota^{delta'}(C))° = (C°)^{delta'} is an illumination radial of C°,

both radial functions are available pointwise without tabulating either
body.  The objective max(A, B) with A = sup rho2/rho1 (increasing in delta')
and B = sup rho1/rho2 (decreasing) is minimized where A = B.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.optimize import brentq, minimize_scalar

from .bodies import affine_constant, ball_volume, polar, sphere_integral
from .directions import circle_angles, default_grid, fibonacci_sphere
from .errors import DomainError, SolverError, UndefinedCurvature
from .floating import (_check_delta, _unique_folded, cap_heights, floating_radial_dupin)
from .illumination import illumination_dilation
from .measure import hats


@dataclass(frozen=True)
class AffineConstants:
    c_of_body: float
    c_n: float
    c_tilde: float


def c_dim(n):
    """c_n = (1/2) ((n+1) / |B_2^(n-1)|)^(2/(n+1))."""
    return 0.5 * ((n + 1) / ball_volume(n - 1)) ** (2.0 / (n + 1))


def affine_constants(body):
    n = body.dim
    c = affine_constant(body.volume(), n)
    cp = affine_constant(polar(body).volume(), n)
    return AffineConstants(c, c_dim(n), n ** (2.0 / (n + 1)) * c * cp)


def G(body, x):
    """c(C, n) kappa(x)^(1/(n+1)) / <x, u(x)> at boundary points x."""
    x = np.asarray(x, dtype=float)
    n = body.dim
    kappa = np.asarray(body.curvature(x))
    hx = np.sum(x * body.normal(x), axis=-1)
    g = affine_constant(body.volume(), n) * kappa ** (1.0 / (n + 1)) / hx
    return g[()] if np.ndim(g) == 0 else g


def _g_on(body, pts):
    try:
        return np.asarray(G(body, pts), dtype=float)
    except UndefinedCurvature:
        out = np.empty(pts.shape[0])
        for i, x in enumerate(pts):
            try:
                out[i] = G(body, x)
            except UndefinedCurvature:
                out[i] = np.inf
        return out


@dataclass(frozen=True)
class GExtrema:
    g_min: float
    g_max: float
    argmin: np.ndarray
    argmax: np.ndarray


def G_extrema(body, grid=None, zero_tol=1e-12):
    """Extrema of G over boundary points on the rays of ``grid``.

    In the plane both extrema are polished by bounded Brent search in the
    angle.  A minimum below ``zero_tol`` is reported as exactly 0.
    """
    u = default_grid(body.dim) if grid is None else np.asarray(grid, dtype=float)
    pts = body.boundary(u)
    g = _g_on(body, pts)
    i, j = int(np.argmin(g)), int(np.argmax(g))
    gmin, gmax, xmin, xmax = float(g[i]), float(g[j]), pts[i], pts[j]
    if body.dim == 2:
        step = 2.0 * math.pi / u.shape[0]

        def at(a):
            return body.boundary(np.array([math.cos(a), math.sin(a)]))

        def polish(k, sign):
            a0 = math.atan2(u[k, 1], u[k, 0])
            with np.errstate(all="ignore"):
                res = minimize_scalar(lambda a: sign * float(_g_on(body, at(a)[None])[0]),
                                      bounds=(a0 - step, a0 + step), method="bounded",
                                      options={"xatol": 1e-12})
            return sign * res.fun, at(res.x)

        if np.isfinite(gmin):
            v, x = polish(i, 1.0)
            if v < gmin:
                gmin, xmin = v, x
        if np.isfinite(gmax):
            v, x = polish(j, -1.0)
            if v > gmax:
                gmax, xmax = v, x
    if gmin < zero_tol:
        gmin = 0.0
    return GExtrema(gmin, gmax, xmin, xmax)


def cone_densities(body, x):
    """(n_S(x), n_{S°}(x)), densities of the normalized cone measures with respect to the surface measure of S.

    n_{S°} is assembled from the polar body: at the dual point the polar radial
    function is evaluated along the normal u(x), and kappa converts the
    surface measure.
    """
    x = np.asarray(x, dtype=float)
    n = body.dim
    u = body.normal(x)
    p = polar(body)
    n_s = np.sum(x * u, axis=-1) / (n * body.volume())
    n_p = np.asarray(p.radial(u)) ** n * np.asarray(body.curvature(x)) / (n * p.volume())
    return n_s, n_p


def cone_identity_residual(body, x):
    """Relative gap between G and c_n (|S| |S°|)^(1/(n+1)) (n_{S°} / n_S)^(1/(n+1)).

    Where both sides vanish (zero curvature) the residual is 0.
    """
    n = body.dim
    n_s, n_p = cone_densities(body, x)
    rhs = c_dim(n) * (body.volume() * polar(body).volume()) ** (1.0 / (n + 1)) * (n_p / n_s) ** (1.0 / (n + 1))
    g = G(body, x)
    scale = np.maximum(np.abs(g), np.abs(rhs))
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.where(scale > 0.0, np.abs(rhs - g) / scale, 0.0)
    return r[()] if r.ndim == 0 else r


def petty_score(body, grid=None):
    """(max - min) / mean of kappa^(1/(n+1)) / <x, u(x)> over the boundary grid."""
    u = default_grid(body.dim) if grid is None else np.asarray(grid, dtype=float)
    x = body.boundary(u)
    with np.errstate(all="ignore"):
        v = np.asarray(body.curvature(x)) ** (1.0 / (body.dim + 1)) / np.sum(x * body.normal(x), axis=-1)
    return float((np.max(v) - np.min(v)) / np.mean(v))


# radial distance -----------------------------------------------------------

def _as_radial(b):
    return b.radial if hasattr(b, "radial") else b


def radial_distance(c1, c2, grid=None, polish=True):
    """d(C1, C2) = sup over u of max(r1/r2, r2/r1).

    ``c1`` and ``c2`` are bodies or vectorized radial functions.  The sup is
    taken on ``grid`` and, in the plane, polished by bounded Brent search
    around the best grid angle.
    """
    f1, f2 = _as_radial(c1), _as_radial(c2)
    dim = c1.dim if hasattr(c1, "dim") else (c2.dim if hasattr(c2, "dim") else 2)
    u = default_grid(dim) if grid is None else np.asarray(grid, dtype=float)
    lr = np.abs(np.log(np.asarray(f1(u), dtype=float) / np.asarray(f2(u), dtype=float)))
    k = int(np.argmax(lr))
    best = float(lr[k])
    if polish and dim == 2:
        step = 2.0 * math.pi / u.shape[0]
        a0 = math.atan2(u[k, 1], u[k, 0])

        def neg(a):
            e = np.array([math.cos(a), math.sin(a)])
            return -abs(math.log(float(f1(e)) / float(f2(e))))

        res = minimize_scalar(neg, bounds=(a0 - step, a0 + step), method="bounded", options={"xatol": 1e-12})
        best = max(best, -res.fun)
    return math.exp(best)


# duality gap ---------------------------------------------------------------

@dataclass
class DualityGap:
    d: float
    delta: float
    delta_prime: float
    flat: bool
    method: str
    diagnostics: dict = field(default_factory=dict)

    def __iter__(self):
        return iter((self.d, self.delta_prime))


def _gap_directions(body, n_dirs):
    if body.dim == 2:
        th = circle_angles(n_dirs)
        u = np.stack([np.cos(th), np.sin(th)], axis=1)
    elif body.dim == 3:
        u = fibonacci_sphere(n_dirs)
    else:
        raise DomainError("duality gaps are computed for n = 2, 3")
    rep, _ = _unique_folded(body, u)
    return rep


class _PolarObjective:
    """rho1 (polar of the floating body) and rho2 (illumination of the polar) on a direction set."""

    def __init__(self, body, delta, u):
        self.body = body
        self.delta = delta
        self.p = polar(body)
        self.set_directions(u)

    def set_directions(self, u):
        self.u = u
        prof = cap_heights(self.body, u, self.delta)
        self.heights = prof.heights
        self.rho1 = 1.0 / (np.asarray(self.body.support(u)) - prof.heights)
        self.rp = np.asarray(self.p.radial(u))
        self._last = None

    def crossing(self):
        """delta'_u at which rho2(u) = rho1(u), from the hat volume of C° at rho1(u) u."""
        t = self.rho1 / self.rp
        return hats(self.p, self.u, t)[0] / self.p.volume()

    def rho2(self, dp):
        g = None if self._last is None else self._last[1]
        t = illumination_dilation(self.p, dp, self.u, guesses=g)
        self._last = (dp, t)
        return t * self.rp

    def sides(self, dp):
        r2 = self.rho2(dp)
        la = np.log(r2 / self.rho1)
        return float(np.max(la)), float(np.max(-la)), la


def _ratio_at(body, p, delta, dp, a):
    e = np.array([math.cos(a), math.sin(a)])
    h = cap_heights(body, e, delta).heights[0]
    r1 = 1.0 / (float(body.support(e)) - h)
    r2 = illumination_dilation(p, dp, e[None])[0] * float(p.radial(e))
    return math.log(r2 / r1)


def _polish_sides(obj, dp, la, step):
    """Continuous maxima of +log(rho2/rho1) and -log(rho2/rho1) near the best grid directions."""
    extra = []
    for sign in (1.0, -1.0):
        k = int(np.argmax(sign * la))
        a0 = math.atan2(obj.u[k, 1], obj.u[k, 0])
        res = minimize_scalar(lambda a: -sign * _ratio_at(obj.body, obj.p, obj.delta, dp, a),
                              bounds=(a0 - step, a0 + step), method="bounded", options={"xatol": 1e-10})
        if -res.fun > sign * la[k] + 1e-15:
            extra.append(res.x)
    return extra


def duality_gap(body, delta, method="polar", n_dirs=None, xtol=1e-13):
    """d_C(delta) and the minimizing delta'.

    ``method="polar"`` solves A(delta') = B(delta') by Brent's method inside the
    bracket [min delta'_u, max delta'_u]; ``method="scan"`` minimizes the
    radial distance between the tabulated floating body and iota body over a
    33-point log scan of [delta^4, delta^(1/4)] followed by golden-section
    refinement.
    """
    _check_delta(delta)
    if method == "scan":
        return _gap_scan(body, delta, n_dirs)
    if method != "polar":
        raise DomainError(f"unknown duality-gap method {method!r}")
    n_dirs = n_dirs or (4096 if body.dim == 2 else 512)
    obj = _PolarObjective(body, delta, _gap_directions(body, n_dirs))
    evals = [0]

    def solve():
        cross = obj.crossing()
        lo, hi = float(np.min(cross)), float(np.max(cross))
        if not (hi > lo * (1.0 + 1e-12)):
            dp = math.sqrt(lo * hi)
            a, b, la = obj.sides(dp)
            return dp, a, b, la, True, (lo, hi)

        def phi(s):
            evals[0] += 1
            a, b, _ = obj.sides(math.exp(s))
            return a - b

        # rounding can put the crossing just outside [lo, hi] when the spread is tiny
        sl, sh = math.log(lo), math.log(hi)
        w = 1e-12
        while phi(sl) > 0.0 or phi(sh) < 0.0:
            if w > 1.0:
                raise SolverError("no balance point for the duality gap", bracket=(lo, hi))
            sl, sh = math.log(lo) - w, math.log(hi) + w
            w *= 10.0
        s = brentq(phi, sl, sh, xtol=xtol, rtol=1e-14, maxiter=200)
        dp = math.exp(s)
        a, b, la = obj.sides(dp)
        return dp, a, b, la, False, (lo, hi)

    dp, a, b, la, flat, bracket = solve()
    if body.dim == 2 and not flat:
        step = 2.0 * math.pi / n_dirs
        extra = _polish_sides(obj, dp, la, step)
        if extra:
            e = np.stack([np.cos(extra), np.sin(extra)], axis=1)
            obj.set_directions(np.concatenate([obj.u, e]))
            dp, a, b, la, flat, bracket = solve()
    d = math.exp(max(a, b, 0.0))
    diag = {"log_A": a, "log_B": b, "bracket": list(bracket), "objective_evaluations": evals[0],
            "directions": int(obj.u.shape[0]),
            "cap_residual_max": None}
    return DualityGap(d, delta, dp, flat, "polar", diag)


def _gap_scan(body, delta, n_dirs):
    from .floating import floating_body
    from .illumination import iota_body
    n_dirs = n_dirs or (4096 if body.dim == 2 else 2048)
    grid = default_grid(body.dim, n_dirs)
    fb = floating_body(body, delta, grid)
    probe = default_grid(body.dim, n_dirs)

    def f(s):
        return math.log(radial_distance(fb, iota_body(body, math.exp(s), grid), probe, polish=False))

    ss = np.linspace(4.0 * math.log(delta), 0.25 * math.log(delta), 33)
    vals = np.array([f(s) for s in ss])
    k = int(np.argmin(vals))
    lo, hi = ss[max(k - 1, 0)], ss[min(k + 1, ss.size - 1)]
    res = minimize_scalar(f, bounds=(lo, hi), method="bounded", options={"xatol": 1e-9})
    best = min(res.fun, vals[k])
    s_best = res.x if res.fun <= vals[k] else ss[k]
    flat = bool(np.ptp(vals[max(k - 1, 0):k + 2]) < 1e-14)
    return DualityGap(math.exp(best), delta, math.exp(s_best), flat, "scan",
                      {"scan_log_delta_prime": ss.tolist(), "scan_log_d": vals.tolist()})


# rate fits ---------------------------------------------------------------

@dataclass(frozen=True)
class CorrectionFit:
    limit: float
    slope: float
    exponent: float
    uncertainty: float
    residual: float


def _fit_fixed(x, y, c):
    a = np.stack([np.ones_like(x), x ** c], axis=1)
    coef, *_ = np.linalg.lstsq(a, y, rcond=None)
    return coef, float(np.sum((a @ coef - y) ** 2))


def _fit(x, y, cmin, cmax):
    cs = np.linspace(cmin, cmax, 96)
    k = int(np.argmin([_fit_fixed(x, y, c)[1] for c in cs]))
    lo, hi = cs[max(k - 1, 0)], cs[min(k + 1, cs.size - 1)]
    res = minimize_scalar(lambda c: _fit_fixed(x, y, c)[1], bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-10})
    c = res.x if res.fun <= _fit_fixed(x, y, cs[k])[1] else cs[k]
    coef, r = _fit_fixed(x, y, c)
    return coef[0], coef[1], c, r


def fit_correction(x, y, cmin=0.02, cmax=2.0):
    """Fit y = a + b x^c with c in [cmin, cmax]; a is the limit at x -> 0.

    The uncertainty is the largest change of a over leave-one-out refits.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 4:
        raise DomainError("a correction fit needs at least 4 points")
    a, b, c, r = _fit(x, y, cmin, cmax)
    loo = []
    for i in range(x.size):
        m = np.arange(x.size) != i
        loo.append(_fit(x[m], y[m], cmin, cmax)[0])
    return CorrectionFit(float(a), float(b), float(c), float(np.max(np.abs(np.array(loo) - a))), r)


@dataclass
class RateEstimate:
    sweep: list
    limit: float
    uncertainty: float
    exponent: float
    scale_exponent: float
    rates: list
    slope: float = 0.0

    def to_dict(self):
        return {"sweep": self.sweep, "limit": self.limit, "uncertainty": self.uncertainty,
                "correction_exponent": self.exponent, "correction_slope": self.slope,
                "scale_exponent": self.scale_exponent, "rates": self.rates}


DEFAULT_SWEEP = (1e-2, 3e-3, 1e-3, 3e-4, 1e-4, 3e-5, 1e-5)


# d - 1 below this is rounding, not geometry
NOISE_GAP = 1e-10


def rate_estimate(body, deltas=DEFAULT_SWEEP, scale_exponent=None, n_dirs=None, method="polar"):
    """Extrapolated limit of (d_C(delta) - 1) / delta^e, by default e = 2/(n+1)."""
    deltas = [float(d) for d in deltas]
    if len(deltas) < 4:
        raise DomainError("a rate estimate needs at least 4 sweep points")
    if any(b >= a for a, b in zip(deltas, deltas[1:])):
        raise DomainError("sweep values must be strictly decreasing")
    e = 2.0 / (body.dim + 1) if scale_exponent is None else scale_exponent
    sweep, rates = [], []
    for dl in deltas:
        g = duality_gap(body, dl, method=method, n_dirs=n_dirs)
        rate = (g.d - 1.0) / dl ** e
        rates.append(rate)
        sweep.append({"delta": dl, "d": g.d, "delta_prime": g.delta_prime, "rate": rate,
                      "flat": g.flat, "diagnostics": g.diagnostics})
    dr = np.diff(rates)
    above_noise = max(r["d"] for r in sweep) - 1.0 > NOISE_GAP
    if above_noise and not (np.all(dr >= 0) or np.all(dr <= 0)):
        warnings.warn("rate sequence is not monotone; the extrapolation may be unreliable", RuntimeWarning)
    if max(abs(r) for r in rates) == 0.0:
        fit = CorrectionFit(0.0, 0.0, 1.0, 0.0, 0.0)
    else:
        fit = fit_correction(deltas, rates)
    return RateEstimate(sweep, fit.limit, fit.uncertainty, fit.exponent, e, rates, fit.slope)


# affine surface area -----------------------------------------------------

@dataclass
class ASAEstimate:
    limit: float
    uncertainty: float
    quadrature: float
    ratios: list
    deltas: list
    exponent: float

    @property
    def relative_error(self):
        return abs(self.limit - self.quadrature) / abs(self.quadrature)


def _g_cone_integral_2d(body):
    vol = body.volume()

    def f(a):
        e = np.array([math.cos(a), math.sin(a)])
        x = body.boundary(e)
        r2 = float(x @ x)
        try:
            g = float(G(body, x))
        except UndefinedCurvature:
            return math.inf
        return g * r2

    quarter = 0.5 * math.pi
    tot = 0.0
    for k in range(4):
        v, _ = integrate.quad(f, k * quarter, (k + 1) * quarter, limit=400, epsabs=1e-13, epsrel=1e-12)
        tot += v
    return tot / (2.0 * vol)


def g_cone_integral(body, n=48):
    """Integral of G with respect to the normalized cone measure of the body."""
    if body.dim == 2:
        return _g_cone_integral_2d(body)

    def f(w):
        x = body.boundary(w)
        return _g_on(body, x.reshape(-1, 3)).reshape(w.shape[:-1]) * np.asarray(body.radial(w)) ** 3

    return sphere_integral(f, n) / (3.0 * body.volume())


def floating_volume(body, delta, n=None):
    """|K_delta|: trapezoid rule in the angle (plane) or the product rule on the sphere."""
    if body.dim == 2:
        n = n or 4096
        th = 2.0 * math.pi * np.arange(n) / n
        u = np.stack([np.cos(th), np.sin(th)], axis=1)
        r = floating_radial_dupin(body, delta, u)
        rk = np.asarray(body.radial(u))
        diff = 0.5 * np.sum((rk - r) * (rk + r)) * (2.0 * math.pi / n)
        return body.volume() - diff, diff
    n = n or 24
    x, wx = np.polynomial.legendre.leggauss(n)
    phi = 2.0 * np.pi * np.arange(2 * n) / (2 * n)
    st = np.sqrt(1.0 - x * x)
    pts = np.stack([st[:, None] * np.cos(phi)[None, :], st[:, None] * np.sin(phi)[None, :],
                    np.broadcast_to(x[:, None], (n, 2 * n))], axis=-1).reshape(-1, 3)
    rf = floating_radial_dupin(body, delta, pts)
    rk = np.asarray(body.radial(pts))
    w = np.repeat(wx, 2 * n) * (np.pi / n)
    diff = float(np.sum(w * (rk ** 3 - rf ** 3)) / 3.0)
    return body.volume() - diff, diff


def affine_surface_area_estimate(body, deltas=DEFAULT_SWEEP, n=None):
    """Extrapolated (|K| - |K_delta|) / (n |K| delta^(2/(n+1))) against the boundary integral of G dn_K."""
    nd = body.dim
    e = 2.0 / (nd + 1)
    deltas = [float(d) for d in deltas]
    ratios = []
    for dl in deltas:
        _, diff = floating_volume(body, dl, n)
        ratios.append(diff / (nd * body.volume() * dl ** e))
    fit = fit_correction(deltas, ratios)
    return ASAEstimate(fit.limit, fit.uncertainty, g_cone_integral(body), ratios, deltas, fit.exponent)


__all__ = [
    "AffineConstants", "GExtrema", "DualityGap", "CorrectionFit", "RateEstimate", "ASAEstimate",
    "DEFAULT_SWEEP", "c_dim", "affine_constants", "G", "G_extrema", "cone_densities",
    "cone_identity_residual", "petty_score", "radial_distance", "duality_gap", "fit_correction",
    "rate_estimate", "g_cone_integral", "floating_volume", "affine_surface_area_estimate",
]
