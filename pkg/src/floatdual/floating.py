"""Convex floating bodies.

Two constructions are provided and cross-checked against each other:

* the halfspace envelope, r_{K_delta}(v) = min over u with <u, v> > 0 of
  (h_K(u) - Delta_u(delta)) / <u, v>;
* Dupin's construction, whose boundary points are the barycenters of the
  cutting sections (it coincides with the envelope for symmetric bodies).

Dupin's construction is the default: in the plane it is a one-dimensional
root find per direction, with no grid minimization involved.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from . import kernels
from .bodies import RadialGridBody
from .directions import UnitDirection, default_grid, fold
from .errors import DomainError, SolverError
from .kernels import _np3d
from .measure import caps

RTOL = 1e-12
TOL_2D = 1e-12


@dataclass
class HeightProfile:
    """Cap heights Delta_u(delta) with solver diagnostics, one row per direction."""

    delta: float
    directions: np.ndarray
    heights: np.ndarray
    iterations: np.ndarray
    residuals: np.ndarray
    volume: float
    status: np.ndarray = field(default=None)
    barycenters: np.ndarray = field(default=None)

    @property
    def entries(self):
        return [(UnitDirection.of(u), float(h), int(i), float(r))
                for u, h, i, r in zip(self.directions, self.heights, self.iterations, self.residuals)]

    @property
    def max_relative_residual(self):
        return float(np.max(np.abs(self.residuals))) / self.volume


def _check_delta(delta):
    if not (0.0 < delta <= 0.5):
        raise DomainError(f"volume fraction must lie in (0, 1/2], got {delta}")


def _unique_folded(body, u):
    """Fold directions into the symmetry domain; returns (representatives, inverse index)."""
    f = fold(u, getattr(body, "symmetry", None))
    key = np.round(f, 14)
    _, first, inv = np.unique(key, axis=0, return_index=True, return_inverse=True)
    return f[first], inv.ravel()


def _fold_signs(u, symmetry):
    """Signs s with u = s * fold(u) componentwise; they map folded points back."""
    if symmetry in ("quadrant", "octant"):
        return np.where(u < 0.0, -1.0, 1.0)
    if symmetry == "central":
        return np.where(u[:, -1:] < 0.0, -1.0, 1.0) * np.ones_like(u)
    return np.ones_like(u)


def cap_heights(body, directions, delta, rtol=RTOL):
    """Delta_u(delta) for every row of ``directions``."""
    _check_delta(delta)
    u = np.atleast_2d(np.asarray(directions, dtype=float))
    u = u / np.linalg.norm(u, axis=1, keepdims=True)
    vol = body.volume()
    rep, inv = _unique_folded(body, u)
    bary = None
    if body.dim == 2:
        kind, prm = body.kernel()
        out = kernels.cap_height(kind, prm, vol, np.arctan2(rep[:, 1], rep[:, 0]), delta * vol, rtol, TOL_2D)
        d, it, res, st = out.T
    elif body.dim == 3:
        # the last volume evaluation also yields the section barycenter
        d, it, res, st, b = _np3d.cap_height(body, rep, delta * vol, rtol, barycenters=True)
        bary = b[inv] * _fold_signs(u, getattr(body, "symmetry", None))
    else:
        raise DomainError("cap heights are computed for n = 2, 3")
    if np.any(st != 0.0):
        bad = int(np.argmax(st != 0.0))
        h = float(body.support(rep[bad]))
        raise SolverError(f"cap height did not converge for u = {rep[bad]}", bracket=(0.0, h))
    return HeightProfile(delta, u, d[inv], it[inv].astype(int), res[inv], vol, st[inv], bary)


def cap_height(body, u, delta, rtol=RTOL):
    """Depth of the cap of volume delta |K| with outer normal u."""
    return float(cap_heights(body, np.asarray(u, dtype=float), delta, rtol).heights[0])


# Dupin ---------------------------------------------------------------------

def floating_boundary_dupin(body, delta, u):
    """Barycenter of the section cutting off delta |K| in direction u; a point of the boundary of K_delta."""
    bary, _ = dupin_points(body, u, delta)
    return bary[0] if np.ndim(u) == 1 else bary


def dupin_points(body, directions, delta):
    """Dupin points for every row of ``directions`` (cap normals)."""
    prof = cap_heights(body, directions, delta)
    if prof.barycenters is not None:
        return prof.barycenters, prof
    _, _, bary, _ = caps(body, prof.directions, prof.heights)
    return bary, prof


def _tangent_frame(v):
    ref = np.where(np.abs(v[:, :1]) < 0.9, np.array([[1.0, 0.0, 0.0]]), np.array([[0.0, 1.0, 0.0]]))
    e1 = np.cross(v, ref)
    e1 /= np.linalg.norm(e1, axis=1, keepdims=True)
    return e1, np.cross(v, e1)


def _dupin_radial_3d(body, v, delta, tol=1e-12, floor=1e-9, maxit=40, eps=1e-6):
    """Invert the Dupin map u -> b(u)/|b(u)| by Newton steps with a finite-difference Jacobian.

    The start is the normal of K at the boundary point on the ray through v.
    A row also stops once its residual is below ``floor`` and no longer
    halves: near flat points the cap quadrature noise sits above ``tol``.
    """
    e1, e2 = _tangent_frame(v)
    u = body.normal(body.boundary(v))
    r = np.empty(v.shape[0])
    idx = np.arange(v.shape[0])
    prev = np.full(v.shape[0], np.inf)
    for _ in range(maxit):
        m = idx.size
        ua = u[idx]
        f1, f2 = _tangent_frame(ua)
        probe = np.concatenate([ua, ua + eps * f1, ua + eps * f2])
        b, _ = dupin_points(body, probe, delta)
        nb = np.linalg.norm(b, axis=1)
        bh = b / nb[:, None]
        r[idx] = nb[:m]
        dv = bh - np.tile(v[idx], (3, 1))
        res = np.stack([np.sum(dv * np.tile(e[idx], (3, 1)), axis=1) for e in (e1, e2)], axis=1)
        err = np.linalg.norm(bh[:m] - v[idx], axis=1)
        done = (err < tol) | ((err < floor) & (err > 0.5 * prev[idx]))
        prev[idx] = err
        if done.all():
            return r
        f0 = res[:m]
        jac = np.stack([(res[m:2 * m] - f0) / eps, (res[2 * m:] - f0) / eps], axis=2)
        step = np.linalg.solve(jac, -f0[..., None])[..., 0]
        un = ua + step[:, :1] * f1 + step[:, 1:] * f2
        u[idx] = un / np.linalg.norm(un, axis=1, keepdims=True)
        idx = idx[~done]
    raise SolverError("Dupin inversion did not converge", bracket=None)


def floating_radial_dupin(body, delta, directions, rtol=RTOL):
    """r_{K_delta}(v) from the Dupin point lying on the ray through v."""
    _check_delta(delta)
    v = np.atleast_2d(np.asarray(directions, dtype=float))
    v = v / np.linalg.norm(v, axis=1, keepdims=True)
    rep, inv = _unique_folded(body, v)
    if body.dim == 2:
        kind, prm = body.kernel()
        out = kernels.floating_radial(kind, prm, body.volume(), np.arctan2(rep[:, 1], rep[:, 0]),
                                      delta * body.volume(), rtol, TOL_2D)
        if np.any(out[:, 3] != 0.0):
            raise SolverError("Dupin point search failed", bracket=None)
        return out[inv, 0]
    if body.dim == 3:
        return _dupin_radial_3d(body, rep, delta)[inv]
    raise DomainError("floating bodies are computed for n = 2, 3")


# envelope ------------------------------------------------------------------

def _envelope_2d(body, delta, v, n_grid):
    kind, prm = body.kernel()
    vol = body.volume()
    phis = 2.0 * math.pi * np.arange(n_grid) / n_grid
    grid_u = np.stack([np.cos(phis), np.sin(phis)], axis=1)
    dgrid = cap_heights(body, grid_u, delta).heights
    hgrid = np.asarray(body.support(grid_u))

    def obj(phi):
        d = kernels.cap_height(kind, prm, vol, phi, delta * vol, RTOL, TOL_2D)[0, 0]
        h = kernels.support(kind, prm, phi)[0, 0]
        return (h - d) / math.cos(phi - thv)

    step = 2.0 * math.pi / n_grid
    out = np.empty(v.shape[0])
    for i, w in enumerate(v):
        thv = math.atan2(w[1], w[0])
        c = grid_u @ w
        f = np.where(c > 1e-3, (hgrid - dgrid) / np.where(c > 1e-3, c, 1.0), np.inf)
        k = int(np.argmin(f))
        res = minimize_scalar(obj, bounds=(phis[k] - step, phis[k] + step), method="bounded",
                              options={"xatol": 1e-11})
        out[i] = min(res.fun, f[k])
    return out


def _envelope_3d(body, delta, v, n_grid):
    vol = body.volume()
    grid_u = default_grid(3, n_grid)
    dgrid = cap_heights(body, grid_u, delta).heights
    hgrid = np.asarray(body.support(grid_u))
    out = np.empty(v.shape[0])
    for i, w in enumerate(v):
        c = grid_u @ w
        f = np.where(c > 1e-3, (hgrid - dgrid) / np.where(c > 1e-3, c, 1.0), np.inf)
        k = int(np.argmin(f))
        u0 = grid_u[k]
        a = np.cross(u0, [1.0, 0.0, 0.0] if abs(u0[0]) < 0.9 else [0.0, 1.0, 0.0])
        a /= np.linalg.norm(a)
        b = np.cross(u0, a)

        def obj(s, u0=u0, a=a, b=b, w=w):
            u = u0 + s[0] * a + s[1] * b
            u = u / np.linalg.norm(u)
            cu = float(u @ w)
            if cu <= 1e-3:
                return np.inf
            d = _np3d.cap_height(body, u[None], delta * vol, RTOL)[0][0]
            return (float(body.support(u)) - d) / cu

        res = minimize(obj, np.zeros(2), method="Nelder-Mead",
                       options={"xatol": 1e-7, "fatol": 1e-12, "initial_simplex": [[0, 0], [0.02, 0], [0, 0.02]]})
        out[i] = min(res.fun, f[k])
    return out


def floating_radial_envelope(body, delta, directions, n_grid=None):
    """r_{K_delta}(v) as the minimum over halfspaces cutting off delta |K|.

    The minimum is located on a direction grid and polished by bounded Brent
    minimization (plane) or Nelder-Mead on a tangent chart (space).
    """
    _check_delta(delta)
    v = np.atleast_2d(np.asarray(directions, dtype=float))
    v = v / np.linalg.norm(v, axis=1, keepdims=True)
    if body.dim == 2:
        out = _envelope_2d(body, delta, v, 4096 if n_grid is None else n_grid)
    elif body.dim == 3:
        out = _envelope_3d(body, delta, v, 2048 if n_grid is None else n_grid)
    else:
        raise DomainError("floating bodies are computed for n = 2, 3")
    return float(out[0]) if np.ndim(directions) == 1 else out


def floating_radial(body, delta, directions, method="dupin"):
    if method == "dupin":
        r = floating_radial_dupin(body, delta, directions)
        return float(r[0]) if np.ndim(directions) == 1 else r
    if method == "envelope":
        return floating_radial_envelope(body, delta, directions)
    raise DomainError(f"unknown floating-body method {method!r}")


def floating_body(body, delta, grid=None, method="dupin"):
    """K_delta tabulated on a direction grid as a :class:`RadialGridBody`."""
    if grid is None:
        grid = default_grid(body.dim, 4096 if body.dim == 2 else 2048)
    grid = np.asarray(grid, dtype=float)
    return RadialGridBody(grid, floating_radial(body, delta, grid, method))


# sandwich ------------------------------------------------------------------

@dataclass(frozen=True)
class GammaBounds:
    gamma_min: float
    gamma_max: float
    argmin: np.ndarray
    argmax: np.ndarray

    def __iter__(self):
        return iter((self.gamma_min, self.gamma_max))


def _gamma_at(body, delta, u):
    u = np.atleast_2d(u)
    u = u / np.linalg.norm(u, axis=1, keepdims=True)
    return float(cap_heights(body, u, delta).heights[0] / float(body.support(u[0])))


def _polish_gamma(body, delta, u0, sign, step):
    """Local minimum of sign * Gamma around the grid direction u0."""
    if body.dim == 2:
        a0 = math.atan2(u0[1], u0[0])
        res = minimize_scalar(lambda a: sign * _gamma_at(body, delta, [math.cos(a), math.sin(a)]),
                              bounds=(a0 - step, a0 + step), method="bounded", options={"xatol": 1e-10})
        return sign * res.fun, np.array([math.cos(res.x), math.sin(res.x)])
    e1, e2 = _tangent_frame(u0[None])

    def at(z):
        w = u0 + z[0] * e1[0] + z[1] * e2[0]
        return w / np.linalg.norm(w)

    res = minimize(lambda z: sign * _gamma_at(body, delta, at(z)), np.zeros(2), method="Nelder-Mead",
                   options={"xatol": 1e-7, "fatol": 1e-15,
                            "initial_simplex": [[0.0, 0.0], [step, 0.0], [0.0, step]]})
    return sign * res.fun, at(res.x)


def gamma_bounds(body, delta, grid=None, profile=None):
    """Extrema of Delta_x(delta) / <x, u(x)> over boundary points, indexed by their normals.

    With x the contact point of normal u, <x, u(x)> = h_K(u).  The best grid
    directions are refined by a local search.  A ``profile`` of heights at
    ``delta`` already computed by the caller replaces the grid.
    """
    if profile is not None:
        if profile.delta != delta:
            raise DomainError(f"height profile is for delta = {profile.delta}, not {delta}")
        prof = profile
    else:
        if grid is None:
            grid = default_grid(body.dim, 4096 if body.dim == 2 else 2048)
        prof = cap_heights(body, grid, delta)
    u = prof.directions
    g = prof.heights / np.asarray(body.support(prof.directions))
    i, j = int(np.argmin(g)), int(np.argmax(g))
    gmin, gmax, umin, umax = float(g[i]), float(g[j]), prof.directions[i], prof.directions[j]
    # spacing of the grid: 2 pi / N on the circle, about sqrt(4 pi / N) on the sphere
    step = 2.0 * math.pi / u.shape[0] if body.dim == 2 else math.sqrt(4.0 * math.pi / u.shape[0])
    if gmax > gmin * (1.0 + 1e-12):
        v, w = _polish_gamma(body, delta, umin, 1.0, step)
        if v < gmin:
            gmin, umin = v, w
        v, w = _polish_gamma(body, delta, umax, -1.0, step)
        if v > gmax:
            gmax, umax = v, w
    return GammaBounds(gmin, gmax, umin, umax)


def sandwich_violations(body, delta, directions, radii=None, grid=None, tol=1e-10, profile=None):
    """Count directions where (1 - G_max) r_K <= r_{K_delta} <= (1 - G_min) r_K fails by more than tol.

    ``radii`` are floating-body radial values along ``directions``; if omitted
    they are computed by Dupin's construction.  ``grid`` and ``profile`` are
    passed to ``gamma_bounds``.
    """
    gb = gamma_bounds(body, delta, grid, profile)
    v = np.atleast_2d(np.asarray(directions, dtype=float))
    rk = np.asarray(body.radial(v))
    r = floating_radial_dupin(body, delta, v) if radii is None else np.asarray(radii)
    lo = (1.0 - gb.gamma_max) * rk
    hi = (1.0 - gb.gamma_min) * rk
    bad = (r < lo * (1.0 - tol)) | (r > hi * (1.0 + tol))
    return int(np.count_nonzero(bad)), gb


__all__ = [
    "HeightProfile", "GammaBounds", "cap_height", "cap_heights", "dupin_points",
    "floating_boundary_dupin", "floating_radial", "floating_radial_dupin",
    "floating_radial_envelope", "floating_body", "gamma_bounds", "sandwich_violations",
]
