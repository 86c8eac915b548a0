"""Volumes, caps, section barycenters, hull-with-a-point volumes, Monte Carlo.

Planar quantities come from one-dimensional integrals in the polar angle;
spatial ones from two-dimensional integrals in pole-centred spherical
coordinates (see :mod:`floatdual.kernels._np3d`).
"""

import warnings
from dataclasses import dataclass

import numpy as np

from . import kernels
from .bodies import BpBall, Ellipsoid
from .directions import UnitDirection
from .errors import AccuracyError, DomainError, UnsupportedOracle
from .kernels import _np3d

TOL_2D = 1e-12
TOL_3D = 1e-9


@dataclass(frozen=True)
class CapSpec:
    """The cap {x in K : <x, u> >= h_K(u) - height}."""

    direction: UnitDirection
    height: float

    def __post_init__(self):
        if not isinstance(self.direction, UnitDirection):
            object.__setattr__(self, "direction", UnitDirection.of(self.direction))
        if not (self.height >= 0.0):
            raise DomainError(f"cap height must be >= 0, got {self.height}")


@dataclass(frozen=True)
class MCResult:
    estimate: float
    stderr: float
    hits: int
    samples: int


def _dirs(u, dim):
    u = np.atleast_2d(np.asarray(u, dtype=float))
    if u.shape[1] != dim:
        raise DomainError(f"expected {dim}-vectors, got shape {u.shape}")
    return u / np.linalg.norm(u, axis=1, keepdims=True)


def volume(body, tol=TOL_2D, return_error=False):
    """|K|_n; closed forms for l_p balls and ellipsoids, quadrature otherwise."""
    if isinstance(body, (BpBall, Ellipsoid)):
        v, err = body.volume(), 0.0
    elif body.dim == 2:
        v, err = kernels.area(*body.kernel(), tol)
    else:
        v, err = body.volume(), float("nan")
    return (v, err) if return_error else v


def caps(body, directions, heights, tol=None):
    """Vectorized caps: (volumes, section measures, section barycenters, errors).

    The section measure is the chord length in the plane and the section area
    in space; it is the derivative of the cap volume in the height.
    """
    u = _dirs(directions, body.dim)
    heights = np.broadcast_to(np.asarray(heights, dtype=float), u.shape[:1])
    if np.any(heights < 0.0):
        raise DomainError("cap heights must be nonnegative")
    if body.dim == 2:
        kind, prm = body.kernel()
        out = kernels.cap_eval(kind, prm, body.volume(), np.arctan2(u[:, 1], u[:, 0]), heights,
                               TOL_2D if tol is None else tol)
        return out[:, 0], out[:, 1], out[:, 2:4], out[:, 4]
    if body.dim == 3:
        v, a, b = _np3d.cap(body, u, heights)
        return v, a, b, np.full(v.shape, np.nan)
    raise DomainError("caps are computed for n = 2, 3")


def cap_volume(body, cap, tol=None):
    """Volume of the cap; monotone in the height, |K|/2 at height h_K(u)."""
    u = np.asarray(cap.direction.coords)
    h = float(body.support(u))
    if cap.height > 2.0 * h * (1.0 + 1e-12):
        raise DomainError(f"cap height {cap.height} exceeds the width 2 h_K(u) = {2.0 * h}")
    v, _, _, err = caps(body, u, min(cap.height, 2.0 * h), tol)
    limit = TOL_2D if tol is None else tol
    if body.dim == 2 and err[0] > limit:
        raise AccuracyError(f"cap quadrature reached {err[0]:.3e} > {limit:.1e}", achieved=float(err[0]))
    return float(v[0])


def section_barycenter(body, cap):
    """Barycenter of K intersected with the hyperplane <x, u> = h_K(u) - height."""
    u = np.asarray(cap.direction.coords)
    h = float(body.support(u))
    if not (0.0 < cap.height < 2.0 * h):
        raise DomainError("the section is empty or degenerate unless 0 < height < 2 h_K(u)")
    _, _, b, _ = caps(body, u, cap.height)
    return b[0]


def hats(body, apex_dirs, ts, tol=None):
    """Vectorized |conv[K, y]| - |K| for apices y = t r_K(v) v: (volumes, d/dt, errors)."""
    v = _dirs(apex_dirs, body.dim)
    ts = np.broadcast_to(np.asarray(ts, dtype=float), v.shape[:1])
    if body.dim == 2:
        kind, prm = body.kernel()
        out = kernels.hat_eval(kind, prm, np.arctan2(v[:, 1], v[:, 0]), ts, TOL_2D if tol is None else tol)
        return out[:, 0], out[:, 1], out[:, 2]
    if body.dim == 3:
        a, da = _np3d.hat(body, v, ts)
        return a, da, np.full(a.shape, np.nan)
    raise DomainError("hull volumes are computed for n = 2, 3")


def hull_point_volume(body, x, tol=None):
    """|conv[K, x]|_n for x outside K, by the boundary integral over the visible part.

    The integrand <x - y, u(y)> vanishes on the tangency locus, which is
    located by root finding before integrating.
    """
    x = np.asarray(x, dtype=float)
    nx = float(np.linalg.norm(x))
    if nx == 0.0:
        raise DomainError("the apex must lie outside the body")
    v = x / nx
    r = float(body.radial(v))
    t = nx / r
    if t <= 1.0:
        raise DomainError(f"apex lies inside the body (|x| / r_K = {t:.6g})")
    a, _, err = hats(body, v, t, tol)
    limit = TOL_2D if tol is None else tol
    if body.dim == 2 and err[0] > limit:
        raise AccuracyError(f"hat quadrature reached {err[0]:.3e} > {limit:.1e}", achieved=float(err[0]))
    return body.volume() + float(a[0])


def mc_volume(member, lo, hi, samples=10 ** 7, seed=0x5EED, shards=1, chunk=10 ** 6):
    """Monte-Carlo volume of {member(z)} inside the box [lo, hi].

    Points come from Philox counter-based generators, one per shard, derived
    from ``seed``; the result is fixed by (seed, shards, samples).
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    box = float(np.prod(hi - lo))
    if box <= 0.0:
        raise DomainError("empty bounding box")
    samples = int(samples)
    per = [samples // shards + (1 if i < samples % shards else 0) for i in range(shards)]
    hits = 0
    for ss, count in zip(np.random.SeedSequence(seed).spawn(shards), per):
        rng = np.random.Generator(np.random.Philox(ss))
        left = count
        while left > 0:
            m = min(chunk, left)
            z = lo + (hi - lo) * rng.random((m, lo.size))
            hits += int(np.count_nonzero(member(z)))
            left -= m
    frac = hits / samples
    if hits == 0:
        warnings.warn("Monte-Carlo estimate has no hits; the estimate is degenerate", RuntimeWarning)
    return MCResult(box * frac, box * np.sqrt(frac * (1.0 - frac) / samples), hits, samples)


def body_membership(body):
    kind, prm = body.gauge_kernel()
    return lambda z: kernels.gauge_mask(kind, prm, z)


def hull_membership(body, x):
    """Membership test of conv[K, x], independent of the quadrature code paths."""
    try:
        kind, prm = body.gauge_kernel()
    except UnsupportedOracle:
        raise
    y = np.asarray(x, dtype=float)
    rmax = body.rmax
    return lambda z: kernels.hull_mask(kind, prm, y, z, rmax)


def hull_box(body, x):
    """Axis-aligned box containing conv[K, x]."""
    x = np.asarray(x, dtype=float)
    ext = np.asarray(body.support(np.eye(body.dim)), dtype=float)
    return np.minimum(-ext, x), np.maximum(ext, x)
