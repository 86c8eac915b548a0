"""Centrally symmetric convex bodies given by oracles, and their polars.

All oracle methods are vectorized over leading axes: a direction or point
argument of shape ``(..., n)`` returns values of shape ``(...)``.  A single
vector returns a NumPy scalar.
"""

import math
from abc import ABC, abstractmethod
from functools import cached_property

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.spatial import ConvexHull, cKDTree
from scipy.special import gammaln

from . import kernels
from .errors import DomainError, OracleFailure, UndefinedCurvature, UnsupportedOracle

QUAD_TOL = 1e-12


def _vec(u, dim):
    u = np.asarray(u, dtype=float)
    if u.shape[-1] != dim:
        raise DomainError(f"expected vectors of length {dim}, got shape {u.shape}")
    return u


def _out(v):
    v = np.asarray(v, dtype=float)
    return v[()] if v.ndim == 0 else v


def ball_volume(n):
    """Volume of the Euclidean unit ball B_2^n (n = 0 gives 1)."""
    return math.exp(0.5 * n * math.log(math.pi) - gammaln(0.5 * n + 1.0))


def bp_volume(n, p):
    """Volume of the unit l_p ball: 2^n Gamma(1+1/p)^n / Gamma(1+n/p)."""
    if n == 0:
        return 1.0
    return math.exp(n * math.log(2.0) + n * gammaln(1.0 + 1.0 / p) - gammaln(1.0 + n / p))


def affine_constant(volume, n):
    """c(C, n) = ((n+1)^(2/(n+1)) / 2) (|C|_n / |B_2^(n-1)|)^(2/(n+1))."""
    e = 2.0 / (n + 1)
    return 0.5 * (n + 1) ** e * (volume / ball_volume(n - 1)) ** e


def conjugate(p):
    """Hoelder conjugate exponent p' with 1/p + 1/p' = 1."""
    if p <= 1.0:
        raise DomainError(f"exponent must exceed 1, got {p}")
    return p / (p - 1.0)


def curvature_bp(x, p):
    """Gauss curvature of the boundary of B_p^n at boundary points x.

    (p-1)^(n-1) prod|x_i|^(p-2) / (sum |x_i|^(2p-2))^((n+1)/2).  For 1 < p < 2
    the curvature blows up where a coordinate vanishes and an
    :class:`UndefinedCurvature` is raised; for p > 2 it is 0 there.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    ax = np.abs(x)
    if p < 2.0 and np.any(ax == 0.0):
        raise UndefinedCurvature("curvature of B_p with 1 < p < 2 is undefined at zero coordinates")
    num = (p - 1.0) ** (n - 1) * np.prod(ax ** (p - 2.0), axis=-1)
    den = np.sum(ax ** (2.0 * p - 2.0), axis=-1) ** (0.5 * (n + 1))
    return _out(num / den)


def normal_bp(x, p):
    """Outer unit normal of B_p^n at boundary points x."""
    x = np.asarray(x, dtype=float)
    g = np.sign(x) * np.abs(x) ** (p - 1.0)
    return g / np.linalg.norm(g, axis=-1, keepdims=True)


class SymmetricBody(ABC):
    """Oracle interface of a centrally symmetric convex body with 0 inside."""

    dim: int
    symmetry = "central"

    @abstractmethod
    def radial(self, u):
        """r_K(u) = max{t >= 0 : t u in K}."""

    @abstractmethod
    def support(self, u):
        """h_K(u) = max over x in K of <x, u>."""

    @abstractmethod
    def contact(self, u):
        """A boundary point whose outer normal is u."""

    @abstractmethod
    def gauge(self, x):
        """Minkowski functional: 1 / r_K(x)."""

    @abstractmethod
    def gauge_grad(self, x):
        """Gradient of the gauge; parallel to the outer normal on the boundary."""

    @abstractmethod
    def volume(self):
        """|K|_n."""

    @abstractmethod
    def descriptor(self):
        """Serializable description, inverted by :func:`body_from_descriptor`."""

    def normal(self, x):
        g = self.gauge_grad(_vec(x, self.dim))
        return g / np.linalg.norm(g, axis=-1, keepdims=True)

    def curvature(self, x):
        raise UnsupportedOracle(f"{type(self).__name__} has no curvature oracle")

    def boundary(self, u):
        """Boundary point r_K(u) u on the ray through u."""
        u = _vec(u, self.dim)
        return np.asarray(self.radial(u))[..., None] * u

    def kernel(self):
        """``(kind, prm)`` for the planar kernels."""
        raise UnsupportedOracle(f"{type(self).__name__} has no planar kernel")

    def gauge_kernel(self):
        """``(kind, prm)`` for the n-dimensional membership kernels."""
        return self.kernel()

    @cached_property
    def rmax(self):
        """Upper bound for |x| over the body."""
        from .directions import default_grid
        return float(np.max(self.radial(default_grid(self.dim, 1024 if self.dim == 2 else 2048)))) * 1.01

    def __repr__(self):
        return f"{type(self).__name__}({self.descriptor()})"


class BpBall(SymmetricBody):
    """Unit ball of the l_p norm in R^n, 1 < p < inf."""

    def __init__(self, dim, p):
        if int(dim) != dim or dim < 2:
            raise DomainError(f"dimension must be an integer >= 2, got {dim}")
        if not (p > 1.0 and math.isfinite(p)):
            raise DomainError(f"exponent must satisfy 1 < p < inf, got {p}")
        self.dim = int(dim)
        self.p = float(p)
        self.q = conjugate(self.p)
        self.symmetry = "quadrant" if self.dim == 2 else "octant"

    def _norm(self, x, p):
        return np.sum(np.abs(x) ** p, axis=-1) ** (1.0 / p)

    def radial(self, u):
        return _out(1.0 / self._norm(_vec(u, self.dim), self.p))

    def support(self, u):
        return _out(self._norm(_vec(u, self.dim), self.q))

    def contact(self, u):
        u = _vec(u, self.dim)
        h = self._norm(u, self.q)[..., None]
        return np.sign(u) * (np.abs(u) / h) ** (self.q - 1.0)

    def gauge(self, x):
        return _out(self._norm(_vec(x, self.dim), self.p))

    def gauge_grad(self, x):
        x = _vec(x, self.dim)
        g = self._norm(x, self.p)[..., None]
        return np.sign(x) * (np.abs(x) / g) ** (self.p - 1.0)

    def normal(self, x):
        return normal_bp(_vec(x, self.dim), self.p)

    def curvature(self, x):
        return curvature_bp(_vec(x, self.dim), self.p)

    def volume(self):
        return bp_volume(self.dim, self.p)

    def kernel(self):
        if self.dim != 2:
            return super().kernel()
        smooth = float(self.p == round(self.p) and round(self.p) % 2 == 0)
        return kernels.BP, np.array([self.p, smooth])

    def gauge_kernel(self):
        smooth = float(self.p == round(self.p) and round(self.p) % 2 == 0)
        return kernels.BP, np.array([self.p, smooth])

    @property
    def rmax(self):
        return self.dim ** max(0.0, 0.5 - 1.0 / self.p)

    def descriptor(self):
        return {"kind": "bp", "dim": self.dim, "p": self.p}


class Ellipsoid(SymmetricBody):
    """Axis-aligned ellipsoid with the given semi-axes."""

    def __init__(self, semi_axes):
        a = np.asarray(semi_axes, dtype=float)
        if a.ndim != 1 or a.size < 2 or np.any(~(a > 0.0)) or not np.all(np.isfinite(a)):
            raise DomainError(f"semi-axes must be >= 2 positive finite numbers, got {semi_axes}")
        self.axes = a
        self.dim = a.size
        self.symmetry = "quadrant" if self.dim == 2 else "octant"

    def radial(self, u):
        u = _vec(u, self.dim)
        return _out(1.0 / np.sqrt(np.sum((u / self.axes) ** 2, axis=-1)))

    def support(self, u):
        u = _vec(u, self.dim)
        return _out(np.sqrt(np.sum((u * self.axes) ** 2, axis=-1)))

    def contact(self, u):
        u = _vec(u, self.dim)
        h = np.sqrt(np.sum((u * self.axes) ** 2, axis=-1, keepdims=True))
        return self.axes ** 2 * u / h

    def gauge(self, x):
        return _out(np.sqrt(np.sum((_vec(x, self.dim) / self.axes) ** 2, axis=-1)))

    def gauge_grad(self, x):
        x = _vec(x, self.dim)
        g = np.sqrt(np.sum((x / self.axes) ** 2, axis=-1, keepdims=True))
        return x / self.axes ** 2 / g

    def curvature(self, x):
        x = _vec(x, self.dim)
        s = np.sum(x ** 2 / self.axes ** 4, axis=-1)
        return _out(1.0 / (np.prod(self.axes) ** 2 * s ** (0.5 * (self.dim + 1))))

    def volume(self):
        return ball_volume(self.dim) * float(np.prod(self.axes))

    def kernel(self):
        if self.dim != 2:
            return super().kernel()
        return kernels.ELLIPSE, self.axes.copy()

    def gauge_kernel(self):
        return kernels.ELLIPSE, self.axes.copy()

    @property
    def rmax(self):
        return float(np.max(self.axes))

    def descriptor(self):
        return {"kind": "ellipsoid", "dim": self.dim, "axes": self.axes.tolist()}


class RadialGridBody(SymmetricBody):
    """Body given by radial samples on a direction grid.

    Planar grids use a periodic cubic spline in the angle when the samples sit
    on a uniform angular grid (``interpolation="spline"``) and straight edges
    between samples otherwise (``"polygon"``, exact for polygons whose
    vertices are sampled).  Spatial grids interpolate linearly on the
    triangles of the spherical Delaunay triangulation of the directions and
    fall back to inverse-distance weights of the three nearest samples.
    Samples are symmetrized so that the value at -u equals the value at u.
    """

    def __init__(self, directions, radii, interpolation=None):
        d = np.atleast_2d(np.asarray(directions, dtype=float))
        r = np.asarray(radii, dtype=float).ravel()
        if d.shape[0] != r.size:
            raise DomainError("one radius per direction is required")
        if np.any(~np.isfinite(r)) or np.any(r <= 0.0):
            raise OracleFailure("radial samples must be finite and positive")
        d = d / np.linalg.norm(d, axis=1, keepdims=True)
        self.dim = d.shape[1]
        if self.dim == 2:
            self._init_planar(d, r, interpolation)
        elif self.dim == 3:
            self._init_spatial(d, r, interpolation)
        else:
            raise DomainError("grid bodies are supported for n = 2, 3")

    # planar -------------------------------------------------------------
    def _init_planar(self, d, r, interpolation):
        ang = np.mod(np.arctan2(d[:, 1], d[:, 0]), 2.0 * np.pi)
        order = np.argsort(ang)
        ang = ang[order]
        r = r[order]
        n = ang.size
        uniform = n % 2 == 0 and np.allclose(ang, 2.0 * np.pi * np.arange(n) / n, atol=1e-12, rtol=0)
        if interpolation is None:
            interpolation = "spline" if uniform else "polygon"
        if interpolation == "spline":
            if not uniform:
                raise DomainError("spline interpolation needs a uniform angular grid with an even size")
            r = 0.5 * (r + np.roll(r, n // 2))
            ang = 2.0 * np.pi * np.arange(n) / n
            cs = CubicSpline(np.append(ang, 2.0 * np.pi), np.append(r, r[0]), bc_type="periodic")
            self._kind = kernels.SPLINE
            self._prm = np.concatenate([[float(n)], cs.c.ravel()])
        elif interpolation == "polygon":
            ang, r = _symmetrize_polygon(ang, r)
            _check_convex_polygon(ang, r)
            self._kind = kernels.POLYGON
            self._prm = np.concatenate([[float(ang.size)], ang, r])
        else:
            raise DomainError(f"unknown planar interpolation {interpolation!r}")
        self.interpolation = interpolation
        self.angles = ang
        self.radii = r
        self.directions = np.stack([np.cos(ang), np.sin(ang)], axis=1)

    # spatial ------------------------------------------------------------
    def _init_spatial(self, d, r, interpolation):
        if interpolation not in (None, "barycentric"):
            raise DomainError(f"unknown spatial interpolation {interpolation!r}")
        self.interpolation = "barycentric"
        tree = cKDTree(d)
        pair = tree.query(-d, k=1)[1]
        # symmetric closure: average each sample with its antipode when present
        mate = np.linalg.norm(d[pair] + d, axis=1) < 1e-9
        r = np.where(mate, 0.5 * (r + r[pair]), r)
        if not np.all(mate):
            d = np.concatenate([d, -d[~mate]])
            r = np.concatenate([r, r[~mate]])
        self.directions = d
        self.radii = r
        self._tree = cKDTree(d)
        hull = ConvexHull(d)
        self._tri = hull.simplices
        self._inv = np.linalg.inv(np.transpose(d[self._tri], (0, 2, 1)))
        vf = [[] for _ in range(d.shape[0])]
        for f, s in enumerate(self._tri):
            for v in s:
                vf[v].append(f)
        width = max(len(x) for x in vf)
        self._vfac = np.array([x + [x[0]] * (width - len(x)) for x in vf])

    def _radial3(self, u):
        shape = u.shape[:-1]
        w = u.reshape(-1, 3)
        w = w / np.linalg.norm(w, axis=1, keepdims=True)
        out = np.empty(w.shape[0])
        dist, near = self._tree.query(w, k=3)
        cand = self._vfac[near[:, 0]]
        lam = np.einsum("qfij,qj->qfi", self._inv[cand], w)
        ok = np.all(lam >= -1e-12, axis=2)
        has = ok.any(axis=1)
        best = np.argmax(ok, axis=1)
        fac = cand[np.arange(w.shape[0]), best]
        lb = lam[np.arange(w.shape[0]), best]
        lb = lb / lb.sum(axis=1, keepdims=True)
        out[:] = np.sum(lb * self.radii[self._tri[fac]], axis=1)
        if not has.all():
            miss = ~has
            wt = 1.0 / np.maximum(dist[miss], 1e-15)
            out[miss] = np.sum(wt * self.radii[near[miss]], axis=1) / wt.sum(axis=1)
        return out.reshape(shape)

    # oracles --------------------------------------------------------------
    def radial(self, u):
        u = _vec(u, self.dim)
        if self.dim == 3:
            return _out(self._radial3(u))
        th = np.arctan2(u[..., 1], u[..., 0])
        r = kernels.radial(self._kind, self._prm, th.ravel())[:, 0].reshape(th.shape)
        return _out(r / np.linalg.norm(u, axis=-1))

    def support(self, u):
        u = _vec(u, self.dim)
        if self.dim == 3:
            pts = self.radii[:, None] * self.directions
            return _out(np.max(u @ pts.T, axis=-1))
        th = np.arctan2(u[..., 1], u[..., 0])
        h = kernels.support(self._kind, self._prm, th.ravel())[:, 0].reshape(th.shape)
        return _out(h * np.linalg.norm(u, axis=-1))

    def contact(self, u):
        u = _vec(u, self.dim)
        if self.dim == 3:
            pts = self.radii[:, None] * self.directions
            return pts[np.argmax(u @ pts.T, axis=-1)]
        th = np.arctan2(u[..., 1], u[..., 0])
        tc = kernels.support(self._kind, self._prm, th.ravel())[:, 1].reshape(th.shape)
        e = np.stack([np.cos(tc), np.sin(tc)], axis=-1)
        return np.asarray(self.radial(e))[..., None] * e

    def gauge(self, x):
        x = _vec(x, self.dim)
        n = np.linalg.norm(x, axis=-1)
        with np.errstate(invalid="ignore", divide="ignore"):
            e = x / n[..., None]
        return _out(np.where(n > 0, n / np.asarray(self.radial(np.where(n[..., None] > 0, e, 1.0))), 0.0))

    def gauge_grad(self, x):
        if self.dim != 2:
            raise UnsupportedOracle("normals of spatial grid bodies are not available")
        x = _vec(x, self.dim)
        th = np.arctan2(x[..., 1], x[..., 0])
        rd = kernels.radial(self._kind, self._prm, th.ravel())
        r = rd[:, 0].reshape(th.shape)[..., None]
        dr = rd[:, 1].reshape(th.shape)[..., None]
        e = np.stack([np.cos(th), np.sin(th)], axis=-1)
        ep = np.stack([-np.sin(th), np.cos(th)], axis=-1)
        return (e - dr / r * ep) / r

    def curvature(self, x):
        raise UnsupportedOracle("curvature is not available for tabulated bodies")

    @cached_property
    def _volume(self):
        if self.dim == 2:
            return kernels.area(self._kind, self._prm, QUAD_TOL)[0]
        return sphere_integral(lambda w: np.asarray(self.radial(w)) ** 3 / 3.0, 96)

    def volume(self):
        return self._volume

    def kernel(self):
        if self.dim != 2:
            return super().kernel()
        return self._kind, self._prm

    def gauge_kernel(self):
        return self.kernel()

    @property
    def rmax(self):
        return float(np.max(self.radii)) * (1.0 + 1e-3)

    def convexity_defect(self):
        """Largest distance by which a sample lies outside the chord of its neighbours.

        Planar grids only; 0 for a convex sample polygon.
        """
        if self.dim != 2:
            raise UnsupportedOracle("convexity defect is computed for planar grids")
        pts = self.radii[:, None] * self.directions
        prev = np.roll(pts, 1, axis=0)
        nxt = np.roll(pts, -1, axis=0)
        t = nxt - prev
        cr = t[:, 0] * (pts[:, 1] - prev[:, 1]) - t[:, 1] * (pts[:, 0] - prev[:, 0])
        return float(max(0.0, np.max(cr / np.linalg.norm(t, axis=1))))

    def descriptor(self):
        return {"kind": "grid", "dim": self.dim, "interpolation": self.interpolation,
                "samples": np.column_stack([self.directions, self.radii]).tolist()}

    @classmethod
    def from_polygon(cls, vertices):
        """Planar polygon through the given vertices (they must surround 0)."""
        v = np.asarray(vertices, dtype=float)
        r = np.linalg.norm(v, axis=1)
        return cls(v / r[:, None], r, interpolation="polygon")

    @classmethod
    def sample(cls, body, n=None, interpolation=None):
        """Grid body from the radial function of ``body`` on the default grid."""
        from .directions import default_grid
        d = default_grid(body.dim, n)
        return cls(d, body.radial(d), interpolation)


def _symmetrize_polygon(ang, r):
    a2 = np.mod(np.concatenate([ang, ang + np.pi]), 2.0 * np.pi)
    r2 = np.concatenate([r, r])
    order = np.argsort(a2, kind="stable")
    a2 = a2[order]
    r2 = r2[order]
    keep = np.ones(a2.size, dtype=bool)
    keep[1:] = np.diff(a2) > 1e-12
    if a2.size > 1 and a2[-1] - a2[0] > 2.0 * np.pi - 1e-12:
        keep[-1] = False
    return a2[keep], r2[keep]


def _check_convex_polygon(ang, r):
    pts = np.stack([r * np.cos(ang), r * np.sin(ang)], axis=1)
    e = np.roll(pts, -1, axis=0) - pts
    turn = e[:, 0] * np.roll(e, -1, axis=0)[:, 1] - e[:, 1] * np.roll(e, -1, axis=0)[:, 0]
    # collinear samples of a convex boundary give turns at rounding level
    if np.any(turn < -1e-10 * np.max(r) ** 2):
        raise DomainError("polygon vertices and their reflections must bound a convex polygon")


def sphere_integral(f, n=64):
    """Integral of f over S^2: Gauss-Legendre in cos(polar angle), trapezoid in azimuth."""
    x, w = np.polynomial.legendre.leggauss(n)
    phi = 2.0 * np.pi * np.arange(2 * n) / (2 * n)
    st = np.sqrt(1.0 - x * x)
    pts = np.stack([st[:, None] * np.cos(phi)[None, :], st[:, None] * np.sin(phi)[None, :],
                    np.broadcast_to(x[:, None], (n, 2 * n))], axis=-1)
    return float(np.sum(w[:, None] * f(pts)) * (2.0 * np.pi / (2 * n)))


def polar(body):
    """Polar body: radial function 1/h_K and support function 1/r_K."""
    if isinstance(body, BpBall):
        return BpBall(body.dim, body.q)
    if isinstance(body, Ellipsoid):
        return Ellipsoid(1.0 / body.axes)
    if isinstance(body, RadialGridBody):
        h = np.asarray(body.support(body.directions))
        if np.any(~np.isfinite(h)) or np.any(h <= 0.0):
            raise OracleFailure("support function is not finite and positive on the grid")
        interp = body.interpolation
        if interp == "polygon":
            # the polar of a polygon is a polygon with vertices dual to the edges
            return _polar_polygon(body)
        return RadialGridBody(body.directions, 1.0 / h, interp)
    raise UnsupportedOracle(f"no polar construction for {type(body).__name__}")


def _polar_polygon(body):
    pts = body.radii[:, None] * body.directions
    nxt = np.roll(pts, -1, axis=0)
    # edge line <x, n> = 1 gives the polar vertex n
    cr = pts[:, 0] * nxt[:, 1] - pts[:, 1] * nxt[:, 0]
    nv = np.stack([nxt[:, 1] - pts[:, 1], pts[:, 0] - nxt[:, 0]], axis=1) / cr[:, None]
    if np.any(~np.isfinite(nv)):
        raise OracleFailure("degenerate polygon edge")
    return RadialGridBody.from_polygon(nv)


def body_from_descriptor(desc):
    """Inverse of ``descriptor()``."""
    kind = desc.get("kind")
    if kind == "bp":
        return BpBall(int(desc["dim"]), float(desc["p"]))
    if kind == "ellipsoid":
        axes = desc["axes"]
        if "dim" in desc and len(axes) != int(desc["dim"]):
            raise DomainError("axes length does not match dim")
        return Ellipsoid(axes)
    if kind == "grid":
        s = np.asarray(desc["samples"], dtype=float)
        return RadialGridBody(s[:, :-1], s[:, -1], desc.get("interpolation"))
    raise DomainError(f"unknown body kind {kind!r}")
