"""Unit directions and deterministic direction grids."""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class UnitDirection:
    """A Euclidean unit vector; construction fails if the norm is off by > 1e-12."""

    coords: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=float).copy()
        c.setflags(write=False)
        if c.ndim != 1 or c.size < 2:
            raise DomainError("a direction is a vector of length >= 2")
        if abs(np.linalg.norm(c) - 1.0) > 1e-12:
            raise DomainError(f"not a unit vector: norm {np.linalg.norm(c)!r}")
        object.__setattr__(self, "coords", c)

    @classmethod
    def of(cls, v):
        v = np.asarray(v, dtype=float)
        n = np.linalg.norm(v)
        if not np.isfinite(n) or n == 0.0:
            raise DomainError("cannot normalize a zero or non-finite vector")
        return cls(v / n)

    @classmethod
    def at_angle(cls, theta):
        return cls(np.array([np.cos(theta), np.sin(theta)]))

    @property
    def dim(self):
        return self.coords.size

    @property
    def angle(self):
        if self.dim != 2:
            raise DomainError("angle is defined for planar directions only")
        return float(np.arctan2(self.coords[1], self.coords[0]))

    def __neg__(self):
        return UnitDirection(-self.coords)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.coords, dtype=dtype)


def circle_angles(n=4096, symmetry=None):
    """Uniform angles 2 pi k / n.

    ``symmetry="quadrant"`` keeps the n/4 + 1 angles in [0, pi/2] (bodies
    symmetric in both axes), ``"central"`` the n/2 angles in [0, pi).
    """
    if n < 4 or n % 4:
        raise DomainError("circle grids need a positive multiple of 4 points")
    k = np.arange(n)
    if symmetry == "quadrant":
        k = k[: n // 4 + 1]
    elif symmetry == "central":
        k = k[: n // 2]
    return 2.0 * np.pi * k / n


def circle_grid(n=4096):
    t = circle_angles(n)
    return np.stack([np.cos(t), np.sin(t)], axis=1)


def fibonacci_sphere(n=8192):
    """n points on S^2 closed under x -> -x.

    A golden-angle spiral fills the upper hemisphere with n/2 points and the
    lower half is its mirror image through the origin.
    """
    if n < 2 or n % 2:
        raise DomainError("antipodally closed sphere grids need an even number of points")
    m = n // 2
    i = np.arange(m)
    z = 1.0 - (i + 0.5) / m
    rho = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    phi = np.pi * (3.0 - np.sqrt(5.0)) * i
    half = np.stack([rho * np.cos(phi), rho * np.sin(phi), z], axis=1)
    return np.concatenate([half, -half])


def default_grid(dim, n=None):
    if dim == 2:
        return circle_grid(4096 if n is None else n)
    if dim == 3:
        return fibonacci_sphere(8192 if n is None else n)
    raise DomainError(f"direction grids are provided for n = 2, 3 (got {dim})")


def fold(u, symmetry):
    """Representative of u in the fundamental domain of the body's symmetry."""
    u = np.asarray(u, dtype=float)
    if symmetry in ("quadrant", "octant"):
        return np.abs(u)
    if symmetry == "central":
        flip = np.take(u, [-1], axis=-1) < 0.0
        return np.where(flip, -u, u)
    return u
