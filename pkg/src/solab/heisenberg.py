"""Group-algebraic and metric primitives of the Heisenberg group H^n.

Points of H^n are identified with R^(2n+1): the first 2n coordinates are
horizontal, the last one is the vertical coordinate t.  The group product is

    (x, t) . (y, s) = (x + y, t + s + (1/2) * sum_i (x_i y_{n+i} - x_{n+i} y_i)),

the gauge norm is ||(x, t)|| = (sum x_i^2 + |t|)^(1/2), and the anisotropic
dilation scales horizontal coordinates linearly and t quadratically.  All
values are immutable after construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "HeisenbergConfig",
    "GroupPoint",
    "origin",
    "group_multiply",
    "group_inverse",
    "homogeneous_norm",
    "quasi_distance",
    "dilate",
]


@dataclass(frozen=True)
class HeisenbergConfig:
    """Group index n with the homogeneous dimension Q = 2n + 2."""

    n: int

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise ValueError(f"group index n must be a positive integer, got {self.n!r}")

    @property
    def Q(self) -> int:
        return 2 * self.n + 2

    @property
    def dim(self) -> int:
        """Topological dimension 2n + 1 of the underlying space."""
        return 2 * self.n + 1


@dataclass(frozen=True)
class GroupPoint:
    """A point of H^n stored as a flat length-(2n+1) array with t last."""

    coords: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=float)
        if c.ndim != 1 or c.size < 3 or c.size % 2 == 0:
            raise ValueError(f"coordinates must be a flat array of odd length >= 3, got shape {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValueError("coordinates must be finite")
        c = c.copy()
        c.flags.writeable = False
        object.__setattr__(self, "coords", c)

    @classmethod
    def from_xt(cls, x, t: float) -> "GroupPoint":
        x = np.asarray(x, dtype=float)
        return cls(np.concatenate([x.ravel(), [float(t)]]))

    @property
    def n(self) -> int:
        return (self.coords.size - 1) // 2

    @property
    def x(self) -> np.ndarray:
        """Horizontal coordinates (length 2n)."""
        return self.coords[:-1]

    @property
    def t(self) -> float:
        return float(self.coords[-1])


def origin(n: int) -> GroupPoint:
    return GroupPoint(np.zeros(2 * n + 1))


def _check_same_group(p: GroupPoint, q: GroupPoint):
    if p.n != q.n:
        raise ValueError(f"dimension mismatch: points of H^{p.n} and H^{q.n}")


def symplectic_area(x: np.ndarray, y: np.ndarray) -> float:
    """The bilinear term sum_i (x_i y_{n+i} - x_{n+i} y_i) of the group law."""
    n = x.size // 2
    return float(np.dot(x[:n], y[n:]) - np.dot(x[n:], y[:n]))


def group_multiply(p: GroupPoint, q: GroupPoint) -> GroupPoint:
    """Group product p.q; the identity is the origin and the product is associative."""
    _check_same_group(p, q)
    x, y = p.x, q.x
    t = p.t + q.t + 0.5 * symplectic_area(x, y)
    return GroupPoint.from_xt(x + y, t)


def group_inverse(p: GroupPoint) -> GroupPoint:
    """Group inverse; equals coordinate-wise negation since the bilinear term is antisymmetric."""
    return GroupPoint(-p.coords)


def homogeneous_norm(p: GroupPoint) -> float:
    """Gauge norm (sum of squared horizontal coordinates plus |t|)^(1/2)."""
    return float(np.sqrt(np.dot(p.x, p.x) + abs(p.t)))


def quasi_distance(p: GroupPoint, q: GroupPoint) -> float:
    """Left-invariant gauge quasi-distance ||q^{-1} . p||; zero iff p equals q."""
    _check_same_group(p, q)
    return homogeneous_norm(group_multiply(group_inverse(q), p))


def dilate(p: GroupPoint, lam: float) -> GroupPoint:
    """Anisotropic dilation (x, t) -> (lam*x, lam^2*t); the gauge norm is 1-homogeneous under it."""
    if not lam > 0:
        raise ValueError(f"dilation factor must be positive, got {lam}")
    return GroupPoint.from_xt(lam * p.x, lam * lam * p.t)
