"""Box grids in R^(2n+1), horizontal/vertical stencils, cutoffs and quadrature.

Node-centered fields on a uniform box; the axis order is (x_1, ..., x_2n, t).
Horizontal derivatives combine axis derivatives with the coordinate-weighted
vertical derivative:

    X_i u     = D_{x_i} u     - (x_{n+i}/2) D_t u,
    X_{n+i} u = D_{x_{n+i}} u + (x_i/2)     D_t u,

using second-order central differences in the interior and one-sided
second-order stencils on the faces, so the stencils are exact on polynomials
of degree <= 2 in the differenced variable.  Quadrature is a trapezoid-type
node-weight sum; gauge balls get fractional boundary-cell weights so that
volume scaling studies are meaningful at desk resolutions.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from .heisenberg import GroupPoint

__all__ = [
    "Grid",
    "ScalarField",
    "HorizontalField",
    "CutoffFunction",
    "GaugeBall",
    "axis_derivative",
    "horizontal_gradient",
    "vertical_derivative",
    "horizontal_divergence",
    "horizontal_hessian",
    "hessian_frobenius",
    "commutator_residual",
    "td_bound_margin",
    "gauge_distance_field",
    "make_cutoff",
    "integrate",
    "ball_average",
    "ball_node_mask",
    "save_field_binary",
    "load_field_binary",
    "save_field_csv",
]


@dataclass(frozen=True)
class Grid:
    """Uniform node-centered grid over a box; t is the last axis."""

    n: int
    shape: tuple[int, ...]
    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        d = 2 * self.n + 1
        if len(self.shape) != d or len(self.lo) != d or len(self.hi) != d:
            raise ValueError(f"expected {d} axes for n={self.n}")
        if any(s < 3 for s in self.shape):
            raise ValueError("need at least 3 nodes per axis")
        if any(b <= a for a, b in zip(self.lo, self.hi)):
            raise ValueError("box extents must have positive length")

    @classmethod
    def from_box(cls, n: int, box, resolution, anisotropic: bool = False) -> "Grid":
        """Build a grid from per-axis extents and node counts.

        ``resolution`` is one node count for all axes or a sequence; with
        ``anisotropic`` the t axis is re-resolved so that h_t ~ h_x^2
        (mirroring the quadratic scaling of the dilation).
        """
        box = [(float(a), float(b)) for a, b in box]
        d = 2 * n + 1
        if len(box) != d:
            raise ValueError(f"expected {d} box extents")
        if np.isscalar(resolution):
            res = [int(resolution)] * d
        else:
            res = [int(r) for r in resolution]
        if anisotropic:
            hx = (box[0][1] - box[0][0]) / (res[0] - 1)
            span_t = box[-1][1] - box[-1][0]
            res[-1] = max(3, int(round(span_t / hx ** 2)) + 1)
        return cls(n=n, shape=tuple(res), lo=tuple(a for a, _ in box), hi=tuple(b for _, b in box))

    @property
    def dim(self) -> int:
        return 2 * self.n + 1

    @property
    def spacing(self) -> np.ndarray:
        return (np.asarray(self.hi) - np.asarray(self.lo)) / (np.asarray(self.shape) - 1)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def axis(self, k: int) -> np.ndarray:
        return np.linspace(self.lo[k], self.hi[k], self.shape[k])

    def coord(self, k: int) -> np.ndarray:
        """Node coordinate along axis k, broadcastable to the grid shape."""
        shape = [1] * self.dim
        shape[k] = self.shape[k]
        return self.axis(k).reshape(shape)

    def cell_coord(self, k: int) -> np.ndarray:
        """Cell-center coordinate along axis k, broadcastable to the cell shape."""
        ax = self.axis(k)
        mid = 0.5 * (ax[:-1] + ax[1:])
        shape = [1] * self.dim
        shape[k] = self.shape[k] - 1
        return mid.reshape(shape)

    def refined(self) -> "Grid":
        """Grid with every axis spacing halved (shape 2N-1)."""
        return Grid(self.n, tuple(2 * s - 1 for s in self.shape), self.lo, self.hi)

    def interior_mask(self) -> np.ndarray:
        mask = np.zeros(self.shape, dtype=bool)
        mask[(slice(1, -1),) * self.dim] = True
        return mask


@dataclass(frozen=True)
class ScalarField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise ValueError(f"value shape {v.shape} does not match grid shape {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class HorizontalField:
    """2n components per node, stored with the component axis first."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (2 * self.grid.n,) + self.grid.shape:
            raise ValueError(f"expected shape {(2 * self.grid.n,) + self.grid.shape}, got {v.shape}")
        object.__setattr__(self, "values", v)

    def norm(self) -> np.ndarray:
        return np.sqrt(np.sum(self.values ** 2, axis=0))


def axis_derivative(values: np.ndarray, h: float, axis: int) -> np.ndarray:
    """Second-order derivative along one axis: central inside, one-sided on the faces."""
    if values.shape[axis] < 3:
        raise ValueError("need at least 3 nodes along the differenced axis")
    v = np.moveaxis(values, axis, 0)
    out = np.empty_like(v)
    out[1:-1] = (v[2:] - v[:-2]) / (2.0 * h)
    out[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h)
    out[-1] = (3.0 * v[-1] - 4.0 * v[-2] + v[-3]) / (2.0 * h)
    return np.moveaxis(out, 0, axis)


def vertical_derivative(u: ScalarField) -> ScalarField:
    return ScalarField(u.grid, axis_derivative(u.values, u.grid.spacing[-1], u.grid.dim - 1))


def _horizontal_components(grid: Grid, values: np.ndarray) -> np.ndarray:
    n, d = grid.n, grid.dim
    dt = axis_derivative(values, grid.spacing[-1], d - 1)
    out = np.empty((2 * n,) + grid.shape)
    for i in range(n):
        out[i] = axis_derivative(values, grid.spacing[i], i) - 0.5 * grid.coord(n + i) * dt
        out[n + i] = axis_derivative(values, grid.spacing[n + i], n + i) + 0.5 * grid.coord(i) * dt
    return out


def horizontal_gradient(u: ScalarField) -> HorizontalField:
    return HorizontalField(u.grid, _horizontal_components(u.grid, u.values))


def horizontal_divergence(fh: HorizontalField) -> ScalarField:
    grid = fh.grid
    n, d = grid.n, grid.dim
    total = np.zeros(grid.shape)
    for i in range(n):
        dt_i = axis_derivative(fh.values[i], grid.spacing[-1], d - 1)
        total += axis_derivative(fh.values[i], grid.spacing[i], i) - 0.5 * grid.coord(n + i) * dt_i
        dt_ni = axis_derivative(fh.values[n + i], grid.spacing[-1], d - 1)
        total += axis_derivative(fh.values[n + i], grid.spacing[n + i], n + i) + 0.5 * grid.coord(i) * dt_ni
    return ScalarField(grid, total)


def horizontal_hessian(u: ScalarField) -> np.ndarray:
    """Discrete horizontal Hessian, shape (2n, 2n, *grid): entry [i, j] = X_j X_i u."""
    grid = u.grid
    xu = _horizontal_components(grid, u.values)
    out = np.empty((2 * grid.n, 2 * grid.n) + grid.shape)
    for i in range(2 * grid.n):
        out[i] = _horizontal_components(grid, xu[i])
    return out


def hessian_frobenius(hess: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(hess ** 2, axis=(0, 1)))


def _interior(values: np.ndarray) -> np.ndarray:
    return values[(slice(1, -1),) * values.ndim]


def commutator_residual(u: ScalarField) -> float:
    """max over the interior of |X_i X_{n+i} u - X_{n+i} X_i u - Tu|.

    The exact commutator is the vertical derivative; on smooth samples the
    residual is pure truncation error and vanishes with order >= 1 under
    refinement.
    """
    grid = u.grid
    xu = _horizontal_components(grid, u.values)
    tu = axis_derivative(u.values, grid.spacing[-1], grid.dim - 1)
    worst = 0.0
    for i in range(grid.n):
        x_ni_of_xi = _horizontal_components(grid, xu[i])[grid.n + i]
        x_i_of_xni = _horizontal_components(grid, xu[grid.n + i])[i]
        resid = x_i_of_xni - x_ni_of_xi - tu
        worst = max(worst, float(np.max(np.abs(_interior(resid)))))
    return worst


def td_bound_margin(u: ScalarField) -> float:
    """min over the interior of 2 |XXu| - |Tu| (nonnegative up to truncation error)."""
    hess = horizontal_hessian(u)
    tu = axis_derivative(u.values, u.grid.spacing[-1], u.grid.dim - 1)
    margin = 2.0 * hessian_frobenius(hess) - np.abs(tu)
    return float(np.min(_interior(margin)))


# --------------------------------------------------------------------------
# gauge geometry
# --------------------------------------------------------------------------


def _center_coords(center) -> np.ndarray:
    if isinstance(center, GroupPoint):
        return np.asarray(center.coords, dtype=float)
    return np.asarray(center, dtype=float)


def gauge_distance_field(grid: Grid, center, offsets=None) -> np.ndarray:
    """Left-invariant gauge distance ||center^{-1} . x|| at every node.

    ``offsets`` optionally shifts every node by a constant vector (used for
    sub-cell sampling).
    """
    c = _center_coords(center)
    n = grid.n
    if c.size != grid.dim:
        raise ValueError("center dimension does not match the grid")
    off = np.zeros(grid.dim) if offsets is None else np.asarray(offsets, dtype=float)
    sq = np.zeros(grid.shape)
    area = np.zeros(grid.shape)
    for i in range(2 * n):
        xi = grid.coord(i) + off[i]
        sq = sq + (xi - c[i]) ** 2
        sign = 1.0 if i < n else -1.0
        partner = grid.coord((i + n) % (2 * n)) + off[(i + n) % (2 * n)]
        area = area + sign * c[i] * partner
    tau = grid.coord(2 * n) + off[2 * n] - c[2 * n] - 0.5 * area
    return np.sqrt(sq + np.abs(tau))


@dataclass(frozen=True)
class GaugeBall:
    """Ball of the gauge quasi-distance, usable as an integration region."""

    center: tuple[float, ...]
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    @classmethod
    def at(cls, center, radius: float) -> "GaugeBall":
        return cls(tuple(np.asarray(_center_coords(center), dtype=float)), float(radius))

    def fits_inside(self, grid: Grid) -> bool:
        c = np.asarray(self.center)
        n = grid.n
        ok = True
        for i in range(2 * n):
            ok &= (c[i] - self.radius >= grid.lo[i]) and (c[i] + self.radius <= grid.hi[i])
        # the vertical extent of the gauge ball scales quadratically, plus the
        # twist of the left translation
        twist = 0.5 * self.radius * float(np.sum(np.abs(c[:2 * n])))
        t_span = self.radius ** 2 + twist
        ok &= (c[-1] - t_span >= grid.lo[-1]) and (c[-1] + t_span <= grid.hi[-1])
        return bool(ok)


def ball_node_mask(grid: Grid, ball: GaugeBall) -> np.ndarray:
    return gauge_distance_field(grid, np.asarray(ball.center)) <= ball.radius


@functools.lru_cache(maxsize=32)
def _ball_coverage(grid: Grid, ball: GaugeBall, sub: int = 4) -> np.ndarray:
    """Fraction of each node cell inside the ball; exact 0/1 away from the shell."""
    h = grid.spacing
    corner_min = np.full(grid.shape, np.inf)
    corner_max = np.full(grid.shape, -np.inf)
    for signs in np.ndindex(*(2,) * grid.dim):
        off = (np.asarray(signs) - 0.5) * h
        rho = gauge_distance_field(grid, np.asarray(ball.center), offsets=off)
        corner_min = np.minimum(corner_min, rho)
        corner_max = np.maximum(corner_max, rho)
    # the gauge ball is convex, so a cell is inside iff all its corners are;
    # the outer test pads by one cell's worth of variation to be safe
    inside = corner_max <= ball.radius
    variation = corner_max - corner_min
    outside = corner_min > ball.radius + variation
    shell = ~inside & ~outside
    coverage = inside.astype(float)
    if np.any(shell):
        idx = np.nonzero(shell)
        pts = np.stack([grid.axis(k)[idx[k]] for k in range(grid.dim)], axis=-1)
        count = np.zeros(pts.shape[0])
        steps = (np.arange(sub) + 0.5) / sub - 0.5
        c = np.asarray(ball.center)
        n = grid.n
        for offs in np.ndindex(*(sub,) * grid.dim):
            shift = np.array([steps[o] for o in offs]) * h
            q = pts + shift
            sq = np.sum((q[:, :2 * n] - c[:2 * n]) ** 2, axis=1)
            area = np.sum(c[:n] * q[:, n:2 * n], axis=1) - np.sum(c[n:2 * n] * q[:, :n], axis=1)
            tau = q[:, -1] - c[-1] - 0.5 * area
            count += (sq + np.abs(tau) <= ball.radius ** 2)
        coverage[idx] = count / float(sub ** grid.dim)
    return coverage


@functools.lru_cache(maxsize=32)
def _trapezoid_weights(grid: Grid) -> np.ndarray:
    w = np.ones(grid.shape)
    for k in range(grid.dim):
        axis_w = np.ones(grid.shape[k])
        axis_w[0] = axis_w[-1] = 0.5
        shape = [1] * grid.dim
        shape[k] = grid.shape[k]
        w = w * (axis_w * grid.spacing[k]).reshape(shape)
    return w


def integrate(f, region=None) -> float:
    """Trapezoid-type weighted node sum of a field over the box, a mask or a gauge ball."""
    if isinstance(f, ScalarField):
        grid, values = f.grid, f.values
    else:
        raise TypeError("integrate expects a ScalarField")
    w = _trapezoid_weights(grid)
    if region is None:
        return float(np.sum(w * values))
    if isinstance(region, GaugeBall):
        if not region.fits_inside(grid):
            raise ValueError("integration ball reaches outside the grid")
        cov = _ball_coverage(grid, region)
        if not np.any(cov > 0):
            raise ValueError("empty integration region")
        return float(np.sum(w * cov * values))
    mask = np.asarray(region, dtype=bool)
    if mask.shape != grid.shape:
        raise ValueError("mask shape does not match grid")
    if not mask.any():
        raise ValueError("empty integration region")
    return float(np.sum(w * values * mask))


def ball_average(f: ScalarField, ball: GaugeBall) -> float:
    vol = integrate(ScalarField(f.grid, np.ones(f.grid.shape)), ball)
    return integrate(f, ball) / vol


# --------------------------------------------------------------------------
# cutoff functions
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class CutoffFunction:
    """Radial gauge bump: 1 on the inner ball, 0 outside the outer ball.

    Carries the measured discrete derivative fields and the cost constant
    K_eta = ||X eta||_inf^2 + ||eta T eta||_inf.
    """

    eta: ScalarField
    grad: HorizontalField
    t_deriv: ScalarField
    k_eta: float
    grad_sup: float
    hess_sup: float
    center: tuple[float, ...]
    r_inner: float
    r_outer: float

    @property
    def support_mask(self) -> np.ndarray:
        return self.eta.values > 0.0


def _smoothstep(s: np.ndarray) -> np.ndarray:
    s = np.clip(s, 0.0, 1.0)
    return s * s * s * (10.0 + s * (-15.0 + 6.0 * s))


def _smoothstep_slope(s: np.ndarray) -> np.ndarray:
    inside = (s > 0.0) & (s < 1.0)
    sc = np.where(inside, s, 0.0)
    return np.where(inside, 30.0 * sc * sc * (1.0 - sc) ** 2, 0.0)


def make_cutoff(grid: Grid, center, r_inner: float, r_outer: float) -> CutoffFunction:
    """Quintic-smoothstep bump in the gauge distance with measured derivative bounds.

    The derivative fields X eta and T eta are evaluated in closed form (chain
    rule through the smoothstep and the gauge distance), so the stored cost
    constant K_eta samples the continuum cutoff and is stable under grid
    refinement; the discrete stencils applied to eta agree to O(h^2).
    """
    if not (0 < r_inner < r_outer):
        raise ValueError("need 0 < r_inner < r_outer (degenerate annulus rejected)")
    ball = GaugeBall.at(center, r_outer)
    if not ball.fits_inside(grid):
        raise ValueError("outer ball reaches outside the grid")
    c = _center_coords(center)
    n = grid.n
    rho = gauge_distance_field(grid, c)
    width = r_outer - r_inner
    s = (rho - r_inner) / width
    eta = ScalarField(grid, 1.0 - _smoothstep(s))
    # chain rule: X eta = -S'(s)/width * X rho with X rho = (X q)/(2 rho),
    # q = |x - c|_spatial^2 + |tau|, tau the translated vertical coordinate
    area = np.zeros(grid.shape)
    for i in range(n):
        area = area + c[i] * grid.coord(n + i) - c[n + i] * grid.coord(i)
    tau = grid.coord(2 * n) - c[-1] - 0.5 * area
    sgn = np.sign(tau)
    safe_rho = np.where(rho > 0, rho, 1.0)
    scale = np.where(rho > 0, -_smoothstep_slope(s) / (width * 2.0 * safe_rho), 0.0)
    grad_vals = np.empty((2 * n,) + grid.shape)
    for i in range(n):
        xtau_i = 0.5 * (c[n + i] - grid.coord(n + i))
        xtau_ni = 0.5 * (grid.coord(i) - c[i])
        grad_vals[i] = scale * (2.0 * (grid.coord(i) - c[i]) + sgn * xtau_i)
        grad_vals[n + i] = scale * (2.0 * (grid.coord(n + i) - c[n + i]) + sgn * xtau_ni)
    grad = HorizontalField(grid, grad_vals)
    t_deriv = ScalarField(grid, scale * sgn * np.ones(grid.shape))
    grad_sup = float(np.max(grad.norm()))
    hess_sup = float(np.max(hessian_frobenius(horizontal_hessian(eta))))
    k_eta = grad_sup ** 2 + float(np.max(np.abs(eta.values * t_deriv.values)))
    return CutoffFunction(eta=eta, grad=grad, t_deriv=t_deriv, k_eta=k_eta,
                          grad_sup=grad_sup, hess_sup=hess_sup,
                          center=tuple(c), r_inner=float(r_inner),
                          r_outer=float(r_outer))


# --------------------------------------------------------------------------
# serialization
# --------------------------------------------------------------------------


def refine_values(values: np.ndarray) -> np.ndarray:
    """Trilinear prolongation onto the once-refined grid (shape 2N-1 per axis)."""
    out = values
    for axis in range(values.ndim):
        v = np.moveaxis(out, axis, 0)
        fine = np.empty((2 * v.shape[0] - 1,) + v.shape[1:])
        fine[::2] = v
        fine[1::2] = 0.5 * (v[:-1] + v[1:])
        out = np.moveaxis(fine, 0, axis)
    return out


def save_field_binary(path, field: ScalarField):
    """Flat layout: header (n, axis sizes, spacings) as float64 LE, then C-order values."""
    grid = field.grid
    header = np.array([grid.n, *grid.shape, *grid.spacing], dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(header.tobytes())
        fh.write(np.ascontiguousarray(field.values, dtype="<f8").tobytes())


def load_field_binary(path, grid: Grid) -> ScalarField:
    """Read a field dump and validate its header against the given grid."""
    raw = np.fromfile(path, dtype="<f8")
    if raw.size < 1:
        raise ValueError(f"{path}: truncated field file")
    n = int(raw[0])
    d = 2 * n + 1
    if raw.size < 1 + 2 * d:
        raise ValueError(f"{path}: truncated field header")
    shape = tuple(int(s) for s in raw[1:1 + d])
    spacing = raw[1 + d:1 + 2 * d]
    values = raw[1 + 2 * d:]
    if n != grid.n or shape != grid.shape:
        raise ValueError(f"{path}: grid mismatch (file n={n}, shape={shape})")
    if not np.allclose(spacing, grid.spacing, rtol=1e-12, atol=1e-15):
        raise ValueError(f"{path}: spacing mismatch")
    if values.size != int(np.prod(shape)):
        raise ValueError(f"{path}: value count does not match shape")
    return ScalarField(grid, values.reshape(shape))


def save_field_csv(path, field: ScalarField):
    grid = field.grid
    coords = np.meshgrid(*[grid.axis(k) for k in range(grid.dim)], indexing="ij")
    cols = [c.ravel() for c in coords] + [field.values.ravel()]
    names = [f"x{i + 1}" for i in range(2 * grid.n)] + ["t", "value"]
    with open(path, "w") as fh:
        fh.write(",".join(names) + "\n")
        for row in zip(*cols):
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
