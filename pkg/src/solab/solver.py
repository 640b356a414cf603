"""Variational finite-difference solver for the Dirichlet problem div_H A(Xu) = 0.

The discretization is cell-based: on every grid cell the horizontal gradient
is formed from forward differences averaged over the transverse corner pairs
(the standard staggering cure against odd-even decoupling), and the energy

    E(u) = sum_cells G_eps(|Xu|) * cell_volume

is minimized over the interior node values by L-BFGS descent with Armijo
backtracking (armijo 1e-4, halving).  The assembled gradient of E is exactly
the discrete weak form residual max_phi |sum <A_eps(Xu), X phi>| over unit
node bumps phi, with A_eps(z) = F_eps(|z|) z, so the stopping test and the
weak-solution contract coincide.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import Grid, ScalarField
from .heisenberg import GroupPoint, group_multiply
from .operator import prototype_A, regularized_energy_density, regularized_weight
from .orlicz import OrliczTriple

__all__ = [
    "DirichletProblem",
    "SolveReport",
    "NonConvergenceError",
    "cell_gradient",
    "cell_gradient_adjoint",
    "discrete_energy",
    "weak_residual",
    "solve_dirichlet",
    "comparison_check",
    "barrier_field",
    "barrier_residual_study",
    "EuclideanBallDomain",
    "GaugeBallDomain",
    "strong_convexity_margin",
    "best_strong_convexity_constant",
]


class NonConvergenceError(RuntimeError):
    """Raised by callers that insist on a converged solve (the solver itself only flags)."""


# --------------------------------------------------------------------------
# cell-based operators
# --------------------------------------------------------------------------


def _avg(v: np.ndarray, axis: int) -> np.ndarray:
    lo = [slice(None)] * v.ndim
    hi = [slice(None)] * v.ndim
    lo[axis] = slice(None, -1)
    hi[axis] = slice(1, None)
    return 0.5 * (v[tuple(lo)] + v[tuple(hi)])


def _dif(v: np.ndarray, axis: int) -> np.ndarray:
    lo = [slice(None)] * v.ndim
    hi = [slice(None)] * v.ndim
    lo[axis] = slice(None, -1)
    hi[axis] = slice(1, None)
    return v[tuple(hi)] - v[tuple(lo)]


def _avg_T(v: np.ndarray, axis: int) -> np.ndarray:
    shape = list(v.shape)
    shape[axis] += 1
    out = np.zeros(shape)
    lo = [slice(None)] * v.ndim
    hi = [slice(None)] * v.ndim
    lo[axis] = slice(None, -1)
    hi[axis] = slice(1, None)
    out[tuple(lo)] += 0.5 * v
    out[tuple(hi)] += 0.5 * v
    return out


def _dif_T(v: np.ndarray, axis: int) -> np.ndarray:
    shape = list(v.shape)
    shape[axis] += 1
    out = np.zeros(shape)
    lo = [slice(None)] * v.ndim
    hi = [slice(None)] * v.ndim
    lo[axis] = slice(None, -1)
    hi[axis] = slice(1, None)
    out[tuple(lo)] -= v
    out[tuple(hi)] += v
    return out


def _axis_cell_derivative(grid: Grid, values: np.ndarray, axis: int) -> np.ndarray:
    out = _dif(values, axis) / grid.spacing[axis]
    for b in range(grid.dim):
        if b != axis:
            out = _avg(out, b)
    return out


def _axis_cell_derivative_T(grid: Grid, w: np.ndarray, axis: int) -> np.ndarray:
    out = w / grid.spacing[axis]
    for b in range(grid.dim):
        if b != axis:
            out = _avg_T(out, b)
    return _dif_T(out, axis)


def cell_gradient(grid: Grid, values: np.ndarray) -> np.ndarray:
    """Horizontal gradient at cell centers, shape (2n, *cellshape)."""
    n = grid.n
    d_axis = [_axis_cell_derivative(grid, values, a) for a in range(grid.dim)]
    dt = d_axis[-1]
    out = np.empty((2 * n,) + dt.shape)
    for i in range(n):
        out[i] = d_axis[i] - 0.5 * grid.cell_coord(n + i) * dt
        out[n + i] = d_axis[n + i] + 0.5 * grid.cell_coord(i) * dt
    return out


def cell_gradient_adjoint(grid: Grid, w: np.ndarray) -> np.ndarray:
    """Adjoint of cell_gradient: cell vector fields to node values."""
    n = grid.n
    t_axis = grid.dim - 1
    t_load = np.zeros(w.shape[1:])
    out = np.zeros(grid.shape)
    for i in range(n):
        out += _axis_cell_derivative_T(grid, w[i], i)
        out += _axis_cell_derivative_T(grid, w[n + i], n + i)
        t_load += -0.5 * grid.cell_coord(n + i) * w[i] + 0.5 * grid.cell_coord(i) * w[n + i]
    out += _axis_cell_derivative_T(grid, t_load, t_axis)
    return out


# --------------------------------------------------------------------------
# problem and report
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class DirichletProblem:
    """Dirichlet data for div_H A_eps(Xu) = 0 on the masked interior.

    ``boundary`` is a full-grid field whose values on the mask complement are
    the Dirichlet data (interior values are only used as an initial guess by
    ``init='boundary'``).
    """

    grid: Grid
    triple: OrliczTriple
    boundary: ScalarField
    interior: np.ndarray | None = None
    eps: float = 1e-4
    residual_tol: float | None = None
    max_iters: int = 100_000

    def __post_init__(self):
        if self.boundary.grid != self.grid:
            raise ValueError("boundary field lives on a different grid")
        mask = self.interior if self.interior is not None else self.grid.interior_mask()
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != self.grid.shape:
            raise ValueError("interior mask shape does not match the grid")
        if mask.all():
            raise ValueError("interior mask leaves no boundary nodes for the Dirichlet data")
        if not (0 < self.eps < 1):
            raise ValueError("eps must lie in (0,1)")
        object.__setattr__(self, "interior", mask)

    def operator(self):
        """The regularized radial operator A_eps(z) = F_eps(|z|) z of the energy."""
        f_eps = regularized_weight(self.triple, self.eps)

        def a_eps(z):
            z = np.asarray(z, dtype=float)
            r = np.sqrt(np.sum(z * z, axis=-1))
            return (f_eps(r))[..., None] * z

        return a_eps


@dataclass
class SolveReport:
    iterations: int
    final_energy: float
    weak_residual: float
    energy_history: list[float] = field(default_factory=list)
    residual_history: list[float] = field(default_factory=list)
    gradient_cap_observed: float = 0.0
    converged: bool = True


def _energy_and_gradient(grid: Grid, values: np.ndarray, f_eps, g_eps):
    xc = cell_gradient(grid, values)
    r = np.sqrt(np.sum(xc * xc, axis=0))
    vol = grid.cell_volume
    energy = vol * float(np.sum(g_eps(r)))
    w = f_eps(r)[None, ...] * xc
    return energy, vol * cell_gradient_adjoint(grid, w), float(r.max(initial=0.0))


def discrete_energy(u: ScalarField, prob: DirichletProblem) -> float:
    """Energy sum_cells G_eps(|Xu|) * cellvolume; u must carry the Dirichlet data."""
    if u.grid != prob.grid:
        raise ValueError("field grid mismatch")
    off = ~prob.interior
    if not np.allclose(u.values[off], prob.boundary.values[off], rtol=0, atol=1e-12):
        raise ValueError("field does not match the boundary data off the interior mask")
    g_eps = regularized_energy_density(prob.triple, prob.eps)
    xc = cell_gradient(prob.grid, u.values)
    r = np.sqrt(np.sum(xc * xc, axis=0))
    return prob.grid.cell_volume * float(np.sum(g_eps(r)))


def weak_residual(u: ScalarField, prob: DirichletProblem, operator=None) -> float:
    """max over interior node bumps phi of |sum <A(Xu), X phi> cellvolume|."""
    if u.grid != prob.grid:
        raise ValueError("field grid mismatch")
    a_map = operator if operator is not None else prob.operator()
    xc = cell_gradient(prob.grid, u.values)
    a_vals = np.moveaxis(a_map(np.moveaxis(xc, 0, -1)), -1, 0)
    res = prob.grid.cell_volume * cell_gradient_adjoint(prob.grid, a_vals)
    return float(np.max(np.abs(res[prob.interior])))


def _harmonic_init(prob: DirichletProblem) -> np.ndarray:
    """Quadratic-energy (p=2) extension of the boundary data, via CG on the cell operators."""
    from scipy.sparse.linalg import LinearOperator, cg

    grid = prob.grid
    mask = prob.interior
    m = int(mask.sum())

    def quad_grad(full):
        return cell_gradient_adjoint(grid, cell_gradient(grid, full))

    def matvec(x):
        full = np.zeros(grid.shape)
        full[mask] = x
        return quad_grad(full)[mask]

    base = prob.boundary.values.copy()
    base[mask] = 0.0
    rhs = -quad_grad(base)[mask]
    x0 = np.zeros(m)
    sol, info = cg(LinearOperator((m, m), matvec=matvec), rhs, x0=x0, rtol=1e-10, maxiter=10 * m)
    out = base.copy()
    out[mask] = sol
    return out


def solve_dirichlet(prob: DirichletProblem, init="zero"):
    """Minimize the regularized energy over the interior values.

    ``init`` is 'zero' (zero-fill), 'boundary' (keep the extension stored in
    the boundary field), 'harmonic' (quadratic-energy extension) or a full
    array of start values.  Returns the solution field and a SolveReport;
    an exhausted iteration budget is flagged, not raised.
    """
    grid = prob.grid
    mask = prob.interior
    u = prob.boundary.values.copy()
    if isinstance(init, str):
        if init == "zero":
            u[mask] = 0.0
        elif init == "boundary":
            pass
        elif init == "harmonic":
            u = _harmonic_init(prob)
        else:
            raise ValueError(f"unknown init {init!r}")
    else:
        arr = np.asarray(init, dtype=float)
        if arr.shape != grid.shape:
            raise ValueError("init array shape mismatch")
        u[mask] = arr[mask]

    f_eps = regularized_weight(prob.triple, prob.eps)
    g_eps = regularized_energy_density(prob.triple, prob.eps)

    def evaluate(x):
        u[mask] = x
        energy, grad_full, cap = _energy_and_gradient(grid, u, f_eps, g_eps)
        return energy, grad_full[mask], cap

    x = u[mask].copy()
    energy, grad, cap = evaluate(x)
    res = float(np.max(np.abs(grad))) if grad.size else 0.0
    tol = prob.residual_tol if prob.residual_tol is not None else 1e-8 * (1.0 + res)
    history = [energy]
    res_history = [res]
    s_mem: list[np.ndarray] = []
    y_mem: list[np.ndarray] = []
    rho_mem: list[float] = []
    iters = 0
    converged = res <= tol

    while not converged and iters < prob.max_iters:
        # two-loop recursion
        q = grad.copy()
        alphas = []
        for s, y, rho in zip(reversed(s_mem), reversed(y_mem), reversed(rho_mem)):
            a = rho * np.dot(s, q)
            alphas.append(a)
            q -= a * y
        if y_mem:
            gamma = np.dot(s_mem[-1], y_mem[-1]) / np.dot(y_mem[-1], y_mem[-1])
            q *= gamma
        else:
            q *= 1.0 / max(res, 1.0)
        for (s, y, rho), a in zip(zip(s_mem, y_mem, rho_mem), reversed(alphas)):
            q += s * (a - rho * np.dot(y, q))
        d = -q
        gd = float(np.dot(grad, d))
        if gd >= 0:  # stale curvature; restart from steepest descent
            s_mem.clear(); y_mem.clear(); rho_mem.clear()
            d = -grad / max(res, 1.0)
            gd = float(np.dot(grad, d))

        alpha = 1.0
        accepted = False
        # near the minimizer genuine decreases drop below the float resolution
        # of the energy; the allowance keeps full steps acceptable there while
        # the gradient is still being polished
        noise = 4.0 * np.finfo(float).eps * (abs(energy) + 1.0)
        best = None
        for _ in range(40):
            x_new = x + alpha * d
            e_new, g_new, cap_new = evaluate(x_new)
            if best is None or e_new < best[0]:
                best = (e_new, x_new, g_new, cap_new)
            if e_new <= energy + 1e-4 * alpha * gd + noise:
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            e_new, x_new, g_new, cap_new = best
            r_new = float(np.max(np.abs(g_new)))
            # last resort: a strict residual improvement at flat energy
            if e_new <= energy + noise and r_new < res:
                accepted = True
            else:
                u[mask] = x
                converged = res <= tol
                break
        s_vec = x_new - x
        y_vec = g_new - grad
        sy = float(np.dot(s_vec, y_vec))
        if sy > 1e-300:
            s_mem.append(s_vec)
            y_mem.append(y_vec)
            rho_mem.append(1.0 / sy)
            if len(s_mem) > 10:
                s_mem.pop(0); y_mem.pop(0); rho_mem.pop(0)
        x, energy, grad, cap = x_new, e_new, g_new, cap_new
        res = float(np.max(np.abs(grad)))
        history.append(energy)
        res_history.append(res)
        iters += 1
        if res <= tol:
            converged = True

    u[mask] = x
    report = SolveReport(
        iterations=iters,
        final_energy=energy,
        weak_residual=res,
        energy_history=history,
        residual_history=res_history,
        gradient_cap_observed=cap,
        converged=bool(converged),
    )
    return ScalarField(grid, u.copy()), report


def comparison_check(prob_u: DirichletProblem, prob_v: DirichletProblem, init="zero") -> float:
    """Solve both problems and return min over the interior of (u - v).

    Precondition: shared grid/operator and boundary data ordered u0 >= v0
    nodewise on the mask complement.
    """
    if prob_u.grid != prob_v.grid or prob_u.eps != prob_v.eps:
        raise ValueError("comparison requires a shared grid and regularization")
    if prob_u.triple.label != prob_v.triple.label:
        raise ValueError("comparison requires a shared operator")
    if not np.array_equal(prob_u.interior, prob_v.interior):
        raise ValueError("comparison requires a shared interior mask")
    off = ~prob_u.interior
    if np.any(prob_u.boundary.values[off] < prob_v.boundary.values[off] - 1e-12):
        raise ValueError("boundary data are not ordered: need u0 >= v0 on the boundary")
    u, ru = solve_dirichlet(prob_u, init=init)
    v, rv = solve_dirichlet(prob_v, init=init)
    if not (ru.converged and rv.converged):
        raise NonConvergenceError("comparison solves did not converge")
    gap = u.values - v.values
    return float(np.min(gap[prob_u.interior]))


# --------------------------------------------------------------------------
# barriers
# --------------------------------------------------------------------------


def barrier_field(grid: Grid, base: GroupPoint, value: float, gradient, b, K: float) -> ScalarField:
    """Euclidean-affine barrier value + (gradient + K b).(x - base) sampled on the grid."""
    b = np.asarray(b, dtype=float)
    if abs(float(np.linalg.norm(b)) - 1.0) > 1e-12:
        raise ValueError("b must be a unit vector")
    vec = np.asarray(gradient, dtype=float) + float(K) * b
    if vec.size != grid.dim:
        raise ValueError("gradient dimension mismatch")
    y = np.asarray(base.coords, dtype=float)
    vals = np.full(grid.shape, float(value))
    for k in range(grid.dim):
        vals = vals + vec[k] * (grid.coord(k) - y[k])
    return ScalarField(grid, vals)


def _affine_coefficients(L: ScalarField):
    grid = L.grid
    corner_idx = (0,) * grid.dim
    v0 = L.values[corner_idx]
    vec = np.empty(grid.dim)
    for k in range(grid.dim):
        idx = [0] * grid.dim
        idx[k] = 1
        vec[k] = (L.values[tuple(idx)] - v0) / grid.spacing[k]
    rebuilt = np.full(grid.shape, v0)
    for k in range(grid.dim):
        rebuilt = rebuilt + vec[k] * (grid.coord(k) - grid.lo[k])
    scale = 1.0 + float(np.max(np.abs(L.values)))
    if np.max(np.abs(rebuilt - L.values)) > 1e-9 * scale:
        raise ValueError("field is not affine")
    return float(v0), vec


def barrier_residual_study(L: ScalarField, triple: OrliczTriple, refinements: int) -> list[float]:
    """Weak residual of an affine field under the raw operator, across mesh halvings.

    Affine fields solve the equation exactly (their horizontal Hessian is
    skew-symmetric), so the discrete residual is pure truncation error and
    must decrease with order >= 1.  Raises when the horizontal gradient
    degenerates somewhere while F is singular at 0 (rerun with eps > 0).
    """
    if refinements < 0:
        raise ValueError("refinements must be nonnegative")
    v0, vec = _affine_coefficients(L)
    residuals = []
    grid = L.grid
    for _ in range(refinements + 1):
        vals = np.full(grid.shape, v0)
        for k in range(grid.dim):
            vals = vals + vec[k] * (grid.coord(k) - grid.lo[k])
        xc = cell_gradient(grid, vals)
        rmin = float(np.min(np.sqrt(np.sum(xc * xc, axis=0))))
        if rmin < 1e-12 and triple.f_zero is None:
            raise ValueError("|XL| vanishes on the grid and F is singular at 0; rerun regularized")
        a_vals = np.moveaxis(prototype_A(triple, np.moveaxis(xc, 0, -1)), -1, 0)
        res_field = grid.cell_volume * cell_gradient_adjoint(grid, a_vals)
        interior = grid.interior_mask()
        residuals.append(float(np.max(np.abs(res_field[interior]))))
        grid = grid.refined()
    return residuals


# --------------------------------------------------------------------------
# strong convexity of domains
# --------------------------------------------------------------------------


def _fibonacci_sphere(m: int) -> np.ndarray:
    k = np.arange(m) + 0.5
    phi = np.arccos(1.0 - 2.0 * k / m)
    theta = math.pi * (1.0 + math.sqrt(5.0)) * k
    return np.stack([np.sin(phi) * np.cos(theta), np.sin(phi) * np.sin(theta), np.cos(phi)], axis=1)


@dataclass(frozen=True)
class EuclideanBallDomain:
    """Round ball in R^(2n+1); the strong-convexity oracle: best eps0 = 1/(2R)."""

    center: tuple[float, ...]
    radius: float

    def boundary_points(self, m: int) -> np.ndarray:
        if len(self.center) != 3:
            raise NotImplementedError("deterministic sphere sampling implemented for n = 1")
        return np.asarray(self.center) + self.radius * _fibonacci_sphere(m)

    def inward_normal(self, y: np.ndarray) -> np.ndarray:
        v = np.asarray(self.center) - y
        return v / np.linalg.norm(v)


@dataclass(frozen=True)
class GaugeBallDomain:
    """Gauge-norm ball (convex: the squared gauge is convex and the translation is affine)."""

    center: tuple[float, ...]
    radius: float

    def _n(self) -> int:
        return (len(self.center) - 1) // 2

    def boundary_points(self, m: int) -> np.ndarray:
        n = self._n()
        if n != 1:
            raise NotImplementedError("boundary sampling implemented for n = 1")
        r = self.radius
        c = GroupPoint(np.asarray(self.center, dtype=float))
        m_s = max(3, int(math.sqrt(m / 2)))
        m_th = max(4, int(m / (2 * m_s)))
        pts = []
        for s in np.linspace(0.0, r, m_s):
            tmag = r * r - s * s
            for th in np.linspace(0.0, 2 * math.pi, m_th, endpoint=False):
                x = np.array([s * math.cos(th), s * math.sin(th)])
                for sign in (1.0, -1.0):
                    if tmag == 0.0 and sign < 0:
                        continue  # the equator edge only once
                    w = GroupPoint.from_xt(x, sign * tmag)
                    pts.append(group_multiply(c, w).coords)
        return np.asarray(pts)

    def inward_normal(self, y: np.ndarray) -> np.ndarray:
        n = self._n()
        c = np.asarray(self.center, dtype=float)
        rel_x = y[:2 * n] - c[:2 * n]
        area = float(np.dot(c[:n], y[n:2 * n]) - np.dot(c[n:2 * n], y[:n]))
        tau = y[-1] - c[-1] - 0.5 * area
        grad = np.empty(2 * n + 1)
        sgn = np.sign(tau)  # 0 on the equator edge: the subgradient choice drops the t part
        grad[:2 * n] = 2.0 * rel_x
        # chain rule through the affine vertical part of the left translation
        grad[:n] += sgn * 0.5 * c[n:2 * n]
        grad[n:2 * n] -= sgn * 0.5 * c[:n]
        grad[-1] = sgn
        norm = np.linalg.norm(grad)
        if norm == 0:
            raise ValueError("degenerate boundary point")
        return -grad / norm


def strong_convexity_margin(domain, eps0: float, boundary_samples: int = 512) -> float:
    """min over sampled boundary pairs (x, y) of b(y).(x - y) - eps0 |x - y|^2."""
    pts = domain.boundary_points(boundary_samples)
    worst = math.inf
    for y in pts:
        b = domain.inward_normal(y)
        diff = pts - y
        d2 = np.sum(diff * diff, axis=1)
        live = d2 > 0
        margins = diff[live] @ b - eps0 * d2[live]
        if margins.size:
            worst = min(worst, float(margins.min()))
    return worst


def best_strong_convexity_constant(domain, boundary_samples: int = 512) -> float:
    """Largest eps0 with nonnegative margin on the sampled pairs (clipped at 0)."""
    pts = domain.boundary_points(boundary_samples)
    best = math.inf
    for y in pts:
        b = domain.inward_normal(y)
        diff = pts - y
        d2 = np.sum(diff * diff, axis=1)
        live = d2 > 0
        ratios = (diff[live] @ b) / d2[live]
        if ratios.size:
            best = min(best, float(ratios.min()))
    return max(best, 0.0)
