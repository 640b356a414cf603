"""Numerical audits of the interior energy inequalities on computed solutions.

Every audit evaluates both sides of one inequality against a cutoff, reports
the fitted constant lhs/rhs, and (when run across refinements) a stability
verdict.  The proven constants are existential — they depend only on
(n, g0, L) — so a pass never asserts a numeric target: it asserts that the
fitted constant is finite and stable under mesh refinement, and that sides
which vanish analytically (t-independent data for the vertical integrands,
affine data for the Hessian integrands) vanish numerically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import (CutoffFunction, GaugeBall, ScalarField, ball_average,
                   ball_node_mask, gauge_distance_field, hessian_frobenius,
                   horizontal_gradient, horizontal_hessian, integrate,
                   vertical_derivative)
from .operator import regularized_weight
from .orlicz import OrliczTriple

__all__ = [
    "AuditReport",
    "MoserSchedule",
    "SolutionFields",
    "solution_fields",
    "lipschitz_ratio",
    "caccioppoli_T_audit",
    "caccioppoli_X_audit",
    "reverse_audit",
    "horizontal_estimate_audit",
    "vertical_estimate_audit",
    "moser_trace",
    "attach_refinement",
    "stability_pass",
]

_DEGENERATE_FLOOR = 1e-14


@dataclass
class AuditReport:
    """Evaluated sides of one inequality plus the fitted constant.

    ``passed`` means: fitted constant finite (or the audit is degenerate with
    both sides at round-off level), and, once a refinement history is
    attached, the history stays within the declared stability band.
    """

    name: str
    lhs: float
    rhs: float
    fitted_constant: float
    gamma: float
    passed: bool
    degenerate: bool = False
    extras: dict = field(default_factory=dict)
    refinement_history: list[float] = field(default_factory=list)

    def as_record(self) -> dict:
        rec = {
            "name": self.name,
            "gamma": self.gamma,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "fitted_constant": self.fitted_constant,
            "pass": self.passed,
            "degenerate": self.degenerate,
            "refinement_history": list(self.refinement_history),
        }
        rec.update(self.extras)
        return rec


def _report(name: str, lhs: float, rhs: float, gamma: float, **extras) -> AuditReport:
    degenerate = lhs < _DEGENERATE_FLOOR and rhs < _DEGENERATE_FLOOR
    if degenerate:
        fitted = 0.0
        passed = True
    elif rhs > 0:
        fitted = lhs / rhs
        passed = bool(np.isfinite(fitted))
    else:
        fitted = math.inf
        passed = False
    return AuditReport(name=name, lhs=lhs, rhs=rhs, fitted_constant=fitted,
                       gamma=gamma, passed=passed, degenerate=degenerate, extras=extras)


def stability_pass(history, factor: float = 2.0) -> bool:
    """Consecutive fitted constants must stay within the given band (zeros pass)."""
    vals = [v for v in history if np.isfinite(v)]
    if len(vals) != len(list(history)):
        return False
    for a, b in zip(vals, vals[1:]):
        if a < _DEGENERATE_FLOOR and b < _DEGENERATE_FLOOR:
            continue
        if b == 0 or a == 0:
            return False
        r = a / b
        if not (1.0 / factor <= r <= factor):
            return False
    return True


def _lhs_negligible(report: AuditReport) -> bool:
    # the invariant scale for analytically-zero left sides
    return report.lhs <= 1e-12 * (1.0 + report.rhs)


def attach_refinement(reports: list[AuditReport], factor: float = 2.0) -> AuditReport:
    """Combine per-level reports of the same audit into the finest-level one.

    Levels whose left side sits at the analytic-zero floor (lhs <= 1e-12(1+rhs))
    carry no information about the constant and are excluded from the
    stability judgment.
    """
    if not reports:
        raise ValueError("no reports to combine")
    history = [r.fitted_constant for r in reports]
    final = reports[-1]
    final.refinement_history = history
    live = [r.fitted_constant for r in reports if not (_lhs_negligible(r) or r.degenerate)]
    if not live:
        final.passed = True
        final.degenerate = True
    else:
        final.passed = bool(all(np.isfinite(live))) and stability_pass(live, factor)
    return final


# --------------------------------------------------------------------------
# derived fields of a solution
# --------------------------------------------------------------------------


@dataclass
class SolutionFields:
    """Node-based derived fields shared by the audits."""

    u: ScalarField
    triple: OrliczTriple
    xu_norm: np.ndarray
    tu: np.ndarray
    xtu_norm: np.ndarray
    hess_norm: np.ndarray
    g_xu: np.ndarray
    f_xu: np.ndarray
    weight_kind: str


def solution_fields(u: ScalarField, triple: OrliczTriple, eps: float | None = None) -> SolutionFields:
    """Compute Xu, Tu, X(Tu), XXu and the Orlicz weights of a solution.

    The degeneracy weight is the raw F with its limit policy at 0; when F is
    singular there (delta < 1) the problem's regularized weight is used and
    recorded, since the audited solution came from the regularized equation.
    """
    xu = horizontal_gradient(u)
    xu_norm = xu.norm()
    tu_field = vertical_derivative(u)
    xtu_norm = horizontal_gradient(tu_field).norm()
    hess_norm = hessian_frobenius(horizontal_hessian(u))
    if triple.f_zero is not None or not np.any(xu_norm == 0):
        f_xu = np.asarray(triple.F(xu_norm))
        kind = "F"
    else:
        if eps is None:
            raise ValueError("F is singular at 0 on this solution; pass the problem's eps")
        f_xu = np.asarray(regularized_weight(triple, eps)(xu_norm))
        kind = "F_eps"
    return SolutionFields(u=u, triple=triple, xu_norm=xu_norm, tu=tu_field.values,
                          xtu_norm=xtu_norm, hess_norm=hess_norm,
                          g_xu=np.asarray(triple.G(xu_norm)), f_xu=f_xu, weight_kind=kind)


def _as_field(grid, values) -> ScalarField:
    return ScalarField(grid, values)


# --------------------------------------------------------------------------
# the main estimate
# --------------------------------------------------------------------------


def lipschitz_ratio(u: ScalarField, triple: OrliczTriple, center, r: float, sigma: float) -> float:
    """sup_{B_{sigma r}} G(|Xu|) * (1-sigma)^Q / average_{B_r} G(|Xu|).

    For an affine t-independent solution G(|Xu|) is constant and the ratio is
    exactly (1-sigma)^Q.
    """
    if not 0 < sigma < 1:
        raise ValueError("sigma must lie in (0,1)")
    grid = u.grid
    Q = 2 * grid.n + 2
    outer = GaugeBall.at(center, r)
    if not outer.fits_inside(grid):
        raise ValueError("ball reaches outside the domain")
    w = np.asarray(triple.G(horizontal_gradient(u).norm()))
    inner_mask = ball_node_mask(grid, GaugeBall.at(center, sigma * r))
    if not inner_mask.any():
        raise ValueError("inner ball contains no grid nodes")
    sup_inner = float(np.max(w[inner_mask]))
    avg = ball_average(_as_field(grid, w), outer)
    return sup_inner * (1.0 - sigma) ** Q / avg


@dataclass(frozen=True)
class MoserSchedule:
    """Exponent/radius ladder: kappa = Q/(Q-2), gamma_i = 3 kappa^i - 2, shrinking radii."""

    Q: int
    sigma: float
    r: float
    levels: int

    def __post_init__(self):
        if self.Q <= 2:
            raise ValueError("homogeneous dimension must exceed 2")
        if not 0 < self.sigma < 1:
            raise ValueError("sigma must lie in (0,1)")
        if self.levels < 2:
            raise ValueError("need at least two iteration levels")

    @property
    def kappa(self) -> float:
        return self.Q / (self.Q - 2)

    @property
    def gammas(self) -> np.ndarray:
        i = np.arange(self.levels)
        return 3.0 * self.kappa ** i - 2.0

    @property
    def radii(self) -> np.ndarray:
        i = np.arange(self.levels)
        return self.sigma * self.r + (1.0 - self.sigma) * self.r / 2.0 ** i


def moser_trace(u: ScalarField, triple: OrliczTriple, center, r: float, sigma: float,
                levels: int) -> dict:
    """Normalized L^{gamma_i+2} norms of w = G(|Xu|) along the iteration ladder.

    The norms are evaluated with the max factored out so that high exponents
    stay stable; on a fixed ball they are nondecreasing in the exponent and
    converge to the sup, which is also reported for the inner ball.
    """
    grid = u.grid
    sched = MoserSchedule(Q=2 * grid.n + 2, sigma=sigma, r=r, levels=levels)
    if not GaugeBall.at(center, r).fits_inside(grid):
        raise ValueError("ball reaches outside the domain")
    inner_mask = ball_node_mask(grid, GaugeBall.at(center, sigma * r))
    if not inner_mask.any():
        raise ValueError("schedule exceeds grid resolution: empty inner ball")
    w = np.asarray(triple.G(horizontal_gradient(u).norm()))
    inner_ball = GaugeBall.at(center, sigma * r)

    def graded_norm(ball, mask, p):
        wmax = float(np.max(w[mask]))
        if wmax == 0.0:
            return 0.0
        # cap at the ball sup: nodes outside the mask only contribute through
        # partially covered shell cells, and powering them would overflow
        scaled = _as_field(grid, np.minimum(w / wmax, 1.0) ** p)
        return wmax * ball_average(scaled, ball) ** (1.0 / p)

    rows = []
    for gamma, radius in zip(sched.gammas, sched.radii):
        p = gamma + 2.0
        ball = GaugeBall.at(center, radius)
        mask = ball_node_mask(grid, ball)
        if not mask.any():
            raise ValueError("schedule exceeds grid resolution: empty schedule ball")
        rows.append({"gamma": float(gamma), "radius": float(radius), "exponent": float(p),
                     "norm": graded_norm(ball, mask, p),
                     # same exponent on the fixed inner ball: nondecreasing in p
                     # by power-mean monotonicity, converging to the inner sup
                     "inner_norm": graded_norm(inner_ball, inner_mask, p)})
    return {
        "kappa": sched.kappa,
        "levels": rows,
        "inner_sup": float(np.max(w[inner_mask])),
    }


# --------------------------------------------------------------------------
# Caccioppoli-type audits
# --------------------------------------------------------------------------


def caccioppoli_T_audit(u: ScalarField, triple: OrliczTriple, eta: CutoffFunction,
                        gamma: float, eps: float | None = None) -> AuditReport:
    """Vertical-derivative energy inequality.

    lhs = int eta^2 G(|Tu|)^{gamma+1} F(|Xu|) |X(Tu)|^2
    rhs = (gamma+1)^{-2} int G(|Tu|)^{gamma+1} F(|Xu|) |Tu|^2 |X eta|^2
    """
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    sf = solution_fields(u, triple, eps)
    grid = u.grid
    g_tu = np.asarray(triple.G(np.abs(sf.tu)))
    p = gamma + 1.0
    lhs = integrate(_as_field(grid, eta.eta.values ** 2 * g_tu ** p * sf.f_xu * sf.xtu_norm ** 2))
    rhs = integrate(_as_field(grid, g_tu ** p * sf.f_xu * sf.tu ** 2 * eta.grad.norm() ** 2)) / p ** 2
    return _report("caccioppoli_T", lhs, rhs, gamma, weight=sf.weight_kind)


def caccioppoli_X_audit(u: ScalarField, triple: OrliczTriple, eta: CutoffFunction,
                        gamma: float, eps: float | None = None) -> AuditReport:
    """Horizontal Caccioppoli inequality (the non-commutativity costs a |Tu|^2 term).

    lhs = int eta^2 G(|Xu|)^{gamma+1} F(|Xu|) |XXu|^2
    rhs = int G^{gamma+1} |Xu|^2 F (|X eta|^2 + |eta T eta|)
          + (gamma+1)^4 int eta^2 G^{gamma+1} F |Tu|^2
    """
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    sf = solution_fields(u, triple, eps)
    grid = u.grid
    p = gamma + 1.0
    core = sf.g_xu ** p * sf.f_xu
    lhs = integrate(_as_field(grid, eta.eta.values ** 2 * core * sf.hess_norm ** 2))
    cut_cost = eta.grad.norm() ** 2 + np.abs(eta.eta.values * eta.t_deriv.values)
    rhs = integrate(_as_field(grid, core * sf.xu_norm ** 2 * cut_cost))
    rhs += p ** 4 * integrate(_as_field(grid, eta.eta.values ** 2 * core * sf.tu ** 2))
    return _report("caccioppoli_X", lhs, rhs, gamma, weight=sf.weight_kind)


def reverse_audit(u: ScalarField, triple: OrliczTriple, eta: CutoffFunction,
                  gamma: float, omega: float = 1.0, eps: float | None = None) -> AuditReport:
    """Reverse-type inequality trading G(eta |Tu| / sqrt(omega K_eta)) against G(|Xu|).

    lhs = int eta^2 G(eta |Tu| / sqrt(omega K_eta))^{gamma+1} F(|Xu|) |XXu|^2
    rhs = omega^{-(gamma+1)/2} int eta^2 G(|Xu|)^{gamma+1} F(|Xu|) |XXu|^2

    The proven envelope for lhs/rhs is c^{(gamma+1)/2} (gamma+1)^{(gamma+1)(1+g0)}
    with existential c; the envelope's gamma factor is recorded, not asserted.
    """
    if gamma < 1:
        raise ValueError("the reverse inequality needs gamma >= 1")
    if omega < 1:
        raise ValueError("omega must be >= 1")
    if eta.k_eta <= 0:
        raise ValueError("constant cutoff rejected: K_eta = 0")
    sf = solution_fields(u, triple, eps)
    grid = u.grid
    p = gamma + 1.0
    arg = eta.eta.values * np.abs(sf.tu) / math.sqrt(omega * eta.k_eta)
    g_arg = np.asarray(triple.G(arg))
    base = sf.f_xu * sf.hess_norm ** 2 * eta.eta.values ** 2
    lhs = integrate(_as_field(grid, g_arg ** p * base))
    rhs = omega ** (-p / 2.0) * integrate(_as_field(grid, sf.g_xu ** p * base))
    envelope = p ** (p * (1.0 + triple.g.g0))
    return _report("reverse", lhs, rhs, gamma, omega=omega, envelope_gamma_factor=envelope,
                   weight=sf.weight_kind)


def horizontal_estimate_audit(u: ScalarField, triple: OrliczTriple, eta: CutoffFunction,
                              gamma: float, eps: float | None = None) -> AuditReport:
    """Self-improved horizontal estimate: the Hessian energy against first-order terms only.

    lhs = int eta^2 G(|Xu|)^{gamma+1} F(|Xu|) |XXu|^2
    rhs = (gamma+1)^{10(1+g0)} K_eta int_{supp eta} G^{gamma+1} |Xu|^2 F
    """
    if gamma < 1:
        raise ValueError("needs gamma >= 1")
    if eta.k_eta <= 0:
        raise ValueError("constant cutoff rejected: K_eta = 0")
    sf = solution_fields(u, triple, eps)
    grid = u.grid
    p = gamma + 1.0
    core = sf.g_xu ** p * sf.f_xu
    lhs = integrate(_as_field(grid, eta.eta.values ** 2 * core * sf.hess_norm ** 2))
    amp = p ** (10.0 * (1.0 + triple.g.g0)) * eta.k_eta
    rhs = amp * integrate(_as_field(grid, core * sf.xu_norm ** 2), eta.support_mask)
    return _report("horizontal_estimate", lhs, rhs, gamma, weight=sf.weight_kind)


def vertical_estimate_audit(u: ScalarField, triple: OrliczTriple, eta: CutoffFunction,
                            gamma: float, eps: float | None = None) -> AuditReport:
    """Vertical estimate: the Tu energy against first-order horizontal terms.

    lhs = int eta^2 G(eta |Tu| / sqrt(K_eta))^{gamma+1} F(|Xu|) |Tu|^2
    rhs = K_eta int_{supp eta} G(|Xu|)^{gamma+1} |Xu|^2 F
    """
    if gamma < 1:
        raise ValueError("needs gamma >= 1")
    if eta.k_eta <= 0:
        raise ValueError("constant cutoff rejected: K_eta = 0")
    sf = solution_fields(u, triple, eps)
    grid = u.grid
    p = gamma + 1.0
    arg = eta.eta.values * np.abs(sf.tu) / math.sqrt(eta.k_eta)
    g_arg = np.asarray(triple.G(arg))
    lhs = integrate(_as_field(grid, eta.eta.values ** 2 * g_arg ** p * sf.f_xu * sf.tu ** 2))
    rhs = eta.k_eta * integrate(_as_field(grid, sf.g_xu ** p * sf.xu_norm ** 2 * sf.f_xu),
                                eta.support_mask)
    return _report("vertical_estimate", lhs, rhs, gamma, weight=sf.weight_kind)
