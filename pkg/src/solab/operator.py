"""The degenerate operator class, its Jacobian, and the eps-regularization.

The prototype map A(z) = g(|z|) z / |z| has Jacobian

    DA(z) = F(|z|) I + (g'(|z|) - F(|z|)) z z^T / |z|^2,     F(t) = g(t)/t,

whose eigenvalues are g'(|z|) (along z) and F(|z|) (on the orthogonal
complement), hence they lie in [min{1,delta}, max{1,g0}] * F(|z|).  All
structure, monotonicity and ellipticity checks below are numerical audits
with fitted constants: the theory only asserts their existence.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .orlicz import OrliczTriple

__all__ = [
    "OperatorSpec",
    "RegularizationParams",
    "prototype_A",
    "prototype_DA",
    "prototype_operator",
    "structure_margins",
    "monotonicity_gap",
    "ellipticity_margin",
    "p_laplace_gap",
    "regularize",
    "regularized_weight",
    "regularized_energy_density",
]


@dataclass(frozen=True)
class OperatorSpec:
    """A map A with symmetric Jacobian DA and its ellipticity weights.

    ``lower_weight``/``upper_weight`` are the radial functions w(|z|)
    bracketing the Rayleigh quotient of DA; L = sup upper/lower is the
    ellipticity ratio.  For prototypes they are min{1,delta} F and
    max{1,g0} F, so the bracket holds with constant one on each side.
    """

    A: Callable
    DA: Callable
    L: float
    source: str
    lower_weight: Callable
    upper_weight: Callable


@dataclass(frozen=True)
class RegularizationParams:
    """Constants of the eps-regularization: F_eps has limits m1 at 0 and m2 at infinity."""

    eps: float
    m1: float
    m2: float
    L_tilde: float
    M_cap: float | None = None

    def __post_init__(self):
        if not (0 < self.eps < 1):
            raise ValueError(f"eps must lie in (0,1), got {self.eps}")
        if not (self.m1 > 0 and self.m2 > 0 and np.isfinite(self.m1) and np.isfinite(self.m2)):
            raise ValueError("m1, m2 must be finite and positive")


def _norm(z: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(z * z, axis=-1))


def prototype_A(triple: OrliczTriple, z) -> np.ndarray:
    """g(|z|) z / |z| with the continuous extension 0 at z = 0."""
    z = np.asarray(z, dtype=float)
    r = _norm(z)
    safe = np.where(r > 0, r, 1.0)
    scale = np.where(r > 0, triple.g(safe) / safe, 0.0)
    return scale[..., None] * z


def prototype_DA(triple: OrliczTriple, z) -> np.ndarray:
    """Closed-form Jacobian of the prototype map; undefined at z = 0."""
    z = np.asarray(z, dtype=float)
    r = _norm(z)
    if np.any(r == 0):
        raise ValueError("prototype Jacobian is degenerate at z = 0; regularize first")
    if triple.g.deriv is None:
        raise ValueError("structure function must carry a derivative for the closed-form Jacobian")
    d = z.shape[-1]
    fv = triple.g(r) / r
    gp = triple.g.deriv(r)
    eye = np.eye(d)
    outer = z[..., :, None] * z[..., None, :] / (r * r)[..., None, None]
    return fv[..., None, None] * eye + (gp - fv)[..., None, None] * outer


def prototype_operator(triple: OrliczTriple) -> OperatorSpec:
    """OperatorSpec for the prototype of the given growth law."""
    delta, g0 = triple.g.delta, triple.g.g0
    lo, hi = min(1.0, delta), max(1.0, g0)
    return OperatorSpec(
        A=lambda z: prototype_A(triple, z),
        DA=lambda z: prototype_DA(triple, z),
        L=hi / lo,
        source=f"prototype({triple.label})",
        lower_weight=lambda t: lo * triple.F(t),
        upper_weight=lambda t: hi * triple.F(t),
    )


def structure_margins(op: OperatorSpec, triple: OrliczTriple, z, xi):
    """Margins of the restated structure condition at (z, xi).

    Returns (lower, upper, growth):
        lower  = <DA(z) xi, xi> - w_lo(|z|) |xi|^2
        upper  = w_hi(|z|) |xi|^2 - <DA(z) xi, xi>
        growth = w_hi(|z|) |z| - |A(z)|
    all of which should be nonnegative up to round-off.
    """
    z = np.asarray(z, dtype=float)
    xi = np.asarray(xi, dtype=float)
    r = _norm(z)
    quad = np.einsum("...ij,...i,...j->...", op.DA(z), xi, xi)
    xi2 = np.sum(xi * xi, axis=-1)
    w_lo = op.lower_weight(r)
    w_hi = op.upper_weight(r)
    lower = quad - w_lo * xi2
    upper = w_hi * xi2 - quad
    growth = w_hi * r - _norm(op.A(z))
    return lower, upper, growth


def monotonicity_gap(op: OperatorSpec, triple: OrliczTriple, z, w):
    """Gap <A(z)-A(w), z-w> with the near/far case split and the fitted lower constant.

    fitted_lower normalizes the gap by |z-w|^2 F(|z|) in the near case
    (|z-w| <= 2|z|) and by |z-w|^2 F(|z-w|) in the far case; pairs with
    z = w get gap 0 and a NaN (flagged) constant.
    """
    z = np.asarray(z, dtype=float)
    w = np.asarray(w, dtype=float)
    if z.shape != w.shape:
        raise ValueError("dimension mismatch")
    diff = z - w
    gap = np.sum((op.A(z) - op.A(w)) * diff, axis=-1)
    dn = _norm(diff)
    near = dn <= 2.0 * _norm(z)
    case = np.where(near, "near", "far")
    ref_r = np.where(near, _norm(z), dn)
    degenerate = dn == 0
    safe_r = np.where(ref_r > 0, ref_r, 1.0)
    denom = np.where(degenerate, np.nan, dn * dn * triple.g(safe_r) / safe_r)
    with np.errstate(invalid="ignore", divide="ignore"):
        fitted = gap / denom
    gap = np.where(degenerate, 0.0, gap)
    if z.ndim == 1:
        return float(gap), str(case), float(fitted)
    return gap, case, fitted


def ellipticity_margin(op: OperatorSpec, triple: OrliczTriple, z, c_fit: float = 1.0):
    """<A(z), z> - c_fit G(|z|); nonnegative for the prototype with c_fit = 1."""
    z = np.asarray(z, dtype=float)
    r = _norm(z)
    pairing = np.sum(op.A(z) * z, axis=-1)
    margin = pairing - c_fit * np.asarray(triple.G(r))
    return float(margin) if margin.ndim == 0 else margin


def p_laplace_gap(p: float, z, w):
    """Monotonicity gap of the p-Laplace map with the case-dependent lower-bound ratio.

    ratio = gap / (|z-w|^2 (|z|+|w|)^(p-2)) for p < 2 and gap / |z-w|^p for
    p >= 2; the theory asserts a positive lower bound c(p) for it.
    """
    if not 1 < p < np.inf:
        raise ValueError("need 1 < p < infinity")
    z = np.asarray(z, dtype=float)
    w = np.asarray(w, dtype=float)
    dn = _norm(z - w)
    if np.any(dn == 0):
        raise ValueError("z and w must differ")

    def amap(v):
        r = _norm(v)
        safe = np.where(r > 0, r, 1.0)
        return np.where(r > 0, safe ** (p - 2.0), 0.0)[..., None] * v

    gap = np.sum((amap(z) - amap(w)) * (z - w), axis=-1)
    if p < 2:
        denom = dn * dn * (_norm(z) + _norm(w)) ** (p - 2.0)
    else:
        denom = dn ** p
    ratio = gap / denom
    if z.ndim == 1:
        return float(gap), float(ratio)
    return gap, ratio


# --------------------------------------------------------------------------
# regularization
# --------------------------------------------------------------------------


def regularized_weight(triple: OrliczTriple, eps: float) -> Callable:
    """F_eps(t) = F(min(t + eps, 1/eps)): finite positive limits at 0 and infinity."""
    if not 0 < eps < 1:
        raise ValueError(f"eps must lie in (0,1), got {eps}")

    def f_eps(t):
        t = np.asarray(t, dtype=float)
        arg = np.minimum(t + eps, 1.0 / eps)
        out = triple.g(arg) / arg
        return float(out) if out.ndim == 0 else out

    return f_eps


def regularized_energy_density(triple: OrliczTriple, eps: float) -> Callable:
    """G_eps(t) = int_0^t s F_eps(s) ds, the energy density of the regularized operator.

    Split at T = 1/eps - eps where the weight saturates:
        t <= T:  G_eps(t) = [G(t+eps) - G(eps)] - eps [H(t+eps) - H(eps)]
        t  > T:  G_eps(t) = G_eps(T) + F(1/eps) (t^2 - T^2) / 2.
    """
    if not 0 < eps < 1:
        raise ValueError(f"eps must lie in (0,1), got {eps}")
    T = 1.0 / eps - eps
    g_eps_ref = float(triple.G(eps))
    h_eps_ref = float(triple.H(eps))
    m2 = float(triple.g(np.asarray(1.0 / eps)) * eps)
    cap = (float(triple.G(1.0 / eps)) - g_eps_ref) - eps * (float(triple.H(1.0 / eps)) - h_eps_ref)

    def g_eps(t):
        t = np.asarray(t, dtype=float)
        core = np.minimum(t, T)
        body = (triple.G(core + eps) - g_eps_ref) - eps * (triple.H(core + eps) - h_eps_ref)
        tail = np.where(t > T, cap + 0.5 * m2 * (t * t - T * T) - body, 0.0)
        out = body + tail
        return float(out) if out.ndim == 0 else out

    return g_eps


def _ramp(eps: float) -> tuple[Callable, Callable]:
    """C^{0,1} cutoff: 1 on [0, eps], 0 on [2 eps, inf), linear between; with derivative."""

    def eta(r):
        return np.clip((2.0 * eps - np.asarray(r, dtype=float)) / eps, 0.0, 1.0)

    def eta_prime(r):
        r = np.asarray(r, dtype=float)
        return np.where((r > eps) & (r < 2.0 * eps), -1.0 / eps, 0.0)

    return eta, eta_prime


def regularize(op: OperatorSpec, triple: OrliczTriple, eps: float):
    """Blend the operator with F_eps(|z|) z near z = 0 via a Lipschitz ramp.

    Returns the regularized OperatorSpec together with its fitted constants:
    A_eps(z) = eta(|z|) F_eps(|z|) z + (1 - eta(|z|)) A(z), eta supported on
    [0, 2 eps].  The bracket weights F_eps / L_tilde and L_tilde F_eps use a
    constant fitted on a deterministic probe set (the theory makes L_tilde
    existential, depending only on delta, g0, L).
    """
    if not 0 < eps < 1:
        raise ValueError(f"eps must lie in (0,1), got {eps}")
    f_eps = regularized_weight(triple, eps)
    eta, eta_prime = _ramp(eps)
    g = triple.g

    def f_eps_prime(t):
        t = np.asarray(t, dtype=float)
        arg = t + eps
        inside = arg < 1.0 / eps
        safe = np.where(inside, arg, 1.0)
        val = (g.deriv(safe) - g(safe) / safe) / safe
        return np.where(inside, val, 0.0)

    def a_eps(z):
        z = np.asarray(z, dtype=float)
        r = _norm(z)
        e = eta(r)
        return (e * f_eps(r))[..., None] * z + (1.0 - e)[..., None] * op.A(z)

    def da_eps(z):
        z = np.asarray(z, dtype=float)
        r = _norm(z)
        d = z.shape[-1]
        eye = np.eye(d)
        out = np.zeros(z.shape + (d,))
        core = r < eps  # pure F_eps(|z|) z zone, including the degenerate point
        if np.any(core):
            zc = z[core]
            rc = r[core]
            safe = np.where(rc > 0, rc, 1.0)
            outer = np.where(rc > 0, 1.0, 0.0)[:, None, None] * (
                zc[:, :, None] * zc[:, None, :] / (safe * safe)[:, None, None])
            out[core] = (f_eps(rc)[:, None, None] * eye
                         + (f_eps_prime(rc) * rc)[:, None, None] * outer)
        rest = ~core
        if np.any(rest):
            zr = z[rest]
            rr = r[rest]
            e = eta(rr)
            ep = eta_prime(rr)
            outer = zr[:, :, None] * zr[:, None, :] / (rr * rr)[:, None, None]
            term = (e * f_eps(rr))[:, None, None] * eye
            term = term + ((ep * f_eps(rr) + e * f_eps_prime(rr)) * rr)[:, None, None] * outer
            term = term + (1.0 - e)[:, None, None] * op.DA(zr)
            term = term - ep[:, None, None] * (op.A(zr)[:, :, None] * zr[:, None, :] / rr[:, None, None])
            out[rest] = term
        return out

    # fit L_tilde on a deterministic probe set spanning the transition zone
    rng = np.random.default_rng(0)
    d = 2
    radii = np.concatenate([np.geomspace(eps / 8, 8 * eps, 24), np.geomspace(1e-3, 1e3, 24)])
    dirs = rng.normal(size=(radii.size, d))
    dirs /= _norm(dirs)[:, None]
    zs = radii[:, None] * dirs
    dav = da_eps(zs)
    sym = 0.5 * (dav + np.swapaxes(dav, -1, -2))
    eigs = np.linalg.eigvalsh(sym)
    fv = f_eps(radii)
    ratio_hi = float(np.max(eigs[:, -1] / fv))
    ratio_lo = float(np.min(eigs[:, 0] / fv))
    growth = float(np.max(_norm(a_eps(zs)) / (radii * fv)))
    if ratio_lo <= 0:
        raise ValueError("regularized operator lost ellipticity on the probe set")
    l_tilde = max(ratio_hi, 1.0 / ratio_lo, growth)

    spec = OperatorSpec(
        A=a_eps,
        DA=da_eps,
        L=l_tilde * l_tilde,
        source=f"regularized({triple.label}, eps={eps:g})",
        lower_weight=lambda t: f_eps(t) / l_tilde,
        upper_weight=lambda t: l_tilde * f_eps(t),
    )
    params = RegularizationParams(
        eps=eps,
        m1=float(f_eps(0.0)),
        m2=float(triple.g(np.asarray(1.0 / eps)) * eps),
        L_tilde=l_tilde,
    )
    return spec, params
