"""Command-line orchestration.

Commands: orlicz-check, operator-check, solve, audit, estimate (audit
restricted to the main-estimate quantities).  All numeric output is CSV with
17 significant digits plus JSON reports; identical config + seed produces
byte-identical files.  Exit codes: 0 pass, 1 numeric non-convergence,
2 config error, 3 IO error.  SOLAB_THREADS caps worker parallelism for the
independent audits.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import operator as op_mod
from . import orlicz as oz
from . import solver as sv
from . import verify as vf
from .config import ConfigError, ExperimentConfig, load_config
from .grid import Grid, ScalarField, make_cutoff, refine_values, save_field_binary, save_field_csv
from .orlicz import OrliczTriple, UnknownLabelError, catalog_structure_function
from .problems import boundary_field

EXIT_PASS = 0
EXIT_NONCONV = 1
EXIT_CONFIG = 2
EXIT_IO = 3


def worker_count() -> int:
    cap = os.environ.get("SOLAB_THREADS")
    cpus = os.cpu_count() or 1
    if cap:
        try:
            return max(1, min(cpus, int(cap)))
        except ValueError:
            return cpus
    return cpus


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def _write_csv(path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2)
        fh.write("\n")


# --------------------------------------------------------------------------
# orlicz-check
# --------------------------------------------------------------------------


def cmd_orlicz_check(cfg: ExperimentConfig, out: str) -> int:
    g = catalog_structure_function(cfg.structure)
    triple = OrliczTriple(g)
    young = oz.young_from_structure(triple)
    rng = np.random.default_rng(cfg.seed)
    checks: list[tuple[str, float, str, bool]] = []

    t_dense = np.geomspace(1e-3, 1e3, 2000)
    d_est, g0_est, ok = oz.verify_exponents(g, t_dense)
    checks.append(("exponent_window_low", d_est, f">= {g.delta - 1e-6}", d_est >= g.delta - 1e-6))
    checks.append(("exponent_window_high", g0_est, f"<= {g.g0 + 1e-6}", g0_est <= g.g0 + 1e-6))

    c2 = oz.doubling_constant(g, t_dense)
    bound = 2.0 ** g.g0 + 1e-6
    checks.append(("doubling_constant", c2, f"<= {bound}", c2 <= bound))

    alphas = rng.uniform(0.05, 5.0, size=2000)
    ts = np.exp(rng.uniform(math.log(1e-2), math.log(1e2), size=2000))
    gt = g(ts)
    envelope = np.maximum(alphas ** g.delta, alphas ** g.g0) * gt
    scaled_margin = float(np.min(envelope - g(alphas * ts)) / np.max(envelope))
    checks.append(("scaled_argument_margin", scaled_margin, ">= -1e-9", scaled_margin >= -1e-9))

    pair_lo = np.exp(rng.uniform(math.log(1e-2), math.log(1e2), size=1000))
    pair_hi = pair_lo * np.exp(rng.uniform(0.01, 3.0, size=1000))
    lemma_fail = 0
    for s, t in zip(pair_lo, pair_hi):
        if not oz.lemma_gG_audit(triple, float(t), float(s)).all_hold:
            lemma_fail += 1
    checks.append(("growth_lemma_failures", float(lemma_fail), "== 0", lemma_fail == 0))

    ss = np.exp(rng.uniform(math.log(1e-2), math.log(10.0), size=10_000))
    tt = np.exp(rng.uniform(math.log(1e-2), math.log(10.0), size=10_000))
    gaps = oz.young_gap(young, ss, tt)
    scale = 1.0 + float(np.max(young(ss)))
    gap_min = float(np.min(gaps)) / scale
    checks.append(("young_gap_min", gap_min, ">= -1e-9", gap_min >= -1e-9))
    s_line = np.geomspace(0.05, 5.0, 50)
    line_gap = oz.young_gap(young, s_line, g(s_line))
    line_err = float(np.max(np.abs(line_gap) / (1.0 + young(s_line))))
    checks.append(("young_equality_line", line_err, "<= 1e-8", line_err <= 1e-8))

    t_round = np.geomspace(1e-2, 1e2, 40)
    conj = oz.conjugate_young(young)
    back = oz.conjugate(conj, t_round)
    direct = young(t_round)
    round_err = float(np.max(np.abs(back - direct) / (1.0 + direct)))
    checks.append(("double_conjugate", round_err, "<= 1e-6", round_err <= 1e-6))

    t_cp = np.geomspace(0.1, 10.0, 100)
    margins = oz.comp_prop_margin(young, t_cp)
    cp_min = float(np.min(margins / (1.0 + young(t_cp))))
    checks.append(("complementary_pair_margin", cp_min, ">= -1e-8", cp_min >= -1e-8))

    quad = oz.YoungFunction(integrand=lambda s: s, label="quad", closed_eval=lambda t: t * t / 2)
    checks.append(("quad_self_conjugate", abs(oz.conjugate(quad, 1.0) - 0.5), "<= 1e-8",
                   abs(oz.conjugate(quad, 1.0) - 0.5) <= 1e-8))
    entropy = oz.YoungFunction(integrand=np.log1p, label="entropy",
                               closed_eval=lambda t: (1 + t) * np.log1p(t) - t)
    err_ent = abs(oz.conjugate(entropy, 1.0) - (math.e - 2.0))
    checks.append(("entropy_exp_conjugate", err_ent, "<= 1e-8", err_ent <= 1e-8))

    payload = {
        "structure": cfg.structure,
        "delta": g.delta,
        "g0": g.g0,
        "delta_estimate": d_est,
        "g0_estimate": g0_est,
        "doubling_constant": c2,
        "checks": [{"name": n, "value": v, "criterion": c, "pass": p} for n, v, c, p in checks],
        "all_pass": all(p for *_, p in checks),
    }
    _write_json(os.path.join(out, "orlicz_report.json"), payload)
    _write_csv(os.path.join(out, "orlicz_report.csv"), ["check", "value", "criterion", "pass"], checks)
    return EXIT_PASS if payload["all_pass"] else EXIT_NONCONV


# --------------------------------------------------------------------------
# operator-check
# --------------------------------------------------------------------------


def _fd_jacobian(triple, z, h_rel=1e-6):
    d = z.shape[-1]
    out = np.empty(z.shape + (d,))
    for j in range(d):
        h = h_rel * np.maximum(np.abs(z[..., j]), 1.0)
        zp = z.copy(); zp[..., j] += h
        zm = z.copy(); zm[..., j] -= h
        out[..., j] = (op_mod.prototype_A(triple, zp) - op_mod.prototype_A(triple, zm)) / (2 * h)[..., None]
    return out


def cmd_operator_check(cfg: ExperimentConfig, out: str) -> int:
    g = catalog_structure_function(cfg.structure)
    triple = OrliczTriple(g)
    spec = op_mod.prototype_operator(triple)
    rng = np.random.default_rng(cfg.seed)
    checks: list[tuple[str, float, str, bool]] = []

    def sample_z(m):
        radii = np.exp(rng.uniform(math.log(1e-2), math.log(1e2), size=m))
        dirs = rng.normal(size=(m, 2 * cfg.n))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        return radii[:, None] * dirs

    z = sample_z(1000)
    da = op_mod.prototype_DA(triple, z)
    fd = _fd_jacobian(triple, z)
    rel = np.max(np.abs(da - fd), axis=(1, 2)) / np.max(np.abs(da), axis=(1, 2))
    checks.append(("jacobian_vs_fd", float(rel.max()), "<= 1e-5", float(rel.max()) <= 1e-5))

    asym = np.max(np.abs(da - np.swapaxes(da, 1, 2)), axis=(1, 2)) / np.max(np.abs(da), axis=(1, 2))
    checks.append(("jacobian_asymmetry", float(asym.max()), "<= 1e-10", float(asym.max()) <= 1e-10))

    eigs = np.linalg.eigvalsh(0.5 * (da + np.swapaxes(da, 1, 2)))
    fv = triple.g(np.linalg.norm(z, axis=1)) / np.linalg.norm(z, axis=1)
    lo_ok = float(np.min(eigs[:, 0] / (min(1.0, g.delta) * fv)))
    hi_ok = float(np.max(eigs[:, -1] / (max(1.0, g.g0) * fv)))
    checks.append(("eigen_bracket_low", lo_ok, ">= 1 - 1e-6", lo_ok >= 1.0 - 1e-6))
    checks.append(("eigen_bracket_high", hi_ok, "<= 1 + 1e-6", hi_ok <= 1.0 + 1e-6))

    z2 = sample_z(10_000)
    xi = rng.normal(size=z2.shape)
    lower, upper, growth = op_mod.structure_margins(spec, triple, z2, xi)
    norm = np.sum(xi * xi, axis=-1) * spec.upper_weight(np.linalg.norm(z2, axis=-1))
    checks.append(("structure_lower_margin", float(np.min(lower / norm)), ">= -1e-9",
                   float(np.min(lower / norm)) >= -1e-9))
    checks.append(("structure_upper_margin", float(np.min(upper / norm)), ">= -1e-9",
                   float(np.min(upper / norm)) >= -1e-9))
    growth_rel = growth / (1.0 + np.linalg.norm(op_mod.prototype_A(triple, z2), axis=-1))
    checks.append(("growth_margin", float(np.min(growth_rel)), ">= -1e-9",
                   float(np.min(growth_rel)) >= -1e-9))

    w2 = sample_z(10_000)
    gap, case, fitted = op_mod.monotonicity_gap(spec, triple, z2, w2)
    checks.append(("monotonicity_gap_min", float(np.min(gap)), ">= 0", float(np.min(gap)) >= -1e-12))
    fit_min = float(np.nanmin(fitted))
    checks.append(("monotonicity_fitted_lower", fit_min, "> 0 (recorded)", fit_min > 0))

    ell = op_mod.ellipticity_margin(spec, triple, z2, c_fit=1.0)
    ell_rel = float(np.min(ell / (1.0 + np.abs(ell))))
    checks.append(("ellipticity_margin", ell_rel, ">= -1e-9", ell_rel >= -1e-9))

    plap_rows = []
    for p in (1.5, 2.0, 3.0):
        gaps, ratios = op_mod.p_laplace_gap(p, z2, w2)
        plap_rows.append((p, float(np.min(gaps)), float(np.min(ratios))))
        checks.append((f"p_laplace_ratio_min_p={p:g}", float(np.min(ratios)), "> 0",
                       float(np.min(ratios)) > 0))

    reg_rows = []
    probe = sample_z(2000)
    prev_sup = None
    sup_decreasing = True
    for eps in (1e-2, 5e-3, 2.5e-3, 1e-3):
        rspec, params = op_mod.regularize(spec, triple, eps)
        sup_diff = float(np.max(np.linalg.norm(rspec.A(probe) - spec.A(probe), axis=-1)))
        reg_rows.append((eps, params.m1, params.m2, params.L_tilde, sup_diff))
        if prev_sup is not None and sup_diff > prev_sup:
            sup_decreasing = False
        prev_sup = sup_diff
        m1_ref = float(triple.g(np.asarray(eps)) / eps)
        m2_ref = float(triple.g(np.asarray(1.0 / eps)) * eps)
        checks.append((f"regularized_m1_eps={eps:g}", params.m1, "== F(eps)",
                       abs(params.m1 - m1_ref) <= 1e-12 * (1 + abs(m1_ref))))
        checks.append((f"regularized_m2_eps={eps:g}", params.m2, "== F(1/eps)",
                       abs(params.m2 - m2_ref) <= 1e-12 * (1 + abs(m2_ref))))
    checks.append(("regularized_sup_diff_decreasing", float(sup_decreasing), "monotone", sup_decreasing))

    payload = {
        "structure": cfg.structure,
        "seed": cfg.seed,
        "checks": [{"name": n, "value": v, "criterion": c, "pass": p} for n, v, c, p in checks],
        "p_laplace": [{"p": p, "gap_min": a, "ratio_min": b} for p, a, b in plap_rows],
        "regularization": [{"eps": e, "m1": m1, "m2": m2, "L_tilde": lt, "sup_diff": sd}
                           for e, m1, m2, lt, sd in reg_rows],
        "all_pass": all(p for *_, p in checks),
    }
    _write_json(os.path.join(out, "operator_report.json"), payload)
    _write_csv(os.path.join(out, "operator_report.csv"), ["check", "value", "criterion", "pass"], checks)
    _write_csv(os.path.join(out, "operator_regularization.csv"),
               ["eps", "m1", "m2", "L_tilde", "sup_diff"], reg_rows)
    return EXIT_PASS if payload["all_pass"] else EXIT_NONCONV


# --------------------------------------------------------------------------
# solve
# --------------------------------------------------------------------------


def _build_grid(cfg: ExperimentConfig, level: int = 0) -> Grid:
    res = [(r - 1) * 2 ** level + 1 for r in cfg.resolutions()]
    return Grid.from_box(cfg.n, cfg.box, res)


def _solve_level(cfg: ExperimentConfig, triple: OrliczTriple, level: int, warm=None):
    grid = _build_grid(cfg, level)
    prob = sv.DirichletProblem(grid=grid, triple=triple,
                               boundary=boundary_field(cfg.boundary, grid),
                               eps=cfg.epsilon, residual_tol=cfg.residual_tol,
                               max_iters=cfg.max_iters)
    init = cfg.init if warm is None else refine_values(warm.values)
    return prob, *sv.solve_dirichlet(prob, init=init)


def cmd_solve(cfg: ExperimentConfig, out: str) -> int:
    triple = OrliczTriple(catalog_structure_function(cfg.structure))
    prob, sol, report = _solve_level(cfg, triple, 0)
    save_field_binary(os.path.join(out, "solution.bin"), sol)
    save_field_csv(os.path.join(out, "solution.csv"), sol)
    _write_json(os.path.join(out, "solve_report.json"), {
        "structure": cfg.structure,
        "boundary": cfg.boundary,
        "resolution": cfg.resolutions(),
        "epsilon": cfg.epsilon,
        "iterations": report.iterations,
        "final_energy": report.final_energy,
        "weak_residual": report.weak_residual,
        "gradient_cap_observed": report.gradient_cap_observed,
        "converged": report.converged,
        "energy_history_head": report.energy_history[:16],
        "energy_history_tail": report.energy_history[-16:],
    })
    return EXIT_PASS if report.converged else EXIT_NONCONV


# --------------------------------------------------------------------------
# audit / estimate
# --------------------------------------------------------------------------


def _audit_jobs(cfg: ExperimentConfig):
    jobs = []
    for gamma in cfg.gammas:
        if gamma >= 0:
            jobs.append(("caccioppoli_T", vf.caccioppoli_T_audit, {"gamma": gamma}))
            jobs.append(("caccioppoli_X", vf.caccioppoli_X_audit, {"gamma": gamma}))
        if gamma >= 1:
            jobs.append(("horizontal_estimate", vf.horizontal_estimate_audit, {"gamma": gamma}))
            jobs.append(("vertical_estimate", vf.vertical_estimate_audit, {"gamma": gamma}))
            for omega in cfg.omegas:
                jobs.append(("reverse", vf.reverse_audit, {"gamma": gamma, "omega": omega}))
    return jobs


def cmd_audit(cfg: ExperimentConfig, out: str, estimate_only: bool = False) -> int:
    if cfg.refinements < 1:
        raise ConfigError("audit needs at least 2 refinement levels (refinements >= 1)")
    triple = OrliczTriple(catalog_structure_function(cfg.structure))
    jobs = [] if estimate_only else _audit_jobs(cfg)
    levels = cfg.refinements + 1
    per_level: dict[tuple, list[vf.AuditReport]] = {}
    ratio_rows = []
    moser_rows = []
    csv_rows = []
    all_converged = True
    warm = None
    final_moser = None
    for level in range(levels):
        prob, sol, report = _solve_level(cfg, triple, level, warm=warm)
        warm = sol
        all_converged &= report.converged
        grid = prob.grid
        h = float(np.max(grid.spacing))
        ratio = vf.lipschitz_ratio(sol, triple, cfg.center, cfg.radius, cfg.sigma)
        ratio_rows.append((level, h, ratio))
        trace = vf.moser_trace(sol, triple, cfg.center, cfg.radius, cfg.sigma, cfg.moser_levels)
        final_moser = trace
        moser_rows.extend((level, h, row["gamma"], row["radius"], row["exponent"],
                           row["norm"], row["inner_norm"]) for row in trace["levels"])
        if jobs:
            eta = make_cutoff(grid, cfg.center, cfg.eta_inner, cfg.eta_outer)

            def run(job):
                name, fn, kw = job
                return fn(sol, triple, eta, eps=cfg.epsilon, **kw)

            with ThreadPoolExecutor(max_workers=worker_count()) as pool:
                results = list(pool.map(run, jobs))
            for (name, _, kw), rep in zip(jobs, results):
                key = (name, kw.get("gamma"), kw.get("omega"))
                per_level.setdefault(key, []).append(rep)
                csv_rows.append((name, kw.get("gamma", ""), rep.lhs, rep.rhs,
                                 rep.fitted_constant, h, rep.passed,
                                 kw.get("omega", ""), level))

    finals = [vf.attach_refinement(reps) for key, reps in sorted(per_level.items(),
                                                                 key=lambda kv: str(kv[0]))]
    ratios = [r for *_, r in ratio_rows]
    ratio_ok = all(np.isfinite(ratios)) and (max(ratios) <= 1.25 * min(ratios) if min(ratios) > 0 else False)
    sup = final_moser["inner_sup"]
    last_norm = final_moser["levels"][-1]["inner_norm"]
    moser_ok = sup == 0 or abs(last_norm - sup) <= 0.05 * sup

    _write_csv(os.path.join(out, "estimate_ratio.csv"), ["level", "h", "lipschitz_ratio"], ratio_rows)
    _write_csv(os.path.join(out, "moser_trace.csv"),
               ["level", "h", "gamma", "radius", "exponent", "norm", "inner_norm"], moser_rows)
    if not estimate_only:
        _write_csv(os.path.join(out, "audit_report.csv"),
                   ["name", "gamma", "lhs", "rhs", "fitted_constant", "h", "pass",
                    "omega", "level"],
                   csv_rows)
        plot_rows = [(row[0], row[1], row[7], row[8], row[5], row[4]) for row in csv_rows]
        _write_csv(os.path.join(out, "plot_fitted_vs_h.csv"),
                   ["name", "gamma", "omega", "level", "h", "fitted_constant"], plot_rows)
    _write_json(os.path.join(out, "audit_report.json"), {
        "structure": cfg.structure,
        "boundary": cfg.boundary,
        "sigma": cfg.sigma,
        "metric": "gauge",  # all balls use the homogeneous gauge norm
        "lipschitz_ratios": [{"level": l, "h": h, "ratio": r} for l, h, r in ratio_rows],
        "lipschitz_stable_25pct": bool(ratio_ok),
        "moser_final_vs_sup": {"final_inner_norm": last_norm, "inner_sup": sup, "pass": bool(moser_ok)},
        "audits": [r.as_record() for r in finals],
        "converged": bool(all_converged),
        "all_pass": bool(all_converged and ratio_ok and moser_ok and all(r.passed for r in finals)),
    })
    if not all_converged:
        return EXIT_NONCONV
    ok = ratio_ok and moser_ok and all(r.passed for r in finals)
    return EXIT_PASS if ok else EXIT_NONCONV


# --------------------------------------------------------------------------
# entry point
# --------------------------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="solab",
                                 description="sub-elliptic Orlicz laboratory: checks, solves, audits")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, doc in [("orlicz-check", "structure/Young-function audit suite"),
                      ("operator-check", "operator structure and regularization sweeps"),
                      ("solve", "solve the configured Dirichlet problem"),
                      ("audit", "solve over refinements and audit every inequality"),
                      ("estimate", "audit restricted to the sup-bound ratio and the iteration trace")]:
        p = sub.add_parser(name, help=doc)
        p.add_argument("--config", required=True, help="JSON or key=value config file")
        p.add_argument("--out", default=None, help="output directory (default: config's out)")
        p.add_argument("--seed", type=int, default=None, help="override the sampling seed")
        p.add_argument("--refinements", type=int, default=None, help="override refinement count")
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = load_config(args.config, overrides={"seed": args.seed, "refinements": args.refinements})
        out = args.out if args.out is not None else cfg.out
        os.makedirs(out, exist_ok=True)
        if args.command == "orlicz-check":
            return cmd_orlicz_check(cfg, out)
        if args.command == "operator-check":
            return cmd_operator_check(cfg, out)
        if args.command == "solve":
            return cmd_solve(cfg, out)
        if args.command == "audit":
            return cmd_audit(cfg, out, estimate_only=False)
        if args.command == "estimate":
            return cmd_audit(cfg, out, estimate_only=True)
        raise ConfigError(f"unknown command {args.command!r}")
    except (ConfigError, UnknownLabelError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
