"""Command line entry point.

Subcommands: check-phi, validate-f, solve-radial, minimize, sweep-lambda,
verify, reproduce.  All take --config; outputs are CSV files (with the
config hash in their headers) plus SVG figures rendered next to them when
plots are enabled.  Exit status is 0 exactly when everything requested
passed or converged.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import acceptance, plots
from .config import ConfigError, ENV_PREFIX, load_config
from .energy import build_plateau, lambda_threshold_estimate, minimize, \
    minimize_multistart, sweep
from .errors import PhilapError
from .grids import Domain, GridFunction
from .nfunction import certify_growth, log_grid
from .nonlinearity import truncate, validate
from .radial import find_band_solution
from .reporting import grid_function_from_csv, write_csv, write_grid_csv, \
    write_profile_csv
from .verify import check_necessary_condition, check_positivity, \
    check_pucci_serrin, weak_residual


def _common(parser, lam=False, band=False):
    parser.add_argument("--config", required=True, help="TOML experiment file")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--out-dir", default=None)
    parser.add_argument("--grid", type=int, default=None,
                        help="override the domain grid resolution")
    parser.add_argument("--threads", type=int,
                        default=int(os.environ.get(ENV_PREFIX + "THREADS", "1")),
                        help="worker cap for sweeps (runs are deterministic "
                        "regardless)")
    if lam:
        parser.add_argument("--lambda", dest="lam", type=float, required=True)
    if band:
        parser.add_argument("--band", type=int, required=True,
                            help="band index (sup-norm interval number)")


def build_parser():
    ap = argparse.ArgumentParser(
        prog="philap",
        description="Multiple positive solutions of quasilinear Dirichlet "
                    "problems with sign-changing forcing")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check-phi", help="certify the generator growth bounds")
    _common(p)

    p = sub.add_parser("validate-f", help="check the forcing skeleton")
    _common(p)
    p.add_argument("--skip-f3", action="store_true",
                   help="do not require positive band integrals")

    p = sub.add_parser("solve-radial", help="shooting solve on the ball")
    _common(p, lam=True, band=True)

    p = sub.add_parser("minimize", help="minimize one truncated energy")
    _common(p, lam=True, band=True)
    p.add_argument("--multistart", type=int, default=None)

    p = sub.add_parser("sweep-lambda", help="scan a lambda grid for occupancy")
    _common(p)
    p.add_argument("--lambda-min", type=float, default=None)
    p.add_argument("--lambda-max", type=float, default=None)
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--multistart", type=int, default=None)

    p = sub.add_parser("verify", help="post-hoc checks on a stored solution")
    _common(p)
    p.add_argument("--solution", required=True, help="CSV written by this tool")

    p = sub.add_parser("reproduce", help="run the acceptance criteria")
    _common(p)
    p.add_argument("--criteria", default=None,
                   help="comma-separated subset, e.g. 1,2,10")
    return ap


def cmd_check_phi(cfg, args):
    out = cfg.output.out_dir
    try:
        g1, g2, gam1, gam2 = certify_growth(cfg.phi, log_grid(1e-6, 1e6, 100_000))
        ok = True
        detail = "certified"
    except PhilapError as exc:
        ok = False
        g1, g2 = cfg.phi.Gamma1, cfg.phi.Gamma2
        gam1, gam2 = cfg.phi.gamma1, cfg.phi.gamma2
        detail = str(exc)
    rows = [[cfg.phi.kind, cfg.phi.param if cfg.phi.param is not None else "",
             g1, g2, gam1, gam2, ok, detail]]
    path = write_csv(out / "growth_report.csv",
                     ["kind", "param", "Gamma1", "Gamma2", "gamma1", "gamma2",
                      "certified", "detail"],
                     rows, cfg.config_hash)
    print(f"generator {cfg.phi!r}: Gamma1={g1:.6g} Gamma2={g2:.6g} "
          f"gamma1={gam1:.6g} gamma2={gam2:.6g} [{detail}]")
    print(f"wrote {path}")
    if cfg.output.plots:
        print("wrote", plots.plot_flux_ratio(out / "flux_ratio.svg", cfg.phi))
    return 0 if ok else 1


def cmd_validate_f(cfg, args):
    rep = validate(cfg.f, check_f3=not args.skip_f3)
    print(rep)
    rows = [["band_integral", k + 1, v, ""]
            for k, v in enumerate(rep.band_integrals)]
    rows += [["violation", v.condition, v.value, v.message]
             for v in rep.violations]
    rows += [["truncation_jump", k, fv, "cut is discontinuous"]
             for k, fv in rep.truncation_jumps]
    path = write_csv(cfg.output.out_dir / "forcing_report.csv",
                     ["record", "which", "value", "note"], rows,
                     cfg.config_hash)
    print(f"wrote {path}")
    return 0 if rep.ok else 1


def cmd_solve_radial(cfg, args):
    if cfg.domain.shape != "ball":
        print("solve-radial requires a ball domain", file=sys.stderr)
        return 2
    out = cfg.output.out_dir
    rep = find_band_solution(cfg.phi, cfg.f, args.lam, cfg.domain.dim,
                             cfg.domain.radius, args.band,
                             h=cfg.solver.rk_step,
                             samples=cfg.solver.scan_samples)
    print(f"band {args.band} at lambda={args.lam:g}: found={rep.found} "
          f"({rep.diagnostics})")
    rows = [[rep.k, rep.lam, d, p.sup_norm, p.first_zero,
             p.max_identity_residual(cfg.f), rep.multiple_roots]
            for d, p in zip(rep.d_values, rep.profiles)]
    path = write_csv(out / "solve_report.csv",
                     ["band", "lambda", "d", "supnorm", "first_zero",
                      "identity_residual", "multiple_roots"],
                     rows, cfg.config_hash)
    print(f"wrote {path}")
    for i, prof in enumerate(rep.profiles):
        ppath = write_profile_csv(out / f"profile_band{args.band}_root{i}.csv",
                                  prof, cfg.f, cfg.config_hash)
        print(f"wrote {ppath}")
        if cfg.output.plots:
            print("wrote", plots.plot_radial_profile(
                out / f"profile_band{args.band}_root{i}.svg", prof, cfg.f))
    return 0 if rep.found else 1


def cmd_minimize(cfg, args):
    k = args.band + 1 if cfg.f.m > 1 else 1   # band k lives in truncation k+1
    count = args.multistart if args.multistart is not None \
        else cfg.solver.multistart
    reps = minimize_multistart(cfg.phi, cfg.f, cfg.domain, k, args.lam,
                               multistart=count, gtol=cfg.solver.gtol,
                               max_iter=cfg.solver.max_iter,
                               rng=cfg.rng(f"minimize-k{k}-{args.lam}"))
    out = cfg.output.out_dir
    rows = [[r.k, r.lam, r.energy, r.sup_norm, r.grad_norm, r.in_band,
             r.converged, r.init_label] for r in reps]
    path = write_csv(out / "energy_report.csv",
                     ["k", "lambda", "energy", "supnorm", "grad_norm",
                      "band_occupied", "converged", "init"],
                     rows, cfg.config_hash)
    best = reps[0]
    print(f"best run: init={best.init_label} energy={best.energy:.6g} "
          f"sup={best.sup_norm:.6g} converged={best.converged} "
          f"in_band={best.in_band}")
    print(f"wrote {path}")
    gpath = write_grid_csv(out / "minimizer.csv", best.minimizer, lam=args.lam,
                           config_hash=cfg.config_hash,
                           extra_meta={"k": best.k})
    print(f"wrote {gpath}")
    if cfg.output.plots:
        print("wrote", plots.plot_grid_function(out / "minimizer.svg",
                                                best.minimizer, cfg.f))
    return 0 if best.converged else 1


def cmd_sweep(cfg, args):
    sv = cfg.solver
    lo = args.lambda_min if args.lambda_min is not None else sv.lambda_min
    hi = args.lambda_max if args.lambda_max is not None else sv.lambda_max
    steps = args.steps if args.steps is not None else sv.lambda_steps
    count = args.multistart if args.multistart is not None else sv.multistart
    if sv.lambda_scale == "linear":
        lams = np.linspace(lo, hi, steps)
    else:
        lams = np.geomspace(lo, hi, steps)
    sw = sweep(cfg.phi, cfg.f, cfg.domain, lams, multistart=count,
               gtol=sv.gtol, max_iter=sv.max_iter, seed=cfg.seed,
               delta=sv.delta)
    out = cfg.output.out_dir
    rows = []
    for li, lam in enumerate(sw.lambdas):
        for k in range(2, cfg.f.m + 1):
            best = sw.best(k, li) or sw.reports[(k, li)][0]
            rows.append([k, lam, best.energy, best.sup_norm, best.grad_norm,
                         sw.occupancy[(k, li)]])
    path = write_csv(out / "sweep_report.csv",
                     ["k", "lambda", "energy", "supnorm", "grad_norm",
                      "band_occupied"],
                     rows, cfg.config_hash,
                     meta={"lambda_bar": sw.lambda_bar,
                           "analytic_max": max(t.lam for t in sw.thresholds.values()),
                           "threshold_consistent": sw.threshold_consistent})
    if sw.lambda_bar is None:
        print("lambda_bar: not detected on this grid")
    else:
        print(f"lambda_bar = {sw.lambda_bar:g} "
              f"(analytic ceiling {max(t.lam for t in sw.thresholds.values()):.4g}, "
              f"consistent={sw.threshold_consistent})")
    for k, t in sw.thresholds.items():
        print(f"  threshold k={k}: lambda_k={t.lam:.6g} eta={t.eta:.6g} "
              f"delta={t.delta:.4g}")
    print(f"wrote {path}")
    if cfg.output.plots:
        print("wrote", plots.plot_occupancy(out / "occupancy.svg", sw, cfg.f))
    return 0


def cmd_verify(cfg, args):
    gf, lam = grid_function_from_csv(args.solution)
    if lam is None:
        print("solution file lacks a lambda record; cannot verify",
              file=sys.stderr)
        return 2
    checks = []
    wr = weak_residual(cfg.phi, cfg.f, lam, gf, trials=32, seed=cfg.seed)
    from .verify import VerificationCheck
    checks.append(VerificationCheck(
        name="weak_residual", passed=wr <= 1e-3, measured=wr, tolerance=1e-3,
        reference="normalized weak-form defect against seeded test bumps"))
    try:
        checks.append(check_necessary_condition(gf, cfg.f))
    except PhilapError as exc:
        print(f"necessary-condition check skipped: {exc}")
    if cfg.f.f0 > 0.0:
        checks.append(check_positivity(gf, cfg.f))
        sup = gf.sup_norm
        a_idx = int(np.searchsorted(cfg.f.a_nodes, sup))
        a_cap = float(cfg.f.a_nodes[min(a_idx, cfg.f.m - 1)])
        checks.append(check_pucci_serrin(cfg.phi, cfg.f, lam, a_cap))
        checks.append(check_pucci_serrin(cfg.phi, cfg.f, lam, a_cap,
                                         use_flux_variant=True))
    for c in checks:
        print(c)
    path = write_csv(cfg.output.out_dir / "verification_report.csv",
                     ["check", "status", "measured", "tolerance", "reference",
                      "detail"],
                     [c.row() for c in checks], cfg.config_hash,
                     meta={"solution": args.solution, "lambda": lam})
    print(f"wrote {path}")
    return 0 if all(c.passed for c in checks) else 1


def cmd_reproduce(cfg, args):
    ids = None
    if args.criteria:
        ids = {int(x) for x in args.criteria.split(",")}
    ctx = acceptance.AcceptanceContext(seed=cfg.seed or 20240)
    results = acceptance.run_criteria(ids=ids, ctx=ctx)
    path = write_csv(cfg.output.out_dir / "acceptance_report.csv",
                     ["criterion", "name", "passed", "seconds", "detail"],
                     [[r.cid, r.name, r.passed, round(r.seconds, 2), r.detail]
                      for r in results],
                     cfg.config_hash)
    print(f"wrote {path}")
    n_pass = sum(r.passed for r in results)
    print(f"{n_pass}/{len(results)} criteria passed")
    return 0 if n_pass == len(results) else 1


COMMANDS = {
    "check-phi": cmd_check_phi,
    "validate-f": cmd_validate_f,
    "solve-radial": cmd_solve_radial,
    "minimize": cmd_minimize,
    "sweep-lambda": cmd_sweep,
    "verify": cmd_verify,
    "reproduce": cmd_reproduce,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, grid=args.grid, seed=args.seed,
                          out_dir=args.out_dir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        return COMMANDS[args.command](cfg, args)
    except PhilapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
