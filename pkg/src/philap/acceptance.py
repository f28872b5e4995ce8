"""The acceptance gate: ten end-to-end criteria at desk scale.

Each criterion runs against frozen fixtures (the canonical two- and
three-hump skeletons, the three built-in generators) and returns a
CriterionResult; the CLI `reproduce` subcommand and the acceptance test
module both drive these functions, so the gate is one body of code.

Heavier artifacts (lambda sweeps, ball solves) are cached on the shared
AcceptanceContext because several criteria interrogate the same runs.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .energy import (build_plateau, discretize_energy, energy_gradient,
                     lambda_threshold_estimate, minimize, minimize_multistart,
                     sweep)
from .errors import PhilapError
from .grids import Domain, GridFunction
from .nfunction import PhiSpec, certify_growth, check_zeta_bounds, log_grid, \
    luxemburg_norm
from .nonlinearity import NonlinearitySpec, truncate
from .radial import energy_identity_integral, check_bk_exceeded, \
    find_band_solution, shoot
from .verify import check_band_ordering, check_necessary_condition, \
    check_positivity, weak_residual


def canonical_m2():
    return NonlinearitySpec(
        [1.0, 2.0, 3.0],
        [(0, 1), (1, 0), (1.5, -0.2), (2, 0), (2.5, 1), (3, 0)])


def canonical_m3():
    return NonlinearitySpec(
        [1.0, 2.0, 3.0, 4.0, 5.0],
        [(0, 1), (1, 0), (1.5, -0.2), (2, 0), (2.5, 1), (3, 0),
         (3.5, -0.2), (4, 0), (4.5, 1), (5, 0)])


def constant_forcing(value=1.0, top=1.0):
    return NonlinearitySpec([top], [(0.0, value), (top, value)])


def linear_forcing(top=2.0):
    return NonlinearitySpec([top], [(0.0, 0.0), (top, top)])


@dataclass
class CriterionResult:
    cid: int
    name: str
    passed: bool
    detail: str
    seconds: float

    def line(self):
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] criterion {self.cid} ({self.name}, {self.seconds:.1f}s): {self.detail}"


def _timed(cid, name, fn):
    t0 = time.time()
    try:
        passed, detail = fn()
    except PhilapError as exc:
        passed, detail = False, f"raised {type(exc).__name__}: {exc}"
    return CriterionResult(cid, name, passed, detail, time.time() - t0)


class AcceptanceContext:
    """Shared fixtures and cached heavy runs for the criteria."""

    # lambda grids bracketing the occupation thresholds of each generator
    SWEEP_GRIDS = {
        "p_power": np.geomspace(20.0, 2000.0, 12),
        "curvature": np.geomspace(2e3, 2e6, 12),
    }

    def __init__(self, seed=20240):
        self.seed = seed
        self.f2 = canonical_m2()
        self.f3 = canonical_m3()
        self.phis = {
            "p_power": PhiSpec.p_power(2.0),
            "curvature": PhiSpec.curvature(2.0),
            "plog": PhiSpec.plog(2.0),
        }
        self._multiplicity = {}
        self._ball = None

    # -- cached heavy artifacts --------------------------------------------

    def multiplicity(self, kind):
        """Criterion-6 artifact: sweep at grid 400 plus the 2*lambda_bar runs."""
        if kind in self._multiplicity:
            return self._multiplicity[kind]
        phi = self.phis[kind]
        dom = Domain.interval(1.0, 400)
        sw = sweep(phi, self.f3, dom, self.SWEEP_GRIDS[kind], multistart=2,
                   gtol=1e-8, seed=self.seed, delta=1.0 / 16.0)
        result = {"sweep": sw, "lambda_bar": sw.lambda_bar, "at_double": {}}
        if sw.lambda_bar is not None:
            lam2 = 2.0 * sw.lambda_bar
            rng = np.random.default_rng([self.seed, 77])
            for k in (2, 3):
                reps = minimize_multistart(phi, self.f3, dom, k, lam2,
                                           multistart=2, gtol=1e-8, rng=rng)
                in_band = [r for r in reps if r.converged and r.in_band]
                result["at_double"][k] = in_band[0] if in_band else None
            result["lam2"] = lam2
        self._multiplicity[kind] = result
        return result

    def ball_case(self):
        """Criterion-8 artifact: ball N=2 R=1, both solution routes."""
        if self._ball is not None:
            return self._ball
        phi = self.phis["p_power"]
        f = self.f2
        tf = truncate(f, 2)
        dom = Domain.ball(1.0, 2, 200)
        lam_star = None
        best = None
        for lam in (10.0, 20.0, 40.0, 80.0, 160.0):
            cand = None
            for init in (GridFunction.zeros(dom),
                         build_plateau(dom, 0.25, tf.a_k)):
                r = minimize(phi, tf, lam, init, gtol=1e-9)
                if r.converged and (cand is None or r.energy < cand.energy):
                    cand = r
            if cand is not None and cand.in_band:
                lam_star, best = lam, cand
                break
        solve = None
        if lam_star is not None:
            solve = find_band_solution(phi, f, lam_star, 2, 1.0, 1, h=1e-3)
        self._ball = {"lam": lam_star, "energy_report": best, "solve": solve,
                      "domain": dom}
        return self._ball


# -- the ten criteria ---------------------------------------------------------

def criterion_1(ctx):
    """Growth certification: closed forms plus sampled verification."""
    def run():
        grid = log_grid(1e-6, 1e6, 100_000)
        checks = []
        got = certify_growth(ctx.phis["curvature"], grid)
        checks.append(got == (1.0, 3.0, 2.0, 4.0))
        g = certify_growth(ctx.phis["plog"], grid)
        checks.append((g[0], g[1]) == (1.0, 2.0))
        for p in (1.5, 2.0, 3.0):
            spec = PhiSpec.p_power(p)
            g = certify_growth(spec, grid)
            ratios = spec.tphi_ratio(grid)
            checks.append(g[0] == g[1] == p - 1.0
                          and float(np.max(np.abs(ratios - (p - 1.0)))) < 1e-12)
        ok = all(checks)
        return ok, (f"curvature(2) -> (1,3,2,4); plog(2) -> (1,2); "
                    f"p_power ratio constant; {grid.size} samples, 0 violations")
    return _timed(1, "growth certification", run)


def criterion_2(ctx):
    """Flux inversion round trip at relative 1e-10 over [1e-6, 1e6]."""
    def run():
        t = np.geomspace(1e-6, 1e6, 2000)
        worst = 0.0
        for kind, spec in ctx.phis.items():
            z = spec.flux_inverse(spec.flux(t))
            worst = max(worst, float(np.max(np.abs(z - t) / t)))
        return worst <= 1e-10, f"max relative round-trip error {worst:.2e}"
    return _timed(2, "flux inversion round trip", run)


def criterion_3(ctx):
    """Radial closed forms and the marching order check."""
    def run():
        phi = ctx.phis["p_power"]
        fone = constant_forcing()
        prof = shoot(phi, fone, 1.0, 2, 1.0, 1e-3, 3.0)
        err_a = float(np.max(np.abs(prof.u - (1.0 - prof.r ** 2 / 4.0))))
        zero_a = abs(prof.first_zero - 2.0)
        flin = linear_forcing()
        prof_b = shoot(phi, flin, 1.0, 1, 1.0, 1e-3, 3.0)
        zero_b = abs(prof_b.first_zero - np.pi / 2.0)
        res_h = shoot(phi, flin, 1.0, 1, 1.0, 0.02, 3.0) \
            .max_identity_residual(flin, r_min=0.5)
        res_h2 = shoot(phi, flin, 1.0, 1, 1.0, 0.01, 3.0) \
            .max_identity_residual(flin, r_min=0.5)
        ratio = res_h / max(res_h2, 1e-300)
        ok = err_a <= 1e-6 and zero_a <= 1e-6 and zero_b <= 1e-6 and ratio >= 8.0
        return ok, (f"sup err {err_a:.1e}, zeros off by {zero_a:.1e}/{zero_b:.1e}, "
                    f"halving cuts residual {ratio:.1f}x")
    return _timed(3, "radial closed-form oracles", run)


def criterion_4(ctx):
    """Discrete gradient vs central differences, 1D and 2D."""
    def run():
        rng = np.random.default_rng([ctx.seed, 4])
        tf = truncate(ctx.f2, 2)
        worst = 0.0
        domains = [Domain.interval(1.0, 48), Domain.rectangle(1.0, 1.0, 12, 12)]
        for spec in ctx.phis.values():
            for dom in domains:
                for _ in range(20):
                    u = GridFunction(dom, rng.uniform(-0.5, 3.2, dom.node_shape()))
                    v = rng.uniform(-1.0, 1.0, dom.node_shape())
                    v[dom.boundary_mask()] = 0.0
                    lam = float(rng.uniform(0.5, 20.0))
                    g = energy_gradient(spec, tf, lam, u).values
                    eps = 1e-6
                    ep = discretize_energy(spec, tf, lam,
                                           GridFunction(dom, u.values + eps * v, dirichlet=False))
                    em = discretize_energy(spec, tf, lam,
                                           GridFunction(dom, u.values - eps * v, dirichlet=False))
                    fd = (ep - em) / (2.0 * eps)
                    an = float(np.sum(g * v))
                    rel = abs(an - fd) / max(abs(an), abs(fd), 1e-12)
                    worst = max(worst, rel)
        return worst <= 1e-6, f"worst relative error {worst:.2e} over 120 fields"
    return _timed(4, "gradient consistency", run)


def criterion_5(ctx):
    """Comparison box for every converged minimizer of the k=2 truncation."""
    def run():
        f = ctx.f2
        dom = Domain.interval(1.0, 200)
        lams = np.geomspace(1.0, 2e5, 10)
        violations = 0
        runs = 0
        converged = 0
        for kind, spec in ctx.phis.items():
            rng = np.random.default_rng([ctx.seed, 5])
            for lam in lams:
                reps = minimize_multistart(spec, f, dom, 2, float(lam),
                                           multistart=1, gtol=1e-8, rng=rng)
                for r in reps:
                    runs += 1
                    if r.converged:
                        converged += 1
                        if not r.within_bounds:
                            violations += 1
        ok = violations == 0 and converged >= 0.9 * runs
        return ok, (f"{violations} box violations over {converged}/{runs} "
                    "converged minimizations, 10-point lambda grid, 3 generators")
    return _timed(5, "truncation comparison box", run)


def criterion_6(ctx):
    """Multiplicity at desk scale: both upper bands occupied past lambda_bar."""
    def run():
        details = []
        ok = True
        for kind in ("p_power", "curvature"):
            art = ctx.multiplicity(kind)
            lb = art["lambda_bar"]
            if lb is None:
                ok = False
                details.append(f"{kind}: no lambda_bar detected")
                continue
            reps = [art["at_double"].get(2), art["at_double"].get(3)]
            if any(r is None for r in reps):
                ok = False
                details.append(f"{kind}: band unoccupied at 2*lambda_bar")
                continue
            chain = check_band_ordering(reps, ctx.f3)
            analytic = max(t.lam for t in art["sweep"].thresholds.values())
            ok_k = chain.passed and lb <= analytic
            ok = ok and ok_k
            details.append(
                f"{kind}: lambda_bar={lb:.4g} (<= analytic {analytic:.3g}), "
                f"sup norms {reps[0].sup_norm:.4f}/{reps[1].sup_norm:.4f}, "
                f"chain {'ok' if chain.passed else 'BROKEN'}")
        return ok, "; ".join(details)
    return _timed(6, "multiplicity bands", run)


def criterion_7(ctx):
    """Necessary conditions on every accepted solution."""
    def run():
        failures = []
        count = 0
        for kind in ("p_power", "curvature"):
            art = ctx.multiplicity(kind)
            for k, rep in art.get("at_double", {}).items():
                if rep is None:
                    failures.append(f"{kind} band {k - 1} missing")
                    continue
                count += 1
                if not check_necessary_condition(rep, ctx.f3).passed:
                    failures.append(f"{kind} k={k} band integral")
        ball = ctx.ball_case()
        if ball["solve"] is None or not ball["solve"].found:
            failures.append("no radial band solution")
        else:
            for prof in ball["solve"].profiles:
                count += 1
                idc = energy_identity_integral(prof, ctx.f2)
                if idc.integral_to_sup <= 0.0:
                    failures.append("radial: integral a_k..sup not positive")
                if not check_bk_exceeded(prof, ctx.f2):
                    failures.append("radial: sup below the hump top b_k")
                if not check_necessary_condition(prof, ctx.f2).passed:
                    failures.append("radial: band integral")
                if not check_positivity(prof, ctx.f2).passed:
                    failures.append("radial: interior positivity")
        ok = not failures
        return ok, (f"{count} solutions checked, no violations" if ok
                    else "; ".join(failures))
    return _timed(7, "necessary conditions", run)


def criterion_8(ctx):
    """Shooting and minimization agree on the ball at grid 200."""
    def run():
        ball = ctx.ball_case()
        if ball["lam"] is None:
            return False, "energy route never occupied the band"
        solve = ball["solve"]
        if solve is None or not solve.found:
            return False, f"shooting found no root: {solve.diagnostics if solve else 'n/a'}"
        r_nodes = ball["domain"].node_coords()
        u_min = ball["energy_report"].minimizer.values
        diff = min(float(np.max(np.abs(np.interp(r_nodes, p.r, p.u) - u_min)))
                   for p in solve.profiles)
        return diff <= 1e-2, (f"lambda={ball['lam']:g}, best-matching root "
                              f"sup-diff {diff:.2e} over {len(solve.profiles)} root(s)")
    return _timed(8, "cross-module agreement", run)


def criterion_9(ctx):
    """Weak residuals of the accepted solutions, decreasing under refinement."""
    def run():
        rows = []
        ok = True
        for kind in ("p_power", "curvature"):
            art = ctx.multiplicity(kind)
            lam2 = art.get("lam2")
            if lam2 is None:
                return False, f"{kind}: nothing accepted"
            phi = ctx.phis[kind]
            for k, rep in art["at_double"].items():
                if rep is None:
                    return False, f"{kind} band {k - 1}: nothing accepted"
                base = minimize(phi, truncate(ctx.f3, k), lam2,
                                rep.minimizer.refined(2), gtol=1e-8)
                fine = minimize(phi, truncate(ctx.f3, k), lam2,
                                base.minimizer.refined(2), gtol=1e-8)
                wr_base = weak_residual(phi, ctx.f3, lam2, base.minimizer,
                                        trials=32, seed=ctx.seed)
                wr_fine = weak_residual(phi, ctx.f3, lam2, fine.minimizer,
                                        trials=32, seed=ctx.seed)
                ok = ok and wr_base <= 1e-3 and wr_fine < wr_base
                rows.append(f"{kind} k={k}: {wr_base:.1e} -> {wr_fine:.1e}")
        ball = ctx.ball_case()
        phi = ctx.phis["p_power"]
        lam = ball["lam"]
        wr_ball = weak_residual(phi, ctx.f2, lam, ball["energy_report"].minimizer,
                                trials=32, seed=ctx.seed)
        fine_rep = minimize(phi, truncate(ctx.f2, 2), lam,
                            ball["energy_report"].minimizer.refined(2), gtol=1e-9)
        wr_ball2 = weak_residual(phi, ctx.f2, lam, fine_rep.minimizer,
                                 trials=32, seed=ctx.seed)
        ok = ok and wr_ball <= 1e-3 and wr_ball2 < wr_ball
        rows.append(f"ball: {wr_ball:.1e} -> {wr_ball2:.1e}")
        prof = ball["solve"].profiles[0]
        wr_shot = weak_residual(phi, ctx.f2, lam, prof.to_grid(200),
                                trials=32, seed=ctx.seed)
        wr_shot2 = weak_residual(phi, ctx.f2, lam, prof.to_grid(400),
                                 trials=32, seed=ctx.seed)
        ok = ok and wr_shot <= 1e-3 and wr_shot2 < wr_shot
        rows.append(f"shot: {wr_shot:.1e} -> {wr_shot2:.1e}")
        return ok, "; ".join(rows)
    return _timed(9, "weak residuals", run)


def criterion_10(ctx):
    """Scaling bounds of Phi and gauge-norm homogeneity."""
    def run():
        rng = np.random.default_rng([ctx.seed, 10])
        bad = 0
        for spec in ctx.phis.values():
            rho = np.exp(rng.uniform(np.log(0.1), np.log(10.0), 10_000))
            tt = np.exp(rng.uniform(np.log(0.1), np.log(10.0), 10_000))
            for r, t in zip(rho, tt):
                if not check_zeta_bounds(spec, float(r), float(t)):
                    bad += 1
        dom = Domain.interval(1.0, 64)
        spec = ctx.phis["p_power"]
        worst = 0.0
        for _ in range(100):
            u = GridFunction(dom, rng.uniform(-2.0, 2.0, dom.node_shape()),
                             dirichlet=False)
            c = float(rng.uniform(0.1, 5.0)) * (1 if rng.random() < 0.5 else -1)
            cu = GridFunction(dom, c * u.values, dirichlet=False)
            n1 = luxemburg_norm(spec, u)
            n2 = luxemburg_norm(spec, cu)
            worst = max(worst, abs(n2 - abs(c) * n1) / max(n2, 1e-30))
        ok = bad == 0 and worst <= 1e-8
        return ok, (f"{bad} scaling-bound violations over 3x10^4 samples; "
                    f"gauge homogeneity worst {worst:.2e}")
    return _timed(10, "scaling bounds and gauge norm", run)


ALL_CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4,
                criterion_5, criterion_6, criterion_7, criterion_8,
                criterion_9, criterion_10]


def run_criteria(ids=None, ctx=None, echo=print):
    """Run the selected criteria (all by default); returns the results."""
    ctx = ctx or AcceptanceContext()
    results = []
    for i, fn in enumerate(ALL_CRITERIA, start=1):
        if ids and i not in ids:
            continue
        res = fn(ctx)
        results.append(res)
        if echo:
            echo(res.line())
    return results
