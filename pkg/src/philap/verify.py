"""Independent post-hoc checks on computed solutions.

Every check is read-only and returns a VerificationCheck row stating what
was measured, against which tolerance, and which structural statement of
the multiplicity theory it exercises.  The weak residual pairs the discrete
solution against analytically differentiated test bumps, so it measures the
discretization honestly rather than echoing the optimizer's own stopping
rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, StructuralError
from .grids import GridFunction
from .nonlinearity import classify_band, F3_TOL

STRICT_MARGIN = 1e-6      # margin enforced on the strict < sides of the chain
EPS_BAND = 1e-3           # slack factor on the <= sides


@dataclass
class VerificationCheck:
    name: str
    passed: bool
    measured: float
    tolerance: float
    reference: str
    detail: str = ""

    def row(self):
        return [self.name, "pass" if self.passed else "FAIL",
                self.measured, self.tolerance, self.reference, self.detail]

    def __str__(self):
        tag = "pass" if self.passed else "FAIL"
        return (f"[{tag}] {self.name}: measured {self.measured:.6g} "
                f"(tol {self.tolerance:.3g}) - {self.reference}")


# -- weak residual -----------------------------------------------------------

class _CosineBump:
    """C^3 bump of unit height: cos^4(pi (x - c)/w) on |x - c| < w/2.

    The fourth power keeps two derivatives continuous across the support
    edge; with a mere cos^2 the second-derivative jump there turns the
    midpoint-rule pairing into an O(h^2) error with a (1/width)^2 constant
    that swamps what the residual is supposed to measure."""

    def __init__(self, center, width):
        self.c = center
        self.w = width

    def value(self, x):
        t = (x - self.c) / self.w
        inside = np.abs(t) < 0.5
        return np.where(inside, np.cos(np.pi * t) ** 4, 0.0)

    def deriv(self, x):
        t = (x - self.c) / self.w
        inside = np.abs(t) < 0.5
        c = np.cos(np.pi * t)
        return np.where(inside, -4.0 * np.pi / self.w * c ** 3 * np.sin(np.pi * t), 0.0)


def _draw_bump(rng, length, away_from_zero=False):
    lo = 0.25 * length if away_from_zero else 0.2 * length
    c = rng.uniform(lo, 0.8 * length)
    reach_left = c - (0.05 * length if away_from_zero else 0.0)
    half = 0.95 * min(reach_left, length - c) * rng.uniform(0.6, 1.0)
    return _CosineBump(c, 2.0 * half)


def weak_residual(phi, f, lam, u, trials=32, seed=0):
    """Max over seeded test bumps of the normalized weak-form defect.

    The gradient term pairs the cellwise flux of u with the analytic bump
    gradient at cell midpoints; the load term is the node-quadrature of
    f(u) v.  Returns max_v |a(u, v) - lam (f(u), v)| / (1 + lam |(f(u), v)|).
    """
    dom = u.domain
    rng = np.random.default_rng(seed)
    v = u.values
    worst = 0.0
    if dom.shape == "rectangle":
        hx, hy = dom.h
        dx = (v[1:, :-1] - v[:-1, :-1]) / hx
        dy = (v[:-1, 1:] - v[:-1, :-1]) / hy
        g = np.hypot(dx, dy)
        fac = np.zeros_like(g)
        m = g > 1e-30
        fac[m] = phi.phi(g[m])
        x, y = dom.node_coords()
        cx = 0.5 * (x[:-1, :-1] + x[1:, :-1])
        cy = 0.5 * (y[:-1, :-1] + y[:-1, 1:])
        cellm = dom.cell_measures()
        fu = f.value(v)
        w = dom.node_measures()
        for _ in range(trials):
            bx = _draw_bump(rng, dom.lengths[0])
            by = _draw_bump(rng, dom.lengths[1])
            grad_term = float(np.sum(
                fac * (dx * bx.deriv(cx) * by.value(cy)
                       + dy * bx.value(cx) * by.deriv(cy)) * cellm))
            vb = bx.value(x) * by.value(y)
            load = float(np.sum(fu * vb * w))
            norm = 1.0 + abs(lam) * float(np.sum(np.abs(fu * vb) * w))
            worst = max(worst, abs(grad_term - lam * load) / norm)
        return worst
    # interval and ball share the 1D layout
    length = dom.length if dom.shape == "interval" else dom.radius
    h = dom.h[0]
    d = np.diff(v) / h
    g = np.abs(d)
    fac = np.zeros_like(g)
    m = g > 1e-30
    fac[m] = phi.phi(g[m])
    x = dom.node_coords()
    cx = 0.5 * (x[:-1] + x[1:])
    cellm = dom.cell_measures()
    fu = f.value(v)
    w = dom.node_measures()
    away = dom.shape == "ball"   # radial bumps keep off the center
    for _ in range(trials):
        b = _draw_bump(rng, length, away_from_zero=away)
        grad_term = float(np.sum(fac * d * b.deriv(cx) * cellm))
        vb = b.value(x)
        load = float(np.sum(fu * vb * w))
        norm = 1.0 + abs(lam) * float(np.sum(np.abs(fu * vb) * w))
        worst = max(worst, abs(grad_term - lam * load) / norm)
    return worst


# -- structural checks --------------------------------------------------------

def _sup_and_k(report):
    """Duck-typed access: EnergyReport carries k (truncation index) and
    sup_norm; SolveReport carries k_trunc."""
    sup = report.sup_norm
    k = getattr(report, "k_trunc", None)
    if k is None:
        k = report.k
    return float(sup), int(k)


def check_band_ordering(reports, f):
    """Assert the interleaving chain a_1 < s_2 <= a_2 < s_3 <= ... <= a_m.

    Needs exactly one report per truncation index k = 2..m; the <= sides
    get the relative band slack, the strict sides a fixed margin."""
    by_k = {}
    for rep in reports:
        sup, k = _sup_and_k(rep)
        by_k[k] = sup
    missing = [k for k in range(2, f.m + 1) if k not in by_k]
    if missing:
        raise StructuralError(f"no solution supplied for bands {missing}")
    worst = np.inf
    detail = []
    ok = True
    for k in range(2, f.m + 1):
        sup = by_k[k]
        a_prev = float(f.a_nodes[k - 2])
        a_k = float(f.a_nodes[k - 1])
        lo_slack = sup - (a_prev + STRICT_MARGIN)
        hi_slack = a_k * (1.0 + EPS_BAND) - sup
        worst = min(worst, lo_slack, hi_slack)
        if lo_slack < 0.0 or hi_slack < 0.0:
            ok = False
            detail.append(f"band {k}: sup {sup:.6g} outside "
                          f"({a_prev}, {a_k}]")
    return VerificationCheck(
        name="band_ordering", passed=ok, measured=float(worst),
        tolerance=STRICT_MARGIN,
        reference="interleaving chain a_1 < s_2 <= a_2 < ... <= a_m of band sup norms",
        detail="; ".join(detail) or f"{len(by_k)} bands interleaved")


def check_positivity(solution, f):
    """Strict interior positivity, meaningful when f(0) > 0."""
    if f.f0 <= 0.0:
        raise DomainError("positivity check requires f(0) > 0")
    if isinstance(solution, GridFunction):
        val = solution.interior_min()
        where = "interior node"
    else:  # radial profile: every node before the terminal zero is interior
        u = solution.u[:-1] if solution.status == "hit_zero" else solution.u
        val = float(np.min(u))
        where = f"r = {float(solution.r[int(np.argmin(u))]):.6g}"
    return VerificationCheck(
        name="positivity", passed=val > 0.0, measured=val, tolerance=0.0,
        reference="nonnegative nontrivial solutions are strictly positive inside "
                  "when f(0) > 0",
        detail=f"min over interior = {val:.6g} at {where}")


def check_pucci_serrin(phi, f, lam, a_k, mesh=20001, use_flux_variant=False):
    """Strong-maximum-principle inequalities behind interior positivity.

    (a) scan a geometric grid for the least c with
        lam f(s) + c g(s) >= 0 on [0, a_k], where g is (s Phi(s))' as
        printed, or the flux s phi(s) when use_flux_variant is set;
    (b) with that c, confirm c s Phi(s) / H(s) <= c s / (gamma1 - 1) with
        H(s) = s Phi'(s) - Phi(s), and report the first s where the left
        side reaches 1 (the smallness threshold the principle needs)."""
    if f.f0 <= 0.0:
        raise DomainError("requires f(0) > 0")
    if phi.gamma1 <= 1.0:
        raise DomainError("requires a certified gamma1 > 1")
    s = np.linspace(0.0, a_k, mesh)[1:]
    fs = lam * f.value(s)
    phis = phi.phi(s)
    if use_flux_variant:
        g = s * phis
    else:
        g = phi.Phi(s) + s * s * phis
    c = 0.0
    if np.any(fs < 0.0):
        c = 1e-8
        for _ in range(400):
            if np.all(fs + c * g >= 0.0):
                break
            c *= 2.0
        else:
            raise StructuralError("no finite c makes lam f + c g nonnegative")
    # part (b): the growth bound caps s Phi / H
    H = s * s * phis - phi.Phi(s)
    bound = c * s * phi.Phi(s) / np.where(H > 0.0, H, np.inf)
    cap = c * s / (phi.gamma1 - 1.0)
    ok_b = bool(np.all(bound <= cap * (1.0 + 1e-9) + 1e-15))
    above = np.nonzero(bound >= 1.0)[0]
    delta = float(s[above[0]]) if above.size else float(a_k)
    variant = "flux" if use_flux_variant else "printed"
    return VerificationCheck(
        name=f"pucci_serrin_{variant}", passed=ok_b, measured=c,
        tolerance=0.0,
        reference="one-dimensional integral condition for the strong maximum principle",
        detail=f"least c = {c:.6g}; smallness holds up to delta = {delta:.6g}")


def check_necessary_condition(solution, f):
    """Band-classified solutions force a positive band integral.

    Also reports the sharper integral of f from a_k up to the sup norm."""
    if isinstance(solution, (int, float)):
        sup = float(solution)
    else:
        sup = float(solution.sup_norm)
    k = classify_band(f, sup)
    band = f.band_integral(k)
    inter = float(f.primitive(sup) - f.primitive(float(f.a_nodes[k - 1])))
    return VerificationCheck(
        name="necessary_condition", passed=band > F3_TOL, measured=band,
        tolerance=F3_TOL,
        reference="a solution with sup norm in (a_k, a_{k+1}] forces "
                  "integral of f over that band to be positive",
        detail=f"band {k}; integral a_k..sup = {inter:.6g}")


def summarize(checks):
    """One flag: the ordering chain plus every per-band necessary condition."""
    ok = all(c.passed for c in checks)
    return VerificationCheck(
        name="theorem_conclusions", passed=ok,
        measured=float(sum(not c.passed for c in checks)), tolerance=0.0,
        reference="conjunction of band ordering and necessary conditions",
        detail=f"{len(checks)} checks aggregated")
