"""Radial shooting on a ball via the flux identity.

Instead of differentiating phi, the marcher integrates the first-order
system in (u, Q),

    Q'(r) = lam f(u) r^(N-1),        u'(r) = Ginv(-Q / r^(N-1)),

which encodes  -r^(N-1) phi(|u'|) u' = Q  exactly, with G(z) = phi(|z|) z.
The quotient is an indeterminate 0/0 at the very first node, so for
r < 10 h the slope uses the leading-order substitute
u' = Ginv(-lam f(d) r / N).

A shot from center height d stops at the first zero of u (located by a
bracketed search inside the last step), at r_max, or once u escapes above
twice the top skeleton node (solutions of the truncated problems never do,
so escape disqualifies d as a seed).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NumericError, StructuralError
from .grids import Domain, GridFunction
from .nonlinearity import classify_band
from .quadrature import cumulative_integral

SERIES_FACTOR = 10.0      # series slope below r = SERIES_FACTOR * h
DEFAULT_SCAN = 64         # initial d samples per band
RADIUS_RTOL = 1e-8        # |first zero - R| tolerance, relative to R


@dataclass
class RadialProfile:
    """Sampled (r, u, u', Q) trajectory of one shot."""
    N: int
    lam: float
    d: float
    h: float
    r: np.ndarray
    u: np.ndarray
    du: np.ndarray
    Q: np.ndarray
    status: str                       # hit_zero | max_radius | escaped

    @property
    def sup_norm(self):
        return float(np.max(self.u))

    @property
    def first_zero(self):
        return float(self.r[-1]) if self.status == "hit_zero" else None

    def argmax_index(self):
        return int(np.argmax(self.u))

    def identity_residuals(self, f):
        """|r^(N-1) G(u') + Q_hat| / (1 + |Q_hat|) per node, where Q_hat
        re-integrates lam f(u) r^(N-1) from the stored samples by a
        fourth-order cumulative rule.  This ties u back to the flux
        identity through a quadrature independent of the march."""
        q_hat = self.lam * cumulative_integral(
            f.value(self.u) * self.r ** (self.N - 1), self.r)
        flux_term = self.r ** (self.N - 1) * self._G(self.du)
        return np.abs(flux_term + q_hat) / (1.0 + np.abs(q_hat))

    def max_identity_residual(self, f, r_min=0.0):
        res = self.identity_residuals(f)
        mask = self.r >= r_min
        return float(np.max(res[mask]))

    def attach_flux(self, phi):
        self._G = phi.flux
        return self

    def to_grid(self, n):
        """Resample onto a uniform radial Dirichlet grid on [0, first zero]."""
        if self.status != "hit_zero":
            raise StructuralError("only a completed shot maps to a ball grid")
        dom = Domain.ball(float(self.r[-1]), self.N, n)
        vals = np.interp(dom.node_coords(), self.r, self.u)
        return GridFunction(dom, vals)


def shoot(phi, f, lam, N, d, h, r_max, escape=None):
    """March one shot from u(0) = d until zero, escape, or r_max."""
    if d <= 0.0 or h <= 0.0 or lam <= 0.0:
        raise DomainError("shoot needs d > 0, h > 0, lam > 0")
    if N < 1:
        raise DomainError("dimension must be >= 1")
    if escape is None:
        escape = 2.0 * float(f.a_nodes[-1])
    fd = float(f.value(d))
    series_r = SERIES_FACTOR * h
    ginv = phi.flux_inverse
    xs, ys = f.xs, f.ys
    nm1 = N - 1

    def slope(r, q):
        if r <= 0.0:
            return 0.0
        if r < series_r:
            return ginv(-lam * fd * r / N)
        return ginv(-q / r ** nm1)

    def forcing(r, u):
        return lam * float(np.interp(u, xs, ys)) * r ** nm1

    def rk_step(r, u, q, step):
        k1u = slope(r, q)
        k1q = forcing(r, u)
        rm = r + 0.5 * step
        k2u = slope(rm, q + 0.5 * step * k1q)
        k2q = forcing(rm, u + 0.5 * step * k1u)
        k3u = slope(rm, q + 0.5 * step * k2q)
        k3q = forcing(rm, u + 0.5 * step * k2u)
        re = r + step
        k4u = slope(re, q + step * k3q)
        k4q = forcing(re, u + step * k3u)
        un = u + step * (k1u + 2.0 * k2u + 2.0 * k3u + k4u) / 6.0
        qn = q + step * (k1q + 2.0 * k2q + 2.0 * k3q + k4q) / 6.0
        return un, qn

    max_steps = int(np.ceil(r_max / h)) + 1
    rs = [0.0]
    us = [d]
    dus = [0.0]
    qs = [0.0]
    r, u, q = 0.0, d, 0.0
    status = "max_radius"
    for _ in range(max_steps):
        if r + h > r_max + 1e-12 * r_max:
            break
        un, qn = rk_step(r, u, q, h)
        if un <= 0.0:
            rz, uz, qz = _locate_zero(rk_step, r, u, q, h)
            rs.append(rz)
            us.append(uz)
            qs.append(qz)
            dus.append(slope(rz, qz))
            status = "hit_zero"
            break
        r, u, q = r + h, un, qn
        rs.append(r)
        us.append(u)
        qs.append(q)
        dus.append(slope(r, q))
        if u >= escape:
            status = "escaped"
            break
    profile = RadialProfile(N=N, lam=lam, d=d, h=h,
                            r=np.array(rs), u=np.array(us),
                            du=np.array(dus), Q=np.array(qs), status=status)
    return profile.attach_flux(phi)


def _locate_zero(rk_step, r, u, q, h):
    """Bracketed secant search for the step fraction where u crosses zero."""
    lo, u_lo = 0.0, u
    hi = h
    u_hi, q_hi = rk_step(r, u, q, hi)
    if u_hi > 0.0:
        raise NumericError("zero bracket lost inside the final step")
    tol_u = 1e-14 * max(1.0, u)
    for _ in range(80):
        if hi - lo < 1e-15 * h or abs(u_hi) < tol_u:
            break
        # secant proposal, clipped into the middle of the bracket
        t = lo + (hi - lo) * u_lo / (u_lo - u_hi)
        t = min(max(t, lo + 0.05 * (hi - lo)), hi - 0.05 * (hi - lo))
        um, qm = rk_step(r, u, q, t)
        if um > 0.0:
            lo, u_lo = t, um
        else:
            hi, u_hi, q_hi = t, um, qm
    return r + hi, u_hi, q_hi


@dataclass
class SolveReport:
    """Outcome of a band-restricted shooting solve at one lambda."""
    k: int
    lam: float
    N: int
    R: float
    found: bool
    profiles: list                     # matched shots, ordered by d
    d_values: list
    multiple_roots: bool
    band_ok: bool
    diagnostics: str = ""
    scan_d: np.ndarray = field(default=None, repr=False)
    scan_rho: np.ndarray = field(default=None, repr=False)

    @property
    def sup_norm(self):
        return self.profiles[0].sup_norm if self.profiles else None

    @property
    def k_trunc(self):
        """Band index in truncation convention (sup in (a_k, a_{k+1}] maps
        to truncation k+1)."""
        return self.k + 1


def first_zero_radius(phi, f, lam, N, d, h, r_max):
    prof = shoot(phi, f, lam, N, d, h, r_max)
    rho = prof.first_zero
    return (np.inf if rho is None else rho), prof


def solve_dirichlet_radius(phi, f, lam, N, R, d_range, h=None, samples=DEFAULT_SCAN,
                           rtol=RADIUS_RTOL):
    """Find all d in d_range whose first zero lands at radius R.

    Coarse scan over the range, then bisection on every sign change of
    rho(d) - R; shots that never reach zero count as rho = +inf.
    Returns (roots, scan_d, scan_rho) with roots as (d, profile) pairs.
    """
    if h is None:
        h = R / 1000.0
    r_max = 3.0 * R
    lo, hi = d_range
    ds = np.linspace(lo, hi, samples + 1)[1:]
    rhos = np.empty_like(ds)
    cache = {}
    for i, d in enumerate(ds):
        rhos[i], cache[float(d)] = first_zero_radius(phi, f, lam, N, float(d), h, r_max)
    roots = []
    target = R
    for i in range(ds.size - 1):
        g0 = rhos[i] - target
        g1 = rhos[i + 1] - target
        if g0 == 0.0:
            roots.append((float(ds[i]), cache[float(ds[i])]))
            continue
        if not ((g0 < 0.0 < g1) or (g1 < 0.0 < g0)):
            continue
        d_lo, d_hi = float(ds[i]), float(ds[i + 1])
        below = g0 < 0.0
        best = None
        for _ in range(80):
            mid = 0.5 * (d_lo + d_hi)
            rho_m, prof_m = first_zero_radius(phi, f, lam, N, mid, h, r_max)
            best = (mid, prof_m, rho_m)
            if abs(rho_m - target) <= rtol * target:
                break
            if (rho_m < target) == below:
                d_lo = mid
            else:
                d_hi = mid
        if best is not None and np.isfinite(best[2]):
            roots.append((best[0], best[1]))
    return roots, ds, rhos


def find_band_solution(phi, f, lam, N, R, k, h=None, samples=DEFAULT_SCAN,
                       rtol=RADIUS_RTOL):
    """Shooting solve restricted to center heights in band k: (a_k, a_{k+1}].

    Returns a SolveReport; an empty root set is a report, not an error
    (expected for lambda below the occupation threshold)."""
    if not 1 <= k <= f.m - 1:
        raise DomainError(f"band index {k} outside 1..{f.m - 1}")
    a_lo = float(f.a_nodes[k - 1])
    a_hi = float(f.a_nodes[k])
    roots, ds, rhos = solve_dirichlet_radius(
        phi, f, lam, N, R, (a_lo, a_hi), h=h, samples=samples, rtol=rtol)
    finite = np.isfinite(rhos)
    if roots:
        diag = f"{len(roots)} root(s) in band {k}"
    elif np.any(finite):
        diag = (f"no sign change of rho(d) - R on the scan; "
                f"rho range [{np.min(rhos[finite]):.4g}, {np.max(rhos[finite]):.4g}] "
                f"against R = {R}")
    else:
        diag = "no shot from this band reached zero before 3R (drive too weak)"
    band_ok = all(a_lo < p.sup_norm <= a_hi * (1.0 + 1e-9) for _, p in roots) \
        if roots else False
    return SolveReport(k=k, lam=lam, N=N, R=R, found=bool(roots),
                       profiles=[p for _, p in roots],
                       d_values=[d for d, _ in roots],
                       multiple_roots=len(roots) > 1, band_ok=band_ok,
                       diagnostics=diag, scan_d=ds, scan_rho=rhos)


def check_bk_exceeded(profile, f, k=None):
    """Does the shot clear the negative hump top b_k of its band?

    Every genuine band-k solution must; a False return flags the profile
    as violating that necessary behavior (a solver-bug indicator)."""
    sup = profile.sup_norm
    if k is None:
        k = classify_band(f, sup)
    return sup > float(f.b_nodes[k - 1])


@dataclass
class IdentityCheck:
    """Energy balance of a band solution between its peak and the a_k crossing."""
    k: int
    a_k: float
    sup_norm: float
    integral_to_sup: float      # exact integral of f over (a_k, sup)
    shell_dissipation: float    # (N-1)/t phi(|u'|) u'^2 term
    flux_dissipation: float     # integral of [s phi(|s|)]' s via the profile
    lhs: float                  # lam * integral of f from sup down to a_k
    rhs: float                  # minus the total dissipation
    residual: float             # two-sided relative defect of lhs = rhs
    r_peak: float
    r_cross: float
    alternative_crossings: list


def energy_identity_integral(profile, f, k=None):
    """Evaluate the signed energy balance along a completed band shot.

    The exact forcing integral over (a_k, sup) must equal the total
    dissipation picked up between the peak radius and the first crossing of
    a_k; both sides are computed independently (one from the piecewise
    forcing primitive, one from trapezoid sums along the profile)."""
    sup = profile.sup_norm
    if k is None:
        k = classify_band(f, sup)
    a_k = float(f.a_nodes[k - 1])
    i0 = profile.argmax_index()
    u, r, du = profile.u, profile.r, profile.du
    after = np.arange(i0 + 1, u.size)
    below = after[u[after] <= a_k]
    if below.size == 0:
        raise StructuralError(
            f"profile never descends to a_{k} = {a_k} after its peak")
    i1 = int(below[0])
    th = (u[i1 - 1] - a_k) / (u[i1 - 1] - u[i1])
    r1 = r[i1 - 1] + th * (r[i1] - r[i1 - 1])
    du1 = du[i1 - 1] + th * (du[i1] - du[i1 - 1])
    # all later down-crossings of a_k, for the record
    alt = []
    for j in range(i1 + 1, u.size):
        if u[j - 1] > a_k >= u[j]:
            tj = (u[j - 1] - a_k) / (u[j - 1] - u[j])
            alt.append(float(r[j - 1] + tj * (r[j] - r[j - 1])))
    # trapezoid over the nodes i0..i1-1 plus the partial cell up to r1
    G = profile._G
    seg_r = np.concatenate((r[i0:i1], [r1]))
    seg_du = np.concatenate((du[i0:i1], [du1]))
    flux_vals = G(seg_du)
    with np.errstate(divide="ignore", invalid="ignore"):
        shell_integrand = np.where(
            seg_r > 0.0, (profile.N - 1) / seg_r * flux_vals * seg_du, 0.0)
    d1 = float(np.trapezoid(shell_integrand, seg_r))
    d2 = float(np.sum(np.diff(flux_vals) * 0.5 * (seg_du[1:] + seg_du[:-1])))
    if d1 + d2 <= 0.0:
        raise StructuralError(
            "slope vanishes identically between the peak and the crossing; "
            "no such band solution exists")
    integral = float(f.primitive(sup) - f.primitive(a_k))
    lhs = profile.lam * (f.primitive(a_k) - f.primitive(sup))
    rhs = -(d1 + d2)
    residual = abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-300)
    return IdentityCheck(k=k, a_k=a_k, sup_norm=sup, integral_to_sup=integral,
                         shell_dissipation=d1, flux_dissipation=d2,
                         lhs=lhs, rhs=rhs, residual=residual,
                         r_peak=float(r[i0]), r_cross=float(r1),
                         alternative_crossings=alt)
