"""Sign-changing forcing terms carrying an interval skeleton.

The forcing f is stored piecewise linearly on [0, a_m] and continued as a
constant beyond a_m (only the untruncated radial marcher ever looks there).
Piecewise-linear closure keeps every primitive and band integral exact, so
the structural checks below carry no quadrature error of their own.

The skeleton is the ordered list 0 < a_1 < b_1 < ... < b_{m-1} < a_m on
which the sign pattern alternates: f <= 0 on each (a_k, b_k) and f >= 0 on
each (b_k, a_{k+1}).  Band k refers to the sup-norm interval (a_k, a_{k+1}].
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, StructuralError

F3_TOL = 1e-12          # a band integral must exceed this to count as positive
NODE_MARGIN = 1e-9      # relative tolerance on node placement at the ends


class NonlinearitySpec:
    """Piecewise-linear forcing with its breakpoint skeleton."""

    def __init__(self, breakpoints, nodes):
        bp = [float(x) for x in breakpoints]
        if len(bp) % 2 == 0 or not bp:
            raise StructuralError(
                "breakpoints must interleave a and b nodes: a1, b1, ..., am")
        self.breakpoints = bp
        self.m = (len(bp) + 1) // 2
        self.a_nodes = np.asarray(bp[0::2], dtype=float)
        self.b_nodes = np.asarray(bp[1::2], dtype=float)
        pts = sorted((float(s), float(v)) for s, v in nodes)
        xs = np.array([p[0] for p in pts])
        ys = np.array([p[1] for p in pts])
        if xs.size < 2:
            raise StructuralError("need at least two (s, f(s)) nodes")
        if np.any(np.diff(xs) <= 0.0):
            raise StructuralError("duplicate forcing node abscissae")
        am = bp[-1]
        margin = NODE_MARGIN * max(abs(am), 1.0)
        if xs[0] < -margin or xs[-1] > am + margin:
            raise StructuralError(
                f"forcing nodes must lie in [0, {am}] (margin {margin:.1e})")
        if abs(xs[0]) > margin or abs(xs[-1] - am) > margin:
            raise StructuralError(
                "forcing nodes must cover [0, a_m] exactly")
        xs[0], xs[-1] = 0.0, am
        self.xs = xs
        self.ys = ys
        self.f0 = float(ys[0])
        # exact primitive at the nodes (trapezoid is exact for linear pieces)
        seg = 0.5 * (ys[1:] + ys[:-1]) * np.diff(xs)
        self._F_nodes = np.concatenate(([0.0], np.cumsum(seg)))

    # -- evaluation ---------------------------------------------------------

    def value(self, s):
        """f(s); constant f(0) below 0 and constant f(a_m) above a_m."""
        return np.interp(s, self.xs, self.ys)

    def primitive(self, s):
        """Untruncated primitive F(s) = integral_0^s f, exact."""
        scalar = np.isscalar(s)
        sv = np.asarray(s, dtype=float)
        out = np.empty_like(sv)
        below = sv <= 0.0
        above = sv >= self.xs[-1]
        mid = ~(below | above)
        out[below] = self.f0 * sv[below]
        out[above] = self._F_nodes[-1] + self.ys[-1] * (sv[above] - self.xs[-1])
        if np.any(mid):
            sm = sv[mid]
            idx = np.clip(np.searchsorted(self.xs, sm, side="right") - 1,
                          0, self.xs.size - 2)
            ds = sm - self.xs[idx]
            slope = (self.ys[idx + 1] - self.ys[idx]) / \
                (self.xs[idx + 1] - self.xs[idx])
            out[mid] = self._F_nodes[idx] + self.ys[idx] * ds \
                + 0.5 * slope * ds * ds
        return float(out) if scalar else out

    def band_integral(self, k):
        """Exact integral of f over (a_k, a_{k+1}), k = 1..m-1."""
        if not 1 <= k <= self.m - 1:
            raise DomainError(f"band index {k} outside 1..{self.m - 1}")
        return float(self.primitive(self.a_nodes[k])
                     - self.primitive(self.a_nodes[k - 1]))

    # -- exact extrema of f and F over an interval --------------------------

    def _candidates(self, lo, hi):
        """Points where F can attain extrema on [lo, hi]: interval ends,
        forcing nodes inside, and zeros of f interior to segments."""
        pts = [lo, hi]
        inside = (self.xs > lo) & (self.xs < hi)
        pts.extend(self.xs[inside].tolist())
        for i in range(self.xs.size - 1):
            y0, y1 = self.ys[i], self.ys[i + 1]
            if y0 * y1 < 0.0:
                z = self.xs[i] - y0 * (self.xs[i + 1] - self.xs[i]) / (y1 - y0)
                if lo < z < hi:
                    pts.append(z)
        return np.array(sorted(set(pts)))

    def max_primitive(self, lo, hi):
        c = self._candidates(lo, hi)
        return float(np.max(self.primitive(c)))

    def max_abs_primitive(self, lo, hi):
        c = self._candidates(lo, hi)
        return float(np.max(np.abs(self.primitive(c))))

    def max_abs_value(self, lo, hi):
        c = self._candidates(lo, hi)
        return float(np.max(np.abs(self.value(c))))

    def __repr__(self):
        return f"NonlinearitySpec(m={self.m}, skeleton={self.breakpoints})"


@dataclass
class Violation:
    condition: str
    witness: float
    value: float
    message: str


@dataclass
class ValidationReport:
    ok: bool
    violations: list
    band_integrals: list
    truncation_jumps: list   # (k, f(a_k)) for k where the cut is discontinuous
    f3_checked: bool

    def __str__(self):
        lines = [f"forcing validation: {'PASS' if self.ok else 'FAIL'}"]
        for k, v in enumerate(self.band_integrals, start=1):
            lines.append(f"  band integral {k}: {v:.6g}")
        for v in self.violations:
            lines.append(f"  violated {v.condition} at s={v.witness:.6g}: {v.message}")
        for k, fv in self.truncation_jumps:
            lines.append(f"  note: cut at a_{k} jumps by f(a_{k})={fv:.6g}")
        return "\n".join(lines)


def validate(spec, check_f3=True):
    """Check the sign skeleton and, optionally, the band-integral positivity.

    Sign conditions are evaluated at the forcing nodes inside each skeleton
    interval (exact for piecewise-linear f); the band integrals are also
    recomputed by composite trapezoid on a mesh refined to 1e-4 * a_m as an
    independent route.
    """
    violations = []
    bp = spec.breakpoints
    if any(bp[i] >= bp[i + 1] for i in range(len(bp) - 1)) or bp[0] <= 0.0:
        raise StructuralError(f"breakpoints not strictly ordered: {bp}")
    if spec.f0 < 0.0:
        violations.append(Violation(
            "f(0) >= 0", 0.0, spec.f0, f"f(0) = {spec.f0}"))
    for k in range(spec.m - 1):
        a_k, b_k, a_next = spec.a_nodes[k], spec.b_nodes[k], spec.a_nodes[k + 1]
        c = spec._candidates(a_k, b_k)
        vals = spec.value(c)
        i = int(np.argmax(vals))
        if vals[i] > 0.0:
            violations.append(Violation(
                "f <= 0 on (a_k, b_k)", float(c[i]), float(vals[i]),
                f"f({c[i]:.6g}) = {vals[i]:.6g} > 0 on ({a_k}, {b_k})"))
        c = spec._candidates(b_k, a_next)
        vals = spec.value(c)
        i = int(np.argmin(vals))
        if vals[i] < 0.0:
            violations.append(Violation(
                "f >= 0 on (b_k, a_{k+1})", float(c[i]), float(vals[i]),
                f"f({c[i]:.6g}) = {vals[i]:.6g} < 0 on ({b_k}, {a_next})"))
    band_integrals = []
    if spec.m > 1:
        step = 1e-4 * spec.a_nodes[-1]
        for k in range(1, spec.m):
            lo, hi = spec.a_nodes[k - 1], spec.a_nodes[k]
            count = max(int(np.ceil((hi - lo) / step)), 1)
            mesh = np.union1d(np.linspace(lo, hi, count + 1),
                              spec.xs[(spec.xs >= lo) & (spec.xs <= hi)])
            integral = float(np.trapezoid(spec.value(mesh), mesh))
            band_integrals.append(integral)
            if check_f3 and integral <= F3_TOL:
                violations.append(Violation(
                    "band integral > 0", float(lo), integral,
                    f"integral of f over ({lo}, {hi}) = {integral:.6g}"))
    jumps = [(k, float(spec.value(spec.a_nodes[k - 1])))
             for k in range(2, spec.m + 1)
             if abs(spec.value(spec.a_nodes[k - 1])) > 0.0]
    return ValidationReport(ok=not violations, violations=violations,
                            band_integrals=band_integrals,
                            truncation_jumps=jumps, f3_checked=check_f3)


class TruncatedF:
    """Forcing cut at a_k: f(0) below 0, f on [0, a_k], zero above a_k.

    Truncation indices run 2..m; the degenerate single-node skeleton (m = 1)
    admits only the plain cut at a_1, exposed as k = 1."""

    def __init__(self, parent, k):
        lo = 1 if parent.m == 1 else 2
        if not lo <= k <= parent.m:
            raise DomainError(f"truncation index {k} outside {lo}..{parent.m}")
        self.parent = parent
        self.k = k
        self.a_k = float(parent.a_nodes[k - 1])
        self._F_cap = float(parent.primitive(self.a_k))

    def value(self, s):
        scalar = np.isscalar(s)
        sv = np.asarray(s, dtype=float)
        out = np.where(sv <= 0.0, self.parent.f0,
                       np.where(sv > self.a_k, 0.0, self.parent.value(sv)))
        return float(out) if scalar else out

    def primitive(self, s):
        """F_k(s) = integral_0^s of the cut forcing; flat above a_k."""
        scalar = np.isscalar(s)
        sv = np.asarray(s, dtype=float)
        out = np.where(sv <= 0.0, self.parent.f0 * sv,
                       np.where(sv > self.a_k, self._F_cap,
                                self.parent.primitive(np.minimum(sv, self.a_k))))
        return float(out) if scalar else out

    def slope(self, s):
        """Derivative of the cut forcing (piecewise constant, 0 off [0, a_k])."""
        p = self.parent
        sv = np.asarray(s, dtype=float)
        idx = np.clip(np.searchsorted(p.xs, sv, side="right") - 1,
                      0, p.xs.size - 2)
        seg = (p.ys[idx + 1] - p.ys[idx]) / (p.xs[idx + 1] - p.xs[idx])
        out = np.where((sv <= 0.0) | (sv > self.a_k), 0.0, seg)
        return float(out) if np.isscalar(s) else out

    def bound(self):
        """Sup of |f_k| over the line (used by boundedness arguments)."""
        return max(self.parent.max_abs_value(0.0, self.a_k),
                   abs(self.parent.f0))

    def __repr__(self):
        return f"TruncatedF(k={self.k}, a_k={self.a_k})"


def truncate(spec, k):
    """Build the cut forcing for truncation index k in 2..m."""
    return TruncatedF(spec, k)


def classify_band(spec, sup_norm):
    """Return k with a_k < sup_norm <= a_{k+1}, in 1..m-1."""
    a = spec.a_nodes
    if sup_norm <= a[0] or sup_norm > a[-1]:
        raise StructuralError(
            f"sup norm {sup_norm:.6g} lies in no band (a_1={a[0]}, a_m={a[-1]})")
    k = int(np.searchsorted(a, sup_norm, side="left"))
    return k
