"""Generator functions phi and the N-functions they induce.

A generator is a positive C^1 function phi on (0, oo) for which t*phi(t) is
strictly increasing, vanishes at 0 and blows up at infinity.  Its N-function
is Phi(t) = integral_0^t s*phi(s) ds, extended evenly.  Three closed-form
families are built in:

    p_power(p):    phi(t) = t^(p-2)                      Phi(t) = t^p / p
    curvature(g):  phi(t) = 2g (1+t^2)^(g-1)             Phi(t) = (1+t^2)^g - 1
    plog(p):       phi(t) = (p t^(p-2) (1+t) ln(1+t)
                             + t^(p-1)) / (1+t)          Phi(t) = t^p ln(1+t)

plus a ``custom`` kind tabulated on a log-spaced grid.

Growth is controlled by two pairs of certified constants:

    Gamma1 <= (t phi(t))' / phi(t) <= Gamma2        (flux-ratio bounds)
    gamma_i = Gamma_i + 1,   gamma1 <= t Phi'(t)/Phi(t) <= gamma2

Solvers never evaluate phi at 0: every path that can meet a vanishing
gradient goes through the flux G(z) = phi(|z|) z, continuous at 0 with
G(0) = 0 and extended oddly to the whole line.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ConditionViolation, DomainError, NumericError, RangeError
from .quadrature import adaptive_simpson

_FLUX_RTOL = 1e-12
_MAX_DOUBLINGS = 1000


def log_grid(lo=1e-6, hi=1e6, count=4096):
    """Log-spaced sample grid used for certification and property sweeps."""
    return np.geomspace(lo, hi, count)


class PhiSpec:
    """Immutable description of a generator with certified growth constants.

    Construct through the factory classmethods; the constructor eagerly
    evaluates the ratio bounds (closed form for the built-in kinds, grid
    inf/sup for ``custom``) and caches whatever the energy loops need, so
    instances are safe for concurrent read-only use afterwards.
    """

    def __init__(self, kind, param=None, table_t=None, table_phi=None,
                 cert_grid=None):
        self.kind = kind
        self.param = param
        if kind == "p_power":
            if param is None or param <= 1.0:
                raise DomainError("p_power requires p > 1")
        elif kind == "curvature":
            if param is None or param <= 0.5:
                raise DomainError("curvature requires gamma > 1/2")
        elif kind == "plog":
            if param is None or param < 1.0:
                raise DomainError("plog requires p >= 1")
        elif kind == "custom":
            self._init_custom(table_t, table_phi)
        else:
            raise DomainError(f"unknown generator kind {kind!r}")
        self._G_scalar = self._build_scalar_flux()
        grid = log_grid() if cert_grid is None else np.asarray(cert_grid, float)
        self.Gamma1, self.Gamma2 = self._ratio_bounds(grid)
        self.gamma1 = self.Gamma1 + 1.0
        self.gamma2 = self.Gamma2 + 1.0

    # -- factories ---------------------------------------------------------

    @classmethod
    def p_power(cls, p):
        return cls("p_power", float(p))

    @classmethod
    def curvature(cls, gamma):
        return cls("curvature", float(gamma))

    @classmethod
    def plog(cls, p):
        return cls("plog", float(p))

    @classmethod
    def custom(cls, table_t, table_phi):
        return cls("custom", table_t=table_t, table_phi=table_phi)

    def _init_custom(self, table_t, table_phi):
        t = np.asarray(table_t, dtype=float)
        v = np.asarray(table_phi, dtype=float)
        if t.ndim != 1 or t.size < 8 or t.shape != v.shape:
            raise DomainError("custom table needs >= 8 matching (t, phi) samples")
        if np.any(t <= 0.0) or np.any(v <= 0.0):
            raise DomainError("custom table must be positive")
        if np.any(np.diff(t) <= 0.0):
            raise DomainError("custom table abscissae must be increasing")
        self._log_t = np.log(t)
        self._log_phi = np.log(v)
        # dphi from central differences of the tabulated phi
        dv = np.gradient(v, t)
        self._table_t = t
        self._table_phi = v
        self._table_dphi = dv
        # memo grid for Phi: cumulative adaptive-Simpson segments, with a
        # power-law head on (0, t_min] taken from the first table segment
        s0 = (self._log_phi[1] - self._log_phi[0]) / (self._log_t[1] - self._log_t[0])
        head_exponent = s0 + 2.0  # integrand s*phi(s) ~ s^(s0+1)
        if head_exponent <= 0.0:
            raise DomainError("custom phi too singular at 0 for an N-function")
        head = t[0] * t[0] * v[0] / head_exponent
        segs = [adaptive_simpson(lambda s: s * self._phi_custom_scalar(s),
                                 t[i], t[i + 1], abs_tol=1e-14)
                for i in range(t.size - 1)]
        self._Phi_memo = head + np.concatenate(([0.0], np.cumsum(segs)))
        self._Phi_head = head

    # -- scalar evaluators (hot loops use these through the flux) ----------

    def _phi_scalar(self, t):
        k = self.kind
        if k == "p_power":
            return t ** (self.param - 2.0)
        if k == "curvature":
            g = self.param
            return 2.0 * g * (1.0 + t * t) ** (g - 1.0)
        if k == "plog":
            p = self.param
            return (p * t ** (p - 2.0) * (1.0 + t) * math.log1p(t)
                    + t ** (p - 1.0)) / (1.0 + t)
        return self._phi_custom_scalar(t)

    def _phi_custom_scalar(self, t):
        lt = math.log(t)
        L, P = self._log_t, self._log_phi
        if lt <= L[0]:
            s = (P[1] - P[0]) / (L[1] - L[0])
            return math.exp(P[0] + s * (lt - L[0]))
        if lt >= L[-1]:
            s = (P[-1] - P[-2]) / (L[-1] - L[-2])
            return math.exp(P[-1] + s * (lt - L[-1]))
        return math.exp(np.interp(lt, L, P))

    def _build_scalar_flux(self):
        """Closure computing G(z) = phi(|z|) z for plain floats, odd, G(0)=0."""
        k = self.kind
        if k == "p_power":
            e = self.param - 1.0

            def flux(z):
                if z == 0.0:
                    return 0.0
                return math.copysign(abs(z) ** e, z)
        elif k == "curvature":
            g2 = 2.0 * self.param
            ge = self.param - 1.0

            def flux(z):
                return g2 * (1.0 + z * z) ** ge * z
        elif k == "plog":
            p = self.param

            def flux(z):
                if z == 0.0:
                    return 0.0
                a = abs(z)
                val = (p * a ** (p - 1.0) * math.log1p(a)
                       + a ** p / (1.0 + a))
                return math.copysign(val, z)
        else:
            phi = self._phi_custom_scalar

            def flux(z):
                if z == 0.0:
                    return 0.0
                return phi(abs(z)) * z
        return flux

    # -- public evaluators (scalar or ndarray) -----------------------------

    def phi(self, t):
        """phi(t) for t > 0 (elementwise on arrays)."""
        if isinstance(t, np.ndarray):
            if np.any(t <= 0.0):
                raise DomainError("phi requires t > 0")
            return self._phi_array(t)
        t = float(t)
        if t <= 0.0:
            raise DomainError(f"phi requires t > 0, got {t}")
        return self._phi_scalar(t)

    def _phi_array(self, t):
        k = self.kind
        if k == "p_power":
            return t ** (self.param - 2.0)
        if k == "curvature":
            g = self.param
            return 2.0 * g * (1.0 + t * t) ** (g - 1.0)
        if k == "plog":
            p = self.param
            return (p * t ** (p - 2.0) * (1.0 + t) * np.log1p(t)
                    + t ** (p - 1.0)) / (1.0 + t)
        lt = np.log(t)
        L, P = self._log_t, self._log_phi
        out = np.interp(lt, L, P)
        s_lo = (P[1] - P[0]) / (L[1] - L[0])
        s_hi = (P[-1] - P[-2]) / (L[-1] - L[-2])
        out = np.where(lt < L[0], P[0] + s_lo * (lt - L[0]), out)
        out = np.where(lt > L[-1], P[-1] + s_hi * (lt - L[-1]), out)
        return np.exp(out)

    def dphi(self, t):
        """phi'(t), analytic for the built-ins, tabulated for custom."""
        scalar = not isinstance(t, np.ndarray)
        tv = np.asarray(t, dtype=float)
        if np.any(tv <= 0.0):
            raise DomainError("dphi requires t > 0")
        k = self.kind
        if k == "p_power":
            out = (self.param - 2.0) * tv ** (self.param - 3.0)
        elif k == "curvature":
            g = self.param
            out = 4.0 * g * (g - 1.0) * tv * (1.0 + tv * tv) ** (g - 2.0)
        elif k == "plog":
            p = self.param
            out = (p * (p - 2.0) * tv ** (p - 3.0) * np.log1p(tv)
                   + (2.0 * p - 1.0) * tv ** (p - 2.0) / (1.0 + tv)
                   - tv ** (p - 1.0) / (1.0 + tv) ** 2)
        else:
            out = np.interp(tv, self._table_t, self._table_dphi)
        return float(out) if scalar else out

    def Phi(self, t):
        """The even N-function Phi(t); closed form for built-ins."""
        scalar = not isinstance(t, np.ndarray)
        tv = np.abs(np.asarray(t, dtype=float))
        k = self.kind
        if k == "p_power":
            out = tv ** self.param / self.param
        elif k == "curvature":
            out = (1.0 + tv * tv) ** self.param - 1.0
        elif k == "plog":
            out = tv ** self.param * np.log1p(tv)
        elif scalar:
            return self._Phi_custom_scalar(float(tv))
        else:
            out = self._Phi_custom_array(tv)
        return float(out) if scalar else out

    def _Phi_custom_scalar(self, t):
        if t == 0.0:
            return 0.0
        grid = self._table_t
        if t < grid[0]:
            # inside the power-law head
            s0 = (self._log_phi[1] - self._log_phi[0]) / \
                (self._log_t[1] - self._log_t[0])
            return self._Phi_head * (t / grid[0]) ** (s0 + 2.0)
        i = min(int(np.searchsorted(grid, t)), grid.size - 1)
        if grid[i] > t:
            i -= 1
        base = self._Phi_memo[i]
        if t == grid[i]:
            return float(base)
        return float(base) + adaptive_simpson(
            lambda s: s * self._phi_custom_scalar(s), grid[i], min(t, grid[-1]),
            abs_tol=1e-13) + self._tail_integral(t)

    def _tail_integral(self, t):
        if t <= self._table_t[-1]:
            return 0.0
        return adaptive_simpson(lambda s: s * self._phi_custom_scalar(s),
                                self._table_t[-1], t, abs_tol=1e-13)

    def _Phi_custom_array(self, tv):
        flat = np.ravel(tv)
        out = np.array([self._Phi_custom_scalar(float(x)) for x in flat])
        return out.reshape(np.shape(tv))

    def flux(self, z):
        """G(z) = phi(|z|) z, odd with G(0) = 0."""
        if isinstance(z, np.ndarray):
            out = np.zeros_like(z, dtype=float)
            nz = z != 0.0
            out[nz] = self._phi_array(np.abs(z[nz])) * z[nz]
            return out
        return self._G_scalar(float(z))

    def tphi_ratio(self, t):
        """(t phi(t))'/phi(t) = 1 + t phi'(t)/phi(t)."""
        p = self.phi(t)
        if isinstance(t, np.ndarray):
            if np.any(p == 0.0):
                raise ConditionViolation("phi vanished on the sample grid",
                                         witness=np.asarray(t)[p == 0.0][:1])
        elif p == 0.0:
            raise ConditionViolation("phi vanished", witness=t)
        return 1.0 + t * self.dphi(t) / p

    # -- certification ------------------------------------------------------

    def _ratio_bounds(self, grid):
        k = self.kind
        if k == "p_power":
            r = self.param - 1.0
            return r, r
        if k == "curvature":
            r = 2.0 * self.param - 1.0
            return min(1.0, r), max(1.0, r)
        if k == "plog":
            return self.param - 1.0, self.param
        ratios = self.tphi_ratio(grid)
        return float(np.min(ratios)), float(np.max(ratios))

    def flux_inverse(self, y):
        """Solve phi(|z|) z = y for z (vectorized on arrays).

        Geometric bracket expansion followed by bisection to relative
        tolerance 1e-12; the odd extension is realized as
        sign(y) * Ginv(|y|).
        """
        if isinstance(y, np.ndarray):
            return self._flux_inverse_array(y)
        y = float(y)
        if y == 0.0:
            return 0.0
        if not math.isfinite(y):
            raise RangeError(f"flux inverse of non-finite value {y}")
        w = abs(y)
        G = self._G_scalar
        lo, hi = _bracket_scalar(G, w)
        # bisection; bracket already satisfies G(lo) < w <= G(hi)
        for _ in range(200):
            if hi - lo <= _FLUX_RTOL * hi:
                break
            mid = 0.5 * (lo + hi)
            if G(mid) < w:
                lo = mid
            else:
                hi = mid
        z = 0.5 * (lo + hi)
        return math.copysign(z, y)

    def _flux_inverse_array(self, y):
        w = np.abs(np.asarray(y, dtype=float))
        if not np.all(np.isfinite(w)):
            raise RangeError("flux inverse of non-finite values")
        out = np.zeros_like(w)
        active = w > 0.0
        if not np.any(active):
            return out
        wa = w[active]
        G = lambda z: self.flux(z)
        lo = np.ones_like(wa)
        hi = np.ones_like(wa)
        g1 = G(np.ones_like(wa))
        below = g1 < wa  # root above 1: double hi
        hi_mask = below.copy()
        for _ in range(_MAX_DOUBLINGS):
            if not np.any(hi_mask):
                break
            hi[hi_mask] *= 2.0
            hi_mask &= G(hi) < wa
        else:
            raise RangeError("flux bracket expansion exhausted its doublings")
        lo[below] = hi[below] * 0.5
        above = ~below  # root at or below 1: halve lo
        lo_mask = above.copy()
        for _ in range(_MAX_DOUBLINGS):
            if not np.any(lo_mask):
                break
            lo[lo_mask] *= 0.5
            lo_mask &= G(lo) >= wa
        else:
            raise RangeError("flux bracket contraction exhausted its halvings")
        hi[above] = lo[above] * 2.0
        for _ in range(80):
            if np.all(hi - lo <= _FLUX_RTOL * hi):
                break
            mid = 0.5 * (lo + hi)
            low = G(mid) < wa
            lo = np.where(low, mid, lo)
            hi = np.where(low, hi, mid)
        out[active] = 0.5 * (lo + hi)
        return out * np.sign(y)

    def __repr__(self):
        if self.kind == "custom":
            return f"PhiSpec(custom, {self._table_t.size} samples)"
        return f"PhiSpec({self.kind}, {self.param})"


def _bracket_scalar(G, w):
    z = 1.0
    g = G(z)
    if g < w:
        for _ in range(_MAX_DOUBLINGS):
            z2 = 2.0 * z
            g2 = G(z2)
            if g2 >= w:
                return z, z2
            z = z2
        raise RangeError(f"no flux bracket found below {w} in 1000 doublings")
    for _ in range(_MAX_DOUBLINGS):
        z2 = 0.5 * z
        if G(z2) < w:
            return z2, z
        z = z2
    raise RangeError(f"no flux bracket found above {w} in 1000 halvings")


# -- module-level operations -------------------------------------------------

def certify_growth(spec, sample_grid=None):
    """Certify (Gamma1, Gamma2, gamma1, gamma2) and check them on a grid.

    Built-in kinds report their closed forms; the grid pass re-verifies the
    sandwich on every sample.  Raises ConditionViolation with the witnessing
    t when Gamma1 <= 0 (which would break gamma1 > 1) or when a sample
    escapes the certified bounds.
    """
    grid = log_grid() if sample_grid is None else np.asarray(sample_grid, float)
    if grid.size < 1000 or grid[0] > 1e-6 or grid[-1] < 1e6:
        raise DomainError("certification grid must span [1e-6, 1e6] with >= 1000 points")
    g1, g2 = spec.Gamma1, spec.Gamma2
    if g1 <= 0.0:
        t_wit = grid[-1] if spec.kind != "custom" else grid[int(np.argmin(spec.tphi_ratio(grid)))]
        raise ConditionViolation(
            f"flux ratio lower bound {g1} is not positive", witness=float(t_wit), value=g1)
    ratios = spec.tphi_ratio(grid)
    slack = 1e-9 * max(1.0, abs(g2))
    bad = (ratios < g1 - slack) | (ratios > g2 + slack)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise ConditionViolation(
            f"flux ratio escapes [{g1}, {g2}] at t={grid[i]}",
            witness=float(grid[i]), value=float(ratios[i]))
    return g1, g2, spec.gamma1, spec.gamma2


def luxemburg_norm(spec, values, tol=1e-10):
    """Gauge norm inf{lam > 0 : integral Phi(u/lam) <= 1} on a grid function.

    ``values`` must expose cell_values()/cell_measures(); the integral is the
    midpoint rule over cells.  Returns 0.0 for the zero function.
    """
    cv = np.asarray(values.cell_values(), dtype=float)
    cm = np.asarray(values.cell_measures(), dtype=float)
    amax = float(np.max(np.abs(cv))) if cv.size else 0.0
    if amax == 0.0:
        return 0.0

    def mass(lam):
        return float(np.sum(spec.Phi(cv / lam) * cm))

    lam = amax
    # expand to a bracket with mass(hi) <= 1 <= mass(lo)
    hi = lam
    for _ in range(_MAX_DOUBLINGS):
        if mass(hi) <= 1.0:
            break
        hi *= 2.0
    else:
        raise NumericError("luxemburg bracket expansion failed upward")
    lo = hi * 0.5
    for _ in range(_MAX_DOUBLINGS):
        if mass(lo) > 1.0:
            break
        hi = lo
        lo *= 0.5
        if lo < 1e-300:
            return 0.0
    for _ in range(200):
        if hi - lo <= tol * hi:
            break
        mid = 0.5 * (lo + hi)
        if mass(mid) > 1.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def check_zeta_bounds(spec, rho, t, rel_slack=1e-9):
    """Two-sided scaling bound min/max(t^g1, t^g2) * Phi(rho) around Phi(rho*t)."""
    g1, g2 = spec.gamma1, spec.gamma2
    z0 = min(t ** g1, t ** g2)
    z1 = max(t ** g1, t ** g2)
    mid = spec.Phi(rho * t)
    base = spec.Phi(rho)
    scale = max(abs(mid), z1 * base, 1e-300)
    lo_ok = z0 * base - mid <= rel_slack * scale
    hi_ok = mid - z1 * base <= rel_slack * scale
    return bool(lo_ok and hi_ok)
