"""Quadrature helpers shared by the generator and radial modules."""

import numpy as np

from .errors import NumericError


def adaptive_simpson(func, a, b, abs_tol=1e-12, max_depth=48):
    """Integrate ``func`` over [a, b] by adaptive Simpson subdivision.

    Raises NumericError when the recursion depth is exhausted before the
    defect estimate drops below ``abs_tol``.
    """
    if a == b:
        return 0.0
    fa, fb = func(a), func(b)
    m = 0.5 * (a + b)
    fm = func(m)
    whole = (b - a) * (fa + 4.0 * fm + fb) / 6.0
    return _simpson_recurse(func, a, b, fa, fm, fb, whole, abs_tol, max_depth)


def _simpson_recurse(func, a, b, fa, fm, fb, whole, tol, depth):
    m = 0.5 * (a + b)
    lm = 0.5 * (a + m)
    rm = 0.5 * (m + b)
    flm, frm = func(lm), func(rm)
    left = (m - a) * (fa + 4.0 * flm + fm) / 6.0
    right = (b - m) * (fm + 4.0 * frm + fb) / 6.0
    defect = left + right - whole
    if abs(defect) <= 15.0 * tol:
        return left + right + defect / 15.0
    if depth <= 0:
        raise NumericError(
            f"adaptive Simpson did not converge on [{a}, {b}] (defect {defect:.3e})"
        )
    return _simpson_recurse(func, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + \
        _simpson_recurse(func, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)


def quadratic_segment_integral(x0, x1, x2, y0, y1, y2, a, b):
    """Integral over [a, b] of the parabola through three support points."""
    c1 = (y1 - y0) / (x1 - x0)
    c2 = ((y2 - y1) / (x2 - x1) - c1) / (x2 - x0)

    def prim(x):
        d0 = x - x0
        return y0 * x + c1 * d0 * d0 / 2.0 + \
            c2 * (d0 ** 3 / 3.0 - (x1 - x0) * d0 * d0 / 2.0)

    return prim(b) - prim(a)


def cumulative_integral(y, x):
    """Cumulative integral of sampled y over x, fourth order on uniform meshes.

    The mesh must be uniform except possibly for a shorter terminal interval
    (a solver run that stopped at a root lands on such a node).  Parity chains
    of Simpson pairs start from a cubic-accurate first interval, so every node
    carries an O(h^4) value, not just the even ones.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.size
    out = np.zeros(n)
    if n < 2:
        return out
    if n == 2:
        out[1] = 0.5 * (y[0] + y[1]) * (x[1] - x[0])
        return out
    h = x[1] - x[0]
    m = n
    tail = abs((x[-1] - x[-2]) - h) > 1e-9 * abs(h)
    if tail:
        m = n - 1
    if m >= 2:
        if m >= 4:
            out[1] = h * (9.0 * y[0] + 19.0 * y[1] - 5.0 * y[2] + y[3]) / 24.0
        else:
            out[1] = quadratic_segment_integral(
                x[0], x[1], x[2], y[0], y[1], y[2], x[0], x[1])
        for i in range(2, m):
            out[i] = out[i - 2] + h * (y[i - 2] + 4.0 * y[i - 1] + y[i]) / 3.0
    if tail:
        out[-1] = out[-2] + quadratic_segment_integral(
            x[-3], x[-2], x[-1], y[-3], y[-2], y[-1], x[-2], x[-1])
    return out
