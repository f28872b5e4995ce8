"""Uniform Dirichlet grids: intervals, rectangles and balls.

The ball domain is stored through its radial reduction: nodes live on
[0, R], the only Dirichlet node is r = R, and all measures carry the
spherical shell weight.  Node quadrature weights are trapezoid-type against
the shape's volume element; cell measures are the exact volumes swept by
each cell, so 1D, 2D and radial energies share one code path.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DomainError


def sphere_area(n_dim):
    """Surface measure of the unit sphere in R^n."""
    return 2.0 * math.pi ** (n_dim / 2.0) / math.gamma(n_dim / 2.0)


class Domain:
    """Descriptor of the computational domain plus its quadrature data."""

    def __init__(self, shape, sizes, cells, dim=None):
        self.shape = shape
        if shape == "interval":
            (self.length,) = sizes
            (n,) = cells
            if self.length <= 0 or n < 2:
                raise DomainError("interval needs length > 0 and >= 2 cells")
            self.cells = (n,)
            self.h = (self.length / n,)
            self.volume = self.length
            self.inradius = 0.5 * self.length
        elif shape == "rectangle":
            self.lengths = tuple(float(s) for s in sizes)
            nx, ny = cells
            if min(self.lengths) <= 0 or min(nx, ny) < 2:
                raise DomainError("rectangle needs positive sides and >= 2 cells")
            self.cells = (nx, ny)
            self.h = (self.lengths[0] / nx, self.lengths[1] / ny)
            self.volume = self.lengths[0] * self.lengths[1]
            self.inradius = 0.5 * min(self.lengths)
        elif shape == "ball":
            (self.radius,) = sizes
            (n,) = cells
            self.dim = int(dim)
            if self.radius <= 0 or n < 2 or self.dim < 1:
                raise DomainError("ball needs radius > 0, dim >= 1, >= 2 cells")
            self.cells = (n,)
            self.h = (self.radius / n,)
            self.omega = sphere_area(self.dim)
            self.volume = self.omega * self.radius ** self.dim / self.dim
            self.inradius = self.radius
        else:
            raise DomainError(f"unknown domain shape {shape!r}")

    @classmethod
    def interval(cls, length, n):
        return cls("interval", (float(length),), (int(n),))

    @classmethod
    def rectangle(cls, lx, ly, nx, ny):
        return cls("rectangle", (float(lx), float(ly)), (int(nx), int(ny)))

    @classmethod
    def ball(cls, radius, dim, n):
        return cls("ball", (float(radius),), (int(n),), dim=dim)

    # -- node data -----------------------------------------------------------

    def node_shape(self):
        if self.shape == "rectangle":
            return (self.cells[0] + 1, self.cells[1] + 1)
        return (self.cells[0] + 1,)

    def node_coords(self):
        """Coordinates per node: 1D/radial arrays, or a meshgrid pair in 2D."""
        if self.shape == "interval":
            return np.linspace(0.0, self.length, self.cells[0] + 1)
        if self.shape == "ball":
            return np.linspace(0.0, self.radius, self.cells[0] + 1)
        x = np.linspace(0.0, self.lengths[0], self.cells[0] + 1)
        y = np.linspace(0.0, self.lengths[1], self.cells[1] + 1)
        return np.meshgrid(x, y, indexing="ij")

    def boundary_mask(self):
        mask = np.zeros(self.node_shape(), dtype=bool)
        if self.shape == "interval":
            mask[0] = mask[-1] = True
        elif self.shape == "rectangle":
            mask[0, :] = mask[-1, :] = True
            mask[:, 0] = mask[:, -1] = True
        else:  # ball: Dirichlet only at r = R, the center is interior
            mask[-1] = True
        return mask

    def node_measures(self):
        """Trapezoid-type quadrature weights against the volume element."""
        if self.shape == "interval":
            h = self.h[0]
            w = np.full(self.cells[0] + 1, h)
            w[0] = w[-1] = 0.5 * h
            return w
        if self.shape == "rectangle":
            hx, hy = self.h
            wx = np.full(self.cells[0] + 1, hx)
            wx[0] = wx[-1] = 0.5 * hx
            wy = np.full(self.cells[1] + 1, hy)
            wy[0] = wy[-1] = 0.5 * hy
            return np.outer(wx, wy)
        h = self.h[0]
        r = self.node_coords()
        w = self.omega * r ** (self.dim - 1) * h
        w[0] *= 0.5
        w[-1] *= 0.5
        return w

    def dist_to_boundary(self):
        if self.shape == "interval":
            x = self.node_coords()
            return np.minimum(x, self.length - x)
        if self.shape == "rectangle":
            x, y = self.node_coords()
            return np.minimum(np.minimum(x, self.lengths[0] - x),
                              np.minimum(y, self.lengths[1] - y))
        return self.radius - self.node_coords()

    # -- cell data -----------------------------------------------------------

    def cell_measures(self):
        if self.shape == "interval":
            return np.full(self.cells[0], self.h[0])
        if self.shape == "rectangle":
            return np.full(self.cells, self.h[0] * self.h[1])
        r = self.node_coords()
        return self.omega * (r[1:] ** self.dim - r[:-1] ** self.dim) / self.dim

    def collar_volume(self, delta):
        """Volume of the nodes-within-delta-of-the-boundary collar."""
        if delta <= 0:
            return 0.0
        if self.shape == "interval":
            return min(2.0 * delta, self.length)
        if self.shape == "rectangle":
            lx, ly = self.lengths
            inner = max(lx - 2 * delta, 0.0) * max(ly - 2 * delta, 0.0)
            return self.volume - inner
        inner = max(self.radius - delta, 0.0)
        return self.omega * (self.radius ** self.dim - inner ** self.dim) / self.dim

    def refine(self, factor=2):
        if self.shape == "interval":
            return Domain.interval(self.length, self.cells[0] * factor)
        if self.shape == "rectangle":
            return Domain.rectangle(*self.lengths,
                                    self.cells[0] * factor, self.cells[1] * factor)
        return Domain.ball(self.radius, self.dim, self.cells[0] * factor)

    def __repr__(self):
        if self.shape == "interval":
            return f"Domain(interval [0, {self.length}], {self.cells[0]} cells)"
        if self.shape == "rectangle":
            return (f"Domain(rectangle {self.lengths[0]} x {self.lengths[1]}, "
                    f"{self.cells[0]} x {self.cells[1]} cells)")
        return f"Domain(ball R={self.radius}, dim={self.dim}, {self.cells[0]} cells)"


class GridFunction:
    """Nodal values on a Domain.  Dirichlet paths zero the boundary entries;
    norm-only uses (the gauge norm, test payloads) may carry any values."""

    def __init__(self, domain, values, dirichlet=True):
        self.domain = domain
        v = np.asarray(values, dtype=float).reshape(domain.node_shape())
        if not np.all(np.isfinite(v)):
            raise DomainError("grid function values must be finite")
        if dirichlet:
            v = v.copy()
            v[domain.boundary_mask()] = 0.0
        self.values = v

    @classmethod
    def zeros(cls, domain):
        return cls(domain, np.zeros(domain.node_shape()))

    def copy(self):
        return GridFunction(self.domain, self.values.copy(), dirichlet=False)

    @property
    def sup_norm(self):
        return float(np.max(np.abs(self.values)))

    def interior_min(self):
        return float(np.min(self.values[~self.domain.boundary_mask()]))

    def interior_max(self):
        return float(np.max(self.values[~self.domain.boundary_mask()]))

    def cell_values(self):
        """Cell-midpoint values (corner average), for midpoint-rule integrals."""
        v = self.values
        if self.domain.shape == "rectangle":
            return 0.25 * (v[:-1, :-1] + v[1:, :-1] + v[:-1, 1:] + v[1:, 1:])
        return 0.5 * (v[:-1] + v[1:])

    def cell_measures(self):
        return self.domain.cell_measures()

    def refined(self, factor=2):
        """Same function sampled on a refined grid (multilinear interpolation)."""
        dom2 = self.domain.refine(factor)
        if self.domain.shape == "rectangle":
            x, y = self.domain.node_coords()
            x2, y2 = dom2.node_coords()
            mid = np.empty(dom2.node_shape())
            for j, yy in enumerate(y2[0, :]):
                col = np.array([np.interp(yy, y[i, :], self.values[i, :])
                                for i in range(self.values.shape[0])])
                mid[:, j] = np.interp(x2[:, 0], x[:, 0], col)
            return GridFunction(dom2, mid, dirichlet=False)
        x = self.domain.node_coords()
        x2 = dom2.node_coords()
        return GridFunction(dom2, np.interp(x2, x, self.values), dirichlet=False)
