"""CSV emission and solution round-tripping.

Every CSV starts with comment lines carrying the config hash and any
metadata, then a header row naming the columns.  Floats are written with
repr (shortest round-trip form), so identical runs give byte-identical
files.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .errors import StructuralError
from .grids import Domain, GridFunction


def fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path, columns, rows, config_hash="", meta=None):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        if config_hash:
            fh.write(f"# config_sha256={config_hash}\n")
        for key, val in (meta or {}).items():
            fh.write(f"# {key}={fmt(val)}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([fmt(x) for x in row])
    return path


def write_profile_csv(path, profile, f, config_hash="", extra_meta=None):
    """Radial profile dump: r, u, du, Q, identity_residual."""
    res = profile.identity_residuals(f)
    meta = {"kind": "radial_profile", "N": profile.N, "lambda": profile.lam,
            "d": profile.d, "h": profile.h, "status": profile.status}
    meta.update(extra_meta or {})
    rows = zip(profile.r, profile.u, profile.du, profile.Q, res)
    return write_csv(path, ["r", "u", "du", "Q", "identity_residual"], rows,
                     config_hash, meta)


def write_grid_csv(path, gf, lam=None, config_hash="", extra_meta=None):
    """Nodal dump of a grid function, shape-tagged for round-tripping."""
    dom = gf.domain
    meta = {"kind": f"grid_{dom.shape}"}
    if lam is not None:
        meta["lambda"] = lam
    if dom.shape == "interval":
        meta["length"] = dom.length
        cols = ["x", "u"]
        rows = zip(dom.node_coords(), gf.values)
    elif dom.shape == "ball":
        meta["radius"] = dom.radius
        meta["dimension"] = dom.dim
        cols = ["r", "u"]
        rows = zip(dom.node_coords(), gf.values)
    else:
        meta["lengths"] = f"{dom.lengths[0]};{dom.lengths[1]}"
        x, y = dom.node_coords()
        cols = ["x", "y", "u"]
        rows = zip(x.ravel(), y.ravel(), gf.values.ravel())
    meta.update(extra_meta or {})
    return write_csv(path, cols, rows, config_hash, meta)


def read_solution_csv(path):
    """Read back a nodal or radial-profile CSV written by this package.

    Returns (meta, columns) with columns as float arrays keyed by header
    name."""
    meta = {}
    header = None
    data = []
    with open(path, newline="") as fh:
        for line in fh:
            line = line.rstrip("\r\n")
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" in body:
                    key, val = body.split("=", 1)
                    meta[key.strip()] = val.strip()
                continue
            if header is None:
                header = line.split(",")
                continue
            if line:
                data.append([float(x) for x in line.split(",")])
    if header is None or not data:
        raise StructuralError(f"{path}: no tabular content found")
    arr = np.asarray(data)
    return meta, {name: arr[:, i] for i, name in enumerate(header)}


def grid_function_from_csv(path):
    """Rebuild a GridFunction (and lambda, if recorded) from a nodal dump."""
    meta, cols = read_solution_csv(path)
    kind = meta.get("kind", "")
    lam = float(meta["lambda"]) if "lambda" in meta else None
    if kind == "grid_interval":
        n = cols["x"].size - 1
        dom = Domain.interval(float(meta["length"]), n)
        return GridFunction(dom, cols["u"], dirichlet=False), lam
    if kind == "grid_ball" or kind == "radial_profile":
        r = cols["r"]
        u = cols["u"]
        if kind == "radial_profile":
            # resample the shot onto a uniform Dirichlet grid
            n = max(r.size - 1, 8)
            dom = Domain.ball(float(r[-1]), int(float(meta["N"])), n)
            vals = np.interp(dom.node_coords(), r, u)
            return GridFunction(dom, vals), float(meta["lambda"])
        dom = Domain.ball(float(meta["radius"]), int(float(meta["dimension"])),
                          r.size - 1)
        return GridFunction(dom, u, dirichlet=False), lam
    if kind == "grid_rectangle":
        lx, ly = (float(s) for s in meta["lengths"].split(";"))
        n2 = cols["u"].size
        nx = int(round(n2 ** 0.5))
        dom = Domain.rectangle(lx, ly, nx - 1, nx - 1)
        return GridFunction(dom, cols["u"].reshape(nx, nx), dirichlet=False), lam
    raise StructuralError(f"{path}: unrecognized solution kind {kind!r}")
