"""Static figure rendering for reports (SVG files next to the CSVs)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _skeleton_lines(ax, f):
    for a in f.a_nodes:
        ax.axhline(a, color="0.6", lw=0.7, ls="--")
    for b in f.b_nodes:
        ax.axhline(b, color="0.85", lw=0.7, ls=":")


def plot_profile(path, xs, us, f=None, xlabel="x", title=""):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(xs, us, lw=1.5)
    if f is not None:
        _skeleton_lines(ax, f)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("u")
    if title:
        ax.set_title(title, fontsize=10)
    ax.grid(alpha=0.25)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_grid_function(path, gf, f=None, title=""):
    dom = gf.domain
    if dom.shape == "rectangle":
        fig, ax = plt.subplots(figsize=(5.5, 4.5))
        x, y = dom.node_coords()
        im = ax.pcolormesh(x, y, gf.values, shading="gouraud")
        fig.colorbar(im, ax=ax, label="u")
        ax.set_xlabel("x")
        ax.set_ylabel("y")
        if title:
            ax.set_title(title, fontsize=10)
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
        return path
    xlabel = "r" if dom.shape == "ball" else "x"
    return plot_profile(path, dom.node_coords(), gf.values, f=f,
                        xlabel=xlabel, title=title)


def plot_radial_profile(path, profile, f=None, title=""):
    return plot_profile(path, profile.r, profile.u, f=f, xlabel="r",
                        title=title or f"shot d={profile.d:.4g}, "
                        f"lambda={profile.lam:.4g}")


def plot_occupancy(path, sweep, f, title="band occupancy"):
    ks = list(range(2, f.m + 1))
    grid = np.zeros((len(ks), sweep.lambdas.size))
    for i, k in enumerate(ks):
        for j in range(sweep.lambdas.size):
            grid[i, j] = 1.0 if sweep.occupancy[(k, j)] else 0.0
    fig, ax = plt.subplots(figsize=(6.5, 1.2 + 0.8 * len(ks)))
    im = ax.imshow(grid, aspect="auto", cmap="Greens", vmin=0, vmax=1,
                   origin="lower")
    ax.set_yticks(range(len(ks)), [f"band {k - 1}" for k in ks])
    ax.set_xticks(range(sweep.lambdas.size),
                  [f"{v:.3g}" for v in sweep.lambdas], rotation=45,
                  fontsize=7)
    ax.set_xlabel("lambda")
    if sweep.lambda_bar is not None:
        j = int(np.argmin(np.abs(sweep.lambdas - sweep.lambda_bar)))
        ax.axvline(j, color="crimson", lw=1.2)
        title = title + f" (lambda_bar = {sweep.lambda_bar:.4g})"
    ax.set_title(title, fontsize=10)
    fig.colorbar(im, ax=ax, label="occupied")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_flux_ratio(path, phi, title=""):
    t = np.geomspace(1e-6, 1e6, 2000)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogx(t, phi.tphi_ratio(t), lw=1.4, label="(t phi)'/phi")
    ax.axhline(phi.Gamma1, color="0.5", ls="--", lw=0.8,
               label=f"bounds [{phi.Gamma1:.4g}, {phi.Gamma2:.4g}]")
    ax.axhline(phi.Gamma2, color="0.5", ls="--", lw=0.8)
    ax.set_xlabel("t")
    ax.set_ylabel("flux ratio")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.25)
    if title:
        ax.set_title(title, fontsize=10)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path
