"""Figures written next to the delimited output of a solve."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .export import sample_lattice  # noqa: E402

plt.rcParams.update({
    "font.size": 10,
    "axes.labelsize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "savefig.dpi": 150,
})


def plot_solution(path, space, geom, u, resolution=101, coarse_net=None, title=None):
    """Filled contours of the solution over the physical domain."""
    _, _, pts, vals = sample_lattice(space, geom, u, resolution)
    X = pts[:, 0].reshape(resolution, resolution)
    Y = pts[:, 1].reshape(resolution, resolution)
    U = vals.reshape(resolution, resolution)

    fig, ax = plt.subplots(figsize=(5.2, 4.4))
    levels = np.linspace(min(0.0, U.min()), max(1.0, U.max()), 21)
    cs = ax.contourf(X, Y, U, levels=levels, cmap="viridis")
    fig.colorbar(cs, ax=ax, label="u")
    if coarse_net is not None:
        net = np.asarray(coarse_net).reshape(-1, 2)
        n = int(round(np.sqrt(len(net))))
        grid = net.reshape(n, n, 2)
        for k in range(n):
            ax.plot(grid[k, :, 0], grid[k, :, 1], color="w", lw=0.6, alpha=0.8)
            ax.plot(grid[:, k, 0], grid[:, k, 1], color="w", lw=0.6, alpha=0.8)
        ax.plot(net[:, 0], net[:, 1], "o", color="w", ms=3)
    # outline of the physical boundary
    edge = np.concatenate([
        np.column_stack([X[0], Y[0]]),
        np.column_stack([X[:, -1], Y[:, -1]]),
        np.column_stack([X[-1, ::-1], Y[-1, ::-1]]),
        np.column_stack([X[::-1, 0], Y[::-1, 0]]),
    ])
    ax.plot(edge[:, 0], edge[:, 1], color="k", lw=0.8)
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return Path(path)


def plot_convergence(path, residuals, tolerance=None):
    fig, ax = plt.subplots(figsize=(5.0, 3.2))
    ax.semilogy(np.arange(1, len(residuals) + 1), residuals, lw=1.0)
    if tolerance is not None:
        ax.axhline(tolerance, color="0.5", ls="--", lw=0.8, label="tolerance")
        ax.legend(frameon=False)
    ax.set_xlabel("defect-correction iteration")
    ax.set_ylabel(r"$\|\rho\|_\infty$")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return Path(path)
