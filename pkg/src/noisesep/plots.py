"""Figure rendering for the CLI report path.

Each function takes the row lists produced by :mod:`noisesep.experiments`
and writes a PNG next to the CSV.  Figures are a convenience view of the
tables; the CSVs remain the deterministic interface.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _heat(ax, xs, ys, grid, title, xlabel, ylabel):
    mesh = ax.pcolormesh(xs, ys, grid, shading="nearest", vmin=0.0,
                         vmax=max(1.0, float(np.nanmax(grid))))
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    return mesh


def plot_trajectory(rows, path) -> None:
    """Objective and residual decay of one descent run (log scale)."""
    its = [r[0] for r in rows]
    obj = [max(r[1], 1e-300) for r in rows]
    res = [max(r[2], 1e-300) for r in rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogy(its, obj, label="objective")
    ax.semilogy(its, res, label="residual sup norm")
    ax.set_xlabel("iteration")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_implicit_bias(rows, gamma, path) -> None:
    """Two heatmaps of the GD-vs-convex differences over (alpha, lambda).

    The dashed line is the matching curve alpha = -ln(gamma) / (2 lambda).
    """
    alphas = sorted({float(r[0]) for r in rows})
    lambdas = sorted({float(r[1]) for r in rows})
    ai = {a: i for i, a in enumerate(alphas)}
    li = {l: i for i, l in enumerate(lambdas)}
    grids = [np.full((len(alphas), len(lambdas)), np.nan) for _ in range(2)]
    for r in rows:
        grids[0][ai[float(r[0])], li[float(r[1])]] = float(r[2])
        grids[1][ai[float(r[0])], li[float(r[1])]] = float(r[3])
    fig, axes = plt.subplots(1, 2, figsize=(11, 4.2))
    curve_l = np.array(lambdas)
    curve_a = -math.log(gamma) / (2.0 * curve_l)
    for ax, grid, name in zip(axes, grids, ("coefficients", "corruption")):
        mesh = ax.pcolormesh(lambdas, alphas, grid, shading="nearest")
        ax.plot(curve_l, curve_a, "w--", lw=1.5, label="alpha = -ln(gamma)/(2 lambda)")
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_ylim(min(alphas), max(alphas))
        ax.set_xlabel("lambda")
        ax.set_ylabel("alpha")
        ax.set_title("relative difference: %s" % name)
        fig.colorbar(mesh, ax=ax)
    axes[0].legend(loc="lower left", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_lambda_sweep(rows, path) -> None:
    """Mean recovery error curves vs lambda, one panel per sweep mode."""
    fig, axes = plt.subplots(2, 2, figsize=(11, 8))
    for col, mode in enumerate(("k", "r")):
        sub = [r for r in rows if r[0] == mode]
        values = sorted({int(r[1] if mode == "k" else r[2]) for r in sub})
        for value in values:
            pick = [r for r in sub if int(r[1] if mode == "k" else r[2]) == value]
            lams = [float(r[3]) for r in pick]
            axes[0][col].loglog(lams, [max(float(r[4]), 1e-16) for r in pick],
                                marker="o", label="%s=%d" % (mode, value))
            axes[1][col].loglog(lams, [max(float(r[5]), 1e-16) for r in pick],
                                marker="o", label="%s=%d" % (mode, value))
        axes[0][col].set_title("coefficient error, varying %s" % mode)
        axes[1][col].set_title("corruption error, varying %s" % mode)
        for row_ax in axes:
            row_ax[col].set_xlabel("lambda")
            row_ax[col].legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_phase_transition(rows, path) -> None:
    """Success-rate heatmaps over the (sparsity, rank) grid."""
    ks = sorted({int(r[0]) for r in rows})
    rs = sorted({int(r[1]) for r in rows})
    ki = {k: i for i, k in enumerate(ks)}
    ri = {r: i for i, r in enumerate(rs)}
    grids = [np.zeros((len(ks), len(rs))) for _ in range(2)]
    for row in rows:
        grids[0][ki[int(row[0])], ri[int(row[1])]] = float(row[2])
        grids[1][ki[int(row[0])], ri[int(row[1])]] = float(row[3])
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    for ax, grid, name in zip(axes, grids, ("coefficients", "corruption")):
        mesh = _heat(ax, rs, ks, grid, "recovery rate: %s" % name, "rank", "sparsity")
        ax.set_xticks(rs)
        ax.set_yticks(ks)
        fig.colorbar(mesh, ax=ax)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_histories(sep_rows, ce_rows, path) -> None:
    """Accuracy and corruption-mass curves for both training runs."""
    fig, axes = plt.subplots(1, 3, figsize=(13, 4))
    for rows, label, style in ((sep_rows, "separated", "-"), (ce_rows, "plain ce", "--")):
        ep = [int(r[0]) for r in rows]
        axes[0].plot(ep, [float(r[1]) for r in rows], style, label="%s train(noisy)" % label)
        axes[0].plot(ep, [float(r[2]) for r in rows], style, alpha=0.6,
                     label="%s train(clean)" % label)
        axes[1].plot(ep, [float(r[3]) for r in rows], style, label=label)
        axes[2].plot(ep, [float(r[4]) for r in rows], style, label=label)
    axes[0].set_title("train accuracy")
    axes[1].set_title("test accuracy")
    axes[2].set_title("mean corruption l1")
    for ax in axes:
        ax.set_xlabel("epoch")
        ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
