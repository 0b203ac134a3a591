"""Experiment drivers behind the command line interface.

Each driver returns plain row lists ready for :func:`noisesep.serialize.
write_table`, so the CLI is a thin shell and the logic stays importable for
tests.  Determinism contract: per-trial seeds are derived arithmetically
from the base seed (never from global state), trials are computed
independently and rows are emitted sorted by (cell, trial-independent
keys), so a re-run with the same flags writes byte-identical tables.
"""

from __future__ import annotations

import math
from dataclasses import replace

import numpy as np

from .convex import solve_convex
from .descent import GdConfig, run_gd
from .instances import (
    apply_asymmetric_noise,
    apply_symmetric_noise,
    gen_classification_dataset,
    gen_linear_instance,
)
from .landscape import classify_critical_point
from .linalg import make_rng, min_norm_solve, project_row_space, svd_compact
from .recovery import recovery_errors
from .training import TrainConfig, train_model
from .classifier import noise_detection_metrics

IMPLICIT_BIAS_COLUMNS = ["alpha", "lambda", "rel_diff_theta", "rel_diff_s",
                         "gd_flag", "convex_status", "seed"]
SWEEP_COLUMNS = ["mode", "k", "r", "lambda", "eps_theta_mean", "eps_s_mean", "seed"]
PHASE_COLUMNS = ["k", "r", "success_rate_theta", "success_rate_s", "seed"]
SUMMARY_COLUMNS = ["method", "final_test_acc", "final_train_acc_noisy",
                   "noise_precision", "noise_recall", "seed"]

GRID_SET = (10, 20, 40, 60, 80)


def rel_diff(a: np.ndarray, b: np.ndarray) -> float:
    """``||a - b|| / max(||a||, ||b||)``; zero when both vanish."""
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    top = float(np.linalg.norm(np.asarray(a) - np.asarray(b)))
    denom = max(na, nb)
    return top / denom if denom > 0 else 0.0


def log_grid(lo: float, hi: float, count: int) -> np.ndarray:
    return np.logspace(math.log10(lo), math.log10(hi), count)


def implicit_bias_table(n: int, p: int, rank: int, sparsity: int, gamma: float,
                        alphas, lambdas, seed: int,
                        stop_residual: float = 1e-8,
                        max_iters: int = 400_000,
                        convex_tol: float = 1e-8) -> list:
    """Compare every GD endpoint against every convex solution on one instance.

    One GD run per alpha, one convex solve per lambda, then all
    (alpha, lambda) pairs are reported.  Pairs on the curve
    ``alpha = -ln(gamma) / (2 lambda)`` should agree; pairs far off the
    curve should not.
    """
    inst = gen_linear_instance(n, p, rank, sparsity, seed)
    gd_runs = []
    for alpha in alphas:
        cfg = GdConfig(alpha=float(alpha), gamma=gamma,
                       stop_residual=stop_residual, max_iters=max_iters)
        res = run_gd(inst.j, inst.y, cfg)
        gd_runs.append((float(alpha), res))
    solves = []
    for lam in lambdas:
        sol = solve_convex(inst.j, inst.y, float(lam), tol=convex_tol)
        solves.append((float(lam), sol))
    rows = []
    for alpha, res in gd_runs:
        for lam, sol in solves:
            rows.append([
                alpha, lam,
                rel_diff(res.state.theta, sol.theta),
                rel_diff(res.state.s(), sol.s),
                res.flag, sol.status, seed,
            ])
    return rows


def lambda_sweep_table(seed: int, n: int = 100, p: int = 150,
                       grid=GRID_SET, fixed_r: int = 20, fixed_k: int = 20,
                       lambdas=None, trials: int = 10,
                       convex_tol: float = 1e-6) -> list:
    """Mean recovery errors as a function of lambda, varying k then r."""
    if lambdas is None:
        lambdas = log_grid(1e-3, 1.0, 9)
    rows = []
    for mode in ("k", "r"):
        for value in grid:
            k = value if mode == "k" else fixed_k
            r = fixed_r if mode == "k" else value
            insts = [gen_linear_instance(n, p, r, k, seed + 1000 * trial)
                     for trial in range(trials)]
            for lam in lambdas:
                errs_t, errs_s = [], []
                for inst in insts:
                    sol = solve_convex(inst.j, inst.y, float(lam), tol=convex_tol)
                    err = recovery_errors(sol.theta, inst.theta_star, sol.s, inst.s_star)
                    errs_t.append(err.eps_theta)
                    errs_s.append(err.eps_s)
                rows.append([mode, k, r, float(lam),
                             float(np.mean(errs_t)), float(np.mean(errs_s)), seed])
    return rows


def phase_transition_table(seed: int, n: int = 100, p: int = 150,
                           grid=GRID_SET, lam: float = 0.1, trials: int = 20,
                           success_tol: float = 1e-3,
                           convex_tol: float = 1e-6) -> list:
    """Exact-recovery success rates over the (sparsity, rank) grid."""
    rows = []
    for k in grid:
        for r in grid:
            ok_t = 0
            ok_s = 0
            for trial in range(trials):
                trial_seed = seed + 1000 * trial
                inst = gen_linear_instance(n, p, r, k, trial_seed)
                sol = solve_convex(inst.j, inst.y, lam, tol=convex_tol)
                err = recovery_errors(sol.theta, inst.theta_star, sol.s, inst.s_star)
                ok_t += err.eps_theta < success_tol
                ok_s += err.eps_s < success_tol
            rows.append([k, r, ok_t / trials, ok_s / trials, seed])
    return rows


def landscape_check_row(n: int, p: int, rank: int, sparsity: int, seed: int) -> list:
    """Certify the minimum-norm least squares point (u = v = 0) of an instance."""
    inst = gen_linear_instance(n, p, rank, sparsity, seed)
    theta_ls = min_norm_solve(inst.j, project_row_space_y(inst.j, inst.y))
    zero = np.zeros(n)
    report = classify_critical_point(inst.j, inst.y, theta_ls, zero, zero)
    return [report.grad_norm, report.classification,
            -1 if report.witness_index is None else report.witness_index,
            float("nan") if report.curvature_value is None else report.curvature_value,
            seed]


def project_row_space_y(j, y) -> np.ndarray:
    """Projection of y onto the column space (range) of J."""
    svd = svd_compact(j)
    return svd.u @ (svd.u.T @ y)


def classify_tables(num_classes: int, n_per_class: int, dim: int,
                    separation: float, noise_rate: float, noise_type: str,
                    cfg: TrainConfig, test_per_class: int = 250):
    """Train the noise-separating model and the plain-CE baseline.

    Returns ``(states, sep_history_rows, ce_history_rows, summary_rows)``
    where the histories use :data:`noisesep.training.METRICS_COLUMNS`.
    Both methods see the identical dataset and init seed; the baseline is
    the same config with ``alpha_u = alpha_v = 0`` (frozen noise variables)
    and no penalties.
    """
    from .training import metrics_rows

    rng = make_rng(cfg.seed)
    train = gen_classification_dataset(num_classes, n_per_class, dim, separation, rng)
    test = gen_classification_dataset(num_classes, test_per_class, dim, separation,
                                      rng, means=train.means)
    if noise_rate > 0:
        if noise_type == "symmetric":
            train = apply_symmetric_noise(train, noise_rate, rng)
        elif noise_type == "asymmetric":
            pair_map = {c: (c + 1) % num_classes for c in range(num_classes)}
            train = apply_asymmetric_noise(train, pair_map, noise_rate, rng)
        else:
            raise ValueError("noise_type must be symmetric or asymmetric")

    def run(label: str, run_cfg: TrainConfig):
        state, history = train_model(train, run_cfg, test_ds=test)
        precision, recall = noise_detection_metrics(
            state.u, state.v, train.noisy_labels, num_classes, train.flipped)
        final = history[-1]
        summary = [label, final.test_acc, final.train_acc_noisy,
                   precision, recall, run_cfg.seed]
        return state, metrics_rows(history, run_cfg.seed), summary

    sep_state, sep_rows, sep_summary = run("sep", cfg)
    # plain-CE reference: no corruption variables, no extra penalties, and a
    # floor so small it never masks the label entry (standard cross entropy)
    baseline_cfg = replace(cfg, alpha_u=0.0, alpha_v=0.0, lambda_c=0.0,
                           lambda_b=0.0, eps=1e-12)
    ce_state, ce_rows, ce_summary = run("ce", baseline_cfg)
    return (sep_state, ce_state), sep_rows, ce_rows, [sep_summary, ce_summary]
