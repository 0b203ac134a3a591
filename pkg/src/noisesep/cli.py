"""Command line interface.

Subcommands::

    gen-instance      draw a corrupted linear instance, write its files + certificate
    gd                run over-parameterized gradient descent, write the trajectory
    convex            solve the equivalent convex program on a fresh instance
    implicit-bias     GD endpoints vs convex solutions over an (alpha, lambda) grid
    lambda-sweep      mean recovery errors vs lambda for varying sparsity/rank
    phase-transition  exact-recovery success rates over the (sparsity, rank) grid
    classify          train the noise-separating classifier and a plain-CE baseline
    landscape-check   certify the least-squares saddle of a corrupted instance

A plain-text config file (``key = value`` per line, '#' comments) can supply
any flag via ``--config``; explicit command line flags win.  Exit codes:
0 success, 2 invalid arguments, 3 solver non-convergence in a single-run
command.  All CSV bodies are byte-deterministic for fixed flags; figures
(PNG next to the CSV) can be disabled with --no-plot.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

from . import experiments, plots
from .convex import ConvexSolution, solve_convex
from .descent import GdConfig, TRAJECTORY_COLUMNS, run_gd
from .instances import gen_linear_instance
from .landscape import CRITICAL_POINT_COLUMNS
from .linalg import make_rng
from .recovery import RecoveryCertificate, build_certificate, recovery_errors
from .serialize import write_matrix, write_table, write_vector
from .training import METRICS_COLUMNS, TrainConfig, save_checkpoint


class UsageError(ValueError):
    pass


DEFAULT_GAMMA = math.exp(-8.0)

OPTION_TYPES = {
    "seed": int, "trials": int, "n": int, "p": int, "rank": int,
    "sparsity": int, "max_iters": int, "grid_points": int, "epochs": int,
    "classes": int, "n_per_class": int, "dim": int, "hidden": int,
    "batch_size": int,
    "gamma": float, "alpha": float, "lambda": float, "tau": float,
    "stop_residual": float, "tol": float, "noise_rate": float,
    "alpha_u": float, "alpha_v": float, "lambda_c": float, "lambda_b": float,
    "epsilon": float, "separation": float,
    "noise_type": str, "out": str,
}

COMMAND_DEFAULTS = {
    "gen-instance": dict(seed=0, n=20, p=40, rank=3, sparsity=3, trials=200,
                         out="instance_out"),
    "gd": dict(seed=0, n=20, p=40, rank=3, sparsity=3, gamma=DEFAULT_GAMMA,
               alpha=4.0, tau=None, max_iters=400_000, stop_residual=1e-3,
               out="gd_trajectory.csv"),
    "convex": dict(seed=0, n=20, p=40, rank=3, sparsity=3, **{"lambda": 0.1},
                   tol=1e-8, max_iters=100_000, out="convex_solution.csv"),
    "implicit-bias": dict(seed=0, n=20, p=40, rank=3, sparsity=3,
                          gamma=DEFAULT_GAMMA, grid_points=20, stop_residual=1e-8,
                          max_iters=400_000, out="implicit_bias.csv"),
    "lambda-sweep": dict(seed=0, n=100, p=150, trials=10, tol=1e-6,
                         out="lambda_sweep.csv"),
    "phase-transition": dict(seed=0, n=100, p=150, trials=20, **{"lambda": 0.1},
                             tol=1e-6, out="phase_transition.csv"),
    "classify": dict(seed=0, classes=4, n_per_class=500, dim=20,
                     separation=3.0, noise_rate=0.4, noise_type="symmetric",
                     epochs=150, hidden=256, batch_size=128, tau=0.02,
                     alpha_u=10.0, alpha_v=10.0, lambda_c=0.9, lambda_b=0.1,
                     epsilon=1e-2, out="classify_out"),
    "landscape-check": dict(seed=0, n=20, p=40, rank=3, sparsity=3,
                            out="landscape_check.csv"),
}


def read_config(path) -> dict:
    """Parse ``key = value`` lines; '#' starts a comment; dashes allowed in keys."""
    values = {}
    try:
        with open(path) as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise UsageError("%s:%d: expected 'key = value'" % (path, lineno))
                key, val = line.split("=", 1)
                values[key.strip().replace("-", "_")] = val.strip()
    except OSError as exc:
        raise UsageError("cannot read config file: %s" % exc)
    return values


def resolve_options(command: str, args: argparse.Namespace) -> dict:
    """Merge CLI > config file > per-command defaults."""
    defaults = COMMAND_DEFAULTS[command]
    config = read_config(args.config) if args.config else {}
    for key in config:
        if key not in defaults:
            raise UsageError("config key %r not valid for %s" % (key, command))
    opts = {}
    for key, default in defaults.items():
        cli_val = getattr(args, key, None)
        if cli_val is not None:
            opts[key] = cli_val
        elif key in config:
            conv = OPTION_TYPES[key]
            try:
                opts[key] = conv(config[key])
            except ValueError:
                raise UsageError("config key %r: cannot parse %r" % (key, config[key]))
        else:
            opts[key] = default
    if "noise_type" in opts and opts["noise_type"] not in ("symmetric", "asymmetric"):
        raise UsageError("noise-type must be symmetric or asymmetric")
    return opts


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="noisesep",
        description="Sparse corruption separation: solvers, theory checks, experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    for command, defaults in COMMAND_DEFAULTS.items():
        p = sub.add_parser(command, help=None)
        p.add_argument("--config", default=None, help="key=value config file")
        p.add_argument("--no-plot", action="store_true", help="skip PNG rendering")
        for key, default in defaults.items():
            flag = "--" + key.replace("_", "-")
            conv = OPTION_TYPES[key]
            p.add_argument(flag, type=conv, default=None,
                           help="default: %r" % (default,))
    return parser


def _comments(command: str, opts: dict) -> list[str]:
    pairs = " ".join("%s=%s" % (k, opts[k]) for k in sorted(opts))
    return ["noisesep %s" % command, pairs]


def cmd_gen_instance(opts) -> int:
    os.makedirs(opts["out"], exist_ok=True)
    inst = gen_linear_instance(opts["n"], opts["p"], opts["rank"],
                               opts["sparsity"], opts["seed"])
    out = opts["out"]
    write_matrix(os.path.join(out, "J.csv"), inst.j)
    write_vector(os.path.join(out, "y.csv"), inst.y)
    write_vector(os.path.join(out, "theta_star.csv"), inst.theta_star)
    write_vector(os.path.join(out, "s_star.csv"), inst.s_star)
    cert = build_certificate(inst.j, inst.support(), inst.theta_star,
                             trials=opts["trials"], rng=make_rng(opts["seed"] + 1))
    write_table(os.path.join(out, "certificate.csv"), RecoveryCertificate.COLUMNS,
                [cert.row(opts["seed"])], comments=_comments("gen-instance", opts))
    return 0


def cmd_gd(opts, make_plots: bool) -> int:
    inst = gen_linear_instance(opts["n"], opts["p"], opts["rank"],
                               opts["sparsity"], opts["seed"])
    cfg = GdConfig(alpha=opts["alpha"], gamma=opts["gamma"], tau=opts["tau"],
                   max_iters=opts["max_iters"], stop_residual=opts["stop_residual"])
    result = run_gd(inst.j, inst.y, cfg)
    rows = [[t.iteration, t.objective, t.residual_inf, t.theta_norm, t.s_l1,
             opts["seed"]] for t in result.trajectory]
    write_table(opts["out"], TRAJECTORY_COLUMNS, rows,
                comments=_comments("gd", opts) + ["flag %s" % result.flag])
    if make_plots:
        plots.plot_trajectory(rows, _png_path(opts["out"]))
    if result.flag != "converged":
        print("gd did not converge: %s" % result.flag, file=sys.stderr)
        return 3
    return 0


def cmd_convex(opts) -> int:
    inst = gen_linear_instance(opts["n"], opts["p"], opts["rank"],
                               opts["sparsity"], opts["seed"])
    sol = solve_convex(inst.j, inst.y, opts["lambda"], tol=opts["tol"],
                       max_iters=opts["max_iters"])
    err = recovery_errors(sol.theta, inst.theta_star, sol.s, inst.s_star)
    row = [sol.lam, err.eps_theta, err.eps_s, sol.kkt_residual,
           sol.iterations, sol.status, opts["seed"]]
    write_table(opts["out"], ConvexSolution.SOLUTION_COLUMNS, [row],
                comments=_comments("convex", opts))
    if sol.status != "optimal":
        print("convex solver stopped: %s" % sol.status, file=sys.stderr)
        return 3
    return 0


def cmd_implicit_bias(opts, make_plots: bool) -> int:
    pts = opts["grid_points"]
    alphas = experiments.log_grid(4.0, 4000.0, pts)
    lambdas = experiments.log_grid(1e-4, 1.0, pts)
    rows = experiments.implicit_bias_table(
        opts["n"], opts["p"], opts["rank"], opts["sparsity"], opts["gamma"],
        alphas, lambdas, opts["seed"],
        stop_residual=opts["stop_residual"], max_iters=opts["max_iters"])
    write_table(opts["out"], experiments.IMPLICIT_BIAS_COLUMNS, rows,
                comments=_comments("implicit-bias", opts))
    if make_plots:
        plots.plot_implicit_bias(rows, opts["gamma"], _png_path(opts["out"]))
    return 0


def cmd_lambda_sweep(opts, make_plots: bool) -> int:
    rows = experiments.lambda_sweep_table(opts["seed"], n=opts["n"], p=opts["p"],
                                          trials=opts["trials"], convex_tol=opts["tol"])
    write_table(opts["out"], experiments.SWEEP_COLUMNS, rows,
                comments=_comments("lambda-sweep", opts))
    if make_plots:
        plots.plot_lambda_sweep(rows, _png_path(opts["out"]))
    return 0


def cmd_phase_transition(opts, make_plots: bool) -> int:
    rows = experiments.phase_transition_table(opts["seed"], n=opts["n"], p=opts["p"],
                                              lam=opts["lambda"], trials=opts["trials"],
                                              convex_tol=opts["tol"])
    write_table(opts["out"], experiments.PHASE_COLUMNS, rows,
                comments=_comments("phase-transition", opts))
    if make_plots:
        plots.plot_phase_transition(rows, _png_path(opts["out"]))
    return 0


def cmd_classify(opts, make_plots: bool) -> int:
    cfg = TrainConfig(epochs=opts["epochs"], hidden=opts["hidden"],
                      tau=opts["tau"], batch_size=opts["batch_size"],
                      alpha_u=opts["alpha_u"], alpha_v=opts["alpha_v"],
                      lambda_c=opts["lambda_c"], lambda_b=opts["lambda_b"],
                      eps=opts["epsilon"], seed=opts["seed"])
    states, sep_rows, ce_rows, summary = experiments.classify_tables(
        opts["classes"], opts["n_per_class"], opts["dim"], opts["separation"],
        opts["noise_rate"], opts["noise_type"], cfg)
    out = opts["out"]
    os.makedirs(out, exist_ok=True)
    comments = _comments("classify", opts)
    write_table(os.path.join(out, "sep_history.csv"), METRICS_COLUMNS, sep_rows,
                comments=comments)
    write_table(os.path.join(out, "ce_history.csv"), METRICS_COLUMNS, ce_rows,
                comments=comments)
    write_table(os.path.join(out, "summary.csv"), experiments.SUMMARY_COLUMNS,
                summary, comments=comments)
    save_checkpoint(os.path.join(out, "sep_checkpoint.txt"), states[0])
    save_checkpoint(os.path.join(out, "ce_checkpoint.txt"), states[1])
    if make_plots:
        plots.plot_histories(sep_rows, ce_rows, os.path.join(out, "training_curves.png"))
    return 0


def cmd_landscape_check(opts) -> int:
    row = experiments.landscape_check_row(opts["n"], opts["p"], opts["rank"],
                                          opts["sparsity"], opts["seed"])
    write_table(opts["out"], CRITICAL_POINT_COLUMNS, [row],
                comments=_comments("landscape-check", opts))
    return 0


def _png_path(csv_path: str) -> str:
    stem, _ = os.path.splitext(csv_path)
    return stem + ".png"


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        opts = resolve_options(args.command, args)
        make_plots = not args.no_plot
        if args.command == "gen-instance":
            return cmd_gen_instance(opts)
        if args.command == "gd":
            return cmd_gd(opts, make_plots)
        if args.command == "convex":
            return cmd_convex(opts)
        if args.command == "implicit-bias":
            return cmd_implicit_bias(opts, make_plots)
        if args.command == "lambda-sweep":
            return cmd_lambda_sweep(opts, make_plots)
        if args.command == "phase-transition":
            return cmd_phase_transition(opts, make_plots)
        if args.command == "classify":
            return cmd_classify(opts, make_plots)
        if args.command == "landscape-check":
            return cmd_landscape_check(opts)
        raise UsageError("unknown command %r" % args.command)
    except (UsageError, ValueError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
