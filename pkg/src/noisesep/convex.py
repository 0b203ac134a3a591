"""The convex program equivalent to the over-parameterized descent limit.

For gamma -> 0 with alpha = -ln(gamma) / (2 lambda), the descent limit of
:mod:`noisesep.descent` solves::

    minimize    0.5 ||theta||_2^2 + lambda ||s||_1
    subject to  y = J theta + s

This module solves that program directly so the correspondence can be
tested.  With the compact SVD ``J = U S V^T``, theta is eliminated as
``theta = V S^-1 U^T (y - s)`` and the feasible corruptions are exactly
``s = U z + c`` with ``c = (I - U U^T) y`` and free ``z`` in R^rank, giving
an unconstrained rank-dimensional problem::

    minimize_z  0.5 || S^-1 (U^T y - z) ||_2^2 + lambda || U z + c ||_1

solved by ADMM with an exact diagonal z-update and elementwise soft
thresholding (split ``s = U z + c``).  The penalty starts at 1.0 and is
rebalanced by doubling/halving when the primal and dual residuals differ by
more than a factor of 10.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import as_matrix, as_vector, svd_compact

SUPPORT_ZERO_TOL = 1e-12  # |s_i| at or below this (times scale) counts as zero


def soft_threshold(x: np.ndarray, kappa: float) -> np.ndarray:
    """Elementwise shrinkage: max(0, x - kappa) - max(0, -x - kappa)."""
    return np.maximum(0.0, x - kappa) - np.maximum(0.0, -x - kappa)


@dataclass
class KktReport:
    """Outcome of the optimality check for the constrained program.

    ``nu`` is the dual certificate found (or the closest candidate).  The
    three residuals correspond to (i) primal feasibility in the infinity
    norm, (ii) the relative distance of theta from the row space (the
    solvable part of ``theta = J^T nu``), (iii) the worst violation of the
    elementwise subdifferential conditions by ``nu``.
    """

    feasible: bool
    stationary: bool
    dual_ok: bool
    feasibility_residual: float
    stationarity_residual: float
    dual_residual: float
    nu: np.ndarray

    @property
    def passed(self) -> bool:
        return self.feasible and self.stationary and self.dual_ok

    @property
    def max_violation(self) -> float:
        return max(self.feasibility_residual, self.stationarity_residual,
                   self.dual_residual)


def verify_kkt(j, y, theta, s, lam: float, tol: float = 1e-8) -> KktReport:
    """Check the optimality conditions of the convex program at ``(theta, s)``.

    The conditions are: (i) ``y = J theta + s``; (ii) ``theta = J^T nu`` for
    some nu; (iii) ``nu_i = lambda * sign(s_i)`` where ``s_i != 0`` and
    ``|nu_i| <= lambda`` elsewhere.  ``theta = J^T nu`` pins only the
    range(U) component of nu (``U^T nu = S^-1 V^T theta``); the orthogonal
    component is free, so the check searches for a certificate by
    alternating projection between the affine set
    ``{U^T nu fixed, nu_support = lambda * sign(s)}`` and the box
    ``|nu_i| <= lambda``.  Existence of such a nu is exactly condition
    (iii); checking only one representative would falsely reject optimal
    solutions of rank-deficient systems.
    """
    j = as_matrix(j, "J")
    y = as_vector(y, "y")
    theta = as_vector(theta, "theta")
    s = as_vector(s, "s")
    if lam <= 0:
        raise ValueError("lambda must be positive")
    svd = svd_compact(j)
    u_mat = svd.u
    n = u_mat.shape[0]

    feas = float(np.max(np.abs(y - j @ theta - s)))
    tnorm = float(np.linalg.norm(theta))
    proj = svd.v @ (svd.v.T @ theta) if svd.rank else np.zeros_like(theta)
    stat = float(np.linalg.norm(theta - proj)) / max(tnorm, 1e-30) if tnorm > 0 else 0.0

    target = (svd.v.T @ theta) / svd.sigma if svd.rank else np.zeros(0)
    scale = max(1.0, float(np.max(np.abs(s), initial=0.0)))
    support = np.abs(s) > SUPPORT_ZERO_TOL * scale
    signs = lam * np.sign(s[support])

    rows = [u_mat.T] if svd.rank else []
    if np.any(support):
        eye = np.eye(n)
        rows.append(eye[support])
    if rows:
        m = np.vstack(rows)
        rhs = np.concatenate([target, signs])
        m_pinv = np.linalg.pinv(m)
        nu = u_mat @ target if svd.rank else np.zeros(n)
        off = ~support
        for _ in range(2000):
            nu = nu - m_pinv @ (m @ nu - rhs)
            affine_gap = float(np.max(np.abs(m @ nu - rhs), initial=0.0))
            box_gap = float(np.max(np.abs(nu[off]) - lam, initial=0.0))
            if affine_gap <= 0.1 * tol and box_gap <= 0.1 * tol:
                break
            clipped = nu.copy()
            clipped[off] = np.clip(clipped[off], -lam, lam)
            nu = clipped
        affine_gap = float(np.max(np.abs(m @ nu - rhs), initial=0.0))
        box_gap = max(0.0, float(np.max(np.abs(nu[off]) - lam, initial=0.0)))
        dual = max(affine_gap, box_gap)
    else:
        nu = np.zeros(n)
        dual = 0.0

    return KktReport(
        feasible=feas <= tol,
        stationary=stat <= tol,
        dual_ok=dual <= tol,
        feasibility_residual=feas,
        stationarity_residual=stat,
        dual_residual=dual,
        nu=nu,
    )


@dataclass
class ConvexSolution:
    theta: np.ndarray
    s: np.ndarray
    lam: float
    nu: np.ndarray
    feasibility_residual: float
    kkt_residual: float
    iterations: int
    status: str  # optimal | max_iters | infeasible

    SOLUTION_COLUMNS = ["lambda", "eps_theta", "eps_s", "kkt_residual",
                        "iterations", "status", "seed"]


def solve_convex(j, y, lam: float, tol: float = 1e-8,
                 max_iters: int = 100_000) -> ConvexSolution:
    """Solve the constrained l2/l1 program by reduced ADMM.

    Feasibility of the returned pair is exact up to the primal residual:
    theta is reconstructed from the thresholded corruption via
    ``theta = V S^-1 U^T (y - s)``.  ``status`` is ``optimal`` when both
    ADMM residuals fall below ``tol`` (absolute, suited to desk scales),
    ``max_iters`` otherwise.  The parameterization makes the range
    constraint exact by construction, so ``infeasible`` is never produced
    here; the enum value exists for interface completeness.
    """
    j = as_matrix(j, "J")
    y = as_vector(y, "y")
    if lam <= 0:
        raise ValueError("lambda must be positive")
    if max_iters < 1:
        raise ValueError("max_iters must be positive")
    svd = svd_compact(j)
    u_mat, sigma = svd.u, svd.sigma
    r = svd.rank
    if r == 0:
        # No column space: s = y is the only feasible point, theta = 0.
        s = y.copy()
        report = verify_kkt(j, y, np.zeros(j.shape[1]), s, lam, tol=max(tol, 1e-10))
        return ConvexSolution(theta=np.zeros(j.shape[1]), s=s, lam=lam,
                              nu=report.nu, feasibility_residual=0.0,
                              kkt_residual=report.max_violation, iterations=0,
                              status="optimal")

    uy = u_mat.T @ y
    c = y - u_mat @ uy
    inv_sig2 = 1.0 / (sigma * sigma)
    beta = 1.0
    z = np.zeros(r)
    s = c.copy()
    w = np.zeros(j.shape[0])  # scaled dual

    status = "max_iters"
    it = 0
    for it in range(1, max_iters + 1):
        z = (inv_sig2 * uy + beta * (u_mat.T @ (s - w))) / (inv_sig2 + beta)
        uz_c = u_mat @ z + c
        s_prev = s
        s = soft_threshold(uz_c + w, lam / beta)
        w = w + uz_c - s
        primal = float(np.linalg.norm(uz_c - s))
        dual = float(beta * np.linalg.norm(u_mat.T @ (s - s_prev)))
        if max(primal, dual) <= tol:
            status = "optimal"
            break
        if it % 50 == 0:
            if primal > 10.0 * dual and beta < 1e8:
                beta *= 2.0
                w *= 0.5
            elif dual > 10.0 * primal and beta > 1e-8:
                beta *= 0.5
                w *= 2.0

    theta = svd.v @ ((uy - u_mat.T @ s) / sigma)
    feas = float(np.max(np.abs(y - j @ theta - s)))
    report = verify_kkt(j, y, theta, s, lam, tol=max(tol, 1e-10))
    return ConvexSolution(theta=theta, s=s, lam=lam, nu=report.nu,
                          feasibility_residual=feas,
                          kkt_residual=report.max_violation,
                          iterations=it, status=status)


def lambda_threshold(j, theta_star, rho: float) -> float:
    """Penalty weight above which exact recovery is guaranteed.

    ``lambda_0 = 2 (1 + rho) / (1 - rho) * || U S^-1 V^T theta_star ||_inf``
    where rho < 1 is a null space constant of the corruption feasibility
    system (see :func:`noisesep.recovery.nsp_rho_bound`).
    """
    if not (0 < rho < 1):
        raise ValueError("rho must be in (0, 1)")
    svd = svd_compact(as_matrix(j, "J"))
    theta_star = as_vector(theta_star, "theta_star")
    if svd.rank == 0:
        raise ValueError("lambda threshold undefined for the zero matrix")
    w = svd.u @ ((svd.v.T @ theta_star) / svd.sigma)
    return float(2.0 * (1.0 + rho) / (1.0 - rho) * np.max(np.abs(w)))


def alpha_from_lambda(gamma: float, lam: float) -> float:
    """The learning-rate ratio matching penalty ``lam``: ``-ln(gamma) / (2 lam)``.

    Requires ``gamma`` in (0, 1) (the implicit penalty comes from a SMALL
    initialization) and ``lam > 0``.
    """
    if not (0.0 < gamma < 1.0):
        raise ValueError("gamma must be in (0, 1)")
    if lam <= 0:
        raise ValueError("lambda must be positive")
    return -float(np.log(gamma)) / (2.0 * lam)
