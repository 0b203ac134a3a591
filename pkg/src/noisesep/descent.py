"""Gradient descent on the over-parameterized corrupted least squares objective.

The model splits the observation error into a dense part ``J theta`` and a
corruption term written as an elementwise difference of squares::

    h(theta, u, v) = 0.5 * || J theta + u*u - v*v - y ||^2

Gradient descent from theta = 0, u = v = gamma * 1 with step tau on theta
and alpha * tau on u and v drives ``u*u - v*v`` toward the sparse
corruption: the multiplicative u/v dynamics act as a mirror descent whose
small initialization gamma plays the role of an l1 penalty with weight
lambda = -ln(gamma) / (2 alpha).  This module provides the discrete solver
(:func:`run_gd`), a single audited step (:func:`gd_step`), and the reduced
gradient flow integrator (:func:`run_flow_ode`) used to cross-check the
discrete path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .linalg import as_matrix, as_vector, svd_compact

STATE_RESIDUAL_TOL = 1e-12  # stored residual must match recomputation this tightly
MAX_HALVINGS = 20


class DivergenceError(RuntimeError):
    """The iteration produced non-finite values."""

    def __init__(self, message: str, iteration: int):
        super().__init__(message)
        self.iteration = iteration


class StiffnessError(RuntimeError):
    """Flow integration step size underflowed; carries the partial result."""

    def __init__(self, message: str, t_reached: float, state: "GdState"):
        super().__init__(message)
        self.t_reached = t_reached
        self.state = state


@dataclass
class GdConfig:
    """Solver knobs.

    ``tau = None`` selects ``min(0.25 / sigma_max(J)^2,
    0.25 / (alpha * ||y||_inf))``; the second term keeps the first
    multiplicative u/v update contractive (|2 alpha tau r_i| <= 0.5 at the
    start, where ||r_0||_inf = ||y||_inf).  On an objective increase the
    step is rejected and tau halved, up to ``MAX_HALVINGS`` times total.
    """

    alpha: float
    gamma: float = math.exp(-8.0)
    tau: float | None = None
    max_iters: int = 1_000_000
    stop_residual: float = 1e-10
    divergence_cap: float = 1e15

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be non-negative")
        if not (self.gamma > 0):
            raise ValueError("gamma must be positive")
        if self.tau is not None and not (self.tau > 0):
            raise ValueError("tau must be positive when given")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if not (0 < self.stop_residual < self.divergence_cap):
            raise ValueError("need 0 < stop_residual < divergence_cap")


@dataclass
class GdState:
    """Iterate of the joint (theta, u, v) descent.

    ``residual = J theta + u*u - v*v - y`` and ``objective = 0.5 ||r||^2``
    are stored alongside the variables and always recomputed from them on
    construction via :func:`make_state`.
    """

    theta: np.ndarray
    u: np.ndarray
    v: np.ndarray
    residual: np.ndarray
    iteration: int
    objective: float

    def s(self) -> np.ndarray:
        """The corruption estimate ``u*u - v*v``."""
        return self.u * self.u - self.v * self.v


def residual(j, y, theta, u, v) -> np.ndarray:
    return j @ theta + u * u - v * v - y


def objective(j, y, theta, u, v) -> float:
    r = residual(j, y, theta, u, v)
    return 0.5 * float(r @ r)


def make_state(j, y, theta, u, v, iteration: int = 0) -> GdState:
    r = residual(j, y, theta, u, v)
    return GdState(theta=theta, u=u, v=v, residual=r,
                   iteration=iteration, objective=0.5 * float(r @ r))


def init_state(j, y, cfg: GdConfig) -> GdState:
    """theta = 0, u = v = gamma * ones; the residual starts at -y."""
    n, p = j.shape
    return make_state(j, y, np.zeros(p), np.full(n, cfg.gamma), np.full(n, cfg.gamma))


def default_tau(j, y, alpha: float) -> float:
    smax = float(svd_compact(j).sigma[0])
    tau = 0.25 / (smax * smax)
    if alpha > 0:
        ymax = float(np.max(np.abs(y)))
        if ymax > 0:
            # keep 2*alpha*tau*|r| well under 1 so the multiplicative u, v
            # updates track the continuous flow instead of overshooting
            tau = min(tau, 0.05 / (alpha * ymax))
    return tau


def _step_arrays(j, y, theta, u, v, r, tau, alpha):
    """One simultaneous update; returns new arrays plus residual/objective."""
    theta2 = theta - tau * (j.T @ r)
    scale = 2.0 * alpha * tau
    u2 = u - scale * (u * r)
    v2 = v + scale * (v * r)
    r2 = j @ theta2 + u2 * u2 - v2 * v2 - y
    obj2 = 0.5 * float(r2 @ r2)
    return theta2, u2, v2, r2, obj2


def gd_step(j, y, state: GdState, cfg: GdConfig, tau: float | None = None) -> GdState:
    """One descent step with the configured (or given) step size.

    theta moves by ``-tau J^T r``; u and v move multiplicatively by
    ``(1 -/+ 2 alpha tau r)``, so their entries cannot change sign while
    ``|2 alpha tau r_i| < 1``.  Raises :class:`DivergenceError` when the new
    iterate is non-finite.
    """
    j = as_matrix(j, "J")
    step = tau if tau is not None else (cfg.tau if cfg.tau is not None else default_tau(j, y, cfg.alpha))
    theta2, u2, v2, r2, obj2 = _step_arrays(
        j, y, state.theta, state.u, state.v, state.residual, step, cfg.alpha)
    if not (np.isfinite(obj2) and np.all(np.isfinite(r2))):
        raise DivergenceError("non-finite iterate", state.iteration + 1)
    return GdState(theta=theta2, u=u2, v=v2, residual=r2,
                   iteration=state.iteration + 1, objective=obj2)


@dataclass
class TrajectoryRecord:
    iteration: int
    objective: float
    residual_inf: float
    theta_norm: float
    s_l1: float


TRAJECTORY_COLUMNS = ["iteration", "objective", "residual_inf", "theta_norm", "s_l1", "seed"]


def _record(state_iter, obj, r, theta, u, v) -> TrajectoryRecord:
    return TrajectoryRecord(
        iteration=state_iter,
        objective=obj,
        residual_inf=float(np.max(np.abs(r))),
        theta_norm=float(np.linalg.norm(theta)),
        s_l1=float(np.sum(np.abs(u * u - v * v))),
    )


@dataclass
class GdResult:
    state: GdState
    flag: str  # converged | iter_cap | diverged
    trajectory: list = field(default_factory=list)
    tau_final: float = 0.0
    halvings: int = 0

    @property
    def converged(self) -> bool:
        return self.flag == "converged"


def run_gd(j, y, cfg: GdConfig, record_every: int | None = None) -> GdResult:
    """Iterate until ``||r||_inf <= stop_residual`` or the iteration cap.

    The objective is non-increasing along accepted steps: a step that raises
    it is rejected and tau halved (at most ``MAX_HALVINGS`` times across the
    run); once the halving budget is spent a further increase, a non-finite
    value, or an objective above ``divergence_cap`` flags divergence.
    Trajectory records are appended every ``record_every`` iterations
    (default: ``ceil(max_iters / 1000)``), plus the initial and final points.
    """
    j = as_matrix(j, "J")
    y = as_vector(y, "y")
    n, p = j.shape
    if y.shape[0] != n:
        raise ValueError("y has length %d, expected %d" % (y.shape[0], n))
    tau = cfg.tau if cfg.tau is not None else default_tau(j, y, cfg.alpha)
    interval = record_every if record_every else max(1, math.ceil(cfg.max_iters / 1000))

    theta = np.zeros(p)
    u = np.full(n, cfg.gamma)
    v = np.full(n, cfg.gamma)
    r = u * u - v * v - y
    obj = 0.5 * float(r @ r)

    trajectory = [_record(0, obj, r, theta, u, v)]
    halvings = 0
    it = 0
    flag = "iter_cap"
    while it < cfg.max_iters:
        if np.max(np.abs(r)) <= cfg.stop_residual:
            flag = "converged"
            break
        theta2, u2, v2, r2, obj2 = _step_arrays(j, y, theta, u, v, r, tau, cfg.alpha)
        finite = np.isfinite(obj2)
        if (not finite) or obj2 > obj * (1.0 + 1e-15):
            if halvings < MAX_HALVINGS:
                halvings += 1
                tau *= 0.5
                continue
            if not finite or obj2 > cfg.divergence_cap:
                flag = "diverged"
                break
            # halving budget spent but still finite: accept and keep going
        if obj2 > cfg.divergence_cap:
            flag = "diverged"
            break
        theta, u, v, r, obj = theta2, u2, v2, r2, obj2
        it += 1
        if it % interval == 0:
            trajectory.append(_record(it, obj, r, theta, u, v))
    else:
        flag = "iter_cap" if np.max(np.abs(r)) > cfg.stop_residual else "converged"

    if not trajectory or trajectory[-1].iteration != it:
        trajectory.append(_record(it, obj, r, theta, u, v))
    state = GdState(theta=theta, u=u, v=v, residual=r, iteration=it, objective=obj)
    return GdResult(state=state, flag=flag, trajectory=trajectory,
                    tau_final=tau, halvings=halvings)


def local_smoothness_bound(j_sigma_max: float, u, v, r, alpha: float) -> float:
    """Upper bound on the curvature seen by the alpha-scaled step.

    From the quadratic form of the Hessian,
    ``d^T H d <= (a + 2b + 2c)^2 + 2||r||_inf (||d_u||^2 + ||d_v||^2)`` with
    ``a = ||J d_theta||``, ``b = ||u . d_u||``, ``c = ||v . d_v||``; scaling
    the u/v blocks by sqrt(alpha) (their step is alpha * tau) gives the bound
    below.  Descent is guaranteed for tau <= 1 / L; tests use 0.5 / L.
    """
    umax2 = float(np.max(u * u, initial=0.0))
    vmax2 = float(np.max(v * v, initial=0.0))
    rinf = float(np.max(np.abs(r), initial=0.0))
    quad = 3.0 * max(j_sigma_max ** 2, 4.0 * alpha * umax2, 4.0 * alpha * vmax2)
    return quad + 2.0 * alpha * rinf


# ---------------------------------------------------------------------------
# Reduced gradient flow
# ---------------------------------------------------------------------------

@dataclass
class FlowResult:
    state: GdState
    t_reached: float
    steps: int
    nu: np.ndarray


def _flow_state(j, y, nu, gamma, alpha, steps) -> GdState:
    log_g = math.log(gamma)
    u = np.exp(2.0 * alpha * nu + log_g)
    v = np.exp(-2.0 * alpha * nu + log_g)
    theta = j.T @ nu
    return make_state(j, y, theta, u, v, iteration=steps)


def run_flow_ode(j, y, gamma: float, alpha: float, t_end: float,
                 ode_step: float | None = None) -> FlowResult:
    """Integrate the reduced flow for the accumulated negative residual nu.

    Along the gradient flow the whole trajectory is a function of
    ``nu(t) = -int_0^t r dtau``: ``theta = J^T nu``,
    ``u = gamma exp(2 alpha nu)``, ``v = gamma exp(-2 alpha nu)`` (so
    ``u * v = gamma^2`` identically), and nu itself solves::

        nu' = -(J J^T nu + gamma^2 e^{4 alpha nu} - gamma^2 e^{-4 alpha nu} - y)

    Integration is classical Runge-Kutta 4 with step halving: each step is
    compared against two half steps and halved until the difference is below
    ``atol + rtol * ||nu||_inf`` (1e-12, 1e-9).  Raises
    :class:`StiffnessError` carrying the partial state when the step
    underflows.
    """
    j = as_matrix(j, "J")
    y = as_vector(y, "y")
    if not (gamma > 0):
        raise ValueError("gamma must be positive")
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    if not (t_end > 0):
        raise ValueError("t_end must be positive")
    jjt = j @ j.T
    log_g2 = 2.0 * math.log(gamma)
    atol, rtol = 1e-12, 1e-9

    def f(nu):
        grow = np.exp(4.0 * alpha * nu + log_g2)
        shrink = np.exp(-4.0 * alpha * nu + log_g2)
        return -(jjt @ nu + grow - shrink - y)

    def rk4(nu, h):
        k1 = f(nu)
        k2 = f(nu + 0.5 * h * k1)
        k3 = f(nu + 0.5 * h * k2)
        k4 = f(nu + h * k3)
        return nu + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    smax = float(svd_compact(j).sigma[0])
    h0 = ode_step if ode_step is not None else min(t_end / 10.0, 1.0 / max(smax * smax, 1e-12))
    if not (h0 > 0):
        raise ValueError("ode_step must be positive")
    h_max = h0
    h_min = max(t_end * 1e-14, 5e-16)

    nu = np.zeros(j.shape[0])
    t = 0.0
    steps = 0
    h = h0
    while t < t_end:
        h = min(h, t_end - t)
        full = rk4(nu, h)
        half = rk4(rk4(nu, 0.5 * h), 0.5 * h)
        err = float(np.max(np.abs(full - half))) if np.all(np.isfinite(full)) and np.all(np.isfinite(half)) else math.inf
        tol = atol + rtol * float(np.max(np.abs(nu), initial=0.0))
        if err > tol:
            h *= 0.5
            if h < h_min:
                raise StiffnessError(
                    "step underflow at t=%.6g (h=%.3e)" % (t, h),
                    t, _flow_state(j, y, nu, gamma, alpha, steps))
            continue
        nu = half
        t += h
        steps += 1
        if err < tol / 64.0:
            h = min(h * 2.0, h_max)
    return FlowResult(state=_flow_state(j, y, nu, gamma, alpha, steps),
                      t_reached=t, steps=steps, nu=nu)
