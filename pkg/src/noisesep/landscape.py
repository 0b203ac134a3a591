"""Loss landscape certificates for the over-parameterized objective.

Every critical point of ``h(theta, u, v) = 0.5 ||J theta + u*u - v*v - y||^2``
is either a global minimum (zero residual) or a strict saddle: at a critical
point with residual r != 0 there is a coordinate i with ``u_i = v_i = 0`` and
``r_i != 0`` (otherwise the u/v gradients 2 r.u and -2 r.v could not vanish),
and the coordinate direction ``d_v = e_i`` (when r_i > 0) or ``d_u = e_i``
(when r_i < 0) has directional curvature ``-2 |r_i|``.  The classifier below
reports such a witness without ever materializing the Hessian.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .descent import residual
from .linalg import as_matrix, as_vector

DEFAULT_CRITICAL_TOL = 1e-7

CRITICAL_POINT_COLUMNS = ["grad_norm", "classification", "witness_index",
                          "curvature_value", "seed"]


class InconsistentStateError(ValueError):
    """Nonzero-residual critical point without a saddle witness coordinate.

    Cannot happen at an exact critical point of the objective; raised when
    the inputs violate the premise (e.g. a point that is not actually
    critical at the stated tolerance).
    """


def full_gradient(j, y, theta, u, v) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradient blocks ``(J^T r, 2 r.u, -2 r.v)`` with r the residual."""
    j = as_matrix(j, "J")
    r = residual(j, y, theta, u, v)
    return j.T @ r, 2.0 * r * u, -2.0 * r * v


def hessian_quadratic_form(j, y, theta, u, v, d_theta, d_u, d_v) -> float:
    """Exact directional curvature ``d^T (grad^2 h) d`` at ``(theta, u, v)``.

    Expanded form (r is the residual at the point)::

        ||J d_theta||^2 + 4 ||u . d_u||^2 + 4 ||v . d_v||^2
        + 2 <r, d_u.d_u - d_v.d_v>
        + 4 <J d_theta, u . d_u - v . d_v>
        - 8 <u . d_u, v . d_v>

    Never materializes the Hessian; cost is one matvec.
    """
    j = as_matrix(j, "J")
    r = residual(j, y, theta, u, v)
    d_theta = as_vector(d_theta, "d_theta")
    d_u = as_vector(d_u, "d_u")
    d_v = as_vector(d_v, "d_v")
    jd = j @ d_theta
    udu = u * d_u
    vdv = v * d_v
    return float(
        jd @ jd
        + 4.0 * (udu @ udu)
        + 4.0 * (vdv @ vdv)
        + 2.0 * (r @ (d_u * d_u - d_v * d_v))
        + 4.0 * (jd @ (udu - vdv))
        - 8.0 * (udu @ vdv)
    )


@dataclass
class CriticalPointReport:
    """Classification of a candidate critical point.

    ``classification`` is one of ``global_min``, ``strict_saddle``,
    ``not_critical``.  For a saddle, ``witness_index`` is the coordinate
    whose u/v pair vanishes while the residual does not,
    ``negative_direction`` the coordinate direction (d_theta, d_u, d_v)
    realizing ``curvature_value`` < 0.
    """

    grad_norm: float
    classification: str
    witness_index: int | None = None
    negative_direction: tuple | None = None
    curvature_value: float | None = None


def classify_critical_point(j, y, theta, u, v,
                            tol: float = DEFAULT_CRITICAL_TOL) -> CriticalPointReport:
    """Decide global minimum vs strict saddle at a candidate critical point.

    A point with gradient infinity norm above ``tol`` is reported
    ``not_critical``.  Otherwise zero residual (infinity norm <= tol) means
    ``global_min``; else the witness coordinate maximizing ``|r_i|`` among
    those with ``|u_i|, |v_i| <= tol`` is reported with its negative
    curvature direction (ties broken toward the lowest index).  Raises
    :class:`InconsistentStateError` when no coordinate qualifies, which is
    impossible at a true critical point.
    """
    j = as_matrix(j, "J")
    y = as_vector(y, "y")
    theta = as_vector(theta, "theta")
    u = as_vector(u, "u")
    v = as_vector(v, "v")
    g_theta, g_u, g_v = full_gradient(j, y, theta, u, v)
    grad_norm = max(float(np.max(np.abs(g_theta), initial=0.0)),
                    float(np.max(np.abs(g_u), initial=0.0)),
                    float(np.max(np.abs(g_v), initial=0.0)))
    if grad_norm > tol:
        return CriticalPointReport(grad_norm=grad_norm, classification="not_critical")
    r = residual(j, y, theta, u, v)
    if float(np.max(np.abs(r))) <= tol:
        return CriticalPointReport(grad_norm=grad_norm, classification="global_min")

    qualifies = (np.abs(u) <= tol) & (np.abs(v) <= tol) & (np.abs(r) > tol)
    if not np.any(qualifies):
        raise InconsistentStateError(
            "critical point with ||r||_inf = %.3e but no vanishing u/v pair"
            % float(np.max(np.abs(r))))
    masked = np.where(qualifies, np.abs(r), -np.inf)
    witness = int(np.argmax(masked))  # argmax takes the lowest index on ties

    n, p = j.shape
    d_theta = np.zeros(p)
    d_u = np.zeros(n)
    d_v = np.zeros(n)
    if r[witness] > 0:
        d_v[witness] = 1.0
    else:
        d_u[witness] = 1.0
    curvature = hessian_quadratic_form(j, y, theta, u, v, d_theta, d_u, d_v)
    return CriticalPointReport(
        grad_norm=grad_norm,
        classification="strict_saddle",
        witness_index=witness,
        negative_direction=(d_theta, d_u, d_v),
        curvature_value=curvature,
    )
