"""Conditions under which the convex program recovers the exact corruption.

Feasible corruptions differ from the truth by elements of the kernel of the
out-of-range projector, which is exactly ``{U a : a in R^rank}`` for the
column factor U of J.  The l1 objective separates truth from impostors when
that kernel satisfies a null space property: for every candidate support S
of size k and every a, ``||(U a)_S||_1 <= rho ||(U a)_{S^c}||_1`` with
rho < 1.  Coherence of the column space bounds rho explicitly; none of the
checks below ever materializes the (n - rank) x n projector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .convex import lambda_threshold
from .instances import coherence
from .linalg import as_matrix, svd_compact


class DegenerateSubspaceError(RuntimeError):
    """Every sampled kernel direction vanished outside S."""


def incoherence_condition(j, sparsity: int) -> tuple[bool, float]:
    """Check ``k^2 rank < n / (4 mu)`` for coherence mu; returns (ok, mu)."""
    j = as_matrix(j, "J")
    if sparsity < 0:
        raise ValueError("sparsity must be non-negative")
    mu = coherence(j)
    rank = svd_compact(j).rank
    n = j.shape[0]
    ok = sparsity * sparsity * rank < n / (4.0 * mu)
    return bool(ok), mu


def nsp_rho_bound(j, sparsity: int) -> float | None:
    """Coherence-based null space constant for all supports of size ``sparsity``.

    With ``q = k sqrt(rank * mu / n)``, every size-k support satisfies the
    null space property with ``rho = q / (1 - q)`` provided q < 1/2 (which
    keeps rho < 1).  Returns None when q >= 1/2, i.e. no rho certified.
    """
    j = as_matrix(j, "J")
    if sparsity < 0:
        raise ValueError("sparsity must be non-negative")
    mu = coherence(j)
    rank = svd_compact(j).rank
    q = sparsity * float(np.sqrt(rank * mu / j.shape[0]))
    if q >= 0.5:
        return None
    return q / (1.0 - q)


def nsp_sampled_estimate(j, support, trials: int, rng) -> float:
    """Monte Carlo lower estimate of the support-S null space ratio.

    Samples unit-sphere directions a and maximizes
    ``||(U a)_S||_1 / ||(U a)_{S^c}||_1``.  An empty support gives 0.
    Samples whose denominator vanishes are skipped; if every trial
    degenerates, raises :class:`DegenerateSubspaceError`.
    """
    j = as_matrix(j, "J")
    support = np.asarray(support, dtype=int)
    n = j.shape[0]
    if support.size and (support.min() < 0 or support.max() >= n):
        raise ValueError("support index out of range")
    if support.size != np.unique(support).size:
        raise ValueError("support has repeated indices")
    if trials < 1:
        raise ValueError("trials must be positive")
    svd = svd_compact(j)
    if svd.rank == 0:
        raise DegenerateSubspaceError("zero matrix has no kernel directions to sample")
    mask = np.zeros(n, dtype=bool)
    mask[support] = True
    best = 0.0
    skipped = 0
    for _ in range(trials):
        a = rng.standard_normal(svd.rank)
        norm = float(np.linalg.norm(a))
        if norm == 0.0:
            skipped += 1
            continue
        x = svd.u @ (a / norm)
        num = float(np.sum(np.abs(x[mask])))
        den = float(np.sum(np.abs(x[~mask])))
        if den <= 1e-30 * max(num, 1.0):
            skipped += 1
            continue
        best = max(best, num / den)
    if skipped == trials:
        raise DegenerateSubspaceError("all %d sampled directions vanished off the support" % trials)
    return best


@dataclass
class RecoveryErrors:
    """Relative recovery errors, falling back to absolute norms on zero truth."""

    eps_theta: float
    eps_s: float
    theta_absolute: bool = False
    s_absolute: bool = False


def recovery_errors(theta, theta_star, s, s_star) -> RecoveryErrors:
    tn = float(np.linalg.norm(theta_star))
    sn = float(np.linalg.norm(s_star))
    dt = float(np.linalg.norm(np.asarray(theta) - np.asarray(theta_star)))
    dsn = float(np.linalg.norm(np.asarray(s) - np.asarray(s_star)))
    return RecoveryErrors(
        eps_theta=dt / tn if tn > 0 else dt,
        eps_s=dsn / sn if sn > 0 else dsn,
        theta_absolute=tn == 0,
        s_absolute=sn == 0,
    )


@dataclass
class RecoveryCertificate:
    """Everything the theory can say about one instance, in one row."""

    n: int
    rank: int
    sparsity: int
    mu: float
    incoherence_ok: bool
    rho_bound: float | None
    nsp_sampled: float
    lambda_threshold: float | None

    COLUMNS = ["n", "rank", "sparsity", "mu", "incoherence_ok", "rho_bound",
               "nsp_sampled", "lambda_threshold", "seed"]

    def row(self, seed: int) -> list:
        return [self.n, self.rank, self.sparsity, self.mu,
                self.incoherence_ok,
                float("nan") if self.rho_bound is None else self.rho_bound,
                self.nsp_sampled,
                float("nan") if self.lambda_threshold is None else self.lambda_threshold,
                seed]


def build_certificate(j, support, theta_star, trials: int, rng) -> RecoveryCertificate:
    """Assemble the recovery certificate for an instance's true support.

    ``lambda_threshold`` is populated only when the coherence bound
    certifies some rho < 1.
    """
    j = as_matrix(j, "J")
    support = np.asarray(support, dtype=int)
    k = int(support.size)
    ok, mu = incoherence_condition(j, k)
    rho = nsp_rho_bound(j, k)
    nsp = nsp_sampled_estimate(j, support, trials, rng)
    lam0 = lambda_threshold(j, theta_star, rho) if rho is not None else None
    return RecoveryCertificate(
        n=j.shape[0], rank=svd_compact(j).rank, sparsity=k, mu=mu,
        incoherence_ok=ok, rho_bound=rho, nsp_sampled=nsp,
        lambda_threshold=lam0,
    )
