"""Dense linear algebra kernel shared by every other module.

All matrices are two dimensional float64 numpy arrays, all vectors one
dimensional.  The routines here pin down the exact conventions the rest of
the package relies on: compact SVD with a relative rank cut, minimum-norm
solves that refuse right hand sides outside the column space, and row-space
projection.  Inputs are validated for finiteness so NaNs fail loudly at the
boundary instead of propagating into a solver.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Relative singular value cut used to decide numerical rank.
DEFAULT_RANK_TOL = 1e-10
# A right hand side counts as "in range" when the out-of-range residual is
# below this multiple of its norm.
RANGE_TOL = 1e-8


class RangeViolationError(ValueError):
    """Right hand side is not in the column space of the matrix."""

    def __init__(self, message: str, residual_norm: float):
        super().__init__(message)
        self.residual_norm = residual_norm


def make_rng(seed: int) -> np.random.Generator:
    """Return the package-wide seeded generator (PCG64).

    PCG64 is a named 64-bit generator and numpy draws normals with the
    ziggurat method, so a single recorded integer seed reproduces every
    random draw of a run on a given build.
    """
    if not isinstance(seed, (int, np.integer)) or isinstance(seed, bool):
        raise ValueError("seed must be an integer")
    if seed < 0:
        raise ValueError("seed must be non-negative, got %r" % (seed,))
    return np.random.default_rng(int(seed))


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite 2-d float64 array, copying only if needed."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise ValueError("%s must be 2-d, got shape %r" % (name, a.shape))
    if a.size == 0:
        raise ValueError("%s must be non-empty" % name)
    if not np.all(np.isfinite(a)):
        raise ValueError("%s contains non-finite entries" % name)
    return a


def as_vector(x, name: str = "vector") -> np.ndarray:
    """Coerce to a finite 1-d float64 array."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("%s must be 1-d, got shape %r" % (name, x.shape))
    if not np.all(np.isfinite(x)):
        raise ValueError("%s contains non-finite entries" % name)
    return x


@dataclass(frozen=True)
class CompactSvd:
    """Compact SVD ``A = u @ diag(sigma) @ v.T``.

    ``u`` is (n, rank), ``sigma`` positive and descending, ``v`` (p, rank).
    Columns of ``u`` and ``v`` are orthonormal to 1e-10.
    """

    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray

    @property
    def rank(self) -> int:
        return int(self.sigma.shape[0])

    def reconstruct(self) -> np.ndarray:
        return (self.u * self.sigma) @ self.v.T


def svd_compact(a, rank_tolerance: float = DEFAULT_RANK_TOL) -> CompactSvd:
    """Compact SVD keeping singular values above ``rank_tolerance * sigma_max``.

    The zero matrix yields an empty factorization (rank 0).
    """
    a = as_matrix(a)
    if rank_tolerance < 0:
        raise ValueError("rank_tolerance must be non-negative")
    u, sigma, vt = np.linalg.svd(a, full_matrices=False)
    if sigma.size and sigma[0] > 0:
        keep = sigma > rank_tolerance * sigma[0]
    else:
        keep = np.zeros(sigma.shape, dtype=bool)
    r = int(np.count_nonzero(keep))
    return CompactSvd(u=u[:, :r].copy(), sigma=sigma[:r].copy(), v=vt[:r].T.copy())


def _svd_of(a) -> CompactSvd:
    """Accept either a matrix or an already computed CompactSvd."""
    if isinstance(a, CompactSvd):
        return a
    return svd_compact(a)


def min_norm_solve(j, b) -> np.ndarray:
    """Minimum-norm solution of ``J theta = b``: ``theta = V sigma^-1 U^T b``.

    ``j`` may be a matrix or a precomputed :class:`CompactSvd`.  Raises
    :class:`RangeViolationError` when the component of ``b`` outside the
    column space exceeds ``RANGE_TOL * ||b||``.
    """
    svd = _svd_of(j)
    b = as_vector(b, "b")
    if b.shape[0] != svd.u.shape[0]:
        raise ValueError("b has length %d, expected %d" % (b.shape[0], svd.u.shape[0]))
    w = svd.u.T @ b
    residual = b - svd.u @ w
    rnorm = float(np.linalg.norm(residual))
    bnorm = float(np.linalg.norm(b))
    if rnorm > RANGE_TOL * bnorm:
        raise RangeViolationError(
            "right hand side outside column space (residual %.3e vs ||b|| %.3e)"
            % (rnorm, bnorm),
            rnorm,
        )
    return svd.v @ (w / svd.sigma) if svd.rank else np.zeros(svd.v.shape[0])


def project_row_space(j, x) -> np.ndarray:
    """Orthogonal projection of ``x`` onto the row space of ``J`` (``V V^T x``)."""
    svd = _svd_of(j)
    x = as_vector(x, "x")
    if x.shape[0] != svd.v.shape[0]:
        raise ValueError("x has length %d, expected %d" % (x.shape[0], svd.v.shape[0]))
    if svd.rank == 0:
        return np.zeros_like(x)
    return svd.v @ (svd.v.T @ x)
