"""Problem instance generators.

Two families: low-rank linear regression instances with sparse additive
corruption on the observations, and Gaussian blob classification datasets
with label noise.  Generation is fully driven by a seeded generator from
:func:`noisesep.linalg.make_rng`, so an instance is reproducible from the
integers recorded in the output tables.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import as_matrix, make_rng, min_norm_solve, project_row_space, svd_compact

# Tolerances baked into the instance invariants.
CONSISTENCY_TOL = 1e-10
ROW_SPACE_TOL = 1e-8


@dataclass
class LinearInstance:
    """A corrupted linear system ``y = J theta_star + s_star``.

    ``J`` is n x p with numerical rank ``rank``; ``s_star`` has exactly
    ``sparsity`` nonzero entries; ``theta_star`` lies in the row space of
    ``J``.  ``seed`` is the generator seed that produced the instance
    (-1 when a generator object was passed instead of a seed).
    """

    j: np.ndarray
    y: np.ndarray
    theta_star: np.ndarray
    s_star: np.ndarray
    rank: int
    sparsity: int
    seed: int

    @property
    def n(self) -> int:
        return self.j.shape[0]

    @property
    def p(self) -> int:
        return self.j.shape[1]

    def support(self) -> np.ndarray:
        return np.flatnonzero(self.s_star)

    def validate(self) -> None:
        """Check the construction invariants, raising ValueError on violation."""
        ynorm = float(np.linalg.norm(self.y))
        gap = float(np.linalg.norm(self.y - self.j @ self.theta_star - self.s_star))
        if gap > CONSISTENCY_TOL * max(ynorm, 1.0):
            raise ValueError("instance inconsistent: ||y - J theta - s|| = %.3e" % gap)
        nnz = int(np.count_nonzero(self.s_star))
        if nnz != self.sparsity:
            raise ValueError("s_star has %d nonzeros, expected %d" % (nnz, self.sparsity))
        svd = svd_compact(self.j)
        if svd.rank != self.rank:
            raise ValueError("J has numerical rank %d, expected %d" % (svd.rank, self.rank))
        off = float(np.linalg.norm(self.theta_star - project_row_space(svd, self.theta_star)))
        tnorm = float(np.linalg.norm(self.theta_star))
        if off > ROW_SPACE_TOL * max(tnorm, 1.0):
            raise ValueError("theta_star leaves the row space by %.3e" % off)


def gen_linear_instance(n: int, p: int, rank: int, sparsity: int, rng) -> LinearInstance:
    """Draw a rank-``rank`` corrupted instance.

    ``J = G1 @ G2`` with iid standard normal factors (n x rank)(rank x p),
    the corruption support is drawn uniformly without replacement with iid
    standard normal values, ``y = J theta_tilde + s_star`` for a standard
    normal ``theta_tilde``, and ``theta_star`` is the minimum-norm solution
    of ``J theta = y - s_star`` (the row-space representative).
    """
    if isinstance(rng, (int, np.integer)):
        seed, rng = int(rng), make_rng(rng)
    else:
        seed = -1
    if not (1 <= rank <= min(n, p)):
        raise ValueError("rank must be in [1, min(n, p)]")
    if not (0 <= sparsity <= n):
        raise ValueError("sparsity must be in [0, n]")
    g1 = rng.standard_normal((n, rank))
    g2 = rng.standard_normal((rank, p))
    j = g1 @ g2
    s_star = np.zeros(n)
    support = rng.choice(n, size=sparsity, replace=False)
    s_star[support] = rng.standard_normal(sparsity)
    theta_tilde = rng.standard_normal(p)
    clean = j @ theta_tilde
    y = clean + s_star
    theta_star = min_norm_solve(j, clean)
    inst = LinearInstance(
        j=j, y=y, theta_star=theta_star, s_star=s_star, rank=rank,
        sparsity=sparsity, seed=seed,
    )
    inst.validate()
    return inst


def coherence(j) -> float:
    """Column-space coherence ``mu = (n / rank) * max_i ||U^T e_i||^2``.

    Always lies in [1, n / rank]; 1 is maximally incoherent (flat leverage
    scores), n / rank means some observation is fully aligned with the
    column space.
    """
    svd = svd_compact(as_matrix(j))
    if svd.rank == 0:
        raise ValueError("coherence undefined for the zero matrix")
    leverage = np.sum(svd.u * svd.u, axis=1)
    n = svd.u.shape[0]
    return float(n / svd.rank * np.max(leverage))


@dataclass
class NoisyDataset:
    """Classification samples with clean and possibly corrupted labels.

    Labels are class indices; ``flipped`` marks rows where the noisy label
    differs from the clean one.  ``means`` carries the mixture centers so a
    matching test set can be drawn from the same distribution.
    """

    features: np.ndarray
    clean_labels: np.ndarray
    noisy_labels: np.ndarray
    flipped: np.ndarray
    num_classes: int
    means: np.ndarray = field(repr=False, default=None)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def validate(self) -> None:
        for name, lab in (("clean", self.clean_labels), ("noisy", self.noisy_labels)):
            if lab.shape != (self.n,):
                raise ValueError("%s_labels shape %r" % (name, lab.shape))
            if lab.min(initial=0) < 0 or lab.max(initial=0) >= self.num_classes:
                raise ValueError("%s_labels out of range" % name)
        if not np.array_equal(self.flipped, self.clean_labels != self.noisy_labels):
            raise ValueError("flipped mask inconsistent with labels")

    def noise_rate_effective(self) -> float:
        return float(np.mean(self.flipped)) if self.n > 0 else 0.0


def onehot(labels: np.ndarray, num_classes: int) -> np.ndarray:
    """Rows of the identity picked by the label indices (n x K, one 1 per row)."""
    labels = np.asarray(labels)
    eye = np.eye(num_classes)
    return eye[labels]


def _mean_directions(num_classes: int, dim: int, rng) -> np.ndarray:
    """Unit directions for class means, pairwise well separated."""
    if num_classes <= dim:
        # random orthonormal frame: pairwise distance sqrt(2) exactly
        q, r = np.linalg.qr(rng.standard_normal((dim, num_classes)))
        return (q * np.sign(np.diag(r))).T
    if dim == 2:
        angles = 2.0 * np.pi * np.arange(num_classes) / num_classes
        return np.column_stack([np.cos(angles), np.sin(angles)])
    if dim == 1 and num_classes == 2:
        return np.array([[1.0], [-1.0]])
    if dim < 2:
        raise ValueError("cannot place %d class means in %d dimension(s)"
                         % (num_classes, dim))
    # more classes than dimensions: keep the best of several random draws,
    # scored by the smallest pairwise distance
    best, best_score = None, -1.0
    for _ in range(64):
        cand = rng.standard_normal((num_classes, dim))
        cand /= np.linalg.norm(cand, axis=1, keepdims=True)
        gaps = np.sum((cand[:, None, :] - cand[None, :, :]) ** 2, axis=2)
        np.fill_diagonal(gaps, np.inf)
        score = float(np.min(gaps))
        if score > best_score:
            best, best_score = cand, score
    return best


def gen_classification_dataset(
    num_classes: int, n_per_class: int, dim: int, separation: float, rng,
    means: np.ndarray | None = None,
) -> NoisyDataset:
    """Sample separable Gaussian blobs with identity covariance.

    Class means are ``separation`` times unit directions: a random
    orthonormal frame when ``num_classes <= dim`` (pairwise distance
    sqrt(2)), the regular polygon when ``dim == 2``, and otherwise the most
    spread-out of several random unit configurations.  Pass ``means`` to
    reuse the centers of an existing dataset (e.g. for a test split).
    ``n_per_class=0`` yields an empty dataset.  Labels start clean:
    ``noisy == clean`` until a noise op is applied.
    """
    if num_classes < 2:
        raise ValueError("need at least 2 classes")
    if n_per_class < 0:
        raise ValueError("n_per_class must be nonnegative")
    if means is None:
        means = separation * _mean_directions(num_classes, dim, rng)
    else:
        means = as_matrix(means, "means")
        if means.shape != (num_classes, dim):
            raise ValueError("means must be (num_classes, dim)")
    n = num_classes * n_per_class
    labels = np.repeat(np.arange(num_classes), n_per_class)
    features = means[labels] + rng.standard_normal((n, dim))
    ds = NoisyDataset(
        features=features,
        clean_labels=labels.copy(),
        noisy_labels=labels.copy(),
        flipped=np.zeros(n, dtype=bool),
        num_classes=num_classes,
        means=means,
    )
    ds.validate()
    return ds


def apply_symmetric_noise(ds: NoisyDataset, rate: float, rng) -> NoisyDataset:
    """Resample each label w.p. ``rate`` uniformly over ALL classes.

    The true class is included in the resampling, so the effective flip
    probability is ``rate * (K - 1) / K``.  Returns a new dataset; the input
    is untouched.
    """
    if not (0.0 <= rate <= 1.0):
        raise ValueError("rate must be in [0, 1]")
    hit = rng.random(ds.n) < rate
    drawn = rng.integers(0, ds.num_classes, size=ds.n)
    noisy = np.where(hit, drawn, ds.clean_labels)
    out = NoisyDataset(
        features=ds.features,
        clean_labels=ds.clean_labels,
        noisy_labels=noisy,
        flipped=noisy != ds.clean_labels,
        num_classes=ds.num_classes,
        means=ds.means,
    )
    out.validate()
    return out


def apply_asymmetric_noise(ds: NoisyDataset, pair_map: dict, rate: float, rng) -> NoisyDataset:
    """Map the labels of a uniformly chosen ``rate`` fraction through ``pair_map``.

    ``pair_map`` sends a class index to its confusion target; classes absent
    from the map keep their label (and do not count as flipped).  Exactly
    ``floor(rate * n)`` samples are selected without replacement.
    """
    if not (0.0 <= rate <= 1.0):
        raise ValueError("rate must be in [0, 1]")
    for src, dst in pair_map.items():
        if not (0 <= src < ds.num_classes and 0 <= dst < ds.num_classes):
            raise ValueError("pair_map entry %r -> %r out of range" % (src, dst))
    count = int(rate * ds.n)
    chosen = rng.choice(ds.n, size=count, replace=False)
    noisy = ds.clean_labels.copy()
    for i in chosen:
        noisy[i] = pair_map.get(int(noisy[i]), int(noisy[i]))
    out = NoisyDataset(
        features=ds.features,
        clean_labels=ds.clean_labels,
        noisy_labels=noisy,
        flipped=noisy != ds.clean_labels,
        num_classes=ds.num_classes,
        means=ds.means,
    )
    out.validate()
    return out
