"""Tests for linear problem instances, coherence, blobs, and label noise."""

import numpy as np
import pytest

from noisesep.instances import (
    apply_asymmetric_noise,
    apply_symmetric_noise,
    coherence,
    gen_classification_dataset,
    gen_linear_instance,
    onehot,
)
from noisesep.linalg import make_rng


def check_instance(inst, n, p, rank, sparsity):
    assert inst.j.shape == (n, p)
    assert inst.y.shape == (n,)
    assert inst.theta_star.shape == (p,)
    assert inst.s_star.shape == (n,)
    assert np.linalg.matrix_rank(inst.j) == rank
    assert np.count_nonzero(inst.s_star) == sparsity
    assert inst.support().shape == (sparsity,)
    assert np.all(inst.s_star[inst.support()] != 0)
    np.testing.assert_allclose(inst.j @ inst.theta_star + inst.s_star,
                               inst.y, atol=1e-10)
    inst.validate()


def test_linear_instance_small_shape():
    check_instance(gen_linear_instance(20, 40, 3, 3, make_rng(0)),
                   20, 40, 3, 3)


def test_linear_instance_large_shape():
    check_instance(gen_linear_instance(100, 150, 10, 20, make_rng(1)),
                   100, 150, 10, 20)


def test_linear_instance_zero_sparsity():
    inst = gen_linear_instance(12, 20, 4, 0, make_rng(2))
    np.testing.assert_array_equal(inst.s_star, np.zeros(12))
    np.testing.assert_allclose(inst.j @ inst.theta_star, inst.y, atol=1e-12)


def test_linear_instance_deterministic_in_seed():
    a = gen_linear_instance(15, 25, 5, 4, make_rng(33))
    b = gen_linear_instance(15, 25, 5, 4, make_rng(33))
    np.testing.assert_array_equal(a.j, b.j)
    np.testing.assert_array_equal(a.y, b.y)
    np.testing.assert_array_equal(a.theta_star, b.theta_star)


def test_linear_instance_rejects_bad_arguments():
    with pytest.raises(ValueError):
        gen_linear_instance(10, 20, 11, 2, make_rng(0))  # rank > n
    with pytest.raises(ValueError):
        gen_linear_instance(10, 20, 3, 11, make_rng(0))  # sparsity > n
    with pytest.raises(ValueError):
        gen_linear_instance(10, 20, 0, 2, make_rng(0))


def test_coherence_identity_is_one():
    assert coherence(np.eye(20)) == pytest.approx(1.0)


def test_coherence_rank_one_flattest_row_space():
    # all-ones row space spreads mass evenly: smallest possible value
    assert coherence(np.ones((12, 7))) == pytest.approx(1.0)


def test_coherence_spiked_row_space_is_maximal():
    # column space aligned with a single coordinate axis concentrates fully
    n = 15
    j = np.outer(np.eye(n)[0], np.arange(1.0, 6.0))
    assert coherence(j) == pytest.approx(float(n))


def test_coherence_between_extremes():
    rng = make_rng(13)
    for trial in range(8):
        j = rng.standard_normal((4, 20)).T @ rng.standard_normal((4, 9))
        mu = coherence(j)
        n = j.shape[0]
        assert 1.0 - 1e-9 <= mu <= n + 1e-9


def test_blobs_two_far_classes_linearly_separable():
    ds = gen_classification_dataset(2, 150, 10, 10.0, make_rng(5))
    ds.validate()
    # least-squares one-vs-rest classifier should be near perfect
    x1 = np.hstack([ds.features, np.ones((ds.n, 1))])
    coef, *_ = np.linalg.lstsq(x1, onehot(ds.clean_labels, 2), rcond=None)
    pred = np.argmax(x1 @ coef, axis=1)
    assert np.mean(pred == ds.clean_labels) >= 0.99


def test_blobs_empty_dataset_allowed():
    ds = gen_classification_dataset(4, 0, 20, 3.0, make_rng(0))
    assert ds.n == 0 and ds.dim == 20
    ds.validate()
    assert ds.noise_rate_effective() == 0.0
    out = apply_symmetric_noise(ds, 0.4, make_rng(1))
    assert out.n == 0


def test_blobs_more_classes_than_dimensions():
    ds = gen_classification_dataset(4, 200, 2, 6.0, make_rng(3))
    ds.validate()
    emp = np.stack([ds.features[ds.clean_labels == k].mean(axis=0)
                    for k in range(4)])
    # empirical class means concentrate at the true means: 3 sigma / sqrt(n)
    for k in range(4):
        gap = np.linalg.norm(emp[k] - ds.means[k])
        assert gap <= 3.0 * np.sqrt(2.0 / 200)
    dist = np.linalg.norm(emp[:, None, :] - emp[None, :, :], axis=2)
    np.fill_diagonal(dist, np.inf)
    assert dist.min() > 4.0  # blobs of unit radius stay visibly apart


def test_blobs_mean_frame_orthonormal_when_room():
    ds = gen_classification_dataset(4, 1, 20, 3.0, make_rng(2))
    g = ds.means @ ds.means.T
    np.testing.assert_allclose(g, 9.0 * np.eye(4), atol=1e-9)


def test_blobs_shared_means_for_test_split():
    rng = make_rng(7)
    train = gen_classification_dataset(3, 50, 8, 4.0, rng)
    test = gen_classification_dataset(3, 30, 8, 4.0, rng, means=train.means)
    np.testing.assert_array_equal(train.means, test.means)


def test_blobs_one_dimension_three_classes_rejected():
    with pytest.raises(ValueError):
        gen_classification_dataset(3, 5, 1, 2.0, make_rng(0))


def test_symmetric_noise_rate_zero_keeps_labels():
    ds = gen_classification_dataset(3, 40, 6, 4.0, make_rng(11))
    out = apply_symmetric_noise(ds, 0.0, make_rng(12))
    np.testing.assert_array_equal(out.noisy_labels, out.clean_labels)
    assert out.noise_rate_effective() == 0.0
    # input untouched
    np.testing.assert_array_equal(ds.noisy_labels, ds.clean_labels)


def test_symmetric_noise_rate_one_two_classes_near_half():
    # resampling includes the true class, so K=2 flips about half the labels
    ds = gen_classification_dataset(2, 1000, 5, 6.0, make_rng(14))
    out = apply_symmetric_noise(ds, 1.0, make_rng(15))
    assert abs(out.noise_rate_effective() - 0.5) < 0.06


def test_symmetric_noise_effective_rate_binomial_window():
    # rate q resamples, of which (K-1)/K land on a different class
    k, n_per, rate = 10, 300, 0.4
    ds = gen_classification_dataset(k, n_per, 12, 5.0, make_rng(16))
    out = apply_symmetric_noise(ds, rate, make_rng(17))
    target = rate * (k - 1) / k
    n = ds.n
    assert abs(out.noise_rate_effective() - target) <= \
        3.0 * np.sqrt(target * (1 - target) / n)
    assert np.array_equal(out.flipped,
                          out.noisy_labels != out.clean_labels)


def test_symmetric_noise_rejects_bad_rate():
    ds = gen_classification_dataset(2, 5, 3, 4.0, make_rng(0))
    for rate in (-0.1, 1.5):
        with pytest.raises(ValueError):
            apply_symmetric_noise(ds, rate, make_rng(1))


def test_asymmetric_noise_follows_pair_map():
    ds = gen_classification_dataset(4, 100, 6, 5.0, make_rng(20))
    out = apply_asymmetric_noise(ds, {0: 1, 2: 3}, 0.5, make_rng(21))
    changed = out.flipped
    # every flip respects the confusion map
    assert np.all(out.noisy_labels[changed] ==
                  np.vectorize({0: 1, 2: 3}.get)(out.clean_labels[changed]))
    # classes outside the map are never flipped
    assert not np.any(changed & np.isin(out.clean_labels, [1, 3]))
    # exactly floor(rate * n) samples were selected; only mapped ones flip
    assert changed.sum() <= int(0.5 * ds.n)
    assert changed.sum() > 0


def test_asymmetric_noise_rejects_out_of_range_map():
    ds = gen_classification_dataset(3, 10, 4, 5.0, make_rng(1))
    with pytest.raises(ValueError):
        apply_asymmetric_noise(ds, {0: 7}, 0.2, make_rng(2))


def test_onehot_rows_of_identity():
    y = onehot(np.array([2, 0, 1]), 4)
    np.testing.assert_array_equal(
        y, [[0, 0, 1, 0], [1, 0, 0, 0], [0, 1, 0, 0]])
    assert np.all(y.sum(axis=1) == 1)
