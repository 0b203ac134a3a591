"""Tests for the network, corrected losses, penalties, and noise detection."""

import numpy as np
import pytest

from noisesep.classifier import (
    ce_loss_and_grads,
    class_balance_penalty,
    consistency_penalty,
    floor_normalize,
    MlpClassifier,
    mse_loss_and_grad_v,
    noise_detection_metrics,
    noise_term,
    relu,
    sample_noise_l1,
    softmax,
)
from noisesep.instances import onehot
from noisesep.linalg import make_rng


def small_model(seed, dim=5, hidden=8, classes=3):
    return MlpClassifier.init(dim, hidden, classes, make_rng(seed))


def small_batch(seed, b=6, dim=5, classes=3):
    rng = make_rng(seed)
    x = rng.standard_normal((b, dim))
    labels = rng.integers(0, classes, size=b)
    y = onehot(labels, classes)
    u = rng.random((b, classes)) * 0.6 + 0.2
    v = rng.random((b, classes)) * 0.6 + 0.2
    return x, y, u, v


def fd_on_array(f, arr, h=1e-6):
    g = np.zeros_like(arr)
    flat = arr.reshape(-1)
    gf = g.reshape(-1)
    for i in range(flat.size):
        keep = flat[i]
        flat[i] = keep + h
        up = f()
        flat[i] = keep - h
        dn = f()
        flat[i] = keep
        gf[i] = (up - dn) / (2 * h)
    return g


def model_grad_close(model, loss_fn, grads, atol):
    """Finite-difference every parameter block of the model."""
    for name in ("w1", "b1", "w2", "b2"):
        arr = getattr(model, name)
        fd = fd_on_array(lambda: loss_fn(), arr)
        np.testing.assert_allclose(getattr(grads, name), fd, atol=atol,
                                   err_msg="block %s" % name)


def test_relu_and_softmax_basics():
    np.testing.assert_array_equal(relu(np.array([-1.0, 0.0, 2.0])),
                                  [0.0, 0.0, 2.0])
    p = softmax(np.array([[0.0, 0.0], [10.0, 0.0]]))
    np.testing.assert_allclose(p[0], [0.5, 0.5])
    np.testing.assert_allclose(p.sum(axis=1), [1.0, 1.0])
    # stability at large logits: no overflow
    p2 = softmax(np.array([1e4, 0.0]))
    assert np.isfinite(p2).all()


def test_floor_normalize_equal_scores():
    np.testing.assert_allclose(floor_normalize(np.array([0.5, 0.5])),
                               [0.5, 0.5])


def test_floor_normalize_clips_negative_entry():
    out = floor_normalize(np.array([1.0, -1.0]), eps=0.01)
    np.testing.assert_allclose(out, [1.0 / 1.01, 0.01 / 1.01])


def test_floor_normalize_keeps_simplex_points():
    rng = make_rng(0)
    for trial in range(5):
        w = rng.random(4) + 0.2
        w = w / w.sum()
        np.testing.assert_allclose(floor_normalize(w, eps=0.01), w,
                                   atol=1e-12)


def test_floor_normalize_rows_sum_to_one():
    rng = make_rng(1)
    w = rng.standard_normal((7, 4))
    out = floor_normalize(w)
    np.testing.assert_allclose(np.sum(out, axis=-1), np.ones(7))
    assert np.all(out > 0)


def test_noise_term_zero_variables():
    y = onehot(np.array([0, 2]), 3)
    np.testing.assert_array_equal(
        noise_term(np.zeros((2, 3)), np.zeros((2, 3)), y), np.zeros((2, 3)))


def test_noise_term_unit_variables_signed_pattern():
    # +u^2 on the label entry, -v^2 elsewhere
    y = onehot(np.array([0]), 4)
    s = noise_term(np.ones((1, 4)), np.ones((1, 4)), y)
    np.testing.assert_array_equal(s, [[1.0, -1.0, -1.0, -1.0]])


def test_noise_term_can_encode_label_flip():
    # a sample whose clean class is 2 but observed as 0: the corruption
    # +1 on entry 0 and -1 on entry 2 moves the clean one-hot to the noisy
    y_noisy = onehot(np.array([0]), 3)
    u = np.array([[1.0, 0.0, 0.0]])
    v = np.array([[0.0, 0.0, 1.0]])
    s = noise_term(u, v, y_noisy)
    clean = onehot(np.array([2]), 3)
    np.testing.assert_array_equal(clean + s, y_noisy)


def test_ce_loss_vanishes_for_confident_correct_model():
    # logits far apart drive the floored loss to the eps -> 0 limit
    model = small_model(3, dim=2, hidden=4, classes=2)
    model.w1[:] = 0.0
    model.b1[:] = np.array([1.0, 1.0, 0.0, 0.0])
    model.w2[:] = 0.0
    model.w2[0, :2] = 60.0  # class 0 logit huge on every input
    x = make_rng(4).standard_normal((3, 2))
    y = onehot(np.zeros(3, dtype=int), 2)
    res = ce_loss_and_grads(model, np.zeros((3, 2)), np.zeros((3, 2)), x, y,
                            eps=1e-12)
    assert res.loss <= 1e-9


def test_ce_loss_floor_sets_scale_at_default_eps():
    # same confident model: the floor keeps phi_label at 1 / (1 + eps)
    model = small_model(3, dim=2, hidden=4, classes=2)
    model.w1[:] = 0.0
    model.b1[:] = np.array([1.0, 1.0, 0.0, 0.0])
    model.w2[:] = 0.0
    model.w2[0, :2] = 60.0
    x = make_rng(4).standard_normal((3, 2))
    y = onehot(np.zeros(3, dtype=int), 2)
    res = ce_loss_and_grads(model, np.zeros((3, 2)), np.zeros((3, 2)), x, y,
                            eps=0.01)
    assert res.loss == pytest.approx(np.log(1.01), abs=1e-6)


def test_ce_gradients_match_finite_differences():
    for seed in range(4):
        model = small_model(seed + 10)
        x, y, u, v = small_batch(seed + 20)
        res = ce_loss_and_grads(model, u, v, x, y)
        model_grad_close(
            model, lambda: ce_loss_and_grads(model, u, v, x, y).loss,
            res.grads, atol=1e-5)
        fd_u = fd_on_array(
            lambda: ce_loss_and_grads(model, u, v, x, y).loss, u)
        np.testing.assert_allclose(res.grad_u, fd_u, atol=1e-6)
        fd_v = fd_on_array(
            lambda: ce_loss_and_grads(model, u, v, x, y).loss, v)
        np.testing.assert_allclose(res.grad_v, fd_v, atol=1e-6)


def test_ce_grad_v_off_label_shares_per_sample_scale():
    # for unfloored entries the v gradient is -2 v / (B t_i): one scalar per
    # sample across every off-label class
    model = small_model(30)
    x, y, u, v = small_batch(31)
    res = ce_loss_and_grads(model, u, v, x, y)
    b = x.shape[0]
    probs = model.predict_proba(x)
    w = probs + noise_term(u, v, y)
    for i in range(b):
        ratios = []
        for k in range(y.shape[1]):
            if y[i, k] == 1.0 or w[i, k] <= 0.01:
                continue
            ratios.append(res.grad_v[i, k] / v[i, k])
        if len(ratios) >= 2:
            np.testing.assert_allclose(ratios, ratios[0], rtol=1e-12)
        for ratio in ratios:
            assert ratio < 0  # raising v lowers the normalizer, so loss falls
        # label entry never receives a v gradient
        label = int(np.argmax(y[i]))
        assert res.grad_v[i, label] == 0.0


def test_ce_floor_masks_gradient_below_eps():
    # entries pushed under the floor transmit no gradient
    model = small_model(40)
    x, y, u, _ = small_batch(41)
    v = np.full_like(u, 5.0)  # v^2 = 25 shoves every off-label entry below 0
    res = ce_loss_and_grads(model, u, v, x, y)
    off = y == 0.0
    np.testing.assert_array_equal(res.grad_v[off], 0.0)


def test_mse_exact_fit_zero_loss():
    model = small_model(50, dim=4, hidden=6, classes=3)
    rng = make_rng(51)
    x = rng.standard_normal((5, 4))
    pred = model.predict(x)
    y = onehot(pred, 3)  # label equals the projected prediction, s = 0
    loss, grad_v = mse_loss_and_grad_v(model, np.zeros((5, 3)),
                                       np.zeros((5, 3)), x, y)
    assert loss == 0.0
    np.testing.assert_array_equal(grad_v, np.zeros((5, 3)))


def test_mse_two_class_hand_case():
    # single sample, projected prediction (1, 0), label (0, 1):
    # s = (-v0^2, u1^2), d = (1 - v0^2, u1^2 - 1)
    model = small_model(52, dim=3, hidden=4, classes=2)
    x = make_rng(53).standard_normal((1, 3))
    pred = int(model.predict(x)[0])
    y = onehot(np.array([1 - pred]), 2)  # force the wrong label
    u = np.array([[0.0, 0.0]])
    v = np.array([[0.0, 0.0]])
    v[0, pred] = 0.5
    loss, grad_v = mse_loss_and_grad_v(model, u, v, x, y)
    d_pred = 1.0 - 0.25
    assert loss == pytest.approx(d_pred ** 2 + 1.0)
    assert grad_v[0, pred] == pytest.approx(-4.0 * d_pred * 0.5)
    assert grad_v[0, 1 - pred] == 0.0


def test_mse_grad_v_matches_finite_differences():
    for seed in range(4):
        model = small_model(seed + 60)
        x, y, u, v = small_batch(seed + 70)
        _, grad_v = mse_loss_and_grad_v(model, u, v, x, y,
                                        one_hot_projection=False)
        fd_v = fd_on_array(
            lambda: mse_loss_and_grad_v(model, u, v, x, y,
                                        one_hot_projection=False)[0], v)
        np.testing.assert_allclose(grad_v, fd_v, atol=1e-5)


def test_consistency_identity_augment_is_exactly_zero():
    model = small_model(80)
    x = make_rng(81).standard_normal((6, 5))
    loss, grads = consistency_penalty(model, x, x.copy())
    assert loss == 0.0
    for name in ("w1", "b1", "w2", "b2"):
        np.testing.assert_allclose(getattr(grads, name), 0.0, atol=1e-15)


def test_consistency_constant_model_is_zero():
    model = small_model(82)
    model.w1[:] = 0.0
    model.w2[:] = 0.0
    model.b1[:] = 0.0
    model.b2[:] = 0.0
    rng = make_rng(83)
    x = rng.standard_normal((4, 5))
    x_aug = x + rng.standard_normal((4, 5))
    loss, _ = consistency_penalty(model, x, x_aug)
    assert loss == pytest.approx(0.0, abs=1e-15)


def test_consistency_gradients_match_finite_differences():
    model = small_model(84)
    rng = make_rng(85)
    x = rng.standard_normal((5, 5))
    x_aug = x + 0.1 * rng.standard_normal((5, 5))
    _, grads = consistency_penalty(model, x, x_aug)
    model_grad_close(model,
                     lambda: consistency_penalty(model, x, x_aug)[0],
                     grads, atol=1e-5)


def test_consistency_nonnegative():
    rng = make_rng(86)
    for seed in range(5):
        model = small_model(seed + 90)
        x = rng.standard_normal((4, 5))
        x_aug = x + 0.5 * rng.standard_normal((4, 5))
        loss, _ = consistency_penalty(model, x, x_aug)
        assert loss >= -1e-12


def test_balance_at_prior_equals_prior_entropy():
    model = small_model(100)
    model.w1[:] = 0.0
    model.w2[:] = 0.0
    model.b1[:] = 0.0
    model.b2[:] = 0.0  # uniform output
    x = make_rng(101).standard_normal((6, 5))
    prior = np.full(3, 1.0 / 3.0)
    loss, _ = class_balance_penalty(model, x, prior)
    assert loss == pytest.approx(-np.sum(prior * np.log(prior)))


def test_balance_gradients_match_finite_differences():
    model = small_model(102)
    x = make_rng(103).standard_normal((5, 5))
    prior = np.array([0.5, 0.25, 0.25])
    _, grads = class_balance_penalty(model, x, prior)
    model_grad_close(model,
                     lambda: class_balance_penalty(model, x, prior)[0],
                     grads, atol=1e-5)


def test_sample_noise_l1_disjoint_supports():
    y = onehot(np.array([0, 1]), 3)
    u = np.array([[0.5, 0.0, 0.0], [0.0, 1.0, 0.0]])
    v = np.array([[0.0, 0.3, 0.0], [0.0, 0.0, 0.0]])
    got = sample_noise_l1(u, v, y)
    np.testing.assert_allclose(got, [0.25 + 0.09, 1.0])


def test_detection_perfect_flags():
    y_noisy = np.array([0, 1, 2, 0])
    flipped = np.array([True, False, True, False])
    u = np.zeros((4, 3))
    v = np.zeros((4, 3))
    # give flipped samples unit-size corrections, others nothing
    u[0, 0] = 1.0
    v[0, 2] = 1.0
    u[2, 2] = 0.9
    prec, rec = noise_detection_metrics(u, v, y_noisy, 3, flipped)
    assert prec == 1.0 and rec == 1.0


def test_detection_empty_conventions():
    y_noisy = np.array([0, 1])
    zeros = np.zeros((2, 3))
    prec, rec = noise_detection_metrics(zeros, zeros, y_noisy, 3,
                                        np.array([False, False]))
    assert prec == 1.0 and rec == 1.0  # nothing flagged, nothing to find
    prec2, rec2 = noise_detection_metrics(zeros, zeros, y_noisy, 3,
                                          np.array([True, False]))
    assert prec2 == 1.0 and rec2 == 0.0  # a miss with no false alarms


def test_detection_false_alarm():
    y_noisy = np.array([0, 1])
    u = np.zeros((2, 3))
    u[0, 0] = 1.0  # flags sample 0, which is clean
    prec, rec = noise_detection_metrics(u, np.zeros((2, 3)), y_noisy, 3,
                                        np.array([False, True]))
    assert prec == 0.0 and rec == 0.0
