"""Two-phase training loop for the noise-separating classifier.

Each epoch first runs minibatch SGD on the network parameters with the
cross-entropy loss (plus optional consistency and class-balance penalties),
then makes one full pass over the samples updating the noise variables:
``u_i`` by the per-sample cross-entropy gradient with learning rate
``alpha_u * tau`` and ``v_i`` by the per-sample mean-squared-error gradient
with ``alpha_v * tau``, both clamped to [-1, 1] after the update and both
evaluated at the pre-update noise term.  Setting ``alpha_u = alpha_v = 0``
freezes the noise variables at their tiny initialization, which is the
plain cross-entropy baseline.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .classifier import (
    ClassifierState,
    MlpClassifier,
    MlpGrads,
    ce_loss_and_grads,
    class_balance_penalty,
    consistency_penalty,
    mse_loss_and_grad_v,
    noise_term,
    sample_noise_l1,
    _floor_grads,
)
from .instances import NoisyDataset, onehot
from .linalg import make_rng
from .serialize import read_arrays, write_arrays


@dataclass
class TrainConfig:
    """Hyperparameters; defaults follow the reference small-scale recipe.

    ``tau`` is the SGD learning rate, decayed by 10x at 40% and 80% of the
    epochs (both phases use the decayed rate).  Weight decay applies to the
    network parameters only, never to u or v.  ``augment_std_factor`` scales
    the global feature standard deviation into the jitter used by the
    consistency penalty.
    """

    epochs: int = 150
    hidden: int = 256
    tau: float = 0.02
    batch_size: int = 128
    momentum: float = 0.9
    weight_decay: float = 5e-4
    alpha_u: float = 10.0
    alpha_v: float = 10.0
    init_std: float = 1e-8
    lambda_c: float = 0.9
    lambda_b: float = 0.1
    eps: float = 1e-2
    augment_std_factor: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError("epochs must be non-negative")
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")
        if not (self.tau > 0):
            raise ValueError("tau must be positive")
        if self.alpha_u < 0 or self.alpha_v < 0:
            raise ValueError("alpha_u and alpha_v must be non-negative")
        if not (self.eps > 0):
            raise ValueError("eps must be positive")


@dataclass
class EpochMetrics:
    epoch: int
    train_acc_noisy: float
    train_acc_clean: float
    test_acc: float
    mean_s_l1: float
    ce_loss: float
    mse_loss: float


METRICS_COLUMNS = ["epoch", "train_acc_noisy", "train_acc_clean", "test_acc",
                   "mean_s_l1", "ce_loss", "mse_loss", "seed"]


def metrics_rows(history: list, seed: int) -> list:
    return [[m.epoch, m.train_acc_noisy, m.train_acc_clean, m.test_acc,
             m.mean_s_l1, m.ce_loss, m.mse_loss, seed] for m in history]


def _lr_at(cfg: TrainConfig, epoch: int) -> float:
    lr = cfg.tau
    if cfg.epochs > 0:
        if epoch >= int(0.4 * cfg.epochs):
            lr *= 0.1
        if epoch >= int(0.8 * cfg.epochs):
            lr *= 0.1
    return lr


def _evaluate(state: ClassifierState, ds: NoisyDataset, y_onehot, eps: float,
              test_ds: NoisyDataset | None, epoch: int) -> EpochMetrics:
    probs = state.model.predict_proba(ds.features)
    pred = np.argmax(probs, axis=1)
    s = noise_term(state.u, state.v, y_onehot)
    w = probs + s
    m = np.maximum(w, eps)
    phi = m / m.sum(axis=1, keepdims=True)
    ce = float(np.mean(-np.log(phi[np.arange(ds.n), ds.noisy_labels])))
    f_hat = onehot(pred, ds.num_classes)
    d = f_hat + s - y_onehot
    mse = float(np.mean(np.sum(d * d, axis=1)))
    test_acc = float("nan")
    if test_ds is not None:
        test_acc = float(np.mean(state.model.predict(test_ds.features) == test_ds.clean_labels))
    return EpochMetrics(
        epoch=epoch,
        train_acc_noisy=float(np.mean(pred == ds.noisy_labels)),
        train_acc_clean=float(np.mean(pred == ds.clean_labels)),
        test_acc=test_acc,
        mean_s_l1=float(np.mean(sample_noise_l1(state.u, state.v, y_onehot))),
        ce_loss=ce,
        mse_loss=mse,
    )


def train_model(ds: NoisyDataset, cfg: TrainConfig,
                test_ds: NoisyDataset | None = None):
    """Train on ``ds``; returns (state, history).

    ``history[0]`` holds the metrics of the untouched initialization
    (epoch 0) followed by one row per completed epoch; ``epochs = 0`` thus
    returns the init state with its metrics row only.  All randomness
    (init, batch order, jitter) comes from ``cfg.seed``.
    """
    rng = make_rng(cfg.seed)
    n, dim = ds.features.shape
    k = ds.num_classes
    model = MlpClassifier.init(dim, cfg.hidden, k, rng)
    u = rng.normal(0.0, cfg.init_std, size=(n, k))
    v = rng.normal(0.0, cfg.init_std, size=(n, k))
    state = ClassifierState(model=model, u=u, v=v)
    y_onehot = onehot(ds.noisy_labels, k)
    prior = np.bincount(ds.noisy_labels, minlength=k) / n
    jitter_std = cfg.augment_std_factor * float(np.std(ds.features))

    history = [_evaluate(state, ds, y_onehot, cfg.eps, test_ds, epoch=0)]
    velocity = MlpGrads.zeros_like(model)

    for epoch in range(cfg.epochs):
        lr = _lr_at(cfg, epoch)
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            x = ds.features[idx]
            y = y_onehot[idx]
            res = ce_loss_and_grads(model, u[idx], v[idx], x, y, eps=cfg.eps)
            grads = res.grads
            if cfg.lambda_c > 0:
                x_aug = x + jitter_std * rng.standard_normal(x.shape)
                _, g_cons = consistency_penalty(model, x, x_aug)
                grads.add_scaled(g_cons, cfg.lambda_c)
            if cfg.lambda_b > 0:
                _, g_bal = class_balance_penalty(model, x, prior)
                grads.add_scaled(g_bal, cfg.lambda_b)
            for name in ("w1", "b1", "w2", "b2"):
                g = getattr(grads, name) + cfg.weight_decay * getattr(model, name)
                vel = cfg.momentum * getattr(velocity, name) - lr * g
                setattr(velocity, name, vel)
                setattr(model, name, getattr(model, name) + vel)

        if cfg.alpha_u > 0 or cfg.alpha_v > 0:
            # Full pass over samples; u and v rows only touch their own
            # sample's loss, so the per-sample loop vectorizes exactly.
            probs = model.predict_proba(ds.features)
            s = noise_term(u, v, y_onehot)
            g_w, _, _ = _floor_grads(probs + s, y_onehot, cfg.eps)
            grad_u = g_w * (2.0 * u * y_onehot)
            f_hat = onehot(np.argmax(probs, axis=1), k)
            grad_v = -4.0 * (f_hat + s - y_onehot) * v * (1.0 - y_onehot)
            if cfg.alpha_u > 0:
                np.clip(u - cfg.alpha_u * lr * grad_u, -1.0, 1.0, out=u)
            if cfg.alpha_v > 0:
                np.clip(v - cfg.alpha_v * lr * grad_v, -1.0, 1.0, out=v)

        history.append(_evaluate(state, ds, y_onehot, cfg.eps, test_ds, epoch=epoch + 1))

    return state, history


def save_checkpoint(path, state: ClassifierState) -> None:
    """Versioned text dump of all trainable arrays."""
    write_arrays(path, {
        "w1": state.model.w1, "b1": state.model.b1,
        "w2": state.model.w2, "b2": state.model.b2,
        "u": state.u, "v": state.v,
    })


def load_checkpoint(path) -> ClassifierState:
    arrays = read_arrays(path)
    model = MlpClassifier(w1=arrays["w1"], b1=arrays["b1"],
                          w2=arrays["w2"], b2=arrays["b2"])
    return ClassifierState(model=model, u=arrays["u"], v=arrays["v"])
