"""Small classifier with a per-sample trainable corruption term.

The network is a one-hidden-layer ReLU MLP with a softmax head.  Each
training sample i carries bounded noise variables ``u_i, v_i`` in
``[-1, 1]^K`` that form the corruption estimate::

    s_i = u_i * u_i * y_i - v_i * v_i * (1 - y_i)

(one-hot y_i), i.e. a non-negative bump at the observed label and a
non-positive correction elsewhere.  The cross-entropy path trains the
network and ``u`` on the floor-normalized sum ``phi(f + s)``; a separate
mean-squared path trains ``v`` against the one-hot projection of the
prediction.  All gradients are derived by hand and validated against
central finite differences in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .instances import onehot

DEFAULT_FLOOR = 1e-2


def relu(z: np.ndarray) -> np.ndarray:
    return np.maximum(z, 0.0)


def softmax(z: np.ndarray) -> np.ndarray:
    """Row-wise stable softmax; rows sum to one."""
    shifted = z - np.max(z, axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=-1, keepdims=True)


def floor_normalize(w: np.ndarray, eps: float = DEFAULT_FLOOR) -> np.ndarray:
    """Map a score vector to the simplex: floor at ``eps`` then l1-normalize.

    Defined for any real input; with eps > 0 the output is strictly positive
    and rows sum to one.  The subgradient used everywhere is 0 at entries at
    or below the floor and 1 above it.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    m = np.maximum(w, eps)
    return m / np.sum(m, axis=-1, keepdims=True)


@dataclass
class MlpClassifier:
    """One-hidden-layer ReLU network with softmax output."""

    w1: np.ndarray  # (hidden, dim)
    b1: np.ndarray  # (hidden,)
    w2: np.ndarray  # (classes, hidden)
    b2: np.ndarray  # (classes,)

    @classmethod
    def init(cls, dim: int, hidden: int, classes: int, rng) -> "MlpClassifier":
        w1 = rng.standard_normal((hidden, dim)) * np.sqrt(2.0 / dim)
        w2 = rng.standard_normal((classes, hidden)) * np.sqrt(2.0 / hidden)
        return cls(w1=w1, b1=np.zeros(hidden), w2=w2, b2=np.zeros(classes))

    @property
    def num_classes(self) -> int:
        return self.w2.shape[0]

    def forward(self, x: np.ndarray):
        """Probabilities plus the cache needed for backprop."""
        z1 = x @ self.w1.T + self.b1
        a = relu(z1)
        z2 = a @ self.w2.T + self.b2
        probs = softmax(z2)
        return probs, (x, z1, a, probs)

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        return self.forward(x)[0]

    def predict(self, x: np.ndarray) -> np.ndarray:
        return np.argmax(self.predict_proba(x), axis=1)


@dataclass
class MlpGrads:
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray

    @classmethod
    def zeros_like(cls, model: MlpClassifier) -> "MlpGrads":
        return cls(np.zeros_like(model.w1), np.zeros_like(model.b1),
                   np.zeros_like(model.w2), np.zeros_like(model.b2))

    def add_scaled(self, other: "MlpGrads", c: float) -> None:
        self.w1 += c * other.w1
        self.b1 += c * other.b1
        self.w2 += c * other.w2
        self.b2 += c * other.b2


def _backprop(model: MlpClassifier, cache, g_probs: np.ndarray) -> MlpGrads:
    """Parameter gradients given dLoss/dprobs for the cached forward pass."""
    x, z1, a, probs = cache
    # softmax: dL/dz_j = p_j (g_j - sum_k g_k p_k)
    dz2 = probs * (g_probs - np.sum(g_probs * probs, axis=1, keepdims=True))
    dw2 = dz2.T @ a
    db2 = dz2.sum(axis=0)
    da = dz2 @ model.w2
    dz1 = da * (z1 > 0)
    dw1 = dz1.T @ x
    db1 = dz1.sum(axis=0)
    return MlpGrads(w1=dw1, b1=db1, w2=dw2, b2=db2)


@dataclass
class ClassifierState:
    """Network plus the per-sample noise variables (n x classes each)."""

    model: MlpClassifier
    u: np.ndarray
    v: np.ndarray

    def noise_term(self, labels_onehot: np.ndarray) -> np.ndarray:
        return noise_term(self.u, self.v, labels_onehot)


def noise_term(u: np.ndarray, v: np.ndarray, y: np.ndarray) -> np.ndarray:
    """``s = u*u*y - v*v*(1-y)``: >= 0 at the label, <= 0 off-label."""
    return u * u * y - v * v * (1.0 - y)


def corrected_forward(model: MlpClassifier, u, v, x, y):
    """Return (probs f, corruption s, corrected score f + s)."""
    probs = model.predict_proba(x)
    s = noise_term(u, v, y)
    return probs, s, probs + s


def _floor_grads(w: np.ndarray, y: np.ndarray, eps: float):
    """Per-sample dLoss_i/dw for loss_i = -<y_i, log floor_normalize(w_i)>."""
    m = np.maximum(w, eps)
    t = np.sum(m, axis=1, keepdims=True)
    g_m = -y / m + 1.0 / t
    return g_m * (w > eps), m, t


@dataclass
class CeResult:
    loss: float
    grads: MlpGrads
    grad_u: np.ndarray
    grad_v: np.ndarray  # diagnostic; not used by training


def ce_loss_and_grads(model: MlpClassifier, u, v, x, y,
                      eps: float = DEFAULT_FLOOR) -> CeResult:
    """Cross entropy of the floor-normalized corrected score, batch mean.

    ``loss = mean_i -<y_i, log phi(f_i + s_i)>`` with all gradients (network
    parameters, u, and the diagnostic v gradient) of that mean.  The floor
    subgradient is 0 at or below eps.
    """
    b = x.shape[0]
    probs, cache = model.forward(x)
    s = noise_term(u, v, y)
    w = probs + s
    g_w, m, t = _floor_grads(w, y, eps)
    loss = float(np.mean(np.sum(-y * np.log(m / t), axis=1)))
    g_w = g_w / b
    grads = _backprop(model, cache, g_w)
    grad_u = g_w * (2.0 * u * y)
    grad_v = g_w * (-2.0 * v * (1.0 - y))
    return CeResult(loss=loss, grads=grads, grad_u=grad_u, grad_v=grad_v)


def mse_loss_and_grad_v(model: MlpClassifier, u, v, x, y,
                        one_hot_projection: bool = True):
    """Mean squared error of the corrected prediction, gradient w.r.t. v only.

    With ``one_hot_projection`` the network output is replaced by the
    indicator of its argmax (lowest index on ties), held constant in the
    gradient.  ``loss = mean_i ||f~_i + s_i - y_i||^2``; the exact gradient
    is ``-(4/B) (f~ + s - y) * v * (1 - y)``.
    """
    b = x.shape[0]
    probs = model.predict_proba(x)
    f = onehot(np.argmax(probs, axis=1), probs.shape[1]) if one_hot_projection else probs
    s = noise_term(u, v, y)
    d = f + s - y
    loss = float(np.mean(np.sum(d * d, axis=1)))
    grad_v = (-4.0 / b) * d * v * (1.0 - y)
    return loss, grad_v


def consistency_penalty(model: MlpClassifier, x: np.ndarray, x_aug: np.ndarray):
    """Mean KL(f(x) || f(x_aug)); gradients flow through both branches."""
    b = x.shape[0]
    p, cache_p = model.forward(x)
    q, cache_q = model.forward(x_aug)
    # softmax outputs can underflow to exact zero; clip before log / divide
    pc = np.clip(p, 1e-300, None)
    qc = np.clip(q, 1e-300, None)
    loss = float(np.mean(np.sum(p * (np.log(pc) - np.log(qc)), axis=1)))
    g_p = (np.log(pc) - np.log(qc) + 1.0) / b
    g_q = -(p / qc) / b
    grads = _backprop(model, cache_p, g_p)
    grads.add_scaled(_backprop(model, cache_q, g_q), 1.0)
    return loss, grads


def class_balance_penalty(model: MlpClassifier, x: np.ndarray, prior: np.ndarray):
    """``-sum_k prior_k log(mean_i f_k(x_i))``: pulls batch means toward the prior."""
    b = x.shape[0]
    p, cache = model.forward(x)
    mean_p = np.clip(p.mean(axis=0), 1e-300, None)
    loss = float(-np.sum(prior * np.log(mean_p)))
    g_p = np.tile(-(prior / mean_p) / b, (b, 1))
    return loss, _backprop(model, cache, g_p)


def sample_noise_l1(u: np.ndarray, v: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Per-sample l1 mass of the corruption term (disjoint supports add up)."""
    return np.sum(np.abs(noise_term(u, v, y)), axis=1)


def noise_detection_metrics(u, v, noisy_labels, num_classes: int, flipped):
    """Precision/recall of flagging ``||s_i||_1 > 0.5`` as a flipped label.

    By convention an empty prediction set gives precision 1 and an empty
    actual-flip set gives recall 1.
    """
    y = onehot(np.asarray(noisy_labels), num_classes)
    predicted = sample_noise_l1(u, v, y) > 0.5
    actual = np.asarray(flipped, dtype=bool)
    tp = int(np.count_nonzero(predicted & actual))
    fp = int(np.count_nonzero(predicted & ~actual))
    fn = int(np.count_nonzero(~predicted & actual))
    precision = tp / (tp + fp) if (tp + fp) > 0 else 1.0
    recall = tp / (tp + fn) if (tp + fn) > 0 else 1.0
    return precision, recall
