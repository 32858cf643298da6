"""Soft-margin SVMs: a primal subgradient solver for the linear kernel and
dual coordinate ascent for the RBF kernel.

Labels are mapped to {-1, +1} internally; scores are signed margins and
the decision point is 0.
"""

from __future__ import annotations

import numpy as np

from ..errors import ValidationError
from .base import Standardizer, TrainedModel, require_both_classes
from .kernels import median_pairwise_distance, rbf_gram


def linear_svm_train(
    features: np.ndarray,
    labels: np.ndarray,
    reg_c: float = 1.0,
    epochs: int = 200,
    seed: int = 0,
) -> tuple[np.ndarray, float]:
    """Subgradient descent on the hinge objective with a 1/(lambda t) step schedule.

    lambda = 1 / (reg_c * n), so large reg_c drives the solution toward
    zero training hinge loss on separable data.  The bias rides along as
    an augmented constant feature, so it is (weakly) regularized and
    recovers quickly from the large early steps.  The returned (w, b)
    averages the iterates over the second half of the schedule, which
    removes the jitter of the raw final step.
    """
    if reg_c <= 0 or epochs < 1:
        raise ValidationError(f"reg_c must be > 0 and epochs >= 1, got {reg_c}, {epochs}")
    y = np.where(labels == 1, 1.0, -1.0)
    if np.unique(y).size < 2:
        raise ValidationError("degenerate training set: linear SVM needs both classes")
    n, d = features.shape
    aug = np.hstack([features, np.ones((n, 1))])
    lam = 1.0 / (reg_c * n)
    rng = np.random.default_rng(seed)
    w = np.zeros(d + 1)
    w_avg = np.zeros(d + 1)
    n_avg = 0
    total_steps = epochs * n
    t = 0
    for _ in range(epochs):
        for i in rng.permutation(n):
            t += 1
            eta = 1.0 / (lam * t)
            margin = y[i] * (aug[i] @ w)
            w *= 1.0 - eta * lam
            if margin < 1.0:
                w += eta * y[i] * aug[i]
            if 2 * t > total_steps:
                w_avg += w
                n_avg += 1
    w_avg /= n_avg
    return w_avg[:d], float(w_avg[d])


class LinearSvmModel(TrainedModel):
    kind = "linear_svm"
    decision_threshold = 0.0

    def __init__(self, spec, scaler: Standardizer, w: np.ndarray, b: float):
        super().__init__(spec, input_dim=w.shape[0])
        self.scaler = scaler
        self.w = w
        self.b = b

    def _score(self, x: np.ndarray) -> np.ndarray:
        return self.scaler.transform(x) @ self.w + self.b


def fit_linear_svm(spec, features: np.ndarray, labels: np.ndarray) -> LinearSvmModel:
    require_both_classes(labels, "linear_svm")
    scaler = Standardizer.fit(features)
    w, b = linear_svm_train(
        scaler.transform(features),
        labels,
        reg_c=float(spec.params["reg_c"]),
        epochs=int(spec.params["epochs"]),
        seed=spec.seed,
    )
    return LinearSvmModel(spec, scaler, w, b)


def rbf_svm_train(
    features: np.ndarray,
    labels: np.ndarray,
    sigma: float,
    reg_c: float = 1.0,
    epochs: int = 50,
    seed: int = 0,
    tol: float = 1e-8,
) -> np.ndarray:
    """Dual coordinate ascent for the kernel SVM, bias folded in as K + 1.

    Returns the box-constrained dual coefficients alpha (0 <= alpha <= C).
    """
    y = np.where(labels == 1, 1.0, -1.0)
    n = features.shape[0]
    k = rbf_gram(features, features, sigma) + 1.0  # +1 absorbs the bias term
    alpha = np.zeros(n)
    f = np.zeros(n)  # f_i = sum_j alpha_j y_j K_ij
    rng = np.random.default_rng(seed)
    diag = np.diag(k).copy()
    for _ in range(epochs):
        max_delta = 0.0
        for i in rng.permutation(n):
            grad = 1.0 - y[i] * f[i]
            new_alpha = min(max(alpha[i] + grad / diag[i], 0.0), reg_c)
            delta = new_alpha - alpha[i]
            if delta != 0.0:
                alpha[i] = new_alpha
                f += delta * y[i] * k[:, i]
                max_delta = max(max_delta, abs(delta))
        if max_delta < tol:
            break
    return alpha


class RbfSvmModel(TrainedModel):
    kind = "rbf_svm"
    decision_threshold = 0.0

    def __init__(self, spec, scaler, train_features, dual_signed, sigma):
        super().__init__(spec, input_dim=train_features.shape[1])
        self.scaler = scaler
        self.train_features = train_features
        self.dual_signed = dual_signed  # alpha_j * y_j
        self.sigma = sigma

    def _score(self, x: np.ndarray) -> np.ndarray:
        k_star = rbf_gram(self.train_features, self.scaler.transform(x), self.sigma) + 1.0
        return k_star.T @ self.dual_signed


def fit_rbf_svm(spec, features: np.ndarray, labels: np.ndarray) -> RbfSvmModel:
    require_both_classes(labels, "rbf_svm")
    scaler = Standardizer.fit(features)
    xs = scaler.transform(features)
    sigma = spec.params["sigma"]
    if sigma is None:
        sigma = median_pairwise_distance(xs, seed=spec.seed)
    sigma = float(sigma)
    if sigma <= 0:
        raise ValidationError(f"sigma must be positive, got {sigma}")
    alpha = rbf_svm_train(
        xs,
        labels,
        sigma=sigma,
        reg_c=float(spec.params["reg_c"]),
        epochs=int(spec.params["epochs"]),
        seed=spec.seed,
    )
    y = np.where(labels == 1, 1.0, -1.0)
    return RbfSvmModel(spec, scaler, xs, alpha * y, sigma)
