"""Gaussian-process classification via the Laplace approximation.

Zero prior mean, RBF kernel, logistic likelihood.  The latent posterior
mode is found by Newton iterations; predictions use the probit-style
average of the logistic link over the latent Gaussian.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import TrainingError, ValidationError
from .base import Standardizer, TrainedModel, require_both_classes
from .kernels import rbf_gram

# n x n kernel matrices above this are not materialized
_MAX_TRAIN = 5000


@dataclass(frozen=True)
class GpConfig:
    length_scale: float = 1.0
    jitter: float = 1e-6
    max_newton_iters: int = 100
    newton_tol: float = 1e-6

    def __post_init__(self):
        if min(self.length_scale, self.jitter, self.max_newton_iters, self.newton_tol) <= 0:
            raise ValidationError(f"all GpConfig fields must be positive: {self}")


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass(frozen=True)
class GpPosterior:
    """State needed for prediction after the Newton solve."""

    train_features: np.ndarray  # standardized
    resid: np.ndarray  # y - sigmoid(f_hat), the representer weights
    sqrt_w: np.ndarray
    chol_b: np.ndarray  # cholesky of I + W^1/2 K W^1/2
    config: GpConfig
    n_iters: int


def gp_laplace_fit(features: np.ndarray, labels: np.ndarray, config: GpConfig) -> GpPosterior:
    """Newton solve for the latent posterior mode on {0,1} labels.

    Raises TrainingError carrying the last gradient norm if the mode is
    not found within max_newton_iters.
    """
    n = features.shape[0]
    if n > _MAX_TRAIN:
        raise ValidationError(f"GP training set of {n} rows exceeds the {_MAX_TRAIN}-row guard")
    y = labels.astype(np.float64)
    k = rbf_gram(features, features, config.length_scale)
    k[np.diag_indices_from(k)] += config.jitter

    f = np.zeros(n)
    grad_norm = np.inf
    for iteration in range(config.max_newton_iters):
        pi = _sigmoid(f)
        w = pi * (1.0 - pi)
        sqrt_w = np.sqrt(w)
        b = np.eye(n) + sqrt_w[:, None] * k * sqrt_w[None, :]
        chol = np.linalg.cholesky(b)
        rhs = w * f + (y - pi)
        # a = rhs - W^1/2 B^-1 W^1/2 K rhs, via the cholesky factor
        inner = sqrt_w * (k @ rhs)
        z = np.linalg.solve(chol, inner)
        z = np.linalg.solve(chol.T, z)
        a = rhs - sqrt_w * z
        f_new = k @ a
        step = float(np.max(np.abs(f_new - f)))
        f = f_new
        grad_norm = float(np.max(np.abs((y - _sigmoid(f)) - a)))
        if step < config.newton_tol or grad_norm < config.newton_tol:
            pi = _sigmoid(f)
            w = pi * (1.0 - pi)
            sqrt_w = np.sqrt(w)
            b = np.eye(n) + sqrt_w[:, None] * k * sqrt_w[None, :]
            return GpPosterior(
                train_features=features,
                resid=y - pi,
                sqrt_w=sqrt_w,
                chol_b=np.linalg.cholesky(b),
                config=config,
                n_iters=iteration + 1,
            )
    raise TrainingError(
        f"GP Newton iteration did not converge in {config.max_newton_iters} steps "
        f"(last gradient norm {grad_norm:.3e})"
    )


def gp_predict_proba(post: GpPosterior, features: np.ndarray) -> np.ndarray:
    """P(defect) for each row, strictly inside (0, 1)."""
    k_star = rbf_gram(post.train_features, features, post.config.length_scale)
    mean = k_star.T @ post.resid
    v = np.linalg.solve(post.chol_b, post.sqrt_w[:, None] * k_star)
    # prior self-covariance is 1 + jitter for the RBF kernel
    var = np.maximum(1.0 + post.config.jitter - np.sum(v**2, axis=0), 1e-12)
    # logistic-probit averaging: E[sigmoid(f)] ~ sigmoid(mean / sqrt(1 + pi var / 8))
    kappa = 1.0 / np.sqrt(1.0 + np.pi * var / 8.0)
    return _sigmoid(kappa * mean)


class GpModel(TrainedModel):
    kind = "gaussian_process"

    def __init__(self, spec, scaler: Standardizer, posterior: GpPosterior):
        super().__init__(spec, input_dim=posterior.train_features.shape[1])
        self.scaler = scaler
        self.posterior = posterior

    def _score(self, x: np.ndarray) -> np.ndarray:
        return gp_predict_proba(self.posterior, self.scaler.transform(x))


def fit_gaussian_process(spec, features: np.ndarray, labels: np.ndarray) -> GpModel:
    require_both_classes(labels, "gaussian_process")
    config = GpConfig(
        length_scale=float(spec.params["length_scale"]),
        jitter=float(spec.params["jitter"]),
        max_newton_iters=int(spec.params["max_newton_iters"]),
        newton_tol=float(spec.params["newton_tol"]),
    )
    scaler = Standardizer.fit(features)
    posterior = gp_laplace_fit(scaler.transform(features), labels, config)
    return GpModel(spec, scaler, posterior)
