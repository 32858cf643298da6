"""Gaussian naive Bayes: class priors times per-feature Gaussian likelihoods."""

from __future__ import annotations

import numpy as np

from .base import TrainedModel

# Variance floor: 1e-9 of the largest per-feature variance, absolute 1e-9
# when every feature is constant.  Keeps densities finite.
_VAR_SMOOTHING = 1e-9


class GaussianNbModel(TrainedModel):
    kind = "gaussian_nb"

    def __init__(self, spec, input_dim, priors, means, variances, classes):
        super().__init__(spec, input_dim)
        self.priors = priors  # (n_classes,)
        self.means = means  # (n_classes, d)
        self.variances = variances  # (n_classes, d)
        self.classes = classes  # subset of (0, 1), training-set order

    def posterior(self, x: np.ndarray) -> np.ndarray:
        """P(class | x) over (non-defect, defect); a class absent from training gets 0."""
        log_joint = (
            np.log(self.priors)
            - 0.5 * np.sum(np.log(2.0 * np.pi * self.variances), axis=1)
            - np.sum((x[None, :] - self.means) ** 2 / (2.0 * self.variances), axis=1)
        )
        log_joint -= np.max(log_joint)
        probs = np.exp(log_joint)
        probs /= probs.sum()
        full = np.zeros(2)
        full[self.classes] = probs
        return full

    def _score(self, x: np.ndarray) -> np.ndarray:
        return np.array([self.posterior(row)[1] for row in x])


def gaussian_nb_posterior(model: GaussianNbModel, x) -> np.ndarray:
    """Class-probability vector for one sample; components sum to 1."""
    x = np.asarray(x, dtype=np.float64)
    return model.posterior(x)


def fit_gaussian_nb(spec, features: np.ndarray, labels: np.ndarray) -> GaussianNbModel:
    classes = np.unique(labels.astype(np.int64))
    priors = []
    means = []
    variances = []
    for cls in classes:
        rows = features[labels == cls]
        priors.append(rows.shape[0] / features.shape[0])
        means.append(rows.mean(axis=0))
        variances.append(rows.var(axis=0))
    variances = np.asarray(variances)
    max_var = float(variances.max()) if variances.size else 0.0
    variances = variances + (_VAR_SMOOTHING * max_var if max_var > 0 else _VAR_SMOOTHING)
    return GaussianNbModel(
        spec,
        input_dim=features.shape[1],
        priors=np.asarray(priors),
        means=np.asarray(means),
        variances=variances,
        classes=classes,
    )
