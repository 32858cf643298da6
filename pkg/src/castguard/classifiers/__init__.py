"""Eight classifier kinds behind one fit/predict/score contract.

Hyperparameter defaults reproduce the benchmark settings: KNN k=2, GP
length scale 1.0, 10 forest trees, 50 boosting rounds, and a (256, 128)
hidden stack for the standalone neural network.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..dataio import FeatureDataset
from ..errors import ValidationError
from ..mlp import MlpArchitecture, TrainConfig, forward_batch, mlp_init, mlp_train
from .adaboost import AdaBoostModel, Stump, StumpPool, adaboost_round, fit_adaboost
from .base import Standardizer, TrainedModel, check_features, require_both_classes
from .forest import RandomForestModel, fit_random_forest
from .gaussian_process import GpConfig, GpModel, fit_gaussian_process, gp_laplace_fit
from .kernels import median_pairwise_distance, rbf_kernel
from .knn import KnnModel, fit_knn, knn_distances
from .naive_bayes import GaussianNbModel, fit_gaussian_nb, gaussian_nb_posterior
from .svm import LinearSvmModel, RbfSvmModel, fit_linear_svm, fit_rbf_svm, linear_svm_train
from .tree import DecisionTree, gini_impurity

KINDS = (
    "knn",
    "gaussian_nb",
    "gaussian_process",
    "linear_svm",
    "rbf_svm",
    "random_forest",
    "adaboost",
    "mlp",
)

_DEFAULTS = {
    "knn": {"k": 2},
    "gaussian_nb": {},
    "gaussian_process": {
        "length_scale": 1.0,
        "jitter": 1e-6,
        "max_newton_iters": 100,
        "newton_tol": 1e-6,
    },
    "linear_svm": {"reg_c": 1.0, "epochs": 200},
    "rbf_svm": {"sigma": None, "reg_c": 1.0, "epochs": 50},
    "random_forest": {"n_trees": 10, "bootstrap": True, "max_features": "sqrt"},
    "adaboost": {"n_rounds": 50},
    "mlp": {
        "hidden_sizes": (256, 128),
        "epochs": 30,
        "batch_size": 32,
        "learning_rate": 1e-3,
        "optimizer": "adam",
    },
}


def default_params(kind: str) -> dict:
    if kind not in _DEFAULTS:
        raise ValidationError(f"unknown classifier kind {kind!r}, expected one of {KINDS}")
    return dict(_DEFAULTS[kind])


@dataclass(frozen=True)
class ClassifierSpec:
    """Classifier kind plus hyperparameters; unspecified ones take the defaults."""

    kind: str
    params: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        merged = default_params(self.kind)
        unknown = set(self.params) - set(merged)
        if unknown:
            raise ValidationError(f"unknown hyperparameters for {self.kind}: {sorted(unknown)}")
        merged.update(self.params)
        object.__setattr__(self, "params", merged)


class MlpClassifier(TrainedModel):
    """Standardizing wrapper that makes the MLP fit the classifier contract."""

    kind = "mlp"

    def __init__(self, spec, scaler: Standardizer, model):
        super().__init__(spec, input_dim=model.input_dim)
        self.scaler = scaler
        self.model = model

    def _score(self, x: np.ndarray) -> np.ndarray:
        return forward_batch(self.model, self.scaler.transform(x))[:, 1]


def fit_mlp_classifier(spec: ClassifierSpec, features: np.ndarray, labels: np.ndarray) -> MlpClassifier:
    require_both_classes(labels, "mlp")
    scaler = Standardizer.fit(features)
    arch = MlpArchitecture(
        layer_sizes=(features.shape[1], *spec.params["hidden_sizes"], 2),
        seed=spec.seed,
    )
    config = TrainConfig(
        epochs=int(spec.params["epochs"]),
        batch_size=int(spec.params["batch_size"]),
        learning_rate=float(spec.params["learning_rate"]),
        optimizer=spec.params["optimizer"],
        shuffle_seed=spec.seed,
    )
    model = mlp_train(mlp_init(arch), scaler.transform(features), labels, config)
    return MlpClassifier(spec, scaler, model)


_FITTERS = {
    "knn": fit_knn,
    "gaussian_nb": fit_gaussian_nb,
    "gaussian_process": fit_gaussian_process,
    "linear_svm": fit_linear_svm,
    "rbf_svm": fit_rbf_svm,
    "random_forest": fit_random_forest,
    "adaboost": fit_adaboost,
    "mlp": fit_mlp_classifier,
}


def fit(spec: ClassifierSpec, train: FeatureDataset) -> TrainedModel:
    """Train a classifier of spec.kind; deterministic given (spec.seed, train)."""
    if train.n_samples == 0:
        raise ValidationError("cannot fit on an empty dataset")
    features = check_features(train.features)
    return _FITTERS[spec.kind](spec, features, train.labels.astype(np.int64))


__all__ = [
    "KINDS",
    "ClassifierSpec",
    "TrainedModel",
    "Standardizer",
    "default_params",
    "fit",
    "knn_distances",
    "KnnModel",
    "gaussian_nb_posterior",
    "GaussianNbModel",
    "rbf_kernel",
    "median_pairwise_distance",
    "GpConfig",
    "GpModel",
    "gp_laplace_fit",
    "linear_svm_train",
    "LinearSvmModel",
    "RbfSvmModel",
    "gini_impurity",
    "DecisionTree",
    "RandomForestModel",
    "Stump",
    "StumpPool",
    "adaboost_round",
    "AdaBoostModel",
    "MlpClassifier",
]
