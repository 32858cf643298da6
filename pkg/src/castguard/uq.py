"""Deep-ensemble uncertainty quantification.

An ensemble of independently trained MLPs predicts through the mean of
the member class distributions; the binary Shannon entropy (base 2, so
the maximum is exactly 1) of that mean measures disagreement.  A
prediction is *certain* when its entropy falls strictly below the
threshold, and the four-way split of (correct/incorrect) x
(certain/uncertain) gives the UQ confusion matrix:

    TC  correct   and certain      TU  incorrect and uncertain
    FU  correct   and uncertain    FC  incorrect and certain

uncertainty accuracy = (TU + TC) / (TU + TC + FU + FC), 1 best, 0 worst.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .classifiers.base import Standardizer, check_features
from .dataio import FeatureDataset
from .errors import TrainingError, ValidationError
from .mlp import MlpArchitecture, TrainConfig, forward_batch, mlp_init, mlp_train

DEFAULT_THRESHOLD = 0.4
DEFAULT_THRESHOLD_GRID = tuple(round(0.1 * i, 1) for i in range(1, 10))


@dataclass(frozen=True)
class EnsembleConfig:
    """Member count and the architecture-sampling ranges.

    Member i draws its depth from depth_choices and its hidden widths
    from width_ranges (inclusive bounds, one range per hidden layer
    position) using seed member_seed_base + i.
    """

    n_members: int = 10
    depth_choices: tuple = (2, 3)
    width_ranges: tuple = ((256, 512), (128, 256), (64, 128))
    member_seed_base: int = 0
    train_config: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self):
        if self.n_members < 2:
            raise ValidationError(f"need at least 2 ensemble members, got {self.n_members}")
        if not self.depth_choices or any(d < 1 for d in self.depth_choices):
            raise ValidationError(f"invalid depth_choices {self.depth_choices}")
        if max(self.depth_choices) > len(self.width_ranges):
            raise ValidationError(
                f"depth {max(self.depth_choices)} needs {max(self.depth_choices)} width ranges, "
                f"got {len(self.width_ranges)}"
            )
        for lo, hi in self.width_ranges:
            if not 0 < lo < hi:
                raise ValidationError(f"width range ({lo}, {hi}) must satisfy 0 < low < high")


@dataclass(frozen=True)
class EnsembleModel:
    members: tuple  # MlpModel per member, all trained on the full training set
    scaler: Standardizer
    config: EnsembleConfig

    @property
    def input_dim(self) -> int:
        return self.members[0].input_dim

    def member_probs(self, features) -> np.ndarray:
        """(n_members, n_samples, 2) member class probabilities."""
        x = self.scaler.transform(check_features(features, self.input_dim))
        return np.stack([forward_batch(m, x) for m in self.members])


@dataclass(frozen=True)
class UqAssessment:
    """Per-sample ensemble outputs against ground truth at one threshold."""

    mean_probs: np.ndarray  # (n, 2)
    entropy: np.ndarray  # (n,), in [0, 1]
    predicted: np.ndarray  # (n,), argmax of the mean, tie goes to defect
    true_labels: np.ndarray  # (n,)
    certain: np.ndarray  # (n,), entropy strictly below the threshold
    correct: np.ndarray  # (n,)
    threshold: float

    @property
    def n_samples(self) -> int:
        return self.entropy.shape[0]


@dataclass(frozen=True)
class UqConfusion:
    tc: int
    tu: int
    fu: int
    fc: int
    threshold: float

    @property
    def total(self) -> int:
        return self.tc + self.tu + self.fu + self.fc


def sample_architecture(config: EnsembleConfig, member_index: int, input_dim: int):
    """Deterministic architecture + seeds for one member."""
    rng = np.random.default_rng(config.member_seed_base + member_index)
    depth = int(config.depth_choices[rng.integers(len(config.depth_choices))])
    widths = [int(rng.integers(lo, hi + 1)) for lo, hi in config.width_ranges[:depth]]
    init_seed = int(rng.integers(2**63))
    shuffle_seed = int(rng.integers(2**63))
    arch = MlpArchitecture(layer_sizes=(input_dim, *widths, 2), seed=init_seed)
    return arch, shuffle_seed


def ensemble_train(config: EnsembleConfig, train: FeatureDataset) -> EnsembleModel:
    """Train all members independently on the entire training set."""
    labels = train.labels.astype(np.int64)
    if np.unique(labels).size < 2:
        raise TrainingError("degenerate training set: ensemble needs both classes")
    scaler = Standardizer.fit(train.features)
    xs = scaler.transform(train.features)
    members = []
    for i in range(config.n_members):
        arch, shuffle_seed = sample_architecture(config, i, train.feature_dim)
        member_config = TrainConfig(
            epochs=config.train_config.epochs,
            batch_size=config.train_config.batch_size,
            learning_rate=config.train_config.learning_rate,
            optimizer=config.train_config.optimizer,
            shuffle_seed=shuffle_seed,
        )
        try:
            members.append(mlp_train(mlp_init(arch), xs, labels, member_config))
        except TrainingError as exc:
            raise TrainingError(f"ensemble member {i} failed: {exc}") from exc
    return EnsembleModel(members=tuple(members), scaler=scaler, config=config)


def _anchored_mean(member_probs: np.ndarray) -> np.ndarray:
    """Mean over members, anchored on member 0.

    Identical member outputs average to themselves bit-for-bit (their
    deltas are exactly zero), which a plain running sum does not
    guarantee; for differing members this is the ordinary mean.
    """
    return member_probs[0] + (member_probs - member_probs[0]).mean(axis=0)


def ensemble_mean(model: EnsembleModel, x) -> np.ndarray:
    """Arithmetic mean of the member class distributions for one sample."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValidationError(f"expected a single feature vector, got shape {x.shape}")
    return _anchored_mean(model.member_probs(x[None, :]))[0]


def predictive_entropy(p) -> float:
    """Base-2 Shannon entropy of a class distribution; 0*log(0) counts as 0.

    For two classes the value lives in [0, 1]: 0 means every member
    agrees, 1 means a 50/50 split.
    """
    probs = np.asarray(p, dtype=np.float64)
    if probs.ndim != 1 or probs.size < 2:
        raise ValidationError(f"need a probability vector, got shape {probs.shape}")
    if (probs < -1e-6).any() or abs(float(probs.sum()) - 1.0) > 1e-6:
        raise ValidationError(f"not a probability vector (sum {probs.sum():.8f}): {probs}")
    clipped = np.clip(probs, 0.0, 1.0)
    nonzero = clipped[clipped > 0.0]
    return float(-np.sum(nonzero * np.log2(nonzero)))


def _entropy_rows(mean_probs: np.ndarray) -> np.ndarray:
    clipped = np.clip(mean_probs, 0.0, 1.0)
    terms = np.where(clipped > 0.0, clipped * np.log2(np.where(clipped > 0.0, clipped, 1.0)), 0.0)
    return -np.sum(terms, axis=1)


def assess(model: EnsembleModel, test: FeatureDataset, threshold: float = DEFAULT_THRESHOLD) -> UqAssessment:
    """Mean, entropy, argmax prediction, and certainty for every test sample."""
    if not 0.0 < threshold < 1.0:
        raise ValidationError(f"threshold must be in (0, 1), got {threshold}")
    if test.n_samples == 0:
        raise ValidationError("cannot assess an empty test set")
    mean_probs = _anchored_mean(model.member_probs(test.features))
    entropy = _entropy_rows(mean_probs)
    # argmax with the tie decided toward defect, the safer error direction
    predicted = (mean_probs[:, 1] >= mean_probs[:, 0]).astype(np.uint8)
    true_labels = test.labels.astype(np.uint8)
    certain = entropy < threshold
    correct = predicted == true_labels
    return UqAssessment(
        mean_probs=mean_probs,
        entropy=entropy,
        predicted=predicted,
        true_labels=true_labels,
        certain=certain,
        correct=correct,
        threshold=threshold,
    )


def uq_confusion(assessment: UqAssessment, threshold: float | None = None) -> UqConfusion:
    """Counts of the four correctness x certainty combinations.

    Passing a threshold re-derives certainty from the stored entropies;
    otherwise the assessment's own threshold is used.
    """
    if assessment.n_samples == 0:
        raise ValidationError("cannot build a UQ confusion from an empty assessment")
    if threshold is None:
        threshold = assessment.threshold
        certain = assessment.certain
    else:
        certain = assessment.entropy < threshold
    correct = assessment.correct
    return UqConfusion(
        tc=int(np.sum(correct & certain)),
        tu=int(np.sum(~correct & ~certain)),
        fu=int(np.sum(correct & ~certain)),
        fc=int(np.sum(~correct & certain)),
        threshold=float(threshold),
    )


def uncertainty_accuracy(confusion: UqConfusion) -> float:
    """(TU + TC) / total: how often confidence state matches correctness."""
    if confusion.total == 0:
        raise ValidationError("uncertainty accuracy undefined for zero samples")
    return (confusion.tu + confusion.tc) / confusion.total


def threshold_sweep(assessment: UqAssessment, thresholds=DEFAULT_THRESHOLD_GRID) -> list[tuple[float, UqConfusion, float]]:
    """(threshold, confusion, uncertainty accuracy) per grid point.

    The certain count TC + FC is non-decreasing along an ascending grid.
    """
    grid = [float(t) for t in thresholds]
    if not grid:
        raise ValidationError("threshold grid must be nonempty")
    if sorted(grid) != grid or grid[0] < 0.0 or grid[-1] > 1.0:
        raise ValidationError(f"thresholds must be sorted and within [0, 1]: {grid}")
    out = []
    for t in grid:
        confusion = uq_confusion(assessment, threshold=t)
        out.append((t, confusion, uncertainty_accuracy(confusion)))
    return out


def entropy_histogram(assessment: UqAssessment, n_bins: int = 20):
    """(bin_edges, counts_correct, counts_incorrect) over [0, 1].

    Bins partition [0, 1] evenly; entropy exactly 1 lands in the last bin.
    """
    if n_bins < 2:
        raise ValidationError(f"need at least 2 bins, got {n_bins}")
    edges = np.linspace(0.0, 1.0, n_bins + 1)
    correct_counts, _ = np.histogram(assessment.entropy[assessment.correct], bins=edges)
    incorrect_counts, _ = np.histogram(assessment.entropy[~assessment.correct], bins=edges)
    return edges, correct_counts, incorrect_counts


def write_assessment_csv(assessment: UqAssessment, path) -> None:
    """Per-sample export: index, P(defect), entropy, labels, certainty, correctness."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sample_index", "p_defect", "entropy", "predicted", "true", "certain", "correct"])
        for i in range(assessment.n_samples):
            writer.writerow(
                [
                    i,
                    repr(float(assessment.mean_probs[i, 1])),
                    repr(float(assessment.entropy[i])),
                    int(assessment.predicted[i]),
                    int(assessment.true_labels[i]),
                    int(assessment.certain[i]),
                    int(assessment.correct[i]),
                ]
            )
