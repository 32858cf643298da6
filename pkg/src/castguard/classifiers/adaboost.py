"""AdaBoost over depth-1 threshold stumps on single features.

Each round picks the stump with the lowest weighted error, weights it by
alpha = 0.5 ln((1-eps)/eps), multiplies misclassified sample weights by
exp(alpha) and correct ones by exp(-alpha), and renormalizes.  Training
stops early when no stump beats 0.5 or a stump is essentially perfect.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import TrainingError, ValidationError
from .base import TrainedModel, require_both_classes

# eps below this is treated as a perfect stump: alpha caps at ln(1e12)/2
_EPS_FLOOR = 1e-12


@dataclass(frozen=True)
class Stump:
    """h(x) = polarity if x[feature] >= threshold else -polarity."""

    feature: int
    threshold: float
    polarity: int  # +1 or -1

    def predict(self, features: np.ndarray) -> np.ndarray:
        above = features[:, self.feature] >= self.threshold
        return np.where(above, self.polarity, -self.polarity).astype(np.float64)


class StumpPool:
    """Candidate thresholds per feature: midpoints between distinct sorted values.

    Stored as sort orders so each round's weighted-error scan is a prefix
    sum instead of a stump-by-stump loop; both polarities of every
    candidate are in the pool.
    """

    def __init__(self, features: np.ndarray):
        self.features = np.asarray(features, dtype=np.float64)
        self.orders = [
            np.argsort(self.features[:, f], kind="stable") for f in range(self.features.shape[1])
        ]

    def __len__(self) -> int:
        total = 0
        for f, order in enumerate(self.orders):
            sv = self.features[order, f]
            total += 2 * int(np.sum(sv[:-1] < sv[1:]))
        return total


def adaboost_round(
    weights: np.ndarray, pool: StumpPool, signed_labels: np.ndarray
) -> tuple[Stump, float, np.ndarray]:
    """One boosting round: best stump, its alpha, and the reweighted samples.

    Raises TrainingError when the best achievable weighted error is >= 0.5
    (the caller stops with the ensemble built so far).
    """
    w = np.asarray(weights, dtype=np.float64)
    if abs(float(w.sum()) - 1.0) > 1e-9 or (w <= 0).any():
        raise ValidationError("sample weights must be positive and sum to 1")

    best = None  # (error, feature, threshold, polarity)
    for f, order in enumerate(pool.orders):
        sv = pool.features[order, f]
        sw = w[order]
        sy = signed_labels[order]
        # error of the polarity=+1 stump with threshold after position i:
        # positives below the threshold plus negatives at or above it
        pos_w = np.where(sy > 0, sw, 0.0)
        neg_w = np.where(sy < 0, sw, 0.0)
        cum_pos = np.cumsum(pos_w)
        total_neg = float(neg_w.sum())
        cum_neg = np.cumsum(neg_w)
        err_plus = cum_pos[:-1] + (total_neg - cum_neg[:-1])
        valid = sv[:-1] < sv[1:]
        if not valid.any():
            continue
        for polarity, err in ((1, err_plus), (-1, 1.0 - err_plus)):
            masked = np.where(valid, err, np.inf)
            idx = int(np.argmin(masked))
            if best is None or masked[idx] < best[0] - 1e-15:
                best = (float(masked[idx]), f, float(0.5 * (sv[idx] + sv[idx + 1])), polarity)
    if best is None:
        raise TrainingError("no splittable feature: all feature columns are constant")
    error, feature, threshold, polarity = best
    if error >= 0.5:
        raise TrainingError(f"best stump error {error:.4f} >= 0.5, boosting cannot continue")

    eps = min(max(error, _EPS_FLOOR), 1.0 - _EPS_FLOOR)
    alpha = 0.5 * np.log((1.0 - eps) / eps)
    stump = Stump(feature=feature, threshold=threshold, polarity=polarity)
    agreement = stump.predict(pool.features) * signed_labels  # +1 correct, -1 wrong
    new_weights = w * np.exp(-alpha * agreement)
    new_weights /= new_weights.sum()
    return stump, float(alpha), new_weights


class AdaBoostModel(TrainedModel):
    kind = "adaboost"
    decision_threshold = 0.0

    def __init__(self, spec, input_dim: int, stumps: list[Stump], alphas: list[float]):
        super().__init__(spec, input_dim)
        self.stumps = stumps
        self.alphas = alphas

    def _score(self, x: np.ndarray) -> np.ndarray:
        """Signed weighted stump sum."""
        out = np.zeros(x.shape[0])
        for stump, alpha in zip(self.stumps, self.alphas):
            out += alpha * stump.predict(x)
        return out


def fit_adaboost(spec, features: np.ndarray, labels: np.ndarray) -> AdaBoostModel:
    require_both_classes(labels, "adaboost")
    n_rounds = int(spec.params["n_rounds"])
    if n_rounds < 1:
        raise ValidationError(f"n_rounds must be >= 1, got {n_rounds}")
    signed = np.where(labels == 1, 1.0, -1.0)
    pool = StumpPool(features)
    weights = np.full(features.shape[0], 1.0 / features.shape[0])
    stumps: list[Stump] = []
    alphas: list[float] = []
    for _ in range(n_rounds):
        try:
            stump, alpha, weights = adaboost_round(weights, pool, signed)
        except TrainingError:
            if stumps:
                break  # keep the ensemble built so far
            raise
        stumps.append(stump)
        alphas.append(alpha)
        if alpha >= 0.5 * np.log((1.0 - _EPS_FLOOR) / _EPS_FLOOR) - 1e-9:
            break  # essentially perfect stump, further rounds are no-ops
    return AdaBoostModel(spec, input_dim=features.shape[1], stumps=stumps, alphas=alphas)
