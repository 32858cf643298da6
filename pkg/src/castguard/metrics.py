"""Binary-classification metrics and multi-run aggregation.

Defect (label 1) is the positive class: sensitivity is the true-positive
rate on defects, specificity the true-negative rate on non-defects.
Undefined ratios come back as NaN, never silently as 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class BinaryConfusion:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @classmethod
    def from_predictions(cls, predictions, truths) -> "BinaryConfusion":
        preds, truth = _check_pair(predictions, truths)
        tp = int(np.sum((preds == 1) & (truth == 1)))
        fp = int(np.sum((preds == 1) & (truth == 0)))
        tn = int(np.sum((preds == 0) & (truth == 0)))
        fn = int(np.sum((preds == 0) & (truth == 1)))
        return cls(tp=tp, fp=fp, tn=tn, fn=fn)


def _check_pair(predictions, truths) -> tuple[np.ndarray, np.ndarray]:
    preds = np.asarray(predictions)
    truth = np.asarray(truths)
    if preds.shape != truth.shape or preds.ndim != 1:
        raise ValidationError(
            f"predictions and truths must be equal-length vectors, got {preds.shape} vs {truth.shape}"
        )
    if preds.size == 0:
        raise ValidationError("cannot compute metrics on empty inputs")
    return preds.astype(np.int64), truth.astype(np.int64)


def binary_metrics(predictions, truths) -> tuple[float, float, float]:
    """(accuracy, sensitivity, specificity); ratios with a zero denominator are NaN."""
    c = BinaryConfusion.from_predictions(predictions, truths)
    accuracy = (c.tp + c.tn) / c.total
    sensitivity = c.tp / (c.tp + c.fn) if (c.tp + c.fn) > 0 else float("nan")
    specificity = c.tn / (c.tn + c.fp) if (c.tn + c.fp) > 0 else float("nan")
    return accuracy, sensitivity, specificity


def auc(scores, truths) -> float:
    """Area under the ROC curve via the exact rank statistic.

    Equals P(score of a random positive > score of a random negative)
    plus half the tie probability; ties get midranks so the result is
    exact, with no threshold grid involved.
    """
    s = np.asarray(scores, dtype=np.float64)
    t = np.asarray(truths)
    if s.shape != t.shape or s.ndim != 1:
        raise ValidationError(f"scores and truths must be equal-length vectors, got {s.shape} vs {t.shape}")
    n_pos = int(np.sum(t == 1))
    n_neg = int(np.sum(t == 0))
    if n_pos == 0 or n_neg == 0:
        raise ValidationError("AUC undefined: need at least one positive and one negative truth")

    order = np.argsort(s, kind="stable")
    ranks = np.empty(s.size, dtype=np.float64)
    sorted_scores = s[order]
    i = 0
    while i < s.size:
        j = i
        while j + 1 < s.size and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        # midrank for the tie group spanning positions i..j (1-based ranks)
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    rank_sum_pos = float(np.sum(ranks[t == 1]))
    u = rank_sum_pos - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


@dataclass(frozen=True)
class RunDistribution:
    """Per-run values of one metric plus a box-plot-ready summary."""

    name: str
    values: tuple
    mean: float
    std: float
    min: float
    q1: float
    median: float
    q3: float
    max: float

    def summary(self) -> dict:
        return {
            "mean": self.mean,
            "std": self.std,
            "min": self.min,
            "q1": self.q1,
            "median": self.median,
            "q3": self.q3,
            "max": self.max,
        }


def aggregate_runs(name: str, values) -> RunDistribution:
    """Summarize per-run metric values; std uses the n-1 denominator, quartiles interpolate linearly."""
    vals = np.asarray(values, dtype=np.float64)
    if vals.ndim != 1 or vals.size == 0:
        raise ValidationError(f"need a nonempty value list, got shape {vals.shape}")
    std = float(np.std(vals, ddof=1)) if vals.size > 1 else 0.0
    q1, median, q3 = (float(q) for q in np.percentile(vals, [25, 50, 75], method="linear"))
    return RunDistribution(
        name=name,
        values=tuple(float(v) for v in vals),
        mean=float(np.mean(vals)),
        std=std,
        min=float(np.min(vals)),
        q1=q1,
        median=median,
        q3=q3,
        max=float(np.max(vals)),
    )
