"""Evaluation metrics and the reference training-loss function.

Precision/recall are computed per class (traversable / non-traversable) and
averaged; IoU is reported for the traversable class; RMSE is computed on the
raw (unbinarized) prediction against the binary ground truth.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np

from .errors import InvalidParameterError, ShapeMismatchError

__all__ = [
    "ConfusionCounts",
    "EvalReport",
    "confusion_counts",
    "report_from_counts",
    "evaluate",
    "evaluate_batch",
    "traversability_loss",
    "traversability_loss_grad",
]


@dataclass
class ConfusionCounts:
    """Pixel counts for the binary traversability confusion matrix."""

    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0
    squared_error_sum: float = 0.0
    pixels: int = 0

    def __iadd__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        self.tp += other.tp
        self.fp += other.fp
        self.fn += other.fn
        self.tn += other.tn
        self.squared_error_sum += other.squared_error_sum
        self.pixels += other.pixels
        return self


@dataclass
class EvalReport:
    precision_trav: float
    precision_nontrav: float
    precision_avg: float
    recall_trav: float
    recall_nontrav: float
    recall_avg: float
    iou: float
    rmse: float
    tp: int
    fp: int
    fn: int
    tn: int
    trav_absent: bool
    nontrav_absent: bool

    def to_dict(self) -> dict:
        return asdict(self)


def _rate(num: int, den: int, absent: bool) -> float:
    """A class absent in both pred and gt scores 1; an empty denominator
    with the class otherwise present scores 0."""
    if den == 0:
        return 1.0 if absent else 0.0
    return num / den


def confusion_counts(
    pred: np.ndarray, gt: np.ndarray, binarize_threshold: float = 0.5
) -> ConfusionCounts:
    """Binarize pred at the threshold (>=) and count the confusion matrix."""
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if pred.shape != gt.shape:
        raise ShapeMismatchError(f"pred shape {pred.shape} != gt shape {gt.shape}")
    if not np.isin(gt, (0.0, 1.0)).all():
        raise InvalidParameterError("ground truth must be binary (values in {0, 1})")
    p = pred >= binarize_threshold
    g = gt > 0
    return ConfusionCounts(
        tp=int(np.count_nonzero(p & g)),
        fp=int(np.count_nonzero(p & ~g)),
        fn=int(np.count_nonzero(~p & g)),
        tn=int(np.count_nonzero(~p & ~g)),
        squared_error_sum=float(np.sum((pred - gt) ** 2)),
        pixels=pred.size,
    )


def report_from_counts(c: ConfusionCounts) -> EvalReport:
    trav_absent = (c.tp + c.fp == 0) and (c.tp + c.fn == 0)
    nontrav_absent = (c.tn + c.fn == 0) and (c.tn + c.fp == 0)
    precision_trav = _rate(c.tp, c.tp + c.fp, trav_absent)
    recall_trav = _rate(c.tp, c.tp + c.fn, trav_absent)
    precision_nontrav = _rate(c.tn, c.tn + c.fn, nontrav_absent)
    recall_nontrav = _rate(c.tn, c.tn + c.fp, nontrav_absent)
    iou = _rate(c.tp, c.tp + c.fp + c.fn, trav_absent)
    rmse = float(np.sqrt(c.squared_error_sum / c.pixels)) if c.pixels else 0.0
    return EvalReport(
        precision_trav=precision_trav,
        precision_nontrav=precision_nontrav,
        precision_avg=(precision_trav + precision_nontrav) / 2,
        recall_trav=recall_trav,
        recall_nontrav=recall_nontrav,
        recall_avg=(recall_trav + recall_nontrav) / 2,
        iou=iou,
        rmse=rmse,
        tp=c.tp,
        fp=c.fp,
        fn=c.fn,
        tn=c.tn,
        trav_absent=trav_absent,
        nontrav_absent=nontrav_absent,
    )


def evaluate(
    pred: np.ndarray, gt: np.ndarray, binarize_threshold: float = 0.5
) -> EvalReport:
    """Evaluate one prediction raster against binary ground truth."""
    return report_from_counts(confusion_counts(pred, gt, binarize_threshold))


def evaluate_batch(
    pairs, binarize_threshold: float = 0.5
) -> EvalReport:
    """Micro-average: sum confusion counts over (pred, gt) pairs, then rate."""
    total = ConfusionCounts()
    n = 0
    for pred, gt in pairs:
        total += confusion_counts(pred, gt, binarize_threshold)
        n += 1
    if n == 0:
        raise InvalidParameterError("evaluate_batch needs at least one pair")
    return report_from_counts(total)


def traversability_loss(
    pred: np.ndarray, label: np.ndarray, zero_weight: float = 0.05
) -> float:
    """Mean of squared error on label>0 pixels and weighted L1 on label==0 pixels."""
    pred = np.asarray(pred, dtype=np.float64)
    label = np.asarray(label, dtype=np.float64)
    if pred.shape != label.shape:
        raise ShapeMismatchError(f"pred shape {pred.shape} != label shape {label.shape}")
    diff = pred - label
    nonzero = label > 0
    per_pixel = np.where(nonzero, diff**2, zero_weight * np.abs(diff))
    return float(per_pixel.mean())


def traversability_loss_grad(
    pred: np.ndarray, label: np.ndarray, zero_weight: float = 0.05
) -> np.ndarray:
    """Analytic gradient of traversability_loss with respect to each pred pixel."""
    pred = np.asarray(pred, dtype=np.float64)
    label = np.asarray(label, dtype=np.float64)
    if pred.shape != label.shape:
        raise ShapeMismatchError(f"pred shape {pred.shape} != label shape {label.shape}")
    diff = pred - label
    nonzero = label > 0
    grad = np.where(nonzero, 2.0 * diff, zero_weight * np.sign(diff))
    return grad / pred.size
