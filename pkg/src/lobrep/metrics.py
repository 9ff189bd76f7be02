"""Classification metrics: accuracy, macro precision/recall/F-score and the
3x3 confusion matrix. Macro averages weight every class equally; empty
ratios (0/0) count as zero."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimMismatch, EmptyInput

CLASS_CODES = (1, 2, 3)  # up, stationary, down
CLASS_NAMES = ("up", "stationary", "down")


@dataclass
class MetricBundle:
    accuracy: float   # percent
    precision: float  # macro, percent
    recall: float     # macro, percent
    fscore: float     # macro, percent
    confusion: np.ndarray  # counts, rows = true class, cols = predicted

    def as_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "fscore": self.fscore,
        }


def metrics(preds: np.ndarray, labels: np.ndarray) -> MetricBundle:
    """Scores for class-coded arrays (values from CLASS_CODES)."""
    preds = np.asarray(preds)
    labels = np.asarray(labels)
    if preds.shape != labels.shape:
        raise DimMismatch(f"preds {preds.shape} vs labels {labels.shape}")
    if preds.size == 0:
        raise EmptyInput("no predictions to score")
    n = len(CLASS_CODES)
    confusion = np.zeros((n, n), dtype=np.int64)
    for i, true_c in enumerate(CLASS_CODES):
        for j, pred_c in enumerate(CLASS_CODES):
            confusion[i, j] = np.sum((labels == true_c) & (preds == pred_c))
    total = confusion.sum()
    accuracy = confusion.trace() / total
    precisions, recalls, fscores = [], [], []
    for c in range(n):
        tp = confusion[c, c]
        col = confusion[:, c].sum()
        row = confusion[c, :].sum()
        p = tp / col if col else 0.0
        r = tp / row if row else 0.0
        f = 2 * p * r / (p + r) if p + r else 0.0
        precisions.append(p)
        recalls.append(r)
        fscores.append(f)
    return MetricBundle(
        accuracy=100.0 * float(accuracy),
        precision=100.0 * float(np.mean(precisions)),
        recall=100.0 * float(np.mean(recalls)),
        fscore=100.0 * float(np.mean(fscores)),
        confusion=confusion,
    )
