"""Micro-movement targets and three-class labels from mid-price series.

The target at time t is the relative difference between the mean of the next
k mids and the current mid; class boundaries at +/- alpha are inclusive for
the stationary class. Class codes follow the FI-2010 convention:
1 = up, 2 = stationary, 3 = down.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .errors import HorizonOutOfRange
from .ingest import SnapshotSeries

DEFAULT_ALPHA = 0.002
DEFAULT_HORIZON = 50


class Movement(IntEnum):
    UP = 1
    STATIONARY = 2
    DOWN = 3


@dataclass
class LabelSeries:
    """Per-time micro-movements and classes; defined for t < len(mids) - k."""

    k: int
    alpha: float
    l: np.ndarray    # real micro-movement
    cls: np.ndarray  # int codes from Movement

    def __len__(self):
        return len(self.l)


def micro_movement(mids: np.ndarray, t: int, k: int) -> float:
    """(mean of the next k mids - p_t) / p_t."""
    if k < 1:
        raise HorizonOutOfRange("horizon must be >= 1")
    if t < 0 or t + k >= len(mids):
        raise HorizonOutOfRange(f"t={t}, k={k} needs {t + k + 1} mids, have {len(mids)}")
    forward_mean = mids[t + 1 : t + k + 1].mean()
    return float((forward_mean - mids[t]) / mids[t])


def classify(l: float, alpha: float = DEFAULT_ALPHA) -> Movement:
    """up above +alpha, down below -alpha, stationary inclusively between."""
    if l > alpha:
        return Movement.UP
    if l < -alpha:
        return Movement.DOWN
    return Movement.STATIONARY


def make_labels(mids: np.ndarray, k: int = DEFAULT_HORIZON, alpha: float = DEFAULT_ALPHA) -> LabelSeries:
    """Vectorized labels for every t with k future mids available."""
    mids = np.asarray(mids, dtype=np.float64)
    if k < 1 or len(mids) <= k:
        raise HorizonOutOfRange(f"series of {len(mids)} mids cannot support horizon {k}")
    windows = np.lib.stride_tricks.sliding_window_view(mids[1:], k)
    l = (windows.mean(axis=1) - mids[:-k]) / mids[:-k]
    cls = np.full(l.shape, Movement.STATIONARY, dtype=np.int8)
    cls[l > alpha] = Movement.UP
    cls[l < -alpha] = Movement.DOWN
    return LabelSeries(k=k, alpha=alpha, l=l, cls=cls)


def labels_for_series(
    series: SnapshotSeries, k: int = DEFAULT_HORIZON, alpha: float = DEFAULT_ALPHA
) -> LabelSeries:
    return make_labels(series.mids(), k=k, alpha=alpha)


def compare_with_provided(
    series: SnapshotSeries, k: int = DEFAULT_HORIZON, alpha: float = DEFAULT_ALPHA
):
    """Agreement rate between computed labels and the dataset's own column
    for horizon k. Discrepancies are returned, never repaired."""
    if not series.provided_labels or k not in series.provided_labels:
        raise HorizonOutOfRange(f"series carries no provided labels for horizon {k}")
    ours = make_labels(series.mids(), k=k, alpha=alpha).cls
    theirs = series.provided_labels[k][: len(ours)]
    mismatches = np.nonzero(ours != theirs)[0]
    rate = 1.0 - len(mismatches) / len(ours)
    return rate, mismatches
