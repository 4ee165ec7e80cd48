"""Batch summaries of trajectories and terminal samples."""

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .exceptions import EmptyBatch, RaggedLogs, ShapeMismatch

__all__ = ["TraceSummary", "trace_summary", "moment_stats", "energy_distance"]


@dataclass(frozen=True, eq=False)
class TraceSummary:
    step: np.ndarray
    mean_ratio: np.ndarray
    max_ratio: np.ndarray
    fallback_frac: np.ndarray
    mean_moment: np.ndarray

    def rows(self):
        return zip(
            self.step.tolist(),
            self.mean_ratio.tolist(),
            self.max_ratio.tolist(),
            self.fallback_frac.tolist(),
            self.mean_moment.tolist(),
        )


def trace_summary(logs):
    """Per-step mean/max energy ratio, fallback fraction and mean state moment."""
    logs = list(logs)
    if not logs:
        raise EmptyBatch("no trajectory logs")
    if any(not np.array_equal(log.step, logs[0].step) for log in logs):
        raise RaggedLogs("logs cover different steps")
    ratios = np.stack([log.ratio for log in logs])
    return TraceSummary(
        step=logs[0].step.copy(),
        mean_ratio=ratios.mean(axis=0),
        max_ratio=ratios.max(axis=0),
        fallback_frac=np.stack([log.fallback_used for log in logs]).mean(axis=0),
        mean_moment=np.stack([log.moment for log in logs]).mean(axis=0),
    )


def _as_sample_set(samples, name):
    try:
        arr = np.asarray(samples, dtype=np.float64)
    except ValueError:
        raise ShapeMismatch(f"{name} holds samples of different shapes") from None
    if arr.size == 0 or arr.ndim == 0:
        raise EmptyBatch(f"{name} is empty")
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    return arr.reshape(arr.shape[0], -1)


def moment_stats(samples):
    """Componentwise mean and the dimension-normalized second moment.

    Returns ``(mean, m2)`` with ``m2 = mean_i ||x_i||^2 / d``.
    """
    X = _as_sample_set(samples, "samples")
    m2 = float(np.einsum("nd,nd->", X, X) / X.size)
    return X.mean(axis=0), m2


def energy_distance(a, b):
    """V-statistic energy distance ``2 E|A-B| - E|A-A'| - E|B-B'|``.

    Pairwise distances are summed in sorted order, so the result is exactly
    symmetric in its arguments and exactly 0 for identical sets.
    """
    A = _as_sample_set(a, "a")
    B = _as_sample_set(b, "b")
    if A.shape[1] != B.shape[1]:
        raise ShapeMismatch(f"dimension {A.shape[1]} != {B.shape[1]}")

    def mean_dist(U, V):
        # |u - v| == |v - u| bitwise, so sorting makes the sum order canonical
        return float(np.sort(cdist(U, V), axis=None).sum()) / (U.shape[0] * V.shape[0])

    cross = mean_dist(A, B)
    within = mean_dist(A, A) + mean_dist(B, B)
    return max(0.0, 2.0 * cross - within)
