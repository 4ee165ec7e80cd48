"""Latent tensors, percentiles and (robust) energies.

A latent is represented as a read-only float64 :class:`numpy.ndarray`.
:func:`make_latent` builds one from a flat data sequence plus a shape; every
other function accepts any array-like and validates it on entry.

Robust energy only counts elements whose *squared* value falls inside the
``[l, h]`` percentile band of the squared values of the whole (flattened)
latent, which keeps a handful of extreme elements from dominating the
estimate.
"""

import math
from dataclasses import dataclass

import numpy as np

from ._validation import check_latent
from .exceptions import EmptyInput, InvalidWindow, ShapeMismatch

__all__ = [
    "RobustWindow",
    "RobustEnergyResult",
    "DEFAULT_WINDOW",
    "FULL_WINDOW",
    "make_latent",
    "energy",
    "percentile",
    "robust_energy",
    "robust_energy_rows",
]


@dataclass(frozen=True)
class RobustWindow:
    """Percentile band ``[l, h]`` used by :func:`robust_energy`."""

    l: float = 45.0
    h: float = 55.0

    def __post_init__(self):
        l, h = float(self.l), float(self.h)
        if not (0.0 <= l < h <= 100.0):
            raise InvalidWindow(f"need 0 <= l < h <= 100, got l={self.l}, h={self.h}")
        object.__setattr__(self, "l", l)
        object.__setattr__(self, "h", h)


DEFAULT_WINDOW = RobustWindow()
FULL_WINDOW = RobustWindow(0.0, 100.0)


@dataclass(frozen=True)
class RobustEnergyResult:
    energy: float
    p_low: float
    p_high: float
    count: int
    # True when no element fell inside the band and the full energy was used.
    fell_back: bool = False


def make_latent(shape, data):
    """Build a validated, immutable latent from a shape and flat data.

    Raises
    ------
    ShapeMismatch
        If ``prod(shape) != len(data)`` or the shape is empty / non-positive.
    NonFiniteValue
        If any element is NaN or infinite.
    """
    shape = tuple(int(s) for s in shape)
    if not shape or any(s < 1 for s in shape):
        raise ShapeMismatch(f"shape must be non-empty with positive extents, got {shape}")
    flat = np.array(data, dtype=np.float64).ravel()
    if flat.size != math.prod(shape):
        raise ShapeMismatch(f"shape {shape} needs {math.prod(shape)} values, got {flat.size}")
    arr = check_latent(flat, "data").reshape(shape)
    arr.flags.writeable = False
    return arr


def energy(x):
    """Squared L2 norm, correctly rounded (``math.fsum``)."""
    x = check_latent(x)
    return math.fsum(np.square(x).ravel().tolist())


def _sorted_percentile(v_sorted, p):
    # v_sorted is sorted along its last axis; linear interpolation between
    # order statistics at rank (p/100)*(N-1).
    n = v_sorted.shape[-1]
    rank = (p / 100.0) * (n - 1)
    lo = math.floor(rank)
    hi = math.ceil(rank)
    frac = rank - lo
    a = v_sorted[..., lo]
    b = v_sorted[..., hi]
    return a + frac * (b - a)


def percentile(values, p):
    values = np.asarray(values, dtype=np.float64).ravel()
    if values.size == 0:
        raise EmptyInput("percentile of an empty sequence")
    values = check_latent(values, "values")
    p = float(p)
    if not 0.0 <= p <= 100.0:
        raise InvalidWindow(f"percentile must lie in [0, 100], got {p}")
    return float(_sorted_percentile(np.sort(values), p))


def _window_mask(q, window):
    qs = np.sort(q, axis=-1)
    p_low = _sorted_percentile(qs, window.l)
    p_high = _sorted_percentile(qs, window.h)
    mask = (q >= p_low[..., None]) & (q <= p_high[..., None])
    return mask, p_low, p_high


def robust_energy(x, window=DEFAULT_WINDOW):
    """Energy restricted to squared values inside the percentile band.

    Falls back to the plain energy (``count == N``) when the band admits no
    element, which happens for small tensors where the interpolated band
    lies strictly between two order statistics.
    """
    q = np.square(check_latent(x)).reshape(1, -1)
    mask, p_low, p_high = _window_mask(q, window)
    count = int(mask.sum())
    if count == 0:
        return RobustEnergyResult(
            math.fsum(q.ravel().tolist()), float(p_low[0]), float(p_high[0]), q.size, True
        )
    return RobustEnergyResult(
        math.fsum(q[mask].tolist()), float(p_low[0]), float(p_high[0]), count
    )


def robust_energy_rows(X, window=DEFAULT_WINDOW):
    """Batched :func:`robust_energy` over the rows of a 2-D array.

    Sums use numpy's pairwise summation rather than ``fsum``, so energies may
    differ from :func:`robust_energy` in the last few bits. Window bounds and
    counts are identical.

    Returns
    -------
    energy, p_low, p_high : (n,) float64 arrays
    count : (n,) int array
    fell_back : (n,) bool array
    """
    X = np.asarray(X, dtype=np.float64)
    q = np.square(X)
    mask, p_low, p_high = _window_mask(q, window)
    count = mask.sum(axis=1)
    fell_back = count == 0
    mask[fell_back] = True
    energies = np.sum(q, axis=1, where=mask)
    count = np.where(fell_back, q.shape[1], count)
    return energies, p_low, p_high, count, fell_back
