"""Input validation helpers shared by the kernels, the sampler and the estimators."""

import numpy as np

from .exceptions import EmptyInput, InvalidRange, InvalidStrength, NonFiniteValue, ShapeMismatch


def check_latent(x, name="x"):
    """Return ``x`` as a float64 ndarray, rejecting empty or non-finite input.

    Arrays that are already float64 are not copied.
    """
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.size == 0:
        raise EmptyInput(f"{name} has no elements")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteValue(f"{name} contains NaN or Inf")
    return arr


def check_same_shape(a, b, names=("a", "b")):
    if a.shape != b.shape:
        raise ShapeMismatch(f"{names[0]} has shape {a.shape} but {names[1]} has shape {b.shape}")


def check_strength(strength):
    strength = float(strength)
    if not np.isfinite(strength) or strength < 1.0:
        raise InvalidStrength(f"guidance strength must be a finite value >= 1, got {strength}")
    return strength


def check_unit_interval(value, name):
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise InvalidRange(f"{name} must lie in [0, 1], got {value}")
    return value


def check_rows(X, name="X"):
    """2-D float64 view of a batch: one flattened latent per row."""
    arr = check_latent(X, name)
    if arr.ndim == 1:
        return arr.reshape(1, -1)
    return arr.reshape(arr.shape[0], -1)
