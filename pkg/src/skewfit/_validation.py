"""Input validation helpers shared by the functional API and the estimators."""

import numbers

import numpy as np
from sklearn.utils.validation import check_array


class DataError(ValueError):
    """Observed data cannot be used (non-numeric, too short, non-finite)."""


def check_finite(x, name="x"):
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} must be finite")
    return x


def check_generator(random_state=None):
    """Turn ``None``, an int seed, a SeedSequence or a Generator into a Generator."""
    if isinstance(random_state, np.random.Generator):
        return random_state
    if random_state is None or isinstance(
        random_state, (numbers.Integral, np.random.SeedSequence)
    ):
        return np.random.default_rng(random_state)
    raise TypeError(f"cannot build a Generator from {type(random_state).__name__}")


def check_sample(y, min_size=1, name="y"):
    """Validate a univariate sample given as shape (n,) or (n, 1)."""
    arr = np.asarray(y, dtype=float)
    if arr.ndim == 2 and arr.shape[1] == 1:
        arr = arr[:, 0]
    if arr.ndim != 1:
        raise DataError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.shape[0] < min_size:
        raise DataError(f"{name} needs at least {min_size} observations, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise DataError(f"{name} contains non-finite values")
    return arr


def check_X_1d(X, min_size=1):
    """sklearn-style validation for estimators fitted on one column."""
    X = check_array(X, ensure_2d=False, ensure_min_samples=min_size, dtype=float)
    return check_sample(X, min_size=min_size, name="X")
