"""Input checks shared by the estimators."""

import numpy as np


def check_series(times, values, *, min_points=2, positive_times=False):
    """Validate an observed series and return float arrays ``(times, values)``.

    Times must be finite and strictly increasing, values finite, both 1-D of
    equal length with at least ``min_points`` entries.
    """
    t = np.asarray(times, dtype=float)
    x = np.asarray(values, dtype=float)
    if t.ndim != 1 or x.ndim != 1:
        raise ValueError("times and values must be one-dimensional")
    if t.shape != x.shape:
        raise ValueError(f"times ({t.size}) and values ({x.size}) differ in length")
    if t.size < min_points:
        raise ValueError(f"need at least {min_points} observations, got {t.size}")
    if not (np.all(np.isfinite(t)) and np.all(np.isfinite(x))):
        raise ValueError("observations contain non-finite entries")
    if np.any(np.diff(t) <= 0):
        raise ValueError("observation times must be strictly increasing")
    if positive_times and t[0] <= 0:
        raise ValueError("self-similar observations need times > 0")
    return t, x


def split_xy(X, y=None):
    """Accept sklearn-style input: ``X`` of shape (n, 2) as (time, value), or
    ``X`` of times plus ``y`` of values."""
    X = np.asarray(X, dtype=float)
    if y is None:
        if X.ndim != 2 or X.shape[1] != 2:
            raise ValueError("expected X of shape (n, 2) holding (time, value) columns")
        return X[:, 0], X[:, 1]
    return X.reshape(-1), np.asarray(y, dtype=float).reshape(-1)
