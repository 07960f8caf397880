"""Input validation helpers for array-facing entry points."""

from __future__ import annotations

import numpy as np


def check_points(X, name: str = "X") -> np.ndarray:
    """Coerce to a finite float array of shape (N, 3)."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1 and X.shape == (3,):
        X = X.reshape(1, 3)
    if X.ndim != 2 or X.shape[1] != 3:
        raise ValueError(f"{name} must have shape (N, 3), got {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{name} contains non-finite values")
    return X


def check_pixels(y, n: int | None = None, name: str = "y") -> np.ndarray:
    """Coerce to a finite float array of shape (N, 2)."""
    y = np.asarray(y, dtype=float)
    if y.ndim == 1 and y.shape == (2,):
        y = y.reshape(1, 2)
    if y.ndim != 2 or y.shape[1] != 2:
        raise ValueError(f"{name} must have shape (N, 2), got {y.shape}")
    if n is not None and y.shape[0] != n:
        raise ValueError(f"{name} has {y.shape[0]} rows, expected {n}")
    if not np.all(np.isfinite(y)):
        raise ValueError(f"{name} contains non-finite values")
    return y
