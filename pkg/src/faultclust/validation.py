"""Input validation helpers shared across the package."""

from __future__ import annotations

import numpy as np


def check_signal(x, *, min_length: int = 1, name: str = "x") -> np.ndarray:
    """Coerce ``x`` to a 1-D float64 array of finite values.

    Raises ValueError on empty input, wrong dimensionality, or NaN/Inf.
    """
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {arr.shape}")
    if arr.size < min_length:
        raise ValueError(f"{name} must have at least {min_length} samples, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_matrix(X, *, min_rows: int = 1, name: str = "X") -> np.ndarray:
    """Coerce ``X`` to a 2-D float64 array of finite values."""
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < min_rows:
        raise ValueError(f"{name} must have at least {min_rows} rows, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_positive_int(value, *, minimum: int = 1, name: str = "value") -> int:
    """Validate an integer parameter with a lower bound."""
    v = int(value)
    if v != value or v < minimum:
        raise ValueError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return v
