"""Input checks shared by the estimators."""

import numpy as np


def check_snapshot(r, length=None) -> np.ndarray:
    """Return ``r`` as a finite 1-D complex array, optionally of fixed length."""
    r = np.asarray(r, dtype=complex)
    if r.ndim != 1:
        raise ValueError(f"snapshot must be 1-D, got shape {r.shape}")
    if length is not None and r.shape[0] != length:
        raise ValueError(f"snapshot must have length {length}, got {r.shape[0]}")
    if not np.all(np.isfinite(r)):
        raise ValueError("snapshot contains NaN or inf")
    return r


def check_region(region, n_cp: int) -> np.ndarray:
    """Sorted unique delay indices inside ``[0, n_cp)``; ``None`` means all."""
    if region is None:
        return np.arange(n_cp)
    region = np.unique(np.asarray(region, dtype=int))
    if region.size == 0:
        raise ValueError("search region is empty")
    if region[0] < 0 or region[-1] >= n_cp:
        raise ValueError(f"search region must lie in [0, {n_cp})")
    return region
