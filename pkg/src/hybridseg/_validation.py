"""Input checks shared by the estimators and free functions."""
import numpy as np

from .exceptions import DimensionMismatch, IndexOutOfRange, NonFiniteInput


def check_volume(volume, *, dtype=np.float64, copy=False):
    """Return ``volume`` as a finite 3-D float array.

    Raises ``ValueError`` for wrong dimensionality or an empty grid and
    ``NonFiniteInput`` for NaN/Inf values.
    """
    arr = np.array(volume, dtype=dtype, copy=copy) if copy else np.asarray(volume, dtype=dtype)
    if arr.ndim != 3:
        raise ValueError(f"expected a 3-D volume, got array with ndim={arr.ndim}")
    if arr.size == 0:
        raise ValueError("volume is empty")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteInput("volume contains NaN or Inf values")
    return arr


def check_mask(mask, shape=None):
    arr = np.asarray(mask)
    if arr.ndim != 3:
        raise ValueError(f"expected a 3-D mask, got array with ndim={arr.ndim}")
    if arr.dtype != bool:
        arr = arr.astype(bool)
    if shape is not None and arr.shape != tuple(shape):
        raise DimensionMismatch(f"mask shape {arr.shape} does not match {tuple(shape)}")
    return arr


def check_index(idx, shape):
    """Validate a voxel index against ``shape`` and return it as a tuple of ints."""
    try:
        idx = tuple(int(c) for c in idx)
    except TypeError:
        raise IndexOutOfRange(f"voxel index must be a sequence of 3 integers, got {idx!r}")
    if len(idx) != 3:
        raise IndexOutOfRange(f"voxel index must have 3 coordinates, got {idx!r}")
    for c, n in zip(idx, shape):
        if not 0 <= c < n:
            raise IndexOutOfRange(f"voxel index {idx} outside volume of shape {tuple(shape)}")
    return idx


def check_same_shape(a, b):
    if a.shape != b.shape:
        raise DimensionMismatch(f"shape mismatch: {a.shape} vs {b.shape}")
