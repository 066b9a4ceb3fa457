"""Intensity handling and voxel neighbourhoods.

Volumes are plain ``(nx, ny, nz)`` float arrays indexed ``[i, j, k]``; masks
are boolean arrays of the same shape. Spacing is carried by the I/O layer
only, every algorithm works in voxel units.
"""
import itertools

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_index, check_volume

_FACE_OFFSETS = [(-1, 0, 0), (1, 0, 0), (0, -1, 0), (0, 1, 0), (0, 0, -1), (0, 0, 1)]
_OTHER_OFFSETS = [
    off for off in itertools.product((-1, 0, 1), repeat=3)
    if off != (0, 0, 0) and off not in _FACE_OFFSETS
]


def percentile(volume, p):
    """Nearest-rank-low percentile over all voxels.

    Sorts every voxel value and returns the element at ``floor(p/100 * (N-1))``.
    """
    if not 0 <= p <= 100:
        raise ValueError(f"percentile must be in [0, 100], got {p}")
    values = np.sort(np.asarray(volume, dtype=np.float64), axis=None)
    if values.size == 0:
        raise ValueError("volume is empty")
    rank = int(np.floor(p / 100.0 * (values.size - 1)))
    return float(values[rank])


def _rescale(arr, lo, hi):
    if hi == lo:
        return np.zeros_like(arr)
    return np.clip((arr - lo) / (hi - lo), 0.0, 1.0)


def normalize(volume, low=2.0, high=98.0):
    """Map intensities to [0, 1] between the 2nd and 98th percentiles.

    Values at or below the low percentile become 0, at or above the high
    percentile become 1, linear in between. A flat volume maps to zeros.
    """
    arr = check_volume(volume)
    return _rescale(arr, percentile(arr, low), percentile(arr, high))


def neighbors(idx, connectivity, shape):
    """In-bounds neighbours of ``idx`` for 6- or 26-connectivity.

    Order is fixed: -i, +i, -j, +j, -k, +k, then the remaining offsets in
    lexicographic order.
    """
    if connectivity not in (6, 26):
        raise ValueError(f"connectivity must be 6 or 26, got {connectivity}")
    i, j, k = check_index(idx, shape)
    offsets = _FACE_OFFSETS if connectivity == 6 else _FACE_OFFSETS + _OTHER_OFFSETS
    out = []
    for di, dj, dk in offsets:
        n = (i + di, j + dj, k + dk)
        if all(0 <= c < s for c, s in zip(n, shape)):
            out.append(n)
    return out


class IntensityNormalizer(TransformerMixin, BaseEstimator):
    """Percentile window normalisation as a fit/transform estimator.

    ``fit`` learns the window bounds from one volume; ``transform`` applies
    them, so a reference scan's window can be reused on another scan.

    Parameters
    ----------
    low, high : float
        Percentiles (0-100) mapped to 0 and 1.

    Attributes
    ----------
    lower_, upper_ : float
        Raw intensities at the ``low`` and ``high`` percentiles.
    """

    def __init__(self, low=2.0, high=98.0):
        self.low = low
        self.high = high

    def fit(self, X, y=None):
        if not 0 <= self.low <= self.high <= 100:
            raise ValueError(f"need 0 <= low <= high <= 100, got low={self.low}, high={self.high}")
        X = check_volume(X)
        self.lower_ = percentile(X, self.low)
        self.upper_ = percentile(X, self.high)
        return self

    def transform(self, X):
        check_is_fitted(self)
        return _rescale(check_volume(X), self.lower_, self.upper_)
