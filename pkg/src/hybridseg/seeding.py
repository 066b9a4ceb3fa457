"""Seed generation: intensity clustering refined by morphology.

The seed is the cluster containing the user's point, eroded, reduced to the
6-connected component reachable from that point, then dilated back by the
same number of steps.
"""
import logging
import math

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_index, check_mask, check_volume
from .exceptions import DegenerateVolume, EmptyClusterCollapse, SeedEroded, SeedNotInMask

logger = logging.getLogger(__name__)

AUTO = "auto"

MEAN_SHIFT_BINS = 256
MEAN_SHIFT_BANDWIDTH = 0.05
MEAN_SHIFT_TOL = 1e-4
K_MIN, K_MAX = 2, 8


def estimate_k(volume, bandwidth=MEAN_SHIFT_BANDWIDTH, bins=MEAN_SHIFT_BINS):
    """Estimate the number of intensity clusters with 1-D mean shift.

    Runs mean shift with a Gaussian kernel over a histogram of the
    intensities (one starting point per non-empty bin), merges modes closer
    than ``bandwidth / 2`` and returns the mode count clamped to [2, 8].
    """
    values = check_volume(volume).ravel()
    if values.min() == values.max():
        raise DegenerateVolume("cannot estimate clusters: all intensities are equal")
    counts, edges = np.histogram(values, bins=bins, range=(0.0, 1.0))
    centers = 0.5 * (edges[:-1] + edges[1:])
    keep = counts > 0
    centers, weights = centers[keep], counts[keep].astype(np.float64)

    modes = centers.copy()
    for _ in range(1000):
        kernel = np.exp(-0.5 * ((modes[:, None] - centers[None, :]) / bandwidth) ** 2) * weights
        shifted = kernel @ centers / kernel.sum(axis=1)
        moved = np.abs(shifted - modes).max()
        modes = shifted
        if moved < MEAN_SHIFT_TOL:
            break

    modes = np.sort(modes)
    n_modes = 1
    anchor = modes[0]
    for m in modes[1:]:
        if m - anchor >= bandwidth / 2:
            n_modes += 1
            anchor = m
    return int(min(max(n_modes, K_MIN), K_MAX))


def _assign(values, centers):
    # argmin returns the first minimum, so ties go to the lower cluster id
    return np.argmin(np.abs(values[:, None] - centers[None, :]), axis=1)


def _l1_error(values, centers, labels):
    return float(np.abs(values - centers[labels]).sum())


class KMeansIntensity(ClusterMixin, BaseEstimator):
    """Deterministic 1-D k-means on voxel intensities.

    Centroids start at the intensity quantiles ``(2j - 1) / (2k)`` and
    alternate nearest-centroid assignment with mean updates until no label
    changes. Distances are absolute intensity differences.

    Attributes
    ----------
    cluster_centers_ : ndarray of shape (n_clusters,)
        Mean intensity of each cluster, ascending.
    labels_ : ndarray of int, same shape as the fitted volume
    objective_ : float
        Sum over voxels of ``|I(x) - centre(x)|`` at the final labels.
    objective_history_ : list of float
        Objective after each iteration.
    n_iter_ : int
    """

    def __init__(self, n_clusters=2, max_iter=100):
        self.n_clusters = n_clusters
        self.max_iter = max_iter

    def fit(self, X, y=None):
        X = check_volume(X)
        k = self.n_clusters
        if not isinstance(k, (int, np.integer)) or k < 2:
            raise ValueError(f"n_clusters must be an integer >= 2, got {k!r}")
        values = X.ravel()
        sorted_values = np.sort(values)
        n = values.size
        centers = np.array([
            sorted_values[int(math.floor((2 * j - 1) / (2 * k) * (n - 1)))] for j in range(1, k + 1)
        ])

        labels = None
        history = []
        n_iter = 0
        for n_iter in range(1, self.max_iter + 1):
            new_labels = self._assign_nonempty(values, centers)
            if labels is not None and np.array_equal(new_labels, labels):
                break
            labels = new_labels
            sums = np.bincount(labels, weights=values, minlength=k)
            sizes = np.bincount(labels, minlength=k)
            centers = sums / sizes
            order = np.argsort(centers, kind="stable")
            if np.any(order != np.arange(k)):
                centers = centers[order]
                labels = np.argsort(order)[labels]
            history.append(_l1_error(values, centers, labels))

        self.cluster_centers_ = centers
        self.labels_ = labels.reshape(X.shape)
        self.objective_ = history[-1]
        self.objective_history_ = history
        self.n_iter_ = n_iter
        return self

    def _assign_nonempty(self, values, centers):
        labels = _assign(values, centers)
        for attempt in range(2):
            sizes = np.bincount(labels, minlength=len(centers))
            empty = np.flatnonzero(sizes == 0)
            if empty.size == 0:
                return labels
            for j in empty:
                alive = np.flatnonzero(sizes > 0)
                gap = np.abs(values[:, None] - centers[alive][None, :]).min(axis=1)
                centers[j] = values[np.argmax(gap)]
                logger.debug("re-seeded empty cluster %d at intensity %.6g", j, centers[j])
            centers.sort()
            labels = _assign(values, centers)
        if np.any(np.bincount(labels, minlength=len(centers)) == 0):
            raise EmptyClusterCollapse(
                f"k-means with k={len(centers)} left a cluster empty after re-seeding; "
                "the volume has too few distinct intensities"
            )
        return labels

    def predict(self, X):
        check_is_fitted(self)
        X = check_volume(X)
        return _assign(X.ravel(), self.cluster_centers_).reshape(X.shape)


def kmeans_cluster(volume, k):
    """Fit :class:`KMeansIntensity` with ``k`` clusters and return it."""
    return KMeansIntensity(n_clusters=k).fit(volume)


def select_seed_cluster(labels, x0):
    """Mask of the cluster containing voxel ``x0``."""
    labels = np.asarray(labels)
    x0 = check_index(x0, labels.shape)
    return labels == labels[x0]


def _shifted(mask, axis, step, fill):
    out = np.full_like(mask, fill)
    src = [slice(None)] * 3
    dst = [slice(None)] * 3
    if step > 0:
        src[axis], dst[axis] = slice(None, -step), slice(step, None)
    else:
        src[axis], dst[axis] = slice(-step, None), slice(None, step)
    out[tuple(dst)] = mask[tuple(src)]
    return out


def erode(mask, steps):
    """Peel the boundary layer ``steps`` times (6-connected cross).

    Voxels on the volume border count as touching the outside.
    """
    mask = check_mask(mask).copy()
    for _ in range(steps):
        out = mask.copy()
        for axis in range(3):
            for step in (-1, 1):
                out &= _shifted(mask, axis, step, False)
        mask = out
    return mask


def dilate(mask, steps):
    """Grow by one face-neighbour layer ``steps`` times, clipped at the border."""
    mask = check_mask(mask).copy()
    for _ in range(steps):
        out = mask.copy()
        for axis in range(3):
            for step in (-1, 1):
                out |= _shifted(mask, axis, step, False)
        mask = out
    return mask


def connected_component(mask, x0):
    """Voxels 6-connected to ``x0`` through the mask, by breadth-first search."""
    mask = check_mask(mask)
    x0 = check_index(x0, mask.shape)
    if not mask[x0]:
        raise SeedNotInMask(f"seed point {x0} is not inside the mask")

    nx, ny, nz = mask.shape
    flat = mask.ravel()
    visited = np.zeros(flat.size, dtype=bool)
    start = np.ravel_multi_index(x0, mask.shape)
    visited[start] = True
    frontier = np.array([start])
    strides = [(ny * nz, 0, nx), (nz, 1, ny), (1, 2, nz)]
    while frontier.size:
        coords = np.unravel_index(frontier, mask.shape)
        found = []
        for stride, axis, size in strides:
            c = coords[axis]
            found.append(frontier[c > 0] - stride)
            found.append(frontier[c < size - 1] + stride)
        cand = np.unique(np.concatenate(found))
        cand = cand[flat[cand] & ~visited[cand]]
        visited[cand] = True
        frontier = cand
    return visited.reshape(mask.shape)


def resolve_erosion_steps(erosion_steps, shape):
    if erosion_steps == AUTO or erosion_steps is None:
        return max(1, int(math.floor(min(shape) / 64.0 + 0.5)))
    steps = int(erosion_steps)
    if steps < 0:
        raise ValueError(f"erosion_steps must be non-negative, got {erosion_steps}")
    return steps


class SeedGenerator(BaseEstimator):
    """Build an initial segmentation from a normalised volume and a user point.

    Parameters
    ----------
    n_clusters : int or "auto"
        Number of intensity clusters; "auto" estimates it with mean shift.
    erosion_steps : int or "auto"
        Erosion/dilation count; "auto" uses ``max(1, round(min(shape) / 64))``.

    Attributes
    ----------
    seed_mask_ : ndarray of bool
        Final seed after dilation.
    cluster_mask_, eroded_mask_, component_mask_ : ndarray of bool
        Intermediate stages, kept for inspection and slice rendering.
    n_clusters_, erosion_steps_ : int
        Resolved parameter values.
    clusterer_ : KMeansIntensity
    """

    def __init__(self, n_clusters=AUTO, erosion_steps=AUTO):
        self.n_clusters = n_clusters
        self.erosion_steps = erosion_steps

    def fit(self, X, y=None, *, seed_point):
        X = check_volume(X)
        x0 = check_index(seed_point, X.shape)
        k = estimate_k(X) if self.n_clusters in (AUTO, None) else int(self.n_clusters)
        steps = resolve_erosion_steps(self.erosion_steps, X.shape)

        self.clusterer_ = kmeans_cluster(X, k)
        self.cluster_mask_ = select_seed_cluster(self.clusterer_.labels_, x0)

        eroded = self.cluster_mask_
        for step in range(1, steps + 1):
            eroded = erode(eroded, 1)
            if not eroded[x0]:
                raise SeedEroded(
                    f"seed point {x0} was eroded away at step {step} of {steps}; "
                    "use fewer erosion steps or move the seed point deeper into the structure",
                    step=step,
                )
        self.eroded_mask_ = eroded
        self.component_mask_ = connected_component(eroded, x0)
        self.seed_mask_ = dilate(self.component_mask_, steps)
        self.n_clusters_ = k
        self.erosion_steps_ = steps
        logger.info(
            "seed: k=%d, %d erosion steps, %d -> %d voxels",
            k, steps, int(self.cluster_mask_.sum()), int(self.seed_mask_.sum()),
        )
        return self

    def fit_predict(self, X, y=None, *, seed_point):
        return self.fit(X, seed_point=seed_point).seed_mask_


def generate_seed(volume, x0, n_clusters=AUTO, erosion_steps=AUTO):
    """Functional form of :class:`SeedGenerator`; returns the seed mask."""
    return SeedGenerator(n_clusters, erosion_steps).fit_predict(volume, seed_point=x0)
