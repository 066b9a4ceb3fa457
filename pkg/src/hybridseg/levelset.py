"""Narrow-band level-set evolution under a region (intensity-mean) force.

Each iteration moves ``phi`` inside the band by::

    dt * (alpha * curvature - beta + gamma1 * (I - mean_in)**2 - gamma2 * (I - mean_out)**2)

with ``phi <= 0`` inside. Positive ``beta`` inflates the front, positive
``alpha`` smooths it, and the two region terms pull each voxel towards the
side whose mean intensity it resembles.
"""
import logging
import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import check_index, check_mask, check_same_shape, check_volume
from .distance import boundary_voxels, rebuild_sdf, reinitialize
from .exceptions import EmptyRegion, NonConvergedWarning

logger = logging.getLogger(__name__)

CURVATURE_EPS = 1e-8
# reinitialise once the front gets this close (voxels) to the band edge
BAND_MARGIN = 2.0


@dataclass(frozen=True)
class EvolutionParams:
    alpha: float = 0.2
    beta: float = 0.0
    gamma1: float = 1.0
    gamma2: float = 1.0
    dt: float = 0.3
    band_width: float = 6.0
    reinit_every: int = 20
    max_iters: int = 500
    convergence_tol: float = 1e-3
    convergence_window: int = 5

    def __post_init__(self):
        if self.alpha < 0 or self.gamma1 < 0 or self.gamma2 < 0:
            raise ValueError("alpha, gamma1 and gamma2 must be non-negative")
        if self.dt <= 0 or self.band_width <= 0:
            raise ValueError("dt and band_width must be positive")
        for name in ("reinit_every", "max_iters", "convergence_window"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be a positive integer")
        if self.convergence_tol < 0:
            raise ValueError("convergence_tol must be non-negative")
        # one step may move phi by at most one voxel
        bound = self.dt * (6 * self.alpha + abs(self.beta) + self.gamma1 + self.gamma2)
        if bound > 1.0 + 1e-12:
            raise ValueError(
                f"unstable parameters: dt*(6*alpha+|beta|+gamma1+gamma2) = {bound:.4g} > 1"
            )

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class RegionStats:
    mean_inside: float
    mean_outside: float
    count_inside: int
    count_outside: int


def region_stats(volume, phi):
    """Mean intensity over ``phi <= 0`` and over ``phi > 0``."""
    inside = phi <= 0
    n_in = int(np.count_nonzero(inside))
    n_out = inside.size - n_in
    if n_in == 0:
        raise EmptyRegion("the front collapsed: no voxels inside")
    if n_out == 0:
        raise EmptyRegion("the front filled the whole volume: no voxels outside")
    # bincount sums in index order, so the result does not depend on threading
    sums = np.bincount(inside.ravel().astype(np.intp), weights=volume.ravel(), minlength=2)
    return RegionStats(
        mean_inside=float(sums[1] / n_in),
        mean_outside=float(sums[0] / n_out),
        count_inside=n_in,
        count_outside=n_out,
    )


def curvature_at(phi, flat_idx):
    """Mean curvature ``div(grad phi / |grad phi|)`` at interior voxels.

    Central differences throughout; ``flat_idx`` are C-order indices of
    voxels at least one voxel away from the border. Clamped to [-1, 1].
    """
    _, ny, nz = phi.shape
    sx, sy, sz = ny * nz, nz, 1
    p = phi.ravel()
    c = p[flat_idx]

    def at(off):
        return p[flat_idx + off]

    px, mx = at(sx), at(-sx)
    py, my = at(sy), at(-sy)
    pz, mz = at(sz), at(-sz)
    fx, fy, fz = (px - mx) / 2, (py - my) / 2, (pz - mz) / 2
    fxx, fyy, fzz = px - 2 * c + mx, py - 2 * c + my, pz - 2 * c + mz
    fxy = (at(sx + sy) - at(sx - sy) - at(-sx + sy) + at(-sx - sy)) / 4
    fxz = (at(sx + sz) - at(sx - sz) - at(-sx + sz) + at(-sx - sz)) / 4
    fyz = (at(sy + sz) - at(sy - sz) - at(-sy + sz) + at(-sy - sz)) / 4

    gx2, gy2, gz2 = fx * fx, fy * fy, fz * fz
    num = (
        fxx * (gy2 + gz2) + fyy * (gx2 + gz2) + fzz * (gx2 + gy2)
        - 2 * fx * fy * fxy - 2 * fx * fz * fxz - 2 * fy * fz * fyz
    )
    den = np.maximum((gx2 + gy2 + gz2) ** 1.5, CURVATURE_EPS)
    return np.clip(num / den, -1.0, 1.0)


def curvature(phi, flat_idx):
    """Curvature at any voxels, replicating ``phi`` across the border."""
    padded = np.pad(phi, 1, mode="edge")
    coords = np.unravel_index(flat_idx, phi.shape)
    inner = np.ravel_multi_index(tuple(c + 1 for c in coords), padded.shape)
    return curvature_at(padded, inner)


def mean_curvature_term(phi, idx):
    """Curvature at a single voxel ``idx``."""
    phi = np.asarray(phi, dtype=np.float64)
    idx = check_index(idx, phi.shape)
    flat = np.array([np.ravel_multi_index(idx, phi.shape)])
    return float(curvature(phi, flat)[0])


def narrow_band(phi, band_width):
    """Flat indices of voxels with ``|phi| <= band_width``."""
    if not math.isfinite(band_width):
        return np.arange(phi.size)
    return np.flatnonzero(np.abs(phi) <= band_width)


def evolve_step(volume, phi, params, stats, band=None):
    """One explicit update of the band voxels.

    Returns ``(new_phi, max_update)``. All reads come from the old field.
    """
    if band is None:
        band = narrow_band(phi, params.band_width)
    intensity = volume.ravel()[band]
    force = (
        params.gamma1 * (intensity - stats.mean_inside) ** 2
        - params.gamma2 * (intensity - stats.mean_outside) ** 2
        - params.beta
    )
    if params.alpha:
        force = force + params.alpha * curvature(phi, band)
    update = params.dt * force
    new_phi = phi.copy()
    new_phi.ravel()[band] += update
    max_update = float(np.abs(update).max()) if update.size else 0.0
    return new_phi, max_update


def front_voxels(inside):
    """Voxels with a face neighbour on the other side of the front."""
    return boundary_voxels(inside) | boundary_voxels(~inside)


def front_speed(old_phi, new_phi):
    """Mean movement of front voxels towards the zero level, in voxels."""
    front = front_voxels(old_phi <= 0)
    if not front.any():
        return 0.0
    old = old_phi[front]
    delta = new_phi[front] - old
    towards = np.where(old <= 0, delta, -delta)
    return float(np.maximum(towards, 0.0).sum() / front.sum())


@dataclass
class EvolutionResult:
    phi: np.ndarray
    n_iter: int
    converged: bool
    n_reinit: int
    max_update_history: list = field(default_factory=list)
    sign_changes_history: list = field(default_factory=list)
    front_motion_history: list = field(default_factory=list)


def evolve(volume, seed_phi, params=None):
    """Evolve ``seed_phi`` until the front stops moving or ``max_iters``.

    The band is rebuilt, together with a fresh distance field that keeps
    the current zero crossing, every ``reinit_every`` iterations and
    whenever the front has crossed a voxel within ``BAND_MARGIN`` of the
    band edge.

    An iteration counts as stationary when the largest update is below
    ``convergence_tol`` or when the front speed is: the mean, over voxels
    next to the zero crossing, of the part of the update that moves ``phi``
    towards zero. Updates that push a voxel further into its own side do
    not move the front. The run converges after ``convergence_window``
    stationary iterations in a row.
    """
    params = params or EvolutionParams()
    volume = check_volume(volume)
    phi = np.array(seed_phi, dtype=np.float64)
    check_same_shape(volume, phi)

    band = narrow_band(phi, params.band_width)
    band_ref = np.abs(phi.ravel()[band])
    edge = band_ref > params.band_width - BAND_MARGIN
    inside = phi <= 0
    result = EvolutionResult(phi=phi, n_iter=0, converged=False, n_reinit=0)
    stationary = 0
    for it in range(1, params.max_iters + 1):
        stats = region_stats(volume, phi)
        old_phi = phi
        phi, max_update = evolve_step(volume, phi, params, stats, band)
        new_inside = phi <= 0
        flips = int(np.count_nonzero(new_inside != inside))
        motion = front_speed(old_phi, phi)
        result.max_update_history.append(max_update)
        result.sign_changes_history.append(flips)
        result.front_motion_history.append(motion)
        result.n_iter = it

        if max_update < params.convergence_tol or motion < params.convergence_tol:
            stationary += 1
        else:
            stationary = 0
        if stationary >= params.convergence_window:
            inside = new_inside
            result.converged = True
            break

        crossed_edge = flips and np.any(new_inside.ravel()[band[edge]] != inside.ravel()[band[edge]])
        inside = new_inside
        if it % params.reinit_every == 0 or crossed_edge:
            if not inside.any() or inside.all():
                break
            phi = reinitialize(phi)
            band = narrow_band(phi, params.band_width)
            band_ref = np.abs(phi.ravel()[band])
            edge = band_ref > params.band_width - BAND_MARGIN
            result.n_reinit += 1

    if not inside.any():
        raise EmptyRegion("the front collapsed: no voxels inside")
    if inside.all():
        raise EmptyRegion("the front filled the whole volume: no voxels outside")
    result.phi = phi
    if not result.converged:
        warnings.warn(
            f"level set did not converge within {params.max_iters} iterations",
            NonConvergedWarning,
            stacklevel=2,
        )
    logger.info(
        "evolution: %d iterations, converged=%s, %d reinitialisations",
        result.n_iter, result.converged, result.n_reinit,
    )
    return result


def field_to_mask(phi):
    return np.asarray(phi) <= 0


class LevelSetSegmenter(BaseEstimator):
    """Refine an initial mask by level-set evolution.

    ``fit(volume, init_mask=...)`` builds the signed distance field of the
    initial mask, evolves it and stores the outcome.

    Attributes
    ----------
    phi_ : ndarray
        Final level-set function (``<= 0`` inside).
    mask_ : ndarray of bool
    n_iter_ : int
    converged_ : bool
    """

    def __init__(self, alpha=0.2, beta=0.0, gamma1=1.0, gamma2=1.0, dt=0.3,
                 band_width=6.0, reinit_every=20, max_iters=500,
                 convergence_tol=1e-3, convergence_window=5):
        self.alpha = alpha
        self.beta = beta
        self.gamma1 = gamma1
        self.gamma2 = gamma2
        self.dt = dt
        self.band_width = band_width
        self.reinit_every = reinit_every
        self.max_iters = max_iters
        self.convergence_tol = convergence_tol
        self.convergence_window = convergence_window

    def evolution_params(self):
        return EvolutionParams(**self.get_params())

    def fit(self, X, y=None, *, init_mask):
        X = check_volume(X)
        init_mask = check_mask(init_mask, X.shape)
        result = evolve(X, rebuild_sdf(init_mask), self.evolution_params())
        self.phi_ = result.phi
        self.mask_ = field_to_mask(result.phi)
        self.n_iter_ = result.n_iter
        self.converged_ = result.converged
        self.result_ = result
        return self

    def fit_predict(self, X, y=None, *, init_mask):
        return self.fit(X, init_mask=init_mask).mask_
