"""Signed distance fields from masks by fast sweeping.

Sign convention: ``phi <= 0`` inside the mask, ``phi > 0`` outside. The zero
level passes through the centres of the inside boundary voxels, so
``field_to_mask(rebuild_sdf(m))`` returns ``m`` exactly.
"""
import itertools
from dataclasses import dataclass

import numpy as np
from numba import njit

from ._validation import check_mask
from .exceptions import EmptyMask, FullMask

MIN_OUTSIDE = 1e-12
_OFFSETS_26 = [off for off in itertools.product((-1, 0, 1), repeat=3)]


@dataclass
class BoundaryField:
    """Distance magnitudes fixed near the boundary, before sweeping.

    ``distance`` holds exact unsigned distances on the frozen shell and
    ``large`` everywhere else.
    """

    distance: np.ndarray
    frozen: np.ndarray
    inside: np.ndarray
    large: float


def large_value(shape):
    return 10.0 * float(np.sqrt(np.sum(np.square(shape, dtype=np.float64))))


def _shift(arr, offset, fill):
    """``out[x] = arr[x + offset]`` with ``fill`` outside the grid."""
    out = np.full_like(arr, fill)
    src, dst = [], []
    for d, n in zip(offset, arr.shape):
        if d > 0:
            src.append(slice(d, None))
            dst.append(slice(None, n - d))
        elif d < 0:
            src.append(slice(None, n + d))
            dst.append(slice(-d, None))
        else:
            src.append(slice(None))
            dst.append(slice(None))
    out[tuple(dst)] = arr[tuple(src)]
    return out


def boundary_voxels(mask):
    """Inside voxels with at least one in-bounds face neighbour outside."""
    mask = check_mask(mask)
    enclosed = mask.copy()
    for axis in range(3):
        for step in (-1, 1):
            offset = [0, 0, 0]
            offset[axis] = step
            enclosed &= _shift(mask, offset, True)
    return mask & ~enclosed


def init_boundary(mask):
    """Exact distances on the boundary and its 26-neighbourhood.

    Every voxel within one 26-step of the boundary set gets its exact
    distance to the nearest boundary voxel (0, 1, sqrt 2 or sqrt 3, since any
    farther boundary voxel is at least 2 away). Those voxels are frozen.
    """
    mask = check_mask(mask)
    if not mask.any():
        raise EmptyMask("mask has no inside voxels")
    if mask.all():
        raise FullMask("mask covers the whole volume; there is no boundary")
    boundary = boundary_voxels(mask)
    large = large_value(mask.shape)
    distance = np.full(mask.shape, np.inf)
    for offset in _OFFSETS_26:
        length = float(np.sqrt(sum(d * d for d in offset)))
        hit = _shift(boundary, offset, False)
        np.minimum(distance, np.where(hit, length, np.inf), out=distance)
    frozen = np.isfinite(distance)
    distance[~frozen] = large
    return BoundaryField(distance=distance, frozen=frozen, inside=mask, large=large)


@njit(cache=True)
def _solve_eikonal(a1, a2, a3):
    # a1 <= a2 <= a3; solves sum_d [(x - a_d)^+]^2 = 1 on a unit grid
    x = a1 + 1.0
    if x <= a2:
        return x
    s = a1 + a2
    x = 0.5 * (s + np.sqrt(2.0 - (a1 - a2) ** 2))
    if x <= a3:
        return x
    s = a1 + a2 + a3
    q = a1 * a1 + a2 * a2 + a3 * a3
    return (s + np.sqrt(s * s - 3.0 * (q - 1.0))) / 3.0


@njit(cache=True)
def _sweep(u, frozen, large, si, sj, sk):
    nx, ny, nz = u.shape
    i0, i1 = (0, nx) if si > 0 else (nx - 1, -1)
    j0, j1 = (0, ny) if sj > 0 else (ny - 1, -1)
    k0, k1 = (0, nz) if sk > 0 else (nz - 1, -1)
    for i in range(i0, i1, si):
        for j in range(j0, j1, sj):
            for k in range(k0, k1, sk):
                if frozen[i, j, k]:
                    continue
                a = large
                if i > 0:
                    a = min(a, u[i - 1, j, k])
                if i < nx - 1:
                    a = min(a, u[i + 1, j, k])
                b = large
                if j > 0:
                    b = min(b, u[i, j - 1, k])
                if j < ny - 1:
                    b = min(b, u[i, j + 1, k])
                c = large
                if k > 0:
                    c = min(c, u[i, j, k - 1])
                if k < nz - 1:
                    c = min(c, u[i, j, k + 1])
                # sort three values
                if a > b:
                    a, b = b, a
                if b > c:
                    b, c = c, b
                if a > b:
                    a, b = b, a
                if a >= large:
                    continue
                x = _solve_eikonal(a, b, c)
                if x < u[i, j, k]:
                    u[i, j, k] = x


SWEEP_DIRECTIONS = list(itertools.product((1, -1), repeat=3))


def fast_sweep(field, n_sweeps=8):
    """Propagate distances from the frozen shell with Gauss-Seidel sweeps.

    One pass of eight sweeps, one from each corner of the grid towards the
    opposite corner; the sign is applied afterwards from the mask.
    ``n_sweeps`` < 8 is only useful for inspecting partial results.
    """
    u = np.ascontiguousarray(field.distance, dtype=np.float64).copy()
    frozen = np.ascontiguousarray(field.frozen)
    for si, sj, sk in SWEEP_DIRECTIONS[:n_sweeps]:
        _sweep(u, frozen, field.large, si, sj, sk)
    return np.where(field.inside, -u, u)


def rebuild_sdf(mask):
    """Signed distance field of ``mask`` (boundary init plus one sweep pass)."""
    return fast_sweep(init_boundary(mask))



def interface_distance(phi):
    """Distance to the interpolated zero crossing at voxels next to it.

    Along each axis where a face neighbour has the opposite sign, the
    crossing sits at fraction ``|phi| / (|phi| + |phi_n|)`` of the spacing
    (closest of the two neighbours). Per-axis fractions ``t_d`` combine as
    ``1 / sqrt(sum 1 / t_d**2)``, the distance to the plane through those
    crossings. Voxels with no sign change across a face get ``inf``.
    """
    phi = np.asarray(phi, dtype=np.float64)
    inside = phi <= 0
    mag = np.abs(phi)
    inv_sq = np.zeros(phi.shape)
    touching = np.zeros(phi.shape, dtype=bool)
    zero = inside & (phi == 0)
    for axis in range(3):
        frac = np.full(phi.shape, np.inf)
        for step in (-1, 1):
            offset = [0, 0, 0]
            offset[axis] = step
            n_inside = _shift(inside, offset, False)
            n_valid = _shift(np.ones(phi.shape, dtype=bool), offset, False)
            n_mag = _shift(mag, offset, 0.0)
            cross = n_valid & (n_inside != inside)
            with np.errstate(invalid="ignore", divide="ignore"):
                f = np.where(cross, mag / (mag + n_mag), np.inf)
            np.minimum(frac, f, out=frac)
        hit = np.isfinite(frac)
        touching |= hit
        with np.errstate(divide="ignore"):
            inv_sq[hit] += 1.0 / np.square(frac[hit])
    with np.errstate(divide="ignore"):
        dist = np.where(touching, 1.0 / np.sqrt(inv_sq), np.inf)
    dist[zero] = 0.0
    return dist


def reinitialize(phi):
    """Rebuild a distance field from ``phi`` keeping its zero crossing.

    Voxels adjacent to the interface keep their interpolated distance and
    are frozen; the rest is filled by one fast-sweeping pass. The sign of
    every voxel, and hence the mask ``phi <= 0``, is unchanged.
    """
    phi = np.asarray(phi, dtype=np.float64)
    inside = phi <= 0
    if not inside.any():
        raise EmptyMask("field has no inside voxels")
    if inside.all():
        raise FullMask("field has no outside voxels")
    dist = interface_distance(phi)
    frozen = np.isfinite(dist)
    # outside voxels must stay strictly positive even when phi underflows
    np.maximum(dist, MIN_OUTSIDE, out=dist, where=~inside)
    large = large_value(phi.shape)
    dist[~frozen] = large
    return fast_sweep(BoundaryField(distance=dist, frozen=frozen, inside=inside, large=large))
