"""Synthetic volumes with known ground truth.

Three shapes are available: a sphere, two balls joined by a cylindrical
bridge, and a tube swept along a Bezier centreline. The noise is drawn from
a Philox counter-based generator, so a spec always yields the same bytes.
"""
import json
from dataclasses import dataclass, field, fields

import numpy as np

from .exceptions import GeometryOutOfBounds

SHAPES = ("sphere", "two-blobs-bridged", "bent-tube")
MARGIN = 3.0

_JSON_KEYS = {
    "shape": "shape",
    "dims": "dims",
    "inside_intensity": "insideIntensity",
    "outside_intensity": "outsideIntensity",
    "noise_sigma": "noiseSigma",
    "rng_seed": "rngSeed",
    "center": "center",
    "radius": "radius",
    "blob_centers": "blobCenters",
    "blob_radii": "blobRadii",
    "bridge_width": "bridgeWidth",
    "control_points": "controlPoints",
    "tube_radius": "tubeRadius",
}


@dataclass
class PhantomSpec:
    shape: str = "sphere"
    dims: tuple = (64, 64, 64)
    inside_intensity: float = 0.8
    outside_intensity: float = 0.2
    noise_sigma: float = 0.1
    rng_seed: int = 0
    center: tuple = None
    radius: float = 20.0
    blob_centers: list = field(default_factory=list)
    blob_radii: list = field(default_factory=list)
    bridge_width: float = 2.0
    control_points: list = field(default_factory=list)
    tube_radius: float = 4.0

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ValueError(f"unknown phantom shape {self.shape!r}; expected one of {SHAPES}")
        self.dims = tuple(int(d) for d in self.dims)
        if len(self.dims) != 3 or min(self.dims) < 1:
            raise ValueError(f"dims must be three positive integers, got {self.dims}")
        if self.center is None:
            self.center = tuple((n - 1) / 2.0 for n in self.dims)
        self.center = tuple(float(c) for c in self.center)
        if self.inside_intensity == self.outside_intensity:
            raise ValueError("inside and outside intensities must differ")
        for name in ("inside_intensity", "outside_intensity"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be non-negative")

    def to_json(self):
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, tuple):
                value = list(value)
            out[_JSON_KEYS[f.name]] = value
        return json.dumps(out, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        raw = json.loads(text)
        reverse = {v: k for k, v in _JSON_KEYS.items()}
        unknown = set(raw) - set(reverse)
        if unknown:
            raise ValueError(f"unknown phantom spec keys: {sorted(unknown)}")
        return cls(**{reverse[k]: v for k, v in raw.items()})


def sphere_spec(dims=64, radius=None, **kwargs):
    dims = (dims,) * 3 if np.isscalar(dims) else tuple(dims)
    radius = min(dims) * 5 / 16 if radius is None else radius
    return PhantomSpec(shape="sphere", dims=dims, radius=radius, **kwargs)


def two_blobs_spec(dims=64, **kwargs):
    n = dims
    kwargs.setdefault("blob_centers", [[n * 0.3, n / 2, n / 2], [n * 0.7, n / 2, n / 2]])
    kwargs.setdefault("blob_radii", [n * 0.14, n * 0.14])
    kwargs.setdefault("bridge_width", max(2.0, n / 16))
    return PhantomSpec(shape="two-blobs-bridged", dims=(n, n, n), **kwargs)


def bent_tube_spec(dims=64, **kwargs):
    n = dims
    kwargs.setdefault("control_points", [
        [n * 0.2, n * 0.25, n * 0.5],
        [n * 0.5, n * 0.95, n * 0.45],
        [n * 0.8, n * 0.25, n * 0.55],
    ])
    kwargs.setdefault("tube_radius", n / 16)
    return PhantomSpec(shape="bent-tube", dims=(n, n, n), **kwargs)


def bezier(control_points, n_samples=128):
    """Points on the Bezier curve with the given control points (de Casteljau)."""
    pts = np.asarray(control_points, dtype=np.float64)
    t = np.linspace(0.0, 1.0, n_samples)[:, None, None]
    layer = np.broadcast_to(pts, (n_samples,) + pts.shape).copy()
    while layer.shape[1] > 1:
        layer = (1 - t) * layer[:, :-1] + t * layer[:, 1:]
    return layer[:, 0]


def _check_fits(lo, hi, dims):
    lo, hi = np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
    upper = np.asarray(dims, dtype=float) - 1 - MARGIN
    if np.any(lo < MARGIN) or np.any(hi > upper):
        raise GeometryOutOfBounds(
            f"geometry spans {lo.round(2).tolist()}..{hi.round(2).tolist()}, "
            f"which leaves less than {MARGIN:g} voxels of margin in a {tuple(dims)} grid"
        )


def _segment_distance(points, a, b):
    ab = b - a
    t = np.clip(((points - a) @ ab) / (ab @ ab), 0.0, 1.0)
    return np.linalg.norm(points - (a + t[:, None] * ab), axis=1)


def ground_truth(spec):
    """Voxels whose centres lie inside the analytic shape."""
    dims = spec.dims
    grid = np.indices(dims, dtype=np.float64).reshape(3, -1).T
    if spec.shape == "sphere":
        c = np.asarray(spec.center)
        _check_fits(c - spec.radius, c + spec.radius, dims)
        inside = np.linalg.norm(grid - c, axis=1) <= spec.radius
    elif spec.shape == "two-blobs-bridged":
        centers = np.asarray(spec.blob_centers, dtype=np.float64)
        radii = np.asarray(spec.blob_radii, dtype=np.float64)
        if centers.shape != (2, 3) or radii.shape != (2,):
            raise ValueError("two-blobs-bridged needs two blob centres and two radii")
        _check_fits((centers - radii[:, None]).min(axis=0), (centers + radii[:, None]).max(axis=0), dims)
        inside = np.zeros(len(grid), dtype=bool)
        for c, r in zip(centers, radii):
            inside |= np.linalg.norm(grid - c, axis=1) <= r
        inside |= _segment_distance(grid, centers[0], centers[1]) <= spec.bridge_width / 2
    else:
        curve = bezier(spec.control_points)
        r = spec.tube_radius
        _check_fits(curve.min(axis=0) - r, curve.max(axis=0) + r, dims)
        best = np.full(len(grid), np.inf)
        for a, b in zip(curve[:-1], curve[1:]):
            np.minimum(best, _segment_distance(grid, a, b), out=best)
        inside = best <= r
    return inside.reshape(dims)


def generate(spec):
    """Return ``(volume, ground_truth_mask)`` for ``spec``."""
    mask = ground_truth(spec)
    volume = np.where(mask, spec.inside_intensity, spec.outside_intensity).astype(np.float64)
    if spec.noise_sigma > 0:
        rng = np.random.Generator(np.random.Philox(key=spec.rng_seed))
        volume += spec.noise_sigma * rng.standard_normal(volume.shape)
        np.clip(volume, 0.0, 1.0, out=volume)
    return volume, mask


def default_seed_point(spec):
    """A voxel well inside the phantom's structure."""
    if spec.shape == "sphere":
        point = spec.center
    elif spec.shape == "two-blobs-bridged":
        point = spec.blob_centers[0]
    else:
        curve = bezier(spec.control_points, 129)
        point = curve[64]
    return tuple(int(round(c)) for c in point)
