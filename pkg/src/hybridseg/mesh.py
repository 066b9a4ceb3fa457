"""Triangle mesh of the zero level set."""
from dataclasses import dataclass

import numpy as np
from skimage import measure

from .exceptions import NoZeroCrossing, SurfaceTouchesBorder


@dataclass
class TriangleMesh:
    """Indexed triangle mesh in voxel coordinates.

    Triangles wind counter-clockwise when seen from the ``phi > 0`` side, so
    right-hand normals point outwards.
    """

    vertices: np.ndarray
    triangles: np.ndarray

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_triangles(self):
        return len(self.triangles)

    def edges(self):
        """Unique undirected edges as a sorted ``(E, 2)`` array."""
        t = self.triangles
        e = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        return np.unique(np.sort(e, axis=1), axis=0)

    def euler_characteristic(self):
        return self.n_vertices - len(self.edges()) + self.n_triangles

    def is_watertight(self):
        t = self.triangles
        e = np.sort(np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]]), axis=1)
        _, counts = np.unique(e, axis=0, return_counts=True)
        return bool(np.all(counts == 2))

    def face_normals(self):
        v = self.vertices[self.triangles]
        return np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0])

    def area(self):
        return float(0.5 * np.linalg.norm(self.face_normals(), axis=1).sum())


def _touches_border(inside):
    return any(
        inside[(slice(None),) * axis + (end,)].any()
        for axis in range(3) for end in (0, -1)
    )


def marching_cubes(phi, allow_open=False):
    """Extract the ``phi = 0`` surface.

    Vertices are linearly interpolated along cell edges and shared between
    neighbouring cells. Raises ``NoZeroCrossing`` when ``phi`` has a single
    sign and ``SurfaceTouchesBorder`` when an inside voxel lies on the
    volume boundary, since the surface would then be open; ``allow_open``
    skips the latter check.
    """
    phi = np.asarray(phi, dtype=np.float64)
    inside = phi <= 0
    if not inside.any() or inside.all():
        raise NoZeroCrossing("the field does not change sign")
    if not allow_open and _touches_border(inside):
        raise SurfaceTouchesBorder("the zero level set reaches the volume border")
    verts, faces, _, _ = measure.marching_cubes(phi, level=0.0, method="lewiner", allow_degenerate=False)
    return TriangleMesh(vertices=verts.astype(np.float64), triangles=faces.astype(np.int64))
