import numpy as np
import pytest

from hybridseg.distance import rebuild_sdf
from hybridseg.exceptions import NoZeroCrossing, SurfaceTouchesBorder
from hybridseg.mesh import TriangleMesh, marching_cubes
from oracles import sphere_sdf


@pytest.fixture(scope="module")
def sphere_mesh():
    phi = sphere_sdf((32, 32, 32), (15.5, 16.0, 16.2), 8.0)
    return phi, marching_cubes(phi)


def test_sphere_mesh_is_closed_genus_zero(sphere_mesh):
    _, mesh = sphere_mesh
    assert mesh.n_triangles > 0
    assert mesh.is_watertight()
    assert mesh.euler_characteristic() == 2


def test_sphere_vertices_on_surface(sphere_mesh):
    _, mesh = sphere_mesh
    r = np.linalg.norm(mesh.vertices - [15.5, 16.0, 16.2], axis=1)
    assert np.abs(r - 8.0).max() < 0.1


def test_sphere_area(sphere_mesh):
    _, mesh = sphere_mesh
    assert mesh.area() == pytest.approx(4 * np.pi * 64, rel=0.02)


def test_normals_point_along_gradient(sphere_mesh):
    phi, mesh = sphere_mesh
    normals = mesh.face_normals()
    centroids = mesh.vertices[mesh.triangles].mean(axis=1)
    grad = centroids - [15.5, 16.0, 16.2]
    assert np.all(np.einsum("ij,ij->i", normals, grad) > 0)


def test_mask_field_mesh_is_closed():
    grid = np.indices((24, 24, 24))
    mask = sum((g - 11.7) ** 2 for g in grid) <= 36
    mesh = marching_cubes(rebuild_sdf(mask))
    assert mesh.is_watertight()
    assert mesh.euler_characteristic() == 2


def test_torus_has_euler_zero():
    g = np.indices((40, 40, 24)).astype(float)
    x, y, z = g[0] - 19.5, g[1] - 19.5, g[2] - 11.5
    phi = np.sqrt((np.sqrt(x * x + y * y) - 10) ** 2 + z * z) - 4
    mesh = marching_cubes(phi)
    assert mesh.is_watertight()
    assert mesh.euler_characteristic() == 0


@pytest.mark.parametrize("value", [1.0, -1.0])
def test_single_sign_field(value):
    with pytest.raises(NoZeroCrossing):
        marching_cubes(np.full((4, 4, 4), value))


def test_surface_touching_border():
    phi = sphere_sdf((16, 16, 16), (2, 8, 8), 5)
    with pytest.raises(SurfaceTouchesBorder):
        marching_cubes(phi)


def test_single_corner_cube():
    phi = np.ones((2, 2, 2))
    phi[0, 0, 0] = -1.0
    mesh = marching_cubes(phi, allow_open=True)
    assert mesh.n_triangles == 1
    np.testing.assert_allclose(
        sorted(map(tuple, mesh.vertices)), [(0, 0, 0.5), (0, 0.5, 0), (0.5, 0, 0)]
    )
    normal = mesh.face_normals()[0]
    assert np.all(normal > 0)


def test_vertices_are_shared():
    phi = sphere_sdf((12, 12, 12), (5.5, 5.5, 5.5), 3.0)
    mesh = marching_cubes(phi)
    assert len(np.unique(mesh.vertices.round(9), axis=0)) == mesh.n_vertices


def test_empty_mesh_properties():
    mesh = TriangleMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))
    assert mesh.area() == 0.0
    assert mesh.euler_characteristic() == 0
