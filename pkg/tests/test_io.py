import json

import numpy as np
import pytest

from hybridseg import io
from hybridseg.exceptions import (
    HeaderPayloadMismatch,
    IndexOutOfRange,
    IoFailure,
    MalformedConfig,
    MalformedHeader,
    MalformedMask,
    UnknownDtype,
)
from hybridseg.levelset import EvolutionParams
from hybridseg.mesh import TriangleMesh, marching_cubes
from oracles import sphere_sdf


def write_header(path, dims, dtype="u8", **extra):
    path.write_text(json.dumps({"dims": dims, "spacing": [1, 1, 1], "dtype": dtype, "byteOrder": "little", **extra}))


def test_u8_scaling_and_layout(tmp_path):
    (tmp_path / "v.raw").write_bytes(bytes(range(8)))
    write_header(tmp_path / "v.json", [2, 2, 2])
    vol, header = io.read_volume(tmp_path / "v.raw")
    assert header.dims == (2, 2, 2)
    for i in range(2):
        for j in range(2):
            for k in range(2):
                assert vol[i, j, k] == (i + 2 * j + 4 * k) / 255


def test_u16_scaling(tmp_path):
    (tmp_path / "v.raw").write_bytes(np.array([0, 65535], dtype="<u2").tobytes())
    write_header(tmp_path / "v.json", [2, 1, 1], dtype="u16")
    vol, _ = io.read_volume(tmp_path / "v.raw")
    assert vol.ravel().tolist() == [0.0, 1.0]


def test_payload_size_mismatch(tmp_path):
    (tmp_path / "v.raw").write_bytes(bytes(63))
    write_header(tmp_path / "v.json", [4, 4, 4])
    with pytest.raises(HeaderPayloadMismatch):
        io.read_volume(tmp_path / "v.raw")


def test_unknown_dtype(tmp_path):
    (tmp_path / "v.raw").write_bytes(bytes(8))
    write_header(tmp_path / "v.json", [2, 2, 2], dtype="f64")
    with pytest.raises(UnknownDtype):
        io.read_volume(tmp_path / "v.raw")
    with pytest.raises(UnknownDtype):
        io.write_volume(np.zeros((2, 2, 2)), tmp_path / "w.raw", dtype="i8")


@pytest.mark.parametrize("content", [
    "not json",
    '{"dims": [2, 2], "dtype": "u8"}',
    '{"dims": [2, 2, 2]}',
    '{"dims": [2, 2, 2], "dtype": "u8", "spacing": [1, 0, 1]}',
    '{"dims": [2, 2, 2], "dtype": "u8", "byteOrder": "big"}',
])
def test_malformed_header(tmp_path, content):
    (tmp_path / "v.raw").write_bytes(bytes(8))
    (tmp_path / "v.json").write_text(content)
    with pytest.raises(MalformedHeader):
        io.read_volume(tmp_path / "v.raw")


def test_missing_file(tmp_path):
    with pytest.raises(IoFailure):
        io.read_volume(tmp_path / "absent.raw")


def test_f32_round_trip_is_bit_exact(tmp_path, rng):
    data = rng.standard_normal((3, 4, 5)).astype(np.float32)
    header = io.write_volume(data, tmp_path / "v.raw", spacing=(0.5, 1.0, 2.5))
    back, read_header = io.read_volume(tmp_path / "v.raw")
    assert back.astype(np.float32).tobytes() == data.tobytes()
    assert read_header == header
    raw = (tmp_path / "v.raw").read_bytes()
    flat = np.frombuffer(raw, dtype="<f4")
    assert flat[1 + 3 * 2 + 12 * 3] == data[1, 2, 3]


def test_header_round_trip(tmp_path):
    header = io.VolumeHeader(dims=(3, 4, 5), spacing=(0.5, 0.25, 2.0), dtype="u16")
    io.write_header(header, tmp_path / "h.json")
    first = (tmp_path / "h.json").read_bytes()
    assert io.read_header(tmp_path / "h.json") == header
    io.write_header(io.read_header(tmp_path / "h.json"), tmp_path / "h.json")
    assert (tmp_path / "h.json").read_bytes() == first
    assert set(json.loads(first)) == {"dims", "spacing", "dtype", "byteOrder"}


def test_mask_round_trip(tmp_path, rng):
    mask = rng.random((5, 6, 7)) > 0.5
    io.write_mask(mask, tmp_path / "m.raw")
    assert np.array_equal(io.read_mask(tmp_path / "m.raw"), mask)
    assert set((tmp_path / "m.raw").read_bytes()) <= {0, 1}


def test_empty_mask_round_trip(tmp_path):
    mask = np.zeros((3, 3, 3), dtype=bool)
    io.write_mask(mask, tmp_path / "m.raw")
    assert (tmp_path / "m.raw").read_bytes() == bytes(27)
    assert not io.read_mask(tmp_path / "m.raw").any()


def test_mask_with_byte_two(tmp_path):
    (tmp_path / "m.raw").write_bytes(bytes([0, 1, 2, 0, 0, 0, 0, 0]))
    write_header(tmp_path / "m.json", [2, 2, 2])
    with pytest.raises(MalformedMask):
        io.read_mask(tmp_path / "m.raw")


def test_single_triangle_obj(tmp_path):
    mesh = TriangleMesh(np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0.5]], float), np.array([[0, 1, 2]]))
    io.write_mesh(mesh, tmp_path / "t.obj")
    lines = (tmp_path / "t.obj").read_text().splitlines()
    assert lines[0].startswith("#")
    assert lines[1:] == ["v 0.000000 0.000000 0.000000", "v 1.000000 0.000000 0.000000",
                         "v 0.000000 1.000000 0.500000", "f 1 2 3"]


def test_empty_mesh_obj(tmp_path):
    io.write_mesh(TriangleMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64)), tmp_path / "e.obj")
    lines = (tmp_path / "e.obj").read_text().splitlines()
    assert len(lines) == 1 and lines[0].startswith("#")


def test_sphere_obj_reloads_with_genus_zero(tmp_path):
    mesh = marching_cubes(sphere_sdf((24, 24, 24), (11.5, 12, 12), 7))
    io.write_mesh(mesh, tmp_path / "s.obj")
    back = io.read_obj(tmp_path / "s.obj")
    assert back.n_triangles == mesh.n_triangles
    assert back.euler_characteristic() == 2
    assert np.array_equal(back.triangles, mesh.triangles)
    np.testing.assert_allclose(back.vertices, mesh.vertices, atol=5e-7)


def ppm_payload(path):
    data = path.read_bytes()
    magic, dims, maxval, rest = data.split(b"\n", 3)
    assert magic == b"P6" and maxval == b"255"
    cols, rows = map(int, dims.split())
    return cols, rows, rest


def test_ppm_all_black(tmp_path):
    io.export_slice(np.zeros((5, 3, 2)), None, "z", 1, tmp_path / "s.ppm")
    cols, rows, payload = ppm_payload(tmp_path / "s.ppm")
    assert (cols, rows) == (5, 3)
    assert payload == bytes(5 * 3 * 3)


def test_ppm_full_mask_is_blue(tmp_path, rng):
    vol = rng.random((4, 5, 6))
    io.export_slice(vol, np.ones(vol.shape, bool), "x", 2, tmp_path / "s.ppm")
    cols, rows, payload = ppm_payload(tmp_path / "s.ppm")
    assert (cols, rows) == (5, 6)
    pixels = np.frombuffer(payload, np.uint8).reshape(rows, cols, 3)
    assert np.all(pixels[..., 2] == 255)


def test_ppm_fixture_4x4(tmp_path):
    i, j = np.meshgrid(np.arange(4), np.arange(4), indexing="ij")
    vol = ((i + 4 * j) / 15.0)[:, :, None]
    mask = (i == j)[:, :, None]
    io.export_slice(vol, mask, "z", 0, tmp_path / "s.ppm")
    expected = b"P6\n4 4\n255\n" + bytes([
        0, 0, 255, 17, 17, 17, 34, 34, 34, 51, 51, 51,
        68, 68, 68, 42, 42, 255, 102, 102, 102, 119, 119, 119,
        136, 136, 136, 153, 153, 153, 85, 85, 255, 187, 187, 187,
        204, 204, 204, 221, 221, 221, 238, 238, 238, 127, 127, 255,
    ])
    assert (tmp_path / "s.ppm").read_bytes() == expected


def test_slice_index_out_of_range(tmp_path):
    with pytest.raises(IndexOutOfRange):
        io.export_slice(np.zeros((2, 2, 2)), None, "y", 2, tmp_path / "s.ppm")


def test_config_parsing():
    params, seed = io.parse_config("""
        # tuning
        alpha = 0.1
        dt = 0.25
        band_width = inf
        max_iters = 50
        n_clusters = 3
        erosion_steps = auto
    """)
    assert params == EvolutionParams(alpha=0.1, dt=0.25, band_width=float("inf"), max_iters=50)
    assert seed == {"n_clusters": 3, "erosion_steps": "auto"}


@pytest.mark.parametrize("text", ["alpah = 0.1", "alpha = 0.1\nalpha = 0.2", "alpha 0.1", "alpha = x", "dt = 0.9"])
def test_config_errors(text):
    with pytest.raises(MalformedConfig):
        io.parse_config(text)
