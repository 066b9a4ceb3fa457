"""File formats.

Volumes and masks are headerless little-endian raw files with a JSON sidecar
(``dims``, ``spacing``, ``dtype``, ``byteOrder``). Voxels are stored with the
first index varying fastest. All writers go through a temporary file and an
atomic rename.
"""
import json
import math
import os
import tempfile
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from ._validation import check_mask
from .exceptions import (
    HeaderPayloadMismatch,
    IndexOutOfRange,
    IoFailure,
    MalformedConfig,
    MalformedHeader,
    MalformedMask,
    UnknownDtype,
)
from .levelset import EvolutionParams

DTYPES = {"u8": np.dtype("<u1"), "u16": np.dtype("<u2"), "f32": np.dtype("<f4")}
SEED_KEYS = ("n_clusters", "erosion_steps")


@dataclass(frozen=True)
class VolumeHeader:
    dims: tuple
    spacing: tuple = (1.0, 1.0, 1.0)
    dtype: str = "f32"
    byte_order: str = "little"

    @property
    def payload_size(self):
        return int(np.prod(self.dims)) * DTYPES[self.dtype].itemsize

    def to_dict(self):
        return {
            "dims": list(self.dims),
            "spacing": list(self.spacing),
            "dtype": self.dtype,
            "byteOrder": self.byte_order,
        }

    @classmethod
    def from_dict(cls, raw):
        if not isinstance(raw, dict):
            raise MalformedHeader("header must be a JSON object")
        try:
            dims = tuple(int(d) for d in raw["dims"])
            spacing = tuple(float(s) for s in raw.get("spacing", (1.0, 1.0, 1.0)))
            dtype = raw["dtype"]
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedHeader(f"invalid header: {exc}") from exc
        byte_order = raw.get("byteOrder", "little")
        if len(dims) != 3 or min(dims) < 1:
            raise MalformedHeader(f"dims must be three positive integers, got {list(dims)}")
        if len(spacing) != 3 or min(spacing) <= 0 or not all(map(math.isfinite, spacing)):
            raise MalformedHeader(f"spacing must be three positive reals, got {list(spacing)}")
        if dtype not in DTYPES:
            raise UnknownDtype(f"unknown dtype {dtype!r}; expected one of {sorted(DTYPES)}")
        if byte_order != "little":
            raise MalformedHeader(f"only little-endian payloads are supported, got {byte_order!r}")
        return cls(dims=dims, spacing=spacing, dtype=dtype, byte_order=byte_order)


def sidecar_path(raw_path):
    return Path(raw_path).with_suffix(".json")


def atomic_write(path, data):
    """Write bytes or text to ``path`` via a temporary file and rename."""
    path = Path(path)
    mode = "w" if isinstance(data, str) else "wb"
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
        with os.fdopen(fd, mode) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except OSError as exc:
        raise IoFailure(f"could not write {path}: {exc}") from exc


def _read_bytes(path):
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise IoFailure(f"could not read {path}: {exc}") from exc


def read_header(path):
    try:
        raw = json.loads(_read_bytes(path))
    except json.JSONDecodeError as exc:
        raise MalformedHeader(f"{path}: not valid JSON ({exc})") from exc
    return VolumeHeader.from_dict(raw)


def write_header(header, path):
    atomic_write(path, json.dumps(header.to_dict(), indent=2) + "\n")


def _read_payload(raw_path, header):
    payload = _read_bytes(raw_path)
    if len(payload) != header.payload_size:
        raise HeaderPayloadMismatch(
            f"{raw_path}: header declares {header.payload_size} bytes "
            f"({'x'.join(map(str, header.dims))} {header.dtype}), file has {len(payload)}"
        )
    flat = np.frombuffer(payload, dtype=DTYPES[header.dtype])
    return flat.reshape(header.dims, order="F")


def read_volume(raw_path, header_path=None):
    """Load a volume; returns ``(data, header)``.

    Integer payloads are divided by their maximum representable value;
    ``f32`` values are returned unchanged (as float64).
    """
    header = read_header(header_path or sidecar_path(raw_path))
    data = _read_payload(raw_path, header)
    if header.dtype == "f32":
        out = data.astype(np.float64)
    else:
        out = data.astype(np.float64) / np.iinfo(DTYPES[header.dtype]).max
    return out, header


def write_volume(data, raw_path, header_path=None, dtype="f32", spacing=(1.0, 1.0, 1.0)):
    """Write ``data`` and its sidecar; integer dtypes expect values in [0, 1]."""
    if dtype not in DTYPES:
        raise UnknownDtype(f"unknown dtype {dtype!r}; expected one of {sorted(DTYPES)}")
    data = np.asarray(data)
    if data.ndim != 3:
        raise ValueError(f"expected a 3-D volume, got ndim={data.ndim}")
    if dtype == "f32":
        payload = data.astype(DTYPES["f32"])
    else:
        top = np.iinfo(DTYPES[dtype]).max
        payload = np.round(np.clip(data, 0.0, 1.0) * top).astype(DTYPES[dtype])
    header = VolumeHeader(dims=data.shape, spacing=tuple(float(s) for s in spacing), dtype=dtype)
    atomic_write(raw_path, payload.tobytes(order="F"))
    write_header(header, header_path or sidecar_path(raw_path))
    return header


def write_mask(mask, path, header_path=None, spacing=(1.0, 1.0, 1.0)):
    mask = check_mask(mask)
    header = VolumeHeader(dims=mask.shape, spacing=tuple(float(s) for s in spacing), dtype="u8")
    atomic_write(path, mask.astype(np.uint8).tobytes(order="F"))
    write_header(header, header_path or sidecar_path(path))
    return header


def read_mask(path, header_path=None):
    """Load a 0/1 ``u8`` mask; any other byte value raises ``MalformedMask``."""
    header = read_header(header_path or sidecar_path(path))
    if header.dtype != "u8":
        raise MalformedMask(f"{path}: masks must be stored as u8, header says {header.dtype}")
    data = _read_payload(path, header)
    bad = data > 1
    if bad.any():
        raise MalformedMask(f"{path}: found byte value {int(data[bad][0])}; masks hold only 0 and 1")
    return data.astype(bool)


def write_mesh(mesh, path):
    """ASCII OBJ with 1-based face indices."""
    lines = [f"# {mesh.n_vertices} vertices, {mesh.n_triangles} triangles (voxel coordinates)"]
    lines += [f"v {x:.6f} {y:.6f} {z:.6f}" for x, y, z in mesh.vertices]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in mesh.triangles]
    atomic_write(path, "\n".join(lines) + "\n")


def read_obj(path):
    """Minimal OBJ reader for files written by :func:`write_mesh`."""
    from .mesh import TriangleMesh

    verts, faces = [], []
    for line in _read_bytes(path).decode().splitlines():
        parts = line.split()
        if not parts or parts[0].startswith("#"):
            continue
        if parts[0] == "v":
            verts.append([float(p) for p in parts[1:4]])
        elif parts[0] == "f":
            faces.append([int(p.split("/")[0]) - 1 for p in parts[1:4]])
    return TriangleMesh(
        vertices=np.array(verts, dtype=np.float64).reshape(-1, 3),
        triangles=np.array(faces, dtype=np.int64).reshape(-1, 3),
    )


AXES = {"x": 0, "y": 1, "z": 2}


def slice_image(volume, mask=None, axis="z", index=0):
    """RGB pixels (rows, cols, 3) of one slice.

    Columns follow the first remaining axis and rows the second. Intensity
    is clamped to [0, 1] and scaled to 0-255; mask pixels get blue = 255
    and half red/green.
    """
    if axis not in AXES:
        raise ValueError(f"axis must be one of x, y, z; got {axis!r}")
    ax = AXES[axis]
    volume = np.asarray(volume, dtype=np.float64)
    if not 0 <= index < volume.shape[ax]:
        raise IndexOutOfRange(f"slice index {index} outside 0..{volume.shape[ax] - 1} along {axis}")
    plane = np.take(volume, index, axis=ax).T
    gray = np.round(np.clip(plane, 0.0, 1.0) * 255).astype(np.uint8)
    rgb = np.repeat(gray[:, :, None], 3, axis=2)
    if mask is not None:
        m = np.take(check_mask(mask, volume.shape), index, axis=ax).T
        rgb[m, 0] //= 2
        rgb[m, 1] //= 2
        rgb[m, 2] = 255
    return rgb


def export_slice(volume, mask, axis, index, path):
    """Write one slice as a binary PPM (P6)."""
    rgb = slice_image(volume, mask, axis, index)
    rows, cols = rgb.shape[:2]
    atomic_write(path, f"P6\n{cols} {rows}\n255\n".encode("ascii") + rgb.tobytes())


def _parse_value(key, text):
    text = text.strip()
    if key in SEED_KEYS and text.lower() == "auto":
        return "auto"
    if text.lower() in ("inf", "infinite", "infinity"):
        return math.inf
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        raise MalformedConfig(f"{key}: cannot parse value {text!r}") from None


def parse_config(text):
    """Parse flat ``key = value`` text into ``(EvolutionParams, seed_options)``.

    ``#`` starts a comment. Unknown or repeated keys are errors.
    """
    evo_keys = {f.name for f in fields(EvolutionParams)}
    evo, seed = {}, {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise MalformedConfig(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in evo or key in seed:
            raise MalformedConfig(f"line {lineno}: duplicate key {key!r}")
        if key in evo_keys:
            evo[key] = _parse_value(key, value)
        elif key in SEED_KEYS:
            seed[key] = _parse_value(key, value)
        else:
            raise MalformedConfig(f"line {lineno}: unknown key {key!r}")
    try:
        params = EvolutionParams(**evo)
    except ValueError as exc:
        raise MalformedConfig(str(exc)) from exc
    return params, seed


def read_config(path):
    return parse_config(_read_bytes(path).decode())
