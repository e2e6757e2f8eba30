"""Mesh file export: binary STL and ASCII OBJ.

STL is the printable deliverable and must round-trip byte-exactly:
export(parse(export(m))) == export(m).  To make that hold, vertices are
committed to float32 first and normals are then derived from those
committed values, so a re-export sees exactly the numbers a parser read.
"""

from __future__ import annotations

from enum import Enum

import numpy as np

from .shape import ColorTriple, Mesh

__all__ = ["MeshFormat", "EmptyMesh", "export_mesh", "export_stl", "parse_stl", "export_obj", "parse_obj"]

_STL_HEADER = b"gazeforms binary stl".ljust(80, b" ")

_RECORD_DTYPE = np.dtype(
    [
        ("normal", "<f4", (3,)),
        ("vertices", "<f4", (3, 3)),
        ("attribute", "<u2"),
    ]
)
assert _RECORD_DTYPE.itemsize == 50


class MeshFormat(Enum):
    STL_BINARY = "stl"
    OBJ = "obj"


class EmptyMesh(ValueError):
    """Refused to export a mesh with zero triangles."""


def export_mesh(mesh: Mesh, fmt: MeshFormat) -> bytes:
    if fmt is MeshFormat.STL_BINARY:
        return export_stl(mesh)
    if fmt is MeshFormat.OBJ:
        return export_obj(mesh)
    raise ValueError(f"unknown format {fmt!r}")


def _unit_normals_f32(corners32: np.ndarray) -> np.ndarray:
    """Unit normals per triangle, computed in float64 from the committed
    float32 corners and rounded back to float32.  Zero-area -> zero normal."""
    p = corners32.astype(np.float64)
    n = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    length = np.linalg.norm(n, axis=1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        n = np.where(length > 0.0, n / length, 0.0)
    return n.astype(np.float32)


def export_stl(mesh: Mesh) -> bytes:
    if mesh.is_empty:
        raise EmptyMesh("mesh has no triangles")
    v32 = np.asarray(mesh.vertices, dtype=np.float32)
    corners = v32[np.asarray(mesh.triangles)]  # (F, 3, 3) float32
    records = np.zeros(len(corners), dtype=_RECORD_DTYPE)
    records["normal"] = _unit_normals_f32(corners)
    records["vertices"] = corners
    count = np.array([len(corners)], dtype="<u4").tobytes()
    return _STL_HEADER + count + records.tobytes()


def parse_stl(data: bytes, color: ColorTriple | None = None) -> Mesh:
    """Read a binary STL back as a triangle soup (no vertex welding)."""
    if len(data) < 84:
        raise ValueError("too short for binary STL")
    count = int(np.frombuffer(data[80:84], dtype="<u4")[0])
    expected = 84 + 50 * count
    if len(data) != expected:
        raise ValueError(f"length {len(data)} != expected {expected} for {count} triangles")
    records = np.frombuffer(data[84:], dtype=_RECORD_DTYPE)
    vertices = records["vertices"].reshape(-1, 3).astype(np.float64)
    triangles = np.arange(3 * count, dtype=np.int64).reshape(-1, 3)
    from .shape import GRAY

    return Mesh(vertices, triangles, color or GRAY)


def export_obj(mesh: Mesh) -> bytes:
    if mesh.is_empty:
        raise EmptyMesh("mesh has no triangles")
    lines = [f"# color {float(mesh.color.r)!r} {float(mesh.color.g)!r} {float(mesh.color.b)!r}"]
    for x, y, z in np.asarray(mesh.vertices, dtype=np.float64):
        lines.append(f"v {float(x)!r} {float(y)!r} {float(z)!r}")
    for a, b, c in np.asarray(mesh.triangles):
        lines.append(f"f {int(a) + 1} {int(b) + 1} {int(c) + 1}")
    return ("\n".join(lines) + "\n").encode("ascii")


def parse_obj(data: bytes) -> Mesh:
    vertices, faces = [], []
    color = None
    for line in data.decode("ascii").splitlines():
        if line.startswith("# color "):
            r, g, b = (float(tok) for tok in line.split()[2:5])
            color = ColorTriple(r, g, b)
        elif line.startswith("v "):
            vertices.append([float(tok) for tok in line.split()[1:4]])
        elif line.startswith("f "):
            faces.append([int(tok) - 1 for tok in line.split()[1:4]])
    from .shape import GRAY

    return Mesh(
        np.asarray(vertices, dtype=np.float64),
        np.asarray(faces, dtype=np.int64).reshape(-1, 3),
        color or GRAY,
    )
