"""Mesh serialization: binary PLY (with scalar channels) and OBJ.

PLY layout: x, y, z as float32 followed by one float32 property per scalar
channel, faces as (uchar count, int32 indices).  Channel property names are
sanitized to at most 31 ASCII characters so downstream PLY tooling accepts
them.  Output is byte-deterministic for a given mesh.
"""

from __future__ import annotations

import io
import re
from os import PathLike
from pathlib import Path

import numpy as np

from .extract import IndexedMesh

_NAME_RE = re.compile(r"[^A-Za-z0-9_]")
_MAX_NAME = 31


class PlyFormatError(ValueError):
    """Raised when a PLY payload cannot be parsed."""


def sanitize_channel_name(name: str, taken: set[str] | None = None) -> str:
    """ASCII-safe property name, <= 31 chars, unique within ``taken``."""
    clean = _NAME_RE.sub("_", name.strip()) or "channel"
    if clean[0].isdigit():
        clean = "_" + clean
    clean = clean[:_MAX_NAME]
    if taken is None:
        return clean
    if clean not in taken:
        taken.add(clean)
        return clean
    stem = clean
    for i in range(1, 1000):
        suffix = f"_{i}"
        cand = stem[: _MAX_NAME - len(suffix)] + suffix
        if cand not in taken:
            taken.add(cand)
            return cand
    raise ValueError(f"cannot make a unique property name for {name!r}")


def write_ply_bytes(mesh: IndexedMesh) -> bytes:
    """Binary little-endian PLY with per-vertex scalar channels."""
    names = sorted(mesh.channels)
    taken: set[str] = {"x", "y", "z"}
    props = [(sanitize_channel_name(n, taken), n) for n in names]

    buf = io.BytesIO()
    header = ["ply", "format binary_little_endian 1.0"]
    header.append(f"element vertex {mesh.vertex_count}")
    header += ["property float x", "property float y", "property float z"]
    for prop, _ in props:
        header.append(f"property float {prop}")
    header.append(f"element face {mesh.triangle_count}")
    header.append("property list uchar int vertex_indices")
    header.append("end_header")
    buf.write(("\n".join(header) + "\n").encode("ascii"))

    ncols = 3 + len(props)
    vdata = np.empty((mesh.vertex_count, ncols), dtype="<f4")
    vdata[:, :3] = mesh.vertices.astype("<f4")
    for col, (_, orig) in enumerate(props, start=3):
        vdata[:, col] = mesh.channels[orig].astype("<f4")
    buf.write(vdata.tobytes())

    if mesh.triangle_count:
        fdtype = np.dtype([("n", "u1"), ("idx", "<i4", (3,))])
        fdata = np.empty(mesh.triangle_count, dtype=fdtype)
        fdata["n"] = 3
        fdata["idx"] = mesh.triangles.astype("<i4")
        buf.write(fdata.tobytes())
    return buf.getvalue()


def write_ply(mesh: IndexedMesh, path: str | PathLike) -> None:
    Path(path).write_bytes(write_ply_bytes(mesh))


_PLY_SCALAR = {
    "float": ("<f4", 4), "float32": ("<f4", 4),
    "double": ("<f8", 8), "float64": ("<f8", 8),
    "int": ("<i4", 4), "int32": ("<i4", 4),
    "uint": ("<u4", 4), "uint32": ("<u4", 4),
    "short": ("<i2", 2), "int16": ("<i2", 2),
    "ushort": ("<u2", 2), "uint16": ("<u2", 2),
    "char": ("i1", 1), "int8": ("i1", 1),
    "uchar": ("u1", 1), "uint8": ("u1", 1),
}


def read_ply_bytes(payload: bytes) -> IndexedMesh:
    """Parse a binary little-endian PLY produced by :func:`write_ply_bytes`.

    Tolerates other scalar vertex property types and index widths; positions
    must be the x/y/z properties, every other vertex property becomes a
    float64 channel.
    """
    end = payload.find(b"end_header\n")
    if not payload.startswith(b"ply") or end < 0:
        raise PlyFormatError("not a PLY payload")
    header = payload[: end + len(b"end_header\n")].decode("ascii", "replace")
    body = payload[end + len(b"end_header\n"):]

    fmt = None
    elements: list[tuple[str, int, list]] = []  # (name, count, props)
    for line in header.splitlines():
        tok = line.split()
        if not tok:
            continue
        if tok[0] == "format":
            fmt = tok[1]
        elif tok[0] == "element":
            elements.append((tok[1], int(tok[2]), []))
        elif tok[0] == "property":
            if not elements:
                raise PlyFormatError("property before any element")
            if tok[1] == "list":
                elements[-1][2].append(("list", tok[2], tok[3], tok[4]))
            else:
                elements[-1][2].append(("scalar", tok[1], tok[2]))
    if fmt != "binary_little_endian":
        raise PlyFormatError(f"unsupported PLY format {fmt!r}")

    vertices = np.zeros((0, 3))
    channels: dict[str, np.ndarray] = {}
    triangles = np.zeros((0, 3), dtype=np.int64)
    offset = 0
    for name, count, props in elements:
        if name == "vertex":
            fields = []
            for p in props:
                if p[0] != "scalar":
                    raise PlyFormatError("list property in vertex element")
                if p[1] not in _PLY_SCALAR:
                    raise PlyFormatError(f"unsupported vertex type {p[1]!r}")
                fields.append((p[2], _PLY_SCALAR[p[1]][0]))
            dt = np.dtype(fields)
            nbytes = dt.itemsize * count
            if offset + nbytes > len(body):
                raise PlyFormatError("truncated vertex data")
            rec = np.frombuffer(body, dtype=dt, count=count, offset=offset)
            offset += nbytes
            fnames = [f[0] for f in fields]
            for axis in ("x", "y", "z"):
                if axis not in fnames:
                    raise PlyFormatError(f"vertex element lacks {axis!r}")
            vertices = np.column_stack(
                [rec["x"], rec["y"], rec["z"]]
            ).astype(np.float64)
            for fname in fnames:
                if fname not in ("x", "y", "z"):
                    channels[fname] = rec[fname].astype(np.float64)
        elif name == "face":
            if len(props) != 1 or props[0][0] != "list":
                raise PlyFormatError("face element must be one list property")
            cdt, csz = _PLY_SCALAR[props[0][1]]
            idt, isz = _PLY_SCALAR[props[0][2]]
            if offset + count * (csz + 3 * isz) > len(body):
                raise PlyFormatError("truncated face data")
            tris = np.empty((count, 3), dtype=np.int64)
            for i in range(count):
                n = int(np.frombuffer(body, dtype=cdt, count=1, offset=offset)[0])
                offset += csz
                if n != 3:
                    raise PlyFormatError(f"face {i} has {n} vertices; only triangles supported")
                tris[i] = np.frombuffer(body, dtype=idt, count=3, offset=offset)
                offset += 3 * isz
            triangles = tris
        else:
            raise PlyFormatError(f"unsupported element {name!r}")

    mesh = IndexedMesh(vertices, triangles, channels)
    mesh.validate()
    return mesh


def read_ply(path: str | PathLike) -> IndexedMesh:
    return read_ply_bytes(Path(path).read_bytes())


def write_obj(mesh: IndexedMesh, path: str | PathLike) -> list[Path]:
    """OBJ positions/faces; each channel goes to a sibling ``<stem>.<name>.txt``.

    Returns the list of files written (the .obj first).  OBJ has no standard
    per-vertex scalar slot, so channels are one-value-per-line text files in
    vertex order.
    """
    path = Path(path)
    lines = ["# isomarch mesh", f"# vertices {mesh.vertex_count} faces {mesh.triangle_count}"]
    taken: set[str] = set()
    sidecars: list[tuple[Path, str]] = []
    for name in sorted(mesh.channels):
        fname = sanitize_channel_name(name, taken)
        side = path.with_name(f"{path.stem}.{fname}.txt")
        sidecars.append((side, name))
        lines.append(f"# channel {fname} -> {side.name}")
    for v in mesh.vertices:
        lines.append(f"v {v[0]:.17g} {v[1]:.17g} {v[2]:.17g}")
    for t in mesh.triangles:
        lines.append(f"f {t[0] + 1} {t[1] + 1} {t[2] + 1}")
    path.write_text("\n".join(lines) + "\n", encoding="ascii")

    written = [path]
    for side, orig in sidecars:
        vals = mesh.channels[orig]
        side.write_text("".join(f"{v:.17g}\n" for v in vals), encoding="ascii")
        written.append(side)
    return written
