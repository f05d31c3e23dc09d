"""Triangle meshes from surface grids; OBJ / ASCII PLY / Gauss CSV / JSON report I/O."""
from __future__ import annotations

import csv
import io
import json
import os
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from .errors import GaussFieldError, MeshError
from .reconstruct import SPACING_TOL, GaussField

FLOAT = "{:.17g}"


@dataclass
class TriangleMesh:
    vertices: np.ndarray                 # (V, 3)
    faces: np.ndarray                    # (T, 3) zero-based
    normals: np.ndarray | None = None    # (V, 3)

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float).reshape(-1, 3)
        self.faces = np.asarray(self.faces, dtype=np.int64).reshape(-1, 3)
        if self.normals is not None:
            self.normals = np.asarray(self.normals, dtype=float).reshape(-1, 3)
            if len(self.normals) != len(self.vertices):
                raise MeshError("normals and vertices differ in length")
        if self.faces.size and (self.faces.min() < 0 or self.faces.max() >= len(self.vertices)):
            raise MeshError("face index out of range")

    def __len__(self):
        return len(self.faces)


def grid_to_mesh(grid) -> TriangleMesh:
    """Two triangles per quad whose four corners are all admissible.

    Quads touching a flagged point are left out, leaving holes.  Only vertices
    used by some triangle are emitted.  Triangles wind counter-clockwise about
    the Gauss-map normal (z_x x z_y points along the normal).
    """
    return mesh_from_arrays(grid.position, grid.normal, grid.admissible)


def mesh_from_arrays(position, normal, mask) -> TriangleMesh:
    """Mesh a lattice ``position[i, j]`` keeping only quads with all four corners in ``mask``."""
    quads = mask[:-1, :-1] & mask[1:, :-1] & mask[1:, 1:] & mask[:-1, 1:]
    used = np.zeros_like(mask)
    for di in (0, 1):
        for dj in (0, 1):
            used[di:di + quads.shape[0], dj:dj + quads.shape[1]] |= quads
    index = np.full(mask.shape, -1, dtype=np.int64)
    index[used] = np.arange(int(used.sum()))
    faces = []
    for i, j in np.argwhere(quads):
        a, b, c, d = index[i, j], index[i + 1, j], index[i + 1, j + 1], index[i, j + 1]
        faces.append((a, b, c))
        faces.append((a, c, d))
    return TriangleMesh(position[used], np.array(faces, dtype=np.int64).reshape(-1, 3),
                        normal[used])


@contextmanager
def _text_sink(sink):
    if isinstance(sink, (str, os.PathLike)):
        with open(sink, "w", newline="\n", encoding="ascii") as fh:
            yield fh
    else:
        yield sink


def _fmt(values):
    return " ".join(FLOAT.format(float(v)) for v in values)


def format_obj(mesh: TriangleMesh) -> str:
    if len(mesh) == 0:
        raise MeshError("refusing to write an empty mesh")
    out = io.StringIO()
    for v in mesh.vertices:
        out.write(f"v {_fmt(v)}\n")
    if mesh.normals is not None:
        for n in mesh.normals:
            out.write(f"vn {_fmt(n)}\n")
    for a, b, c in mesh.faces + 1:
        if mesh.normals is not None:
            out.write(f"f {a}//{a} {b}//{b} {c}//{c}\n")
        else:
            out.write(f"f {a} {b} {c}\n")
    return out.getvalue()


def format_ply(mesh: TriangleMesh) -> str:
    if len(mesh) == 0:
        raise MeshError("refusing to write an empty mesh")
    normals = mesh.normals if mesh.normals is not None else np.zeros_like(mesh.vertices)
    out = io.StringIO()
    out.write("ply\nformat ascii 1.0\n")
    out.write(f"element vertex {len(mesh.vertices)}\n")
    for name in ("x", "y", "z", "nx", "ny", "nz"):
        out.write(f"property double {name}\n")
    out.write(f"element face {len(mesh.faces)}\n")
    out.write("property list uchar int vertex_indices\nend_header\n")
    for v, n in zip(mesh.vertices, normals):
        out.write(f"{_fmt(v)} {_fmt(n)}\n")
    for a, b, c in mesh.faces:
        out.write(f"3 {a} {b} {c}\n")
    return out.getvalue()


def write_obj(mesh, sink):
    text = format_obj(mesh)
    with _text_sink(sink) as fh:
        fh.write(text)


def write_ply(mesh, sink):
    text = format_ply(mesh)
    with _text_sink(sink) as fh:
        fh.write(text)


def read_ply(source) -> TriangleMesh:
    """Read an ASCII PLY with the layout produced by :func:`write_ply`."""
    text = source.read() if hasattr(source, "read") else open(source, encoding="ascii").read()
    lines = text.splitlines()
    if not lines or lines[0] != "ply":
        raise MeshError("not a PLY file")
    nv = nf = None
    k = 1
    while lines[k] != "end_header":
        parts = lines[k].split()
        if parts[:2] == ["element", "vertex"]:
            nv = int(parts[2])
        elif parts[:2] == ["element", "face"]:
            nf = int(parts[2])
        k += 1
    body = lines[k + 1:]
    data = np.array([[float(t) for t in ln.split()] for ln in body[:nv]]).reshape(-1, 6)
    faces = np.array([[int(t) for t in ln.split()[1:4]] for ln in body[nv:nv + nf]]).reshape(-1, 3)
    return TriangleMesh(data[:, :3], faces, data[:, 3:])


def read_obj(source) -> TriangleMesh:
    text = source.read() if hasattr(source, "read") else open(source, encoding="ascii").read()
    verts, norms, faces = [], [], []
    for ln in text.splitlines():
        parts = ln.split()
        if not parts:
            continue
        if parts[0] == "v":
            verts.append([float(t) for t in parts[1:4]])
        elif parts[0] == "vn":
            norms.append([float(t) for t in parts[1:4]])
        elif parts[0] == "f":
            faces.append([int(t.split("/")[0]) - 1 for t in parts[1:4]])
    return TriangleMesh(np.array(verts), np.array(faces), np.array(norms) if norms else None)


# --------------------------------------------------------------------------
# Gauss-field CSV: header x,y,xi,eta,zeta


GAUSS_COLUMNS = ("x", "y", "xi", "eta", "zeta")


def write_gauss_csv(field: GaussField, sink):
    with _text_sink(sink) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(GAUSS_COLUMNS)
        for i, x in enumerate(field.x):
            for j, y in enumerate(field.y):
                w.writerow([FLOAT.format(v) for v in (x, y, *field.normals[i, j])])


def _axis(values, name):
    """Distinct coordinate values (clustered within SPACING_TOL) and each row's index."""
    order = np.argsort(values, kind="stable")
    levels = []
    index = np.empty(len(values), dtype=np.int64)
    for k in order:
        if not levels or values[k] - levels[-1][0] > SPACING_TOL:
            levels.append([values[k]])
        else:
            levels[-1].append(values[k])
        index[k] = len(levels) - 1
    coords = np.array([lv[0] for lv in levels])
    if len(coords) >= 2:
        d = np.diff(coords)
        if np.max(np.abs(d - d.mean())) > SPACING_TOL:
            raise GaussFieldError(f"{name} spacing is not uniform")
    return coords, index


def read_gauss_csv(source) -> GaussField:
    """Parse a Gauss-map CSV into a :class:`GaussField`."""
    if isinstance(source, (str, os.PathLike)):
        with open(source, newline="", encoding="ascii") as fh:
            return read_gauss_csv(fh)
    reader = csv.reader(source)
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != list(GAUSS_COLUMNS):
        raise GaussFieldError(f"row 1: header must be {','.join(GAUSS_COLUMNS)}")
    rows = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(GAUSS_COLUMNS):
            raise GaussFieldError(f"row {lineno}: expected {len(GAUSS_COLUMNS)} columns, got {len(row)}")
        try:
            rows.append([float(v) for v in row])
        except ValueError:
            raise GaussFieldError(f"row {lineno}: non-numeric value") from None
    if not rows:
        raise GaussFieldError("no data rows")
    data = np.array(rows)
    xs, ix = _axis(data[:, 0], "x")
    ys, iy = _axis(data[:, 1], "y")
    normals = np.full((len(xs), len(ys), 3), np.nan)
    seen = np.zeros((len(xs), len(ys)), dtype=bool)
    for k, (i, j) in enumerate(zip(ix, iy)):
        if seen[i, j]:
            raise GaussFieldError(f"row {k + 2}: duplicate grid point")
        seen[i, j] = True
        normals[i, j] = data[k, 2:]
    if not seen.all():
        i, j = np.argwhere(~seen)[0]
        raise GaussFieldError(f"grid point ({xs[i]}, {ys[j]}) missing")
    return GaussField(xs, ys, normals)


# --------------------------------------------------------------------------
# reports


@dataclass
class DiagnosticsReport:
    """Machine-readable run summary; serialized as JSON with a fixed key order."""

    command: str
    job: dict
    families: dict = field(default_factory=dict)
    flags: dict = field(default_factory=dict)
    subclass: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def add_family(self, summary: dict, **more):
        name = summary["name"]
        if name in self.families:
            raise ValueError(f"residual family {name!r} reported twice")
        entry = {k: v for k, v in summary.items() if k != "name"}
        entry.update(more)
        self.families[name] = entry

    def to_dict(self):
        return {
            "command": self.command,
            "job": self.job,
            "flags": self.flags,
            "subclass": self.subclass,
            "families": self.families,
            "extra": self.extra,
        }

    def to_text(self):
        return json.dumps(_plain(self.to_dict()), indent=2, allow_nan=False) + "\n"


def _plain(obj):
    """Convert numpy scalars/arrays and tuples to JSON-ready values; NaN/inf become None."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if np.isfinite(v) else None
    if isinstance(obj, complex):
        return [_plain(obj.real), _plain(obj.imag)]
    return obj


def write_report(report: DiagnosticsReport, sink):
    text = report.to_text()
    with _text_sink(sink) as fh:
        fh.write(text)
