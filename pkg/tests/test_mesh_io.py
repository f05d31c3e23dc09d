"""Meshing, mesh files, Gauss CSV and JSON reports."""
import io
import json

import numpy as np
import pytest

from minweier.errors import GaussFieldError, MeshError
from minweier.mesh_io import (
    DiagnosticsReport, TriangleMesh, format_obj, grid_to_mesh, mesh_from_arrays, read_gauss_csv,
    read_obj, read_ply, write_gauss_csv, write_obj, write_ply, write_report,
)
from minweier.reconstruct import GaussField
from minweier.weierstrass import WeierstrassJob, generate_grid


def lattice(n, m=None):
    m = m or n
    x, y = np.meshgrid(np.arange(n, dtype=float), np.arange(m, dtype=float), indexing="ij")
    pos = np.stack([x, y, np.zeros_like(x)], axis=-1)
    nrm = np.zeros_like(pos)
    nrm[..., 2] = 1
    return pos, nrm


def one_triangle():
    return TriangleMesh(np.eye(3), [[0, 1, 2]], np.tile([0, 0, 1.0], (3, 1)))


class TestMeshing:
    def test_single_quad(self):
        pos, nrm = lattice(2)
        mesh = mesh_from_arrays(pos, nrm, np.ones((2, 2), bool))
        assert len(mesh) == 2
        assert len(mesh.vertices) == 4

    def test_center_flagged(self):
        pos, nrm = lattice(3)
        mask = np.ones((3, 3), bool)
        mask[1, 1] = False
        mesh = mesh_from_arrays(pos, nrm, mask)
        assert len(mesh) == 0
        assert len(mesh.vertices) == 0

    def test_full_three_by_three(self):
        pos, nrm = lattice(3)
        mesh = mesh_from_arrays(pos, nrm, np.ones((3, 3), bool))
        assert len(mesh) == 8
        assert len(mesh.vertices) == 9

    def test_winding_follows_normal(self):
        pos, nrm = lattice(4, 3)
        mesh = mesh_from_arrays(pos, nrm, np.ones((4, 3), bool))
        v = mesh.vertices[mesh.faces]
        n = np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0])
        assert np.all(n[:, 2] > 0)

    def test_surface_winding(self):
        job = WeierstrassJob("z", 0.3 + 0.3j, (0.1, 1.1, 0.1, 1.1), grid=(9, 9))
        mesh = grid_to_mesh(generate_grid(job))
        v = mesh.vertices[mesh.faces]
        n = np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0])
        vn = mesh.normals[mesh.faces].mean(axis=1)
        assert np.all(np.sum(n * vn, axis=1) > 0)

    def test_holes_from_flags(self):
        # x=0 column is REG_FLOOR for w=z
        job = WeierstrassJob("z", 0.5 + 0.5j, (0, 1, 0.2, 1), grid=(5, 5))
        mesh = grid_to_mesh(generate_grid(job))
        assert len(mesh) == 2 * 3 * 4
        assert len(mesh.vertices) == 4 * 5

    def test_bad_index(self):
        with pytest.raises(MeshError):
            TriangleMesh(np.eye(3), [[0, 1, 3]])


class TestFiles:
    def test_obj_counts(self):
        text = format_obj(one_triangle())
        kinds = [ln.split()[0] for ln in text.splitlines()]
        assert kinds.count("v") == 3
        assert kinds.count("vn") == 3
        assert kinds.count("f") == 1

    def test_empty_mesh(self):
        empty = TriangleMesh(np.zeros((0, 3)), np.zeros((0, 3), int))
        with pytest.raises(MeshError):
            write_obj(empty, io.StringIO())
        with pytest.raises(MeshError):
            write_ply(empty, io.StringIO())

    def test_ply_round_trip(self):
        pos, nrm = lattice(4)
        pos[..., 2] = np.sin(pos[..., 0]) / 3
        mesh = mesh_from_arrays(pos, nrm, np.ones((4, 4), bool))
        buf = io.StringIO()
        write_ply(mesh, buf)
        back = read_ply(io.StringIO(buf.getvalue()))
        assert np.array_equal(back.vertices, mesh.vertices)
        assert np.array_equal(back.normals, mesh.normals)
        assert np.array_equal(back.faces, mesh.faces)

    def test_obj_round_trip(self, tmp_path):
        mesh = one_triangle()
        write_obj(mesh, tmp_path / "t.obj")
        back = read_obj(tmp_path / "t.obj")
        assert np.array_equal(back.vertices, mesh.vertices)
        assert np.array_equal(back.faces, mesh.faces)

    def test_ply_header(self):
        buf = io.StringIO()
        write_ply(one_triangle(), buf)
        head = buf.getvalue().split("end_header")[0]
        assert "format ascii 1.0" in head
        assert "element vertex 3" in head and "element face 1" in head


class TestGaussCSV:
    def field(self):
        x = np.linspace(0.1, 1.1, 5)
        y = np.linspace(-0.3, 0.3, 4)
        rng = np.random.default_rng(0)
        n = rng.normal(size=(5, 4, 3))
        n /= np.linalg.norm(n, axis=-1, keepdims=True)
        return GaussField(x, y, n)

    def test_round_trip(self):
        f = self.field()
        buf = io.StringIO()
        write_gauss_csv(f, buf)
        back = read_gauss_csv(io.StringIO(buf.getvalue()))
        assert np.max(np.abs(back.normals - f.normals)) <= 1e-15
        assert np.max(np.abs(back.x - f.x)) <= 1e-15

    def test_row_order_free(self):
        f = self.field()
        buf = io.StringIO()
        write_gauss_csv(f, buf)
        lines = buf.getvalue().splitlines()
        shuffled = "\n".join([lines[0]] + lines[1:][::-1]) + "\n"
        back = read_gauss_csv(io.StringIO(shuffled))
        assert np.array_equal(back.normals, f.normals)

    def test_missing_column(self):
        text = "x,y,xi,eta,zeta\n0,0,0,0,1\n0,1,0,0\n"
        with pytest.raises(GaussFieldError, match="row 3"):
            read_gauss_csv(io.StringIO(text))

    def test_bad_header(self):
        with pytest.raises(GaussFieldError, match="header"):
            read_gauss_csv(io.StringIO("x,y,z\n"))

    def test_duplicate(self):
        text = "x,y,xi,eta,zeta\n0,0,0,0,1\n0,0,0,0,1\n"
        with pytest.raises(GaussFieldError, match="duplicate"):
            read_gauss_csv(io.StringIO(text))

    def test_missing_point(self):
        buf = io.StringIO()
        write_gauss_csv(self.field(), buf)
        lines = buf.getvalue().splitlines()
        del lines[4]
        with pytest.raises(GaussFieldError, match="missing"):
            read_gauss_csv(io.StringIO("\n".join(lines)))


class TestReport:
    def test_json(self):
        rep = DiagnosticsReport("verify", {"expr": "z"})
        rep.add_family({"name": "a", "max": np.float64(1.5), "mean": float("nan")}, ok=np.bool_(True))
        rep.extra["pair"] = (np.int64(3), 1 + 2j)
        buf = io.StringIO()
        write_report(rep, buf)
        data = json.loads(buf.getvalue())
        assert data["families"]["a"] == {"max": 1.5, "mean": None, "ok": True}
        assert data["extra"]["pair"] == [3, [1.0, 2.0]]
        assert list(data) == ["command", "job", "flags", "subclass", "families", "extra"]

    def test_duplicate_family(self):
        rep = DiagnosticsReport("verify", {})
        rep.add_family({"name": "a"})
        with pytest.raises(ValueError):
            rep.add_family({"name": "a"})
