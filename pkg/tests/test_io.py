import numpy as np
import pytest

from fracell.io import fmt, read_vtk_points, trace_rows, write_csv, write_vtk
from fracell.mesh import Mesh, generate_cut_square_mesh, read_mesh, write_mesh
from fracell.stepper import StepRecord

TRIANGLE = Mesh(
    nodes=np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
    triangles=np.array([[0, 1, 2]]),
    boundary_edges=np.array([[0, 1], [1, 2], [2, 0]]),
)


def test_vtk_fixture(tmp_path):
    path = tmp_path / "t.vtk"
    write_vtk(TRIANGLE, np.array([1.0, 2.0, 3.0]), path)
    lines = path.read_text().splitlines()
    assert lines[0] == "# vtk DataFile Version 2.0"
    assert lines[2:5] == ["ASCII", "DATASET UNSTRUCTURED_GRID", "POINTS 3 double"]
    assert "CELLS 1 4" in lines and "3 0 1 2" in lines
    i = lines.index("CELL_TYPES 1")
    assert lines[i + 1] == "5"
    assert lines[i + 2:i + 5] == ["POINT_DATA 3", "SCALARS u double 1", "LOOKUP_TABLE default"]


def test_vtk_round_trip(tmp_path):
    mesh = generate_cut_square_mesh(8)
    field = np.sin(mesh.nodes[:, 0] * 7.0)
    write_vtk(mesh, field, tmp_path / "c.vtk")
    pts, vals = read_vtk_points(tmp_path / "c.vtk")
    assert np.allclose(pts[:, :2], mesh.nodes, rtol=1e-15, atol=0)
    assert np.all(pts[:, 2] == 0.0)
    assert np.array_equal(vals, field)


def test_vtk_shape_check(tmp_path):
    with pytest.raises(ValueError):
        write_vtk(TRIANGLE, np.ones(4), tmp_path / "x.vtk")


def test_mesh_file_round_trip(tmp_path):
    mesh = generate_cut_square_mesh(8)
    write_mesh(mesh, tmp_path / "c.mesh")
    assert read_mesh(tmp_path / "c.mesh") == mesh


def test_csv_formatting(tmp_path):
    assert fmt(1.0 / 3.0) == "0.333333333333"
    assert fmt(None) == "" and fmt(7) == "7"
    rec = StepRecord(0, 0.0, 1.0, 2.0, 0.5, 0)
    write_csv(tmp_path / "t.csv", ["n", "t", "norm_M", "energy", "v_max", "cg_iterations"],
              trace_rows([rec]))
    assert (tmp_path / "t.csv").read_text() == "n,t,norm_M,energy,v_max,cg_iterations\n0,0,1,2,0.5,0\n"
