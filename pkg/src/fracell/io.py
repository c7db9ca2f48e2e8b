"""Legacy VTK and CSV output."""

import csv

import numpy as np

VTK_TRIANGLE = 5


def write_vtk(mesh, field, path, name="u", title="fracell solution"):
    """Legacy ASCII VTK unstructured grid with one point scalar field."""
    field = np.asarray(field, dtype=np.float64)
    if field.shape != (mesh.n_nodes,):
        raise ValueError(f"field has shape {field.shape}, expected ({mesh.n_nodes},)")
    lines = [
        "# vtk DataFile Version 2.0",
        title,
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {mesh.n_nodes} double",
    ]
    lines += [f"{x:.17g} {y:.17g} 0" for x, y in mesh.nodes.tolist()]
    ntri = len(mesh.triangles)
    lines.append(f"CELLS {ntri} {4 * ntri}")
    lines += [f"3 {a} {b} {c}" for a, b, c in mesh.triangles.tolist()]
    lines.append(f"CELL_TYPES {ntri}")
    lines += [str(VTK_TRIANGLE)] * ntri
    lines += [
        f"POINT_DATA {mesh.n_nodes}",
        f"SCALARS {name} double 1",
        "LOOKUP_TABLE default",
    ]
    lines += [f"{v:.17g}" for v in field.tolist()]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_vtk_points(path):
    """Point coordinates and the first scalar field of a file from ``write_vtk``."""
    with open(path, encoding="utf-8") as fh:
        tokens = fh.read().split("\n")
    it = iter(tokens)
    points, scalars = None, None
    for line in it:
        if line.startswith("POINTS"):
            n = int(line.split()[1])
            points = np.array([[float(v) for v in next(it).split()] for _ in range(n)])
        elif line.startswith("POINT_DATA"):
            n = int(line.split()[1])
            next(it)  # SCALARS
            next(it)  # LOOKUP_TABLE
            scalars = np.array([float(next(it)) for _ in range(n)])
    return points, scalars


def fmt(value):
    """12 significant digits for floats, plain ``str`` otherwise."""
    if isinstance(value, (float, np.floating)):
        return f"{value:.12g}"
    return "" if value is None else str(value)


def write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


TRACE_HEADER = ["n", "t", "norm_M", "energy", "v_max", "cg_iterations"]


def trace_rows(history):
    return [[r.n, r.t, r.norm, r.energy, r.vmax, r.cg_iterations] for r in history]
