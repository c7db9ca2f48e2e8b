"""Planar P1 triangulations: generators, validation, text I/O, statistics.

Meshes are immutable. Node indices are 0-based everywhere, triangles are
stored counterclockwise and boundary edges are oriented so that the domain
lies to their left.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ParseError, RefinementTooCoarse, TopologyError

ARC_RADIUS = 0.5


@dataclass(frozen=True, eq=False)
class Mesh:
    nodes: np.ndarray  # (N, 2) float
    triangles: np.ndarray  # (T, 3) int, counterclockwise
    boundary_edges: np.ndarray  # (B, 2) int

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=np.float64).reshape(-1, 2)
        tris = np.array(self.triangles, dtype=np.int64).reshape(-1, 3)
        edges = np.array(self.boundary_edges, dtype=np.int64).reshape(-1, 2)
        for arr in (nodes, tris, edges):
            arr.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "triangles", tris)
        object.__setattr__(self, "boundary_edges", edges)

    @property
    def n_nodes(self):
        return len(self.nodes)

    def __eq__(self, other):
        if not isinstance(other, Mesh):
            return NotImplemented
        return (
            np.array_equal(self.nodes, other.nodes)
            and np.array_equal(self.triangles, other.triangles)
            and np.array_equal(self.boundary_edges, other.boundary_edges)
        )

    __hash__ = None


@dataclass(frozen=True)
class MeshStats:
    node_count: int
    triangle_count: int
    boundary_edge_count: int
    min_angle: float  # degrees
    h_max: float


def signed_areas(nodes, triangles):
    p0 = nodes[triangles[:, 0]]
    e1 = nodes[triangles[:, 1]] - p0
    e2 = nodes[triangles[:, 2]] - p0
    return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])


def all_edges(triangles):
    """Distinct undirected edges as sorted (E, 2) array plus owner counts."""
    half = np.concatenate(
        [triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]]
    )
    und = np.sort(half, axis=1)
    edges, counts = np.unique(und, axis=0, return_counts=True)
    return edges, counts


def find_boundary_edges(triangles):
    """Directed edges owned by exactly one triangle, in triangle order."""
    triangles = np.asarray(triangles)
    half = np.stack(
        [triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]], axis=1
    ).reshape(-1, 2)
    und = np.sort(half, axis=1)
    _, inverse, counts = np.unique(und, axis=0, return_inverse=True, return_counts=True)
    inverse = inverse.ravel()
    return half[counts[inverse] == 1]


def validate(mesh):
    """Raise ``TopologyError`` naming the first violated invariant."""
    n = mesh.n_nodes
    tris, bnd = mesh.triangles, mesh.boundary_edges
    if tris.size and (tris.min() < 0 or tris.max() >= n):
        raise TopologyError("triangle node index out of range")
    if bnd.size and (bnd.min() < 0 or bnd.max() >= n):
        raise TopologyError("boundary edge node index out of range")
    if len(tris) == 0:
        raise TopologyError("mesh has no triangles")
    if np.any(tris[:, 0] == tris[:, 1]) or np.any(tris[:, 1] == tris[:, 2]) or np.any(
        tris[:, 0] == tris[:, 2]
    ):
        raise TopologyError("triangle with repeated node")
    if np.any(signed_areas(mesh.nodes, tris) <= 0.0):
        raise TopologyError("triangle with non-positive signed area")

    edges, counts = all_edges(tris)
    if np.any(counts > 2):
        raise TopologyError("edge shared by more than two triangles")
    expected = {tuple(e) for e in edges[counts == 1]}
    given = [tuple(sorted(e)) for e in bnd.tolist()]
    if len(set(given)) != len(given):
        raise TopologyError("duplicate boundary edge")
    if set(given) != expected:
        raise TopologyError("boundary edges differ from edges owned by one triangle")

    degree = np.bincount(bnd.ravel(), minlength=n)
    if np.any(degree % 2):
        raise TopologyError("boundary edges do not form closed loops")


def _grid(n):
    xs = np.linspace(0.0, 1.0, n + 1)
    X, Y = np.meshgrid(xs, xs)  # node (i, j) -> index i + j*(n+1)
    nodes = np.column_stack([X.ravel(), Y.ravel()])
    i, j = np.meshgrid(np.arange(n), np.arange(n))
    ll = (i + j * (n + 1)).ravel()
    lr, ul = ll + 1, ll + n + 1
    ur = ul + 1
    lower = np.column_stack([ll, lr, ur])
    upper = np.column_stack([ll, ur, ul])
    tris = np.stack([lower, upper], axis=1).reshape(-1, 3)
    return nodes, tris


def generate_square_mesh(n):
    """Uniform right-triangle mesh of the unit square, ``n`` cells per side."""
    n = int(n)
    if n < 1:
        raise ValueError("n must be >= 1")
    nodes, tris = _grid(n)
    return Mesh(nodes, tris, find_boundary_edges(tris))


SNAP_BAND = 0.3  # pre-snap grid nodes within this many cells of the arc


def _on_straight_sides(nodes, tol=1e-12):
    x, y = nodes[:, 0], nodes[:, 1]
    return (
        (x > 1.0 - tol)
        | (y > 1.0 - tol)
        | ((x < tol) & (y >= ARC_RADIUS - tol))
        | ((y < tol) & (x >= ARC_RADIUS - tol))
    )


def _radial(points):
    return ARC_RADIUS * points / np.sqrt(np.sum(points**2, axis=1))[:, None]


def generate_cut_square_mesh(n):
    """Unit square minus the quarter disc ``x^2 + y^2 < 1/4``.

    Starts from the uniform ``n``-grid. Grid nodes within ``SNAP_BAND`` cells
    of the arc are moved radially onto it, triangles whose centroid falls in
    the disc are dropped, and every boundary node off the straight sides is
    projected radially onto the arc. Filtering and projection repeat until no
    triangle is dropped, so the curved boundary is an inscribed polygon
    (O(h^2) area error). Unused nodes are removed, order otherwise kept.
    """
    n = int(n)
    if n < 4 or n % 2:
        raise ValueError("n must be even and >= 4")
    grid, tris = _grid(n)
    nodes = grid.copy()

    # local mesh size: longest incident grid edge
    local = np.zeros(len(nodes))
    for a, b in ((0, 1), (1, 2), (2, 0)):
        lengths = np.linalg.norm(nodes[tris[:, a]] - nodes[tris[:, b]], axis=1)
        np.maximum.at(local, tris[:, a], lengths)
        np.maximum.at(local, tris[:, b], lengths)

    r = np.sqrt(np.sum(nodes**2, axis=1))
    near = (np.abs(r - ARC_RADIUS) < SNAP_BAND / n) & (r > 0.0)
    nodes[near] = _radial(nodes[near])

    limit = ARC_RADIUS**2 * (1.0 - 1e-12)
    while True:
        centroids = nodes[tris].mean(axis=1)
        keep = np.sum(centroids**2, axis=1) >= limit
        if not keep.all():
            tris = tris[keep]
        bnodes = np.unique(find_boundary_edges(tris))
        arc = bnodes[~_on_straight_sides(nodes[bnodes])]
        off = np.abs(np.sqrt(np.sum(nodes[arc] ** 2, axis=1)) - ARC_RADIUS) > 1e-15
        if keep.all() and not off.any():
            break
        nodes[arc] = _radial(nodes[arc])

    used = np.unique(tris)
    shift = np.linalg.norm(nodes[used] - grid[used], axis=1)
    if np.any(shift > 0.5 * local[used]):
        raise RefinementTooCoarse(
            f"arc projection moves a node by {shift.max():.3g}, "
            "more than half its local edge length"
        )
    renumber = np.full(len(nodes), -1, dtype=np.int64)
    renumber[used] = np.arange(len(used))
    nodes = nodes[used]
    tris = renumber[tris]
    if np.any(signed_areas(nodes, tris) <= 0.0):
        raise RefinementTooCoarse("arc projection inverted a triangle")
    mesh = Mesh(nodes, tris, find_boundary_edges(tris))
    validate(mesh)
    return mesh


def mesh_stats(mesh):
    nodes, tris = mesh.nodes, mesh.triangles
    p = nodes[tris]  # (T, 3, 2)
    min_angle = np.inf
    for k in range(3):
        a = p[:, (k + 1) % 3] - p[:, k]
        b = p[:, (k + 2) % 3] - p[:, k]
        cos = np.sum(a * b, axis=1) / (np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1))
        angles = np.degrees(np.arccos(np.clip(cos, -1.0, 1.0)))
        min_angle = min(min_angle, float(angles.min()))
    edges, _ = all_edges(tris)
    h_max = float(np.linalg.norm(nodes[edges[:, 0]] - nodes[edges[:, 1]], axis=1).max())
    return MeshStats(
        node_count=len(nodes),
        triangle_count=len(tris),
        boundary_edge_count=len(mesh.boundary_edges),
        min_angle=min_angle,
        h_max=h_max,
    )


# --- text format -----------------------------------------------------------

_SECTIONS = ("$nodes", "$triangles", "$boundary_edges")


def _tokens(text):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line


def load_mesh(text):
    """Parse the ``$nodes/$triangles/$boundary_edges`` text format.

    Clockwise triangles are reoriented; all other invariant violations raise
    ``TopologyError``. Syntax problems raise ``ParseError`` with a line number.
    """
    lines = list(_tokens(text))
    pos = 0
    blocks = {}
    widths = {"$nodes": 2, "$triangles": 3, "$boundary_edges": 2}
    last_line = lines[-1][0] if lines else 1
    for section in _SECTIONS:
        if pos >= len(lines):
            raise ParseError(f"missing section {section}", last_line)
        lineno, line = lines[pos]
        if line != section:
            raise ParseError(f"expected {section}, got {line!r}", lineno)
        pos += 1
        if pos >= len(lines):
            raise ParseError(f"missing count for {section}", lineno)
        lineno, line = lines[pos]
        try:
            count = int(line)
        except ValueError:
            raise ParseError(f"bad count {line!r}", lineno) from None
        if count < 0:
            raise ParseError("negative count", lineno)
        pos += 1
        rows = []
        for _ in range(count):
            if pos >= len(lines):
                raise ParseError(f"{section}: expected {count} rows", last_line)
            lineno, line = lines[pos]
            parts = line.split()
            if len(parts) != widths[section]:
                raise ParseError(
                    f"{section}: expected {widths[section]} fields, got {len(parts)}", lineno
                )
            try:
                if section == "$nodes":
                    rows.append([float(v) for v in parts])
                else:
                    rows.append([int(v) for v in parts])
            except ValueError:
                raise ParseError(f"{section}: cannot parse {line!r}", lineno) from None
            pos += 1
        blocks[section] = rows
    if pos < len(lines):
        raise ParseError("trailing content", lines[pos][0])

    nodes = np.array(blocks["$nodes"], dtype=np.float64).reshape(-1, 2)
    tris = np.array(blocks["$triangles"], dtype=np.int64).reshape(-1, 3)
    edges = np.array(blocks["$boundary_edges"], dtype=np.int64).reshape(-1, 2)
    n = len(nodes)
    if tris.size and (tris.min() < 0 or tris.max() >= n):
        raise TopologyError("triangle node index out of range")
    if len(tris):
        cw = signed_areas(nodes, tris) < 0.0
        tris[cw] = tris[cw][:, [0, 2, 1]]
    mesh = Mesh(nodes, tris, edges)
    validate(mesh)
    return mesh


def dump_mesh(mesh):
    out = ["$nodes", str(mesh.n_nodes)]
    out += [f"{x:.17g} {y:.17g}" for x, y in mesh.nodes.tolist()]
    out += ["$triangles", str(len(mesh.triangles))]
    out += [" ".join(map(str, t)) for t in mesh.triangles.tolist()]
    out += ["$boundary_edges", str(len(mesh.boundary_edges))]
    out += [" ".join(map(str, e)) for e in mesh.boundary_edges.tolist()]
    return "\n".join(out) + "\n"


def read_mesh(path):
    with open(path, encoding="utf-8") as fh:
        return load_mesh(fh.read())


def write_mesh(mesh, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dump_mesh(mesh))


def mesh_from_source(source):
    """Resolve ``square:n``, ``cut:n`` or ``file:path``."""
    kind, _, arg = source.partition(":")
    if kind == "square":
        return generate_square_mesh(int(arg))
    if kind == "cut":
        return generate_cut_square_mesh(int(arg))
    if kind == "file":
        return read_mesh(arg)
    raise ValueError(f"unknown mesh source {source!r}; use square:n, cut:n or file:path")
