"""P1 finite-element assembly for ``-div(k grad u) + c u`` with Robin data.

All element integrals are closed-form for linear hats and constant
coefficients, so no quadrature is involved.
"""

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .errors import DegenerateElement, ValidationError
from .sparse import SparseMatrix, cg_solve, from_coo

MIN_AREA = 1e-14

RightHandSide = Union[float, np.ndarray, Callable]


@dataclass(frozen=True)
class ProblemSpec:
    """Coefficients ``k``, ``c``, ``mu``, right-hand side ``f`` and exponent ``alpha``.

    ``f`` is a constant, an array of nodal values, or a callable ``f(x, y)``
    that is interpolated at the nodes.
    """

    k: float = 1.0
    c: float = 0.0
    mu: float = 1.0
    f: RightHandSide = 1.0
    alpha: float = 0.5

    def __post_init__(self):
        if not self.k > 0.0:
            raise ValidationError(f"k must be > 0, got {self.k}")
        if not self.c >= 0.0:
            raise ValidationError(f"c must be >= 0, got {self.c}")
        if not self.mu >= 0.0:
            raise ValidationError(f"mu must be >= 0, got {self.mu}")
        if not 0.0 < self.alpha < 1.0:
            raise ValidationError(f"alpha must lie in (0, 1), got {self.alpha}")


@dataclass(frozen=True)
class AssembledSystem:
    K: SparseMatrix
    M: SparseMatrix

    @property
    def n(self):
        return self.K.n


def _geometry(mesh):
    p = mesh.nodes[mesh.triangles]  # (T, 3, 2)
    e1 = p[:, 1] - p[:, 0]
    e2 = p[:, 2] - p[:, 0]
    area = 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    if np.any(np.abs(area) < MIN_AREA):
        bad = int(np.argmin(np.abs(area)))
        raise DegenerateElement(f"triangle {bad} has area {area[bad]:.3e}")
    # grad phi_i = (y_j - y_k, x_k - x_j) / (2 area) with (i, j, k) cyclic
    j, k = [1, 2, 0], [2, 0, 1]
    grads = np.stack(
        [p[:, j, 1] - p[:, k, 1], p[:, k, 0] - p[:, j, 0]], axis=-1
    ) / (2.0 * area[:, None, None])
    return area, grads


_LOCAL_MASS = (np.ones((3, 3)) + np.eye(3)) / 12.0  # times area
_EDGE_MASS = np.array([[2.0, 1.0], [1.0, 2.0]]) / 6.0  # times length


def element_matrices(mesh, k=1.0, c=0.0):
    """Per-triangle 3x3 blocks of ``k grad.grad + c phi phi``."""
    area, grads = _geometry(mesh)
    stiff = np.einsum("tid,tjd->tij", grads, grads) * area[:, None, None]
    return k * stiff + c * area[:, None, None] * _LOCAL_MASS


def _scatter(mesh, blocks, edge_blocks=None):
    tris = mesh.triangles
    rows = np.repeat(tris, 3, axis=1).ravel()
    cols = np.tile(tris, (1, 3)).ravel()
    vals = blocks.ravel()
    if edge_blocks is not None and len(mesh.boundary_edges):
        e = mesh.boundary_edges
        rows = np.concatenate([rows, np.repeat(e, 2, axis=1).ravel()])
        cols = np.concatenate([cols, np.tile(e, (1, 2)).ravel()])
        vals = np.concatenate([vals, edge_blocks.ravel()])
    return from_coo(rows, cols, vals, mesh.n_nodes)


def assemble_stiffness(mesh, spec):
    """Matrix of ``a(u, v) = int k grad u.grad v + c u v + int_boundary mu u v``."""
    blocks = element_matrices(mesh, spec.k, spec.c)
    e = mesh.boundary_edges
    lengths = np.linalg.norm(mesh.nodes[e[:, 0]] - mesh.nodes[e[:, 1]], axis=1)
    edge_blocks = spec.mu * lengths[:, None, None] * _EDGE_MASS
    return _scatter(mesh, blocks, edge_blocks)


def assemble_mass(mesh):
    """Consistent P1 mass matrix."""
    area, _ = _geometry(mesh)
    return _scatter(mesh, area[:, None, None] * _LOCAL_MASS)


def assemble(mesh, spec):
    return AssembledSystem(assemble_stiffness(mesh, spec), assemble_mass(mesh))


def nodal_values(mesh, f):
    """Interpolate ``f`` (constant, nodal array or callable) at the nodes."""
    if callable(f):
        return np.asarray(f(mesh.nodes[:, 0], mesh.nodes[:, 1]), dtype=np.float64) * np.ones(
            mesh.n_nodes
        )
    f = np.asarray(f, dtype=np.float64)
    if f.ndim == 0:
        return np.full(mesh.n_nodes, float(f))
    if f.shape != (mesh.n_nodes,):
        raise ValidationError(f"nodal f has shape {f.shape}, expected ({mesh.n_nodes},)")
    return f.copy()


def l2_project(system, f, tol=1e-12):
    """Coefficients ``p`` of the L2 projection of ``f`` onto the P1 space.

    A constant ``f`` gives the exact load ``b_i = f int phi_i`` and one mass
    solve. A nodal vector is already in the space and is returned as is.
    """
    f = np.asarray(f, dtype=np.float64)
    if f.ndim == 0:
        b = float(f) * (system.M @ np.ones(system.n))
        p, _ = cg_solve(system.M, b, tol=tol)
        return p
    if f.shape != (system.n,):
        raise ValidationError(f"nodal f has shape {f.shape}, expected ({system.n},)")
    return f.copy()
