"""Fractional powers of elliptic operators via pseudo-parabolic time stepping.

Solves ``A^alpha u = f`` (0 < alpha < 1) for ``A u = -div(k grad u) + c u``
with Robin data ``k du/dn + mu u = 0``, discretized by P1 finite elements and
integrated in pseudo-time with a two-level weighted scheme.
"""

from .eigen import DeltaPolicy, EigenResult, min_eigen, resolve_delta
from .fem import AssembledSystem, ProblemSpec, assemble, assemble_mass, assemble_stiffness, l2_project
from .mesh import (
    Mesh,
    MeshStats,
    generate_cut_square_mesh,
    generate_square_mesh,
    load_mesh,
    mesh_stats,
)
from .oracle import compare, dense_generalized_eig, fractional_apply
from .sparse import CgReport, SparseMatrix, add_scaled, cg_solve, spmv
from .stepper import EvolutionState, SchemeConfig, SolveResult, init_state, monitor_energy, run, step

__version__ = "0.1.0"
