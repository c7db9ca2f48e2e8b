import math

import numpy as np
import pytest

from fracell.eigen import min_eigen
from fracell.errors import DegenerateElement, ValidationError
from fracell.fem import (
    ProblemSpec,
    assemble,
    assemble_mass,
    assemble_stiffness,
    element_matrices,
    l2_project,
    nodal_values,
)
from fracell.mesh import Mesh, generate_cut_square_mesh, generate_square_mesh
from fracell.sparse import add_scaled, check_symmetric

REF = Mesh(
    nodes=np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
    triangles=np.array([[0, 1, 2]]),
    boundary_edges=np.array([[0, 1], [1, 2], [2, 0]]),
)


def _quadrature_mass(nodes):
    """Mass matrix of one triangle by a degree-2 exact edge-midpoint rule."""
    e1, e2 = nodes[1] - nodes[0], nodes[2] - nodes[0]
    area = 0.5 * abs(e1[0] * e2[1] - e1[1] * e2[0])
    bary = np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]])
    return area / 3.0 * sum(np.outer(b, b) for b in bary)


def test_reference_stiffness():
    K = assemble_stiffness(REF, ProblemSpec(k=1.0, c=0.0, mu=0.0)).to_dense()
    assert np.allclose(K, [[1, -0.5, -0.5], [-0.5, 0.5, 0], [-0.5, 0, 0.5]], rtol=0, atol=1e-15)


def test_reference_mass():
    expected = np.array([[2, 1, 1], [1, 2, 1], [1, 1, 2]]) / 24.0
    assert np.allclose(assemble_mass(REF).to_dense(), expected, rtol=0, atol=1e-15)
    # reaction-only form is the mass matrix (k must stay positive, so subtract diffusion)
    Kc = assemble_stiffness(REF, ProblemSpec(k=1.0, c=1.0, mu=0.0))
    Kk = assemble_stiffness(REF, ProblemSpec(k=1.0, c=0.0, mu=0.0))
    assert np.allclose(add_scaled(Kc, 1.0, Kk, -1.0).to_dense(), expected, rtol=0, atol=1e-15)


def test_element_mass_matches_quadrature():
    rng = np.random.default_rng(3)
    for _ in range(20):
        nodes = rng.uniform(0, 1, (3, 2))
        e1, e2 = nodes[1] - nodes[0], nodes[2] - nodes[0]
        if e1[0] * e2[1] - e1[1] * e2[0] < 0:
            nodes = nodes[[0, 2, 1]]
        m = Mesh(nodes, np.array([[0, 1, 2]]), np.array([[0, 1], [1, 2], [2, 0]]))
        mass = element_matrices(m, k=0.0, c=1.0)
        assert np.allclose(mass[0], _quadrature_mass(nodes), rtol=1e-12, atol=1e-15)


def test_element_stiffness_matches_finite_differences():
    rng = np.random.default_rng(4)
    nodes = np.array([[0.1, 0.2], [0.9, 0.3], [0.4, 0.8]])
    m = Mesh(nodes, np.array([[0, 1, 2]]), np.array([[0, 1], [1, 2], [2, 0]]))
    T = np.c_[nodes, np.ones(3)].T  # barycentric coordinates solve T lam = (x, y, 1)

    def hats(x, y):
        return np.linalg.solve(T, [x, y, 1.0])

    x0 = nodes.mean(axis=0) + rng.uniform(-0.01, 0.01, 2)
    h = 1e-6
    gx = (hats(x0[0] + h, x0[1]) - hats(x0[0] - h, x0[1])) / (2 * h)
    gy = (hats(x0[0], x0[1] + h) - hats(x0[0], x0[1] - h)) / (2 * h)
    g = np.c_[gx, gy]
    e1, e2 = nodes[1] - nodes[0], nodes[2] - nodes[0]
    area = 0.5 * (e1[0] * e2[1] - e1[1] * e2[0])
    assert np.allclose(element_matrices(m, k=1.0, c=0.0)[0], area * g @ g.T, rtol=1e-8, atol=1e-8)


def test_edge_contribution():
    mu1 = assemble_stiffness(REF, ProblemSpec(mu=1.0)).to_dense()
    mu0 = assemble_stiffness(REF, ProblemSpec(mu=0.0)).to_dense()
    edge = mu1 - mu0
    L = math.sqrt(2.0)
    # hypotenuse (1, 2) alone owns entry (1, 2)
    assert math.isclose(edge[1, 2], L / 6.0, rel_tol=1e-14)
    assert math.isclose(edge[0, 1], 1.0 / 6.0, rel_tol=1e-14)
    # node 1 touches edges of length 1 and sqrt(2)
    assert math.isclose(edge[1, 1], (2.0 * 1.0 + 2.0 * L) / 6.0, rel_tol=1e-14)


def test_boundary_mass_total_is_perimeter():
    m = generate_square_mesh(6)
    B = add_scaled(
        assemble_stiffness(m, ProblemSpec(mu=1.0)), 1.0, assemble_stiffness(m, ProblemSpec(mu=0.0)), -1.0
    )
    ones = np.ones(m.n_nodes)
    assert math.isclose(B.quad(ones), 4.0, rel_tol=1e-13)


def test_degenerate_element():
    flat = Mesh(
        np.array([[0.0, 0.0], [1.0, 0.0], [0.5, 1e-15]]),
        np.array([[0, 1, 2]]),
        np.array([[0, 1], [1, 2], [2, 0]]),
    )
    with pytest.raises(DegenerateElement):
        assemble_mass(flat)


@pytest.mark.parametrize("n", [1, 4, 16, 64])
def test_mass_total_area(n):
    M = assemble_mass(generate_square_mesh(n))
    ones = np.ones(M.n)
    assert abs(M.quad(ones) - 1.0) <= 1e-12


def test_mass_total_area_cut():
    M = assemble_mass(generate_cut_square_mesh(16))
    exact = 1.0 - math.pi / 16.0
    assert abs(M.quad(np.ones(M.n)) - exact) <= 0.01 * exact


@pytest.mark.parametrize("n", [2, 8, 32])
def test_patch_test(n):
    K = assemble_stiffness(generate_square_mesh(n), ProblemSpec(k=1.0, c=0.0, mu=0.0))
    assert np.max(np.abs(K @ np.ones(K.n))) <= 1e-12


def test_symmetry(square8_system, cut16_system):
    for system in (square8_system, cut16_system):
        assert check_symmetric(system.K) and check_symmetric(system.M)


def test_coercivity(cut16_system, rng):
    K, M = cut16_system.K, cut16_system.M
    delta = min_eigen(K, M).lambda_min
    for x in rng.standard_normal((100, K.n)):
        assert K.quad(x) >= (delta - 1e-8 * delta) * M.quad(x)


def test_galerkin_scaling(cut16):
    k, c, mu = 1.3, 0.7, 5.0
    K2 = assemble_stiffness(cut16, ProblemSpec(k=2 * k, c=c, mu=mu))
    K1 = assemble_stiffness(cut16, ProblemSpec(k=k, c=c, mu=mu))
    Kd = assemble_stiffness(cut16, ProblemSpec(k=k, c=0.0, mu=0.0))
    diff = add_scaled(K2, 1.0, K1, -1.0)
    assert np.allclose(diff.to_dense(), Kd.to_dense(), rtol=0, atol=1e-12)


@pytest.mark.parametrize(
    "kwargs", [dict(k=0.0), dict(k=-1.0), dict(c=-0.1), dict(mu=-1.0), dict(alpha=0.0), dict(alpha=1.0)]
)
def test_problem_spec_validation(kwargs):
    with pytest.raises(ValidationError):
        ProblemSpec(**kwargs)


def test_l2_project_constant(cut16_system):
    p = l2_project(cut16_system, 1.0)
    assert np.allclose(p, 1.0, rtol=0, atol=1e-10)
    area = cut16_system.M.quad(np.ones(cut16_system.n), p)
    assert abs(area - cut16_system.M.quad(np.ones(cut16_system.n))) <= 1e-8


def test_l2_project_nodal_is_exact(cut16, cut16_system):
    f = nodal_values(cut16, lambda x, y: x * x + np.sin(y))
    p = l2_project(cut16_system, f)
    assert np.array_equal(p, f)
    assert p is not f


def test_nodal_values_forms(square8):
    assert np.array_equal(nodal_values(square8, 2.0), np.full(81, 2.0))
    with pytest.raises(ValueError):
        nodal_values(square8, np.ones(5))


def test_assemble_system_dimension(square8):
    system = assemble(square8, ProblemSpec())
    assert system.n == 81 and system.K.n == system.M.n == 81
