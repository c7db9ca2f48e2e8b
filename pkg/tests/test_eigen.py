import numpy as np
import pytest

from fracell.eigen import DeltaPolicy, EigenResult, min_eigen, resolve_delta
from fracell.errors import DeltaTooLarge, DimensionMismatch, NotConverged, ValidationError
from fracell.fem import ProblemSpec, assemble
from fracell.mesh import generate_cut_square_mesh, generate_square_mesh
from fracell.sparse import from_dense, identity


def _eig(value):
    return EigenResult(value, np.ones(1), 0, 0.0)


def test_pure_reaction_neumann(backend):
    system = assemble(generate_square_mesh(8), ProblemSpec(k=1.0, c=1.0, mu=0.0))
    res = min_eigen(system.K, system.M)
    assert abs(res.lambda_min - 1.0) <= 1e-8
    v = res.eigenvector
    assert np.allclose(v, v.mean(), rtol=0, atol=1e-8)


def test_scalar():
    res = min_eigen(from_dense([[3.0]]), identity(1))
    assert res.lambda_min == pytest.approx(3.0, rel=1e-14)


def test_cut32_mu10():
    system = assemble(generate_cut_square_mesh(32), ProblemSpec(mu=10.0))
    assert 17.0 <= min_eigen(system.K, system.M).lambda_min <= 19.0


def test_result_invariants(cut16_system):
    K, M = cut16_system.K, cut16_system.M
    res = min_eigen(K, M, tol=1e-10)
    v = res.eigenvector
    assert res.residual <= 1e-10
    assert abs(M.quad(v) - 1.0) <= 1e-10
    assert abs(K.quad(v) / M.quad(v) - res.lambda_min) <= 1e-10 * res.lambda_min
    assert np.all(v > 0)  # ground state of a positive operator does not change sign


def test_min_characterisation(cut16_system, rng):
    K, M = cut16_system.K, cut16_system.M
    lam = min_eigen(K, M).lambda_min
    for x in rng.standard_normal((20, K.n)):
        assert lam <= K.quad(x) / M.quad(x)


def test_monotone_in_mu(cut16):
    lams = []
    for mu in (1.0, 10.0, 100.0):
        system = assemble(cut16, ProblemSpec(mu=mu))
        lams.append(min_eigen(system.K, system.M).lambda_min)
    assert lams[0] < lams[1] < lams[2]


def test_decreases_under_refinement():
    lams = []
    for n in (8, 16, 32):
        system = assemble(generate_cut_square_mesh(n), ProblemSpec(mu=10.0))
        lams.append(min_eigen(system.K, system.M).lambda_min)
    assert lams[0] > lams[1] > lams[2]


def test_not_converged_carries_iterate(cut16_system):
    with pytest.raises(NotConverged) as exc:
        min_eigen(cut16_system.K, cut16_system.M, max_iter=1)
    assert exc.value.x is not None


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        min_eigen(identity(2), identity(3))


def test_resolve_delta_examples():
    assert resolve_delta(DeltaPolicy.computed(), _eig(4.094)) == 4.094
    assert resolve_delta(DeltaPolicy.scaled(0.5), _eig(18.1)) == pytest.approx(9.05, rel=1e-15)
    with pytest.raises(DeltaTooLarge):
        resolve_delta(DeltaPolicy.fixed(100.0), _eig(18.1))


def test_resolve_delta_edge_cases():
    assert resolve_delta(DeltaPolicy.fixed(2.5)) == 2.5
    assert resolve_delta(DeltaPolicy.fixed(18.1 * (1 + 1e-9)), _eig(18.1)) > 18.1
    with pytest.raises(ValidationError):
        resolve_delta(DeltaPolicy.scaled(0.5))
    with pytest.raises(DeltaTooLarge):
        resolve_delta(DeltaPolicy.scaled(1.5), _eig(1.0))


@pytest.mark.parametrize("mode,value", [("scaled", 0.0), ("fixed", -1.0), ("guess", 1.0)])
def test_policy_validation(mode, value):
    with pytest.raises(ValidationError):
        DeltaPolicy(mode, value)


def test_policy_describe():
    assert DeltaPolicy.computed().describe() == "computed"
    assert DeltaPolicy.scaled(0.25).describe() == "scaled(0.25)"
