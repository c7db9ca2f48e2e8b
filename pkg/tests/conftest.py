import numpy as np
import pytest

from fracell import _accel
from fracell.fem import ProblemSpec, assemble
from fracell.mesh import generate_cut_square_mesh, generate_square_mesh

BACKENDS = ["numba", "numpy"] if _accel.HAVE_NUMBA else ["numpy"]


@pytest.fixture(params=BACKENDS)
def backend(request):
    previous = _accel.backend()
    _accel.set_backend(request.param)
    yield request.param
    _accel.set_backend(previous)


@pytest.fixture(scope="session")
def square8():
    return generate_square_mesh(8)


@pytest.fixture(scope="session")
def cut16():
    return generate_cut_square_mesh(16)


@pytest.fixture(scope="session")
def square8_system(square8):
    return assemble(square8, ProblemSpec(mu=10.0))


@pytest.fixture(scope="session")
def cut16_system(cut16):
    return assemble(cut16, ProblemSpec(mu=10.0))


@pytest.fixture
def rng():
    return np.random.default_rng(20141015)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance") or __import__("sys").modules.get(
        "tests.test_acceptance"
    )
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
