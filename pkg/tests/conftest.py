import random

import pytest
from hypothesis import HealthCheck, settings

from hgauge.algebra import LieAlgebra, build_adjoint_module, build_poincare2, invpoly_from_trace
from hgauge.exact import VarRegistry
from hgauge.gauge import random_connection

settings.register_profile(
    "hgauge",
    max_examples=30,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("hgauge")


@pytest.fixture(scope="session")
def gl2():
    return build_adjoint_module(LieAlgebra.gl(2))


@pytest.fixture(scope="session")
def poincare():
    return build_poincare2()


@pytest.fixture(scope="session")
def P1(gl2):
    return invpoly_from_trace(gl2, 1)


@pytest.fixture(scope="session")
def P2(gl2):
    return invpoly_from_trace(gl2, 2)


@pytest.fixture(scope="session")
def reg5():
    return VarRegistry.standard(5)


def connections(cm, reg, count, seed, degree=2, nterms=2):
    rng = random.Random(f"tests:{seed}")
    return [random_connection(cm, reg, degree, rng, nterms) for _ in range(count)]
