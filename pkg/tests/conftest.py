import pytest

from basis import reference_shapes
from geometry import PhysicalSystem, make_transform
from mesh import build_mesh


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False,
                     help="run the production-resolution ladder tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(scope="session")
def hydrogen():
    """One-center Z=1 problem on a small domain"""
    return PhysicalSystem(Z1=1.0, Z2=0.0, R=1.0)


@pytest.fixture(scope="session")
def hydrogen_spec():
    return make_transform(2, 20.0, 1.0)


@pytest.fixture(scope="session")
def hydrogen_mesh(hydrogen_spec):
    return build_mesh(4, 8, hydrogen_spec.s_max)


@pytest.fixture(scope="session")
def shapes8():
    return reference_shapes(8)


@pytest.fixture(scope="session")
def h2plus():
    return PhysicalSystem(Z1=1.0, Z2=1.0, R=2.0)


@pytest.fixture(scope="session")
def h2plus_spec():
    return make_transform(8, 40.0, 2.0)
