import pytest

from fractalheat import KernelCache, sierpinski_gasket, unit_interval_system


@pytest.fixture(scope="session")
def gasket():
    return sierpinski_gasket()


@pytest.fixture(scope="session")
def interval():
    return unit_interval_system()


@pytest.fixture(scope="session")
def cache():
    """One in-memory eigendecomposition cache for the whole session."""
    return KernelCache()
