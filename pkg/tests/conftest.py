import pytest

from fyamabe._backend import KERNELS


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: runs for more than a few seconds")


@pytest.fixture(params=sorted(KERNELS))
def backend(request):
    """Each available integration kernel."""
    return request.param
