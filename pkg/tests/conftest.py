import pytest

from npclust._kernels import available_backends, set_backend


@pytest.fixture(params=available_backends())
def backend(request):
    """Run a test under each available kernel backend."""
    set_backend(request.param)
    yield request.param
    set_backend(None)


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "acceptance: end-to-end acceptance criteria (slow)"
    )
