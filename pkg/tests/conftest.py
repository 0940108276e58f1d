import numpy as np
import pytest

from egomatch import backend


@pytest.fixture(params=backend.available_backends())
def kernel_backend(request):
    """Run a test once per available sparse-kernel backend."""
    with backend.use_backend(request.param):
        yield request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
