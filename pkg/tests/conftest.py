import pytest

from compforce import _kernels
from compforce.config import benchmark_config

BACKENDS = ["numpy"] + (["numba"] if _kernels.HAVE_NUMBA else [])


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


@pytest.fixture
def small_cfg():
    return benchmark_config(n_neurons=20, train_steps=300, predict_steps=200, seed=3)
