import numpy as np
import pytest

from nn2c import models
from nn2c.interpreter import Executor


@pytest.fixture(scope="session")
def xor_net():
    return models.xor_net()


@pytest.fixture(scope="session")
def lenet_net():
    return models.lenet5_net()


@pytest.fixture(scope="session", autouse=True)
def warm_kernels(xor_net):
    # First use of the jitted kernels pays LLVM compilation; do it once,
    # outside any timed assertion.
    Executor(xor_net, "float32").run(np.zeros(2, dtype=np.float32))
    Executor(xor_net, "fix16").run(np.zeros(2, dtype=np.int64))
