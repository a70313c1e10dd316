import numpy as np
import pytest

from stickyflock import CommunicationKernel

ALL_KERNELS = [
    CommunicationKernel.zero(),
    CommunicationKernel.constant(1.0),
    CommunicationKernel.constant(0.3),
    CommunicationKernel.algebraic_tail(1.0),
    CommunicationKernel.algebraic_tail(2.0),
    CommunicationKernel.algebraic_tail(3.0),
    CommunicationKernel.algebraic_tail(2.5),
    CommunicationKernel.compact_tent(1.0, 1.0),
    CommunicationKernel.compact_tent(0.4, 2.0),
    CommunicationKernel.weakly_singular(1.0, 0.5),
    CommunicationKernel.weakly_singular(0.5, 0.25),
]

BOUNDED_KERNELS = [k for k in ALL_KERNELS if k.bounded]


def kernel_id(k):
    return "-".join(f"{v}" for v in k.to_config().values())


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
