import numpy as np
import pytest

from stickyflock import CommunicationKernel
from stickyflock.fastsum import DIRECT_LIMIT, direct_sum, fmm_sum, interaction_sum
from stickyflock.kernels import phi_primitive

from .conftest import ALL_KERNELS, kernel_id

FMM_KERNELS = [
    CommunicationKernel.algebraic_tail(1.0),
    CommunicationKernel.algebraic_tail(2.0),
    CommunicationKernel.algebraic_tail(3.0),
    CommunicationKernel.weakly_singular(1.0, 0.5),
    CommunicationKernel.weakly_singular(2.0, 0.3),
]


def numpy_sum(kernel, x, m):
    return phi_primitive(kernel, x[:, None] - x[None, :]) @ m


def sample(rng, n, clustered=False):
    if clustered:
        x = np.concatenate([rng.normal(c, 0.01, n // 4) for c in (-2.0, 0.0, 0.3, 5.0)])
        x = np.concatenate([x, rng.uniform(-2, 5, n - x.size)])
    else:
        x = rng.uniform(-1, 1, n)
    m = rng.uniform(0.5, 1.5, n)
    return np.sort(x), m / m.sum()


@pytest.mark.parametrize("kernel", ALL_KERNELS, ids=kernel_id)
def test_direct_matches_numpy(kernel, rng):
    x, m = sample(rng, 60)
    np.testing.assert_allclose(direct_sum(kernel, x, m), numpy_sum(kernel, x, m), rtol=1e-13, atol=1e-14)


@pytest.mark.parametrize("kernel", FMM_KERNELS, ids=kernel_id)
@pytest.mark.parametrize("n", [300, 1000, 5000])
@pytest.mark.parametrize("clustered", [False, True])
def test_fmm_matches_direct(kernel, n, clustered, rng):
    x, m = sample(rng, n, clustered)
    ref = direct_sum(kernel, x, m)
    scale = np.max(np.abs(phi_primitive(kernel, x[-1] - x[0])))
    assert np.max(np.abs(fmm_sum(kernel, x, m) - ref)) <= 1e-12 * max(scale, 1.0)


def test_constant_closed_form(rng):
    k = CommunicationKernel.constant(0.7)
    x, m = sample(rng, DIRECT_LIMIT + 50)
    np.testing.assert_allclose(interaction_sum(k, x, m), direct_sum(k, x, m), atol=1e-13)


def test_dispatch_small_is_exact(rng):
    k = CommunicationKernel.algebraic_tail(2.0)
    x, m = sample(rng, DIRECT_LIMIT)
    np.testing.assert_array_equal(interaction_sum(k, x, m), direct_sum(k, x, m))
    tent = CommunicationKernel.compact_tent(0.3, 1.0)
    x, m = sample(rng, DIRECT_LIMIT + 10)
    np.testing.assert_array_equal(interaction_sum(tent, x, m), direct_sum(tent, x, m))
    with pytest.raises(ValueError):
        fmm_sum(tent, x, m)


def test_coincident_points(rng):
    k = CommunicationKernel.weakly_singular(1.0, 0.5)
    x = np.sort(np.repeat(rng.uniform(-1, 1, 200), 3))
    m = np.full(x.size, 1.0 / x.size)
    np.testing.assert_allclose(fmm_sum(k, x, m), direct_sum(k, x, m), atol=1e-12)
