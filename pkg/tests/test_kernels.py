import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from stickyflock import CommunicationKernel, flocking_threshold_holds, phi, phi_primitive, phi_primitive_inverse
from stickyflock.kernels import phi_second_primitive, sup_primitive

from .conftest import ALL_KERNELS, BOUNDED_KERNELS, kernel_id

WS = CommunicationKernel.weakly_singular(1.0, 0.5)


def test_phi_examples():
    assert phi(CommunicationKernel.constant(1.0), 3.5) == 1.0
    assert phi(WS, 4.0) == pytest.approx(0.5, abs=1e-15)
    assert phi(CommunicationKernel.algebraic_tail(2.0), 1.0) == pytest.approx(0.5, abs=1e-15)


def test_phi_weakly_singular_at_zero_is_an_error():
    with pytest.raises(ValueError):
        phi(WS, 0.0)


def test_phi_primitive_examples():
    assert phi_primitive(CommunicationKernel.constant(1.0), 2.0) == 2.0
    assert phi_primitive(WS, 4.0) == pytest.approx(4.0, abs=1e-14)
    for k in ALL_KERNELS:
        assert phi_primitive(k, 0.0) == 0.0


def test_phi_primitive_inverse_examples():
    assert phi_primitive_inverse(CommunicationKernel.constant(1.0), 4.0) == pytest.approx(4.0)
    assert phi_primitive_inverse(CommunicationKernel.zero(), 0.1) == math.inf
    for k in ALL_KERNELS:
        assert phi_primitive_inverse(k, 0.0) == 0.0
    with pytest.raises(ValueError):
        phi_primitive_inverse(WS, -1.0)


def test_threshold_examples():
    assert flocking_threshold_holds(CommunicationKernel.constant(1.0), 2.0, 2.0)
    assert not flocking_threshold_holds(CommunicationKernel.zero(), 1.0, 1.0)
    tent = CommunicationKernel.compact_tent(1.0, 1.0)
    assert sup_primitive(tent) == 0.5
    assert phi_primitive(tent, 0.5) == pytest.approx(0.375)
    assert not flocking_threshold_holds(tent, 0.5, 0.4)


def test_fat_tail_threshold_always_holds():
    for k in ALL_KERNELS:
        if k.fat_tail:
            assert flocking_threshold_holds(k, 100.0, 1e6)


def test_sup_primitive_algebraic_matches_quadrature():
    k = CommunicationKernel.algebraic_tail(2.5)
    ref, _ = integrate.quad(lambda r: (1 + r * r) ** -1.25, 0, np.inf)
    assert sup_primitive(k) == pytest.approx(ref, rel=1e-10)


@pytest.mark.parametrize("kernel", ALL_KERNELS, ids=kernel_id)
def test_primitive_matches_quadrature(kernel):
    for r in (0.1, 0.7, 1.3, 4.0):
        if kernel.bounded:
            ref, _ = integrate.quad(lambda y: phi(kernel, y), 0, r, points=[min(r, 1.0)])
        else:
            ref, _ = integrate.quad(lambda y: phi(kernel, y), 0, r)
        assert phi_primitive(kernel, r) == pytest.approx(ref, rel=1e-9, abs=1e-13)


@pytest.mark.parametrize("kernel", ALL_KERNELS, ids=kernel_id)
def test_second_primitive_matches_quadrature(kernel):
    for r in (0.3, 1.7):
        ref, _ = integrate.quad(lambda y: phi_primitive(kernel, y), 0, r)
        assert phi_second_primitive(kernel, r) == pytest.approx(ref, rel=1e-9, abs=1e-13)
        assert phi_second_primitive(kernel, -r) == phi_second_primitive(kernel, r)


@pytest.mark.parametrize("kernel", ALL_KERNELS, ids=kernel_id)
@settings(max_examples=40, deadline=None)
@given(r=st.lists(st.floats(-50, 50, allow_nan=False), min_size=2, max_size=30))
def test_primitive_odd_monotone(kernel, r):
    r = np.sort(np.asarray(r))
    P = phi_primitive(kernel, r)
    assert np.all(phi_primitive(kernel, -r) == -P)
    assert np.all(np.abs(P) == phi_primitive(kernel, np.abs(r)))
    assert np.all(np.diff(P) >= 0)


@pytest.mark.parametrize("kernel", ALL_KERNELS, ids=kernel_id)
@settings(max_examples=40, deadline=None)
@given(r=st.floats(1e-3, 30))
def test_phi_even_nonnegative_nonincreasing(kernel, r):
    assert phi(kernel, r) == phi(kernel, -r) >= 0
    assert phi(kernel, 1.1 * r) <= phi(kernel, r)


@pytest.mark.parametrize("kernel", BOUNDED_KERNELS, ids=kernel_id)
def test_finite_difference_first_order(kernel):
    for r in (0.2, 0.55, 1.3):
        errs = [abs((phi_primitive(kernel, r + h) - phi_primitive(kernel, r)) / h - phi(kernel, r)) for h in (1e-4, 1e-5)]
        assert errs[1] <= max(1e-9, 0.2 * errs[0])
        assert errs[0] <= 1e-3


@pytest.mark.parametrize("kernel", ALL_KERNELS, ids=kernel_id)
@settings(max_examples=40, deadline=None)
@given(frac=st.floats(0.0, 0.999))
def test_inverse_is_right_inverse(kernel, frac):
    sup = sup_primitive(kernel)
    y = frac * (sup if math.isfinite(sup) else 20.0)
    R = phi_primitive_inverse(kernel, y)
    if math.isfinite(R):
        assert phi_primitive(kernel, R) >= y - 1e-10
        assert phi_primitive(kernel, R * (1 - 1e-9)) <= y + 1e-10


def test_inverse_beyond_sup_is_infinite():
    k = CommunicationKernel.algebraic_tail(2.0)
    assert phi_primitive_inverse(k, math.pi / 2 + 1e-9) == math.inf
    assert phi_primitive_inverse(CommunicationKernel.compact_tent(1.0, 1.0), 0.6) == math.inf


def test_config_round_trip():
    for k in ALL_KERNELS:
        assert CommunicationKernel.from_config(k.to_config()) == k
    with pytest.raises(ValueError):
        CommunicationKernel.from_config({"family": "weakly_singular", "c_s": 1.0, "s": 1.5})
    with pytest.raises(ValueError):
        CommunicationKernel.from_config({"family": "gaussian"})
