import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stickyflock import (
    ClusterState,
    CommunicationKernel,
    PiecewiseLinearFlux,
    oleinik_margin,
    rankine_hugoniot_residual,
    reconstruct_fields,
    reconstruct_M,
    reconstruct_Q,
    simulate,
    verify_state,
)
from stickyflock.balance_law import OLEINIK_TOL, RH_TOL, EventVerifier, trace_flux, verify_trace
from stickyflock.dynamics import initial_state

from .conftest import ALL_KERNELS

ZERO = CommunicationKernel.zero()
C1 = CommunicationKernel.constant(1.0)


def single_state(x, m, psi):
    n = len(x)
    return ClusterState(0.0, np.asarray(x, float), np.asarray(m, float), np.asarray(psi, float), np.arange(n), np.arange(1, n + 1))


def merged_pair(psi, force=False):
    """Particles at -1 and 1 (mass 1/2 each) with the given psi, run past their merge."""
    init = ([-1.0, 1.0], [0.5, 0.5], psi)
    verifier = EventVerifier(PiecewiseLinearFlux.from_masses([0.5, 0.5], psi), ZERO)
    tr = simulate(init, ZERO, 2.0, [0, 2], on_event=verifier, force_merge=[(0, 1)] if force else ())
    return tr, verifier


def test_reconstruct_M_examples():
    M = reconstruct_M(single_state([0.0], [1.0], [0.0]))
    assert M.breakpoints.tolist() == [0.0] and M.values.tolist() == [-0.5, 0.5]
    M = reconstruct_M(single_state([-1.0, 1.0], [0.5, 0.5], [0.0, 0.0]))
    assert M.values.tolist() == [-0.5, 0.0, 0.5]
    tr, _ = merged_pair([1.0, -1.0])
    M = reconstruct_M(tr.states[-1])
    assert M.values.tolist() == [-0.5, 0.5]


def test_reconstruct_Q_examples():
    s = single_state([0.2], [1.0], [1.7])
    Q = reconstruct_Q(s, PiecewiseLinearFlux.from_masses([1.0], [1.7], base=0.3))
    assert Q.values.tolist() == [0.3, 0.3 + 1.7]
    s = single_state([-1.0, 1.0], [0.5, 0.5], [0.0, 0.0])
    Q = reconstruct_Q(s, PiecewiseLinearFlux.from_masses([0.5, 0.5], [0.0, 0.0], base=-2.0))
    assert np.all(Q.values == -2.0)
    with pytest.raises(ValueError):
        reconstruct_Q(s, PiecewiseLinearFlux.from_masses([0.25, 0.75], [0.0, 0.0]))


@pytest.mark.parametrize("seed", range(5))
def test_Q_equals_A_of_M(seed):
    rng = np.random.default_rng(seed)
    n = 7
    x = np.sort(rng.uniform(-1, 1, n))
    m = rng.uniform(0.1, 1, n)
    m /= m.sum()
    psi = np.sort(rng.uniform(-1, 1, n))[::-1]
    tr = simulate((x, m, psi), C1, 1.5, [0, 0.5, 1.5])
    A = trace_flux(tr)
    probes = np.linspace(-3, 3, 100)
    for s in tr.states:
        Q = reconstruct_Q(s, A)
        M = reconstruct_M(s)
        np.testing.assert_allclose(Q(probes), A(M(probes)), atol=1e-12)


def test_fields_examples():
    s = single_state([-1.0, 0.5], [0.5, 0.5], [0.3, -0.1])
    rho, P = reconstruct_fields(s, ZERO)
    np.testing.assert_array_equal(P.weights, s.m * s.psi)
    s = single_state([-1.0, 1.0], [0.5, 0.5], [0.0, 0.0])
    rho, P = reconstruct_fields(s, C1)
    np.testing.assert_allclose(P.weights, [0.5, -0.5])
    assert P.total == pytest.approx(0.0)


def test_rh_examples():
    s = single_state([-0.3, 0.4], [0.4, 0.6], [0.8, -0.2])
    A = PiecewiseLinearFlux.from_masses(s.m, s.psi)
    for k in range(2):
        assert abs(rankine_hugoniot_residual(s, A, C1, k)) <= 1e-12
        assert oleinik_margin(s, A, C1, k) == math.inf
    tr, _ = merged_pair([1.0, -1.0])
    rec = verify_trace(tr)[-1]
    assert rec.conv == 0.0 and rec.sigma == 0.0
    assert abs(rec.rh_residual) <= 1e-15


def test_pressureless_rh_is_chord():
    tr, _ = merged_pair([1.5, -0.5])
    rec = verify_trace(tr)[-1]
    assert rec.conv == 0.0
    assert rec.sigma == pytest.approx(0.5)  # [[A]]/[[M]] = (0.75 - 0.25) / 1
    assert abs(rec.rh_residual) <= 1e-15


def test_oleinik_examples():
    _, ver = merged_pair([1.0, -1.0])
    assert ver.records[0].oleinik_margin == pytest.approx(1.0)
    tr, ver = merged_pair([-1.0, 1.0], force=True)
    assert tr.events[0].t == 0.0
    assert ver.records[0].oleinik_margin == pytest.approx(-1.0)
    assert not ver.records[0].admissible


@st.composite
def runs(draw):
    kernel = draw(st.sampled_from(ALL_KERNELS))
    n = draw(st.integers(1, 15))
    x = np.sort(np.asarray(draw(st.lists(st.floats(-2, 2), min_size=n, max_size=n))))
    w = np.asarray(draw(st.lists(st.floats(0.1, 1), min_size=n, max_size=n)))
    v = np.asarray(draw(st.lists(st.floats(-2, 2), min_size=n, max_size=n)))
    return kernel, initial_state(x, w / w.sum(), velocities=v, kernel=kernel)


@settings(max_examples=40, deadline=None)
@given(run=runs())
def test_simulated_states_are_entropic(run):
    kernel, (x, m, psi) = run
    A = PiecewiseLinearFlux.from_masses(m, psi)
    ver = EventVerifier(A, kernel)
    tr = simulate((x, m, psi), kernel, 2.0, np.linspace(0, 2, 5), on_event=ver)
    records = ver.records + verify_trace(tr, A)
    for r in records:
        assert abs(r.rh_residual) <= RH_TOL
        assert r.oleinik_margin >= OLEINIK_TOL
        assert r.M_left < r.M_right
    for s in tr.states:
        rho, P = reconstruct_fields(s, kernel)
        assert math.fsum(rho.masses) == pytest.approx(1.0, abs=1e-13)
        assert P.total == pytest.approx(math.fsum(m * psi), abs=1e-12)


def test_verify_state_matches_records():
    s = single_state([-1.0, 0.0, 2.0], [0.2, 0.3, 0.5], [0.1, 0.0, -0.4])
    A = PiecewiseLinearFlux.from_masses(s.m, s.psi)
    recs = verify_state(s, A, CommunicationKernel.algebraic_tail(1.0))
    assert [r.cluster for r in recs] == [0, 1, 2]
    assert all(r.admissible for r in recs)
