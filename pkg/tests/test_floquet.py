import math

import numpy as np
import pytest
from scipy.optimize import linear_sum_assignment

from multileg.dynamics import straight_walk_state
from multileg.floquet import (CriticalPoint, LinearizedSystem, critical_k1,
                              exponents_of, find_bracket, integrate_linear,
                              jacobian_at, monodromy, sweep_exponents)
from multileg.gait import GaitSchedule, stance_events
from multileg.integrate import simulate_raw
from multileg.params import default_params, with_k1_nmm, with_uniform_k_nmm

# regression anchors for the default calibration (frozen from bisection at
# dt = 2e-4; the acceptance suite re-derives them from scratch)
KC_PITCHFORK = 14.3647
KC_UNIFORM = 11.1758
EIGVEC_JOINTS = np.array([0.024910, 0.013748, 0.017121, 0.014971, 0.003105])


def pair_exponents(r1, r2):
    """Match the two spectra by multiplier distance, skip dead modes."""
    cost = np.abs(r1.multipliers[:, None] - r2.multipliers[None, :])
    ri, ci = linear_sum_assignment(cost)
    keep = np.abs(r1.multipliers[ri]) > 1e-8
    return r1.exponents[ri][keep], r2.exponents[ci][keep]


def test_constant_coefficient_exponents():
    rng = np.random.default_rng(20)
    for _ in range(5):
        A = rng.normal(scale=0.8, size=(6, 6))
        Z = integrate_linear(lambda t: A, 6, 1.0, dt=1e-3)
        got = np.sort_complex(exponents_of(Z, 1.0))
        want = np.sort_complex(np.linalg.eigvals(A))
        assert np.max(np.abs(got - want)) < 1e-8


def test_zero_system_is_identity():
    Z = integrate_linear(lambda t: np.zeros((4, 4)), 4, 2.0, dt=0.1)
    assert np.array_equal(Z, np.eye(4))


def test_jacobian_structure(p6, g6):
    nd = p6.n_coords
    for t in (0.0, 0.05, 0.2, 0.45):
        A = jacobian_at(p6, g6, t)
        # forces never depend on absolute position
        assert np.max(np.abs(A[:, 0])) == 0.0
        assert np.max(np.abs(A[:, 1])) == 0.0
        # first-order form: position rates are exactly the velocities
        assert np.max(np.abs(A[:nd, nd:] - np.eye(nd))) < 1e-9
        assert np.max(np.abs(A[:nd, :nd])) < 1e-9


def test_jacobian_periodicity(p6, g6):
    ls = LinearizedSystem(p6, g6)
    assert ls.dimension == 16 and ls.period == pytest.approx(0.6)
    for t in (0.07, 0.23):
        assert np.allclose(ls.a_at(t), ls.a_at(t + g6.tau), atol=1e-8)


def test_linear_twin_matches_kernel_monodromy(p6, g6):
    # the plain-python propagator driven by the FD evaluator must land on
    # the kernel's monodromy matrix
    ls = LinearizedSystem(p6, g6)
    res = monodromy(p6, g6, dt=2e-3)
    Z = integrate_linear(ls.a_at, ls.dimension, ls.period,
                         breakpoints=stance_events(g6, 6), dt=2e-3)
    assert np.max(np.abs(Z - res.monodromy)) < 1e-8


def test_stable_spectrum_structure(p6, g6):
    for k in (75.0, 41.0):
        res = monodromy(with_k1_nmm(p6, k), g6)
        assert res.n_zero >= 3
        assert res.leading.real < 0.0
        assert res.crossing_type == "none"
        assert not res.period_doubling
        # multiplier moduli consistent with exponent real parts
        assert np.allclose(np.abs(res.multipliers),
                           np.exp(res.exponents.real * res.period), rtol=1e-9)
        # real system: multiplier spectrum closed under conjugation, and so
        # are the exponents of the live modes (dead multipliers underflow
        # to ~0 and their log sits on the branch cut by rounding noise)
        mu = np.sort_complex(res.multipliers)
        assert np.max(np.abs(mu - np.sort_complex(np.conj(mu)))) < 1e-12
        live = res.exponents[np.abs(res.multipliers) > 1e-12]
        got = np.sort_complex(live)
        conj = np.sort_complex(np.conj(live))
        assert np.max(np.abs(got - conj)) < 1e-9


def test_monodromy_predicts_nonlinear_deviation(p6, g6):
    # one-cycle linear prediction vs full nonlinear simulation
    rng = np.random.default_rng(21)
    pp = with_k1_nmm(p6, 17.0)
    res = monodromy(pp, g6)
    dz = rng.normal(size=16)
    dz *= 1e-6 / np.linalg.norm(dz)
    z0 = straight_walk_state(pp, g6).z + dz
    sim = simulate_raw(pp, g6, z0, 0.0, g6.tau, 2e-4, None)
    dev = sim.z_final - straight_walk_state(pp, g6, t=g6.tau).z
    pred = res.monodromy @ dz
    assert np.linalg.norm(pred - dev) / np.linalg.norm(dev) < 1e-3


def test_exponents_converge_under_step_halving(p6, g6):
    r1 = monodromy(with_k1_nmm(p6, 13.0), g6, dt=8e-4)
    r2 = monodromy(with_k1_nmm(p6, 13.0), g6, dt=4e-4)
    e1, e2 = pair_exponents(r1, r2)
    assert np.max(np.abs(e1 - e2)) < 1e-6
    assert abs(r1.leading - r2.leading) < 1e-8


def test_find_bracket_and_failure(p6, g6):
    lo, hi = find_bracket(p6, g6, k_grid=[17.0, 13.0], dt=1e-3)
    assert lo == 13.0 and hi == 17.0
    with pytest.raises(ValueError):
        find_bracket(p6, g6, k_grid=[30.0, 41.0, 55.0], dt=1e-3)


def test_critical_k1_pitchfork(p6, g6):
    cp = critical_k1(p6, g6, bracket=(14.0, 14.7), k_tol=5e-3)
    assert isinstance(cp, CriticalPoint)
    assert cp.k_nmm_deg == pytest.approx(KC_PITCHFORK, abs=0.01)
    assert cp.crossing_type == "real"
    assert abs(cp.leading.imag) < 1e-3
    # joint pattern of the critical mode: all one sign, front joint largest
    assert np.all(cp.eigvec_joints > 0.0)
    assert np.allclose(cp.eigvec_joints, EIGVEC_JOINTS, atol=2e-4)
    assert cp.n_iter <= 60 and len(cp.history) >= 3


def test_critical_k1_rejects_bad_bracket(p6, g6):
    with pytest.raises(ValueError):
        critical_k1(p6, g6, bracket=(20.0, 30.0), dt=1e-3)


def test_uniform_softening_is_oscillatory(p6, g6):
    cp = critical_k1(p6, g6, bracket=(10.9, 11.5), uniform=True, k_tol=5e-3)
    assert cp.k_nmm_deg == pytest.approx(KC_UNIFORM, abs=0.01)
    assert cp.crossing_type == "complex-pair"
    res = monodromy(with_uniform_k_nmm(p6, 10.6), g6)
    assert res.leading.real > 0.0
    assert abs(res.leading.imag) > 0.1


def test_sweep_exponents_rows(p6, g6):
    rows = sweep_exponents(p6, g6, [21.0, 13.0], dt=1e-3)
    assert [r["k1_Nmm_deg"] for r in rows] == [21.0, 13.0]
    assert rows[0]["re_leading"] < 0.0 < rows[1]["re_leading"]
    for r in rows:
        assert r["inv_k1"] == pytest.approx(1.0 / r["k1_Nmm_deg"])
        assert r["n_zero"] >= 3
        assert r["crossing_type"] in ("none", "real", "complex-pair")


def test_sweep_exponents_parallel_matches_serial(p6, g6):
    ks = [41.0, 15.0]
    a = sweep_exponents(p6, g6, ks, dt=2e-3)
    b = sweep_exponents(p6, g6, ks, dt=2e-3, jobs=2)
    for ra, rb in zip(a, b):
        assert ra == rb
