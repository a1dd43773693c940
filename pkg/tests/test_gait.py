import math

import numpy as np
import pytest

from multileg.gait import (GaitSchedule, LEFT, RIGHT, leg_phase, stance_count,
                           stance_events, stance_info)


def enumerate_events(g: GaitSchedule, n_modules: int) -> np.ndarray:
    """Independent event oracle: every leg's onset and offset, mod tau."""
    times = set()
    for m in range(n_modules):
        for s in (LEFT, RIGHT):
            onset = ((m * g.phase_lag / (2.0 * math.pi) + g.side_offset(s))
                     % 1.0) * g.tau
            times.add(round(onset, 12))
            times.add(round((onset + g.t_stance) % g.tau, 12))
    return np.array(sorted(times))


def test_schedule_derived_quantities():
    g = GaitSchedule()
    assert g.tau == pytest.approx(0.6)
    assert g.duty == pytest.approx(0.31 / 0.6)
    assert g.v == pytest.approx(0.03 / 0.31)


def test_schedule_validation():
    with pytest.raises(ValueError):
        GaitSchedule(t_swing=0.0)
    with pytest.raises(ValueError):
        GaitSchedule(t_stance=-0.1)
    with pytest.raises(ValueError):
        GaitSchedule(stride=0.0)
    with pytest.raises(ValueError):
        GaitSchedule(steer=(math.radians(6.0), 0.0))


def test_phase_anchor_conventions():
    # module-1 left leg starts its stance at t = 0; right leg in antiphase
    g = GaitSchedule()
    assert leg_phase(0.0, 0, "left", g) == 0.0
    assert leg_phase(0.0, 0, "right", g) == pytest.approx(0.5)
    # head-to-tail wave: the adjacent module leads by one third of a cycle
    g_fwd = GaitSchedule(phase_lag=2.0 * math.pi / 3.0)
    assert leg_phase(0.0, 1, "left", g_fwd) == pytest.approx(2.0 / 3.0)
    # the default wave runs tail-to-head, flipping the offset
    assert leg_phase(0.0, 1, "left", g) == pytest.approx(1.0 / 3.0)


def test_phase_periodicity():
    g = GaitSchedule()
    rng = np.random.default_rng(3)
    for _ in range(50):
        t = rng.uniform(0.0, 10.0)
        m = rng.integers(0, 6)
        s = int(rng.integers(0, 2))
        a = leg_phase(t, m, s, g)
        b = leg_phase(t + g.tau, m, s, g)
        assert min(abs(a - b), 1.0 - abs(a - b)) < 1e-9


def test_stance_info_profile():
    g = GaitSchedule()
    on, off, vel = stance_info(0.0, g)
    assert on and off == pytest.approx(0.015) and vel == pytest.approx(-g.v)
    on, off, vel = stance_info(0.5 * g.t_stance / g.tau, g)
    assert on and off == pytest.approx(0.0, abs=1e-12)
    assert vel == pytest.approx(-0.0968, abs=5e-5)
    on, off, vel = stance_info(0.9, g)
    assert not on and off == 0.0 and vel == 0.0
    with pytest.raises(ValueError):
        stance_info(1.0, g)
    with pytest.raises(ValueError):
        stance_info(-0.1, g)
    # AEP -> PEP sweep is linear and symmetric about midstance
    ph = np.linspace(0.0, g.duty * 0.999, 40)
    offs = np.array([stance_info(x, g)[1] for x in ph])
    assert offs[0] == pytest.approx(g.stride / 2)
    assert np.all(np.diff(offs) < 0.0)


def test_stance_events_single_module():
    g = GaitSchedule()
    ev = stance_events(g, 1)
    assert np.allclose(ev, [0.0, 0.01, 0.3, 0.31], atol=1e-12)


def test_stance_events_zero_lag_collapse():
    g = GaitSchedule(phase_lag=0.0)
    ev = stance_events(g, 6)
    assert np.allclose(ev, [0.0, 0.01, 0.3, 0.31], atol=1e-12)


@pytest.mark.parametrize("lag", [-2.0 * math.pi / 3.0, 2.0 * math.pi / 3.0])
def test_stance_events_match_enumeration(lag):
    g = GaitSchedule(phase_lag=lag)
    ev = stance_events(g, 6)
    expect = enumerate_events(g, 6)
    assert ev.shape == expect.shape
    assert np.allclose(ev, expect, atol=1e-9)
    assert np.all(ev >= 0.0) and np.all(ev < g.tau)
    assert np.all(np.diff(ev) > 0.0)


def test_stance_count_over_cycle(g6):
    # duty 0.31/0.6 over 12 staggered legs puts 6 or 8 feet down at any
    # instant, averaging 12 * duty.  Offset the scan grid so no sample
    # lands exactly on an onset/offset boundary, where float rounding can
    # split two nominally simultaneous leg transitions.
    ts = np.arange(0.0, g6.tau, 1e-3) + 3.7e-4
    counts = np.array([stance_count(t, g6, 6) for t in ts])
    assert set(counts.tolist()) == {6, 8}
    assert counts.mean() == pytest.approx(12 * g6.duty, rel=5e-3)


def test_mirrored_schedule_roundtrip():
    g = GaitSchedule(steer=(math.radians(2.0), math.radians(-1.0)))
    m = g.mirrored()
    assert m.sides_swapped and not g.sides_swapped
    assert m.steer == (math.radians(1.0), math.radians(-2.0))
    assert m.mirrored() == g
    # swapping sides exchanges the per-side phase offsets
    assert m.side_offset(LEFT) == g.side_offset(RIGHT)
    assert m.side_offset(RIGHT) == g.side_offset(LEFT)


def test_mirrored_schedule_same_stance_counts(g6):
    m = g6.mirrored()
    ts = np.arange(0.0, g6.tau, 1e-3)
    a = [stance_count(t, g6, 6) for t in ts]
    b = [stance_count(t, m, 6) for t in ts]
    assert a == b
