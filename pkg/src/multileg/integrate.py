"""Event-aligned fixed-step integration driver.

The stance set changes at known clock times (the gait is open loop), so the
trajectory is integrated interval-by-interval between *breakpoints*: the
union of stance onset/offset events, requested output times, and any
controller touch points.  Inside an interval the vector field is smooth and
plain RK4 with a uniform step <= dt applies; this keeps the integrator at
its full order through the force discontinuities and makes runs bitwise
reproducible.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as _k
from .dynamics import State
from .gait import GaitSchedule, pack_gait, phase_offset_array, static_steer_array, stance_events
from .params import ModelParams, pack_phys

# statuses returned by simulate_raw
OK = 0
BLOWUP = 1
SOLVER_FAILURE = 2


def merge_breakpoints(parts: list[tuple[np.ndarray, bool]],
                      decimals: int = 10) -> tuple[np.ndarray, np.ndarray]:
    """Merge labeled time arrays into (sorted unique times, record mask).

    ``parts`` holds (times, is_recorded) pairs; duplicate times (after
    rounding to ``decimals``) are collapsed and their record flags OR-ed.
    """
    times = np.concatenate([np.asarray(t, dtype=np.float64) for t, _ in parts])
    flags = np.concatenate([np.full(len(t), rec, dtype=bool) for t, rec in parts])
    keys = np.round(times, decimals)
    order = np.argsort(keys, kind="stable")
    keys = keys[order]
    flags = flags[order]
    uniq, start = np.unique(keys, return_index=True)
    mask = np.empty(len(uniq), dtype=bool)
    bounds = np.append(start, len(keys))
    for i in range(len(uniq)):
        mask[i] = flags[bounds[i]:bounds[i + 1]].any()
    return uniq, mask


def build_plan(g: GaitSchedule, n_modules: int, t0: float, t1: float,
               dt_out: float | None,
               extra_times: np.ndarray | None = None
               ) -> tuple[np.ndarray, np.ndarray]:
    """Breakpoint times and record mask covering [t0, t1].

    Stance events of every cycle are always included (never recorded by
    themselves); output samples on the uniform grid t0 + k*dt_out are
    included and recorded; ``extra_times`` (controller touch points etc.)
    are included unrecorded.
    """
    if t1 <= t0:
        raise ValueError("t1 must exceed t0")
    tau = g.tau
    ev = stance_events(g, n_modules)
    c_first = int(np.floor(t0 / tau)) - 1
    c_last = int(np.ceil(t1 / tau)) + 1
    cycles = np.arange(c_first, c_last + 1) * tau
    ev_all = (cycles[:, None] + ev[None, :]).ravel()
    ev_all = ev_all[(ev_all > t0) & (ev_all < t1)]
    parts = [(np.array([t0, t1]), True), (ev_all, False)]
    if dt_out is not None:
        n_out = int(np.floor((t1 - t0) / dt_out + 1e-9))
        outs = t0 + dt_out * np.arange(n_out + 1)
        outs = outs[outs <= t1 + 1e-12]
        parts.append((outs, True))
    if extra_times is not None and len(extra_times):
        ex = np.asarray(extra_times, dtype=np.float64)
        ex = ex[(ex > t0) & (ex < t1)]
        parts.append((ex, False))
    return merge_breakpoints(parts)


@dataclass
class SimResult:
    """Raw integration output over one plan."""

    status: int
    t_end: float
    capture_time: float  # -1.0 when no capture
    times: np.ndarray    # recorded sample times
    states: np.ndarray   # (len(times), 2*(n+2)) recorded states
    z_final: np.ndarray  # state at t_end

    @property
    def captured(self) -> bool:
        return self.capture_time >= 0.0


def simulate_raw(p: ModelParams, g: GaitSchedule, z0: np.ndarray, t0: float,
                 t1: float, dt: float, dt_out: float | None,
                 steer: np.ndarray | None = None,
                 extra_times: np.ndarray | None = None,
                 capture_point: tuple[float, float] | None = None,
                 capture_radius: float = 0.0) -> SimResult:
    """Integrate from z0 over [t0, t1]; see module docstring for stepping."""
    bks, mask = build_plan(g, p.n_modules, t0, t1, dt_out, extra_times)
    st = static_steer_array(g) if steer is None else steer
    z = np.array(z0, dtype=np.float64)
    records = np.empty((int(mask.sum()), z.shape[0]))
    cap = capture_point is not None
    tx, ty = capture_point if cap else (0.0, 0.0)
    status, t_end, cap_t, nrec = _k.rk4_run(
        z, bks, mask, dt, p.n_modules, pack_phys(p), p.k_array(),
        p.damping_array(), pack_gait(g), phase_offset_array(g, p.n_modules),
        st, records, cap, tx, ty, capture_radius)
    times = bks[mask][:nrec]
    return SimResult(status, t_end, cap_t, times, records[:nrec], z)


def simulate_state(p: ModelParams, g: GaitSchedule, s0: State, t1: float,
                   dt: float = 2e-4, dt_out: float = 0.01) -> SimResult:
    """Convenience wrapper taking/returning State-level quantities."""
    return simulate_raw(p, g, s0.z, s0.t, t1, dt, dt_out)
