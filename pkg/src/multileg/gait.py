"""Open-loop gait schedule and stance kinematics.

Every leg follows the same clock: a cycle of period ``tau = t_swing +
t_stance``.  Phase 0 is stance onset, with the tip at its anterior extreme
position; during stance the tip is dragged backward along the module axis
from +stride/2 to -stride/2 at constant speed ``v = stride / t_stance``,
after which the leg swings (force-free, massless) back to the front.

Phase assignment (all phases in cycle units, i.e. fractions of tau):

    phase(t, module, side) = frac(t/tau - module*phase_lag/2pi - side_offset)

with ``side_offset = 0`` for the left leg and ``lr_lag/2pi`` for the right
leg, so the left leg of the front module (module 0) begins stance at t = 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

LEFT = 0
RIGHT = 1

_SIDE_NAMES = {"left": LEFT, "right": RIGHT, LEFT: LEFT, RIGHT: RIGHT}


@dataclass(frozen=True)
class GaitSchedule:
    """Timing and stroke geometry of the wave gait.

    Attributes
    ----------
    t_swing, t_stance : swing / stance durations in s.
    stride : anterior-posterior tip travel during stance, m.
    phase_lag : phase lag between ipsilateral legs of adjacent modules, rad.
        The magnitude of the default is 2pi/3; its sign is negative so that
        stance onsets propagate from the tail toward the head (a direct,
        millipede-style wave).  Only the wave direction — not the magnitude —
        distinguishes the two sign choices.  Both instabilities of the
        straight walk exist for either direction at the calibrated leg
        geometry, but the critical front-joint stiffness drifts less with
        module count under the tail-to-head wave, which is what the
        reference trends require.  The stance-onset event times and the
        stance-count sequence over a cycle are identical for both signs.
    lr_lag : left-right phase lag within a module, rad (antiphase default).
    steer : static leg-yaw angles (left, right) of the front module's legs,
        rad.  Positive steer rotates the stance stroke counterclockwise,
        which pushes the front of the robot to the left.
    steer_limit : maximum |leg yaw| allowed, rad.
    sides_swapped : when True the left/right phase roles are exchanged; this
        is the schedule mirrored about the walking axis.
    """

    t_swing: float = 0.29
    t_stance: float = 0.31
    stride: float = 0.03
    phase_lag: float = -2.0 * math.pi / 3.0
    lr_lag: float = math.pi
    steer: tuple = (0.0, 0.0)
    steer_limit: float = math.radians(5.0)
    sides_swapped: bool = False

    def __post_init__(self):
        if self.t_swing <= 0.0 or self.t_stance <= 0.0:
            raise ValueError("t_swing and t_stance must be positive")
        if self.stride <= 0.0:
            raise ValueError("stride must be positive")
        if abs(self.steer[0]) > self.steer_limit + 1e-12 or abs(self.steer[1]) > self.steer_limit + 1e-12:
            raise ValueError("steer angles exceed steer_limit")

    @property
    def tau(self) -> float:
        """Gait cycle period in s."""
        return self.t_swing + self.t_stance

    @property
    def duty(self) -> float:
        return self.t_stance / self.tau

    @property
    def v(self) -> float:
        """Commanded walking speed: stride per stance duration, m/s."""
        return self.stride / self.t_stance

    def side_offset(self, side: int) -> float:
        """Cycle-unit phase offset of a side (depends on mirroring)."""
        lr = self.lr_lag / (2.0 * math.pi)
        if self.sides_swapped:
            return lr if side == LEFT else 0.0
        return 0.0 if side == LEFT else lr

    def mirrored(self) -> "GaitSchedule":
        """Schedule reflected about the walking axis.

        Left and right phase roles swap and the steering angles swap sides
        with negated sign, so that a mirrored initial state evolved under
        the mirrored schedule is the exact mirror image of the original
        trajectory.
        """
        return replace(
            self,
            sides_swapped=not self.sides_swapped,
            steer=(-self.steer[1], -self.steer[0]),
        )


def _frac(x: float) -> float:
    return x - math.floor(x)


def leg_phase(t: float, module: int, side, g: GaitSchedule) -> float:
    """Cycle-unit phase in [0, 1) of one leg at time t (s)."""
    s = _SIDE_NAMES[side]
    return _frac(t / g.tau - module * g.phase_lag / (2.0 * math.pi) - g.side_offset(s))


def stance_info(phase: float, g: GaitSchedule):
    """Stance state of a leg at the given cycle-unit phase.

    Returns ``(in_stance, tip_offset, tip_relvel)`` where ``tip_offset`` is
    the longitudinal tip position relative to the hip in the module frame
    (m) and ``tip_relvel`` the prescribed tip velocity relative to the body
    along the module x-axis (m/s, always -v during stance).  For the front
    module's legs the dynamics layer rotates both stroke direction and
    relative velocity by the leg-yaw (steer) angle about the hip.  Both
    trailing values are zero during swing.
    """
    if not (0.0 <= phase < 1.0):
        raise ValueError("phase must lie in [0, 1)")
    ts = phase * g.tau
    if ts < g.t_stance:
        return True, 0.5 * g.stride - g.v * ts, -g.v
    return False, 0.0, 0.0


def stance_events(g: GaitSchedule, n_modules: int) -> np.ndarray:
    """Sorted unique stance onset/offset times within one cycle, in [0, tau).

    These are the instants where the set of stance legs changes; the
    integrator aligns its steps to them.
    """
    times = []
    for m in range(n_modules):
        for s in (LEFT, RIGHT):
            onset = _frac(m * g.phase_lag / (2.0 * math.pi) + g.side_offset(s)) * g.tau
            times.append(onset)
            times.append(math.fmod(onset + g.t_stance, g.tau))
    arr = np.array(sorted(times))
    # collapse duplicates produced by coinciding leg phases
    keep = np.ones(arr.shape[0], dtype=bool)
    keep[1:] = np.diff(arr) > 1e-12
    return arr[keep]


def stance_count(t: float, g: GaitSchedule, n_modules: int) -> int:
    """Number of legs in stance at time t."""
    c = 0
    for m in range(n_modules):
        for s in (LEFT, RIGHT):
            if stance_info(leg_phase(t, m, s, g), g)[0]:
                c += 1
    return c


def phase_offset_array(g: GaitSchedule, n_modules: int) -> np.ndarray:
    """(n_modules, 2) array of per-leg cycle-unit phase offsets."""
    off = np.empty((n_modules, 2), dtype=np.float64)
    for m in range(n_modules):
        for s in (LEFT, RIGHT):
            off[m, s] = _frac(m * g.phase_lag / (2.0 * math.pi) + g.side_offset(s))
    return off


def pack_gait(g: GaitSchedule) -> np.ndarray:
    """Flatten the gait scalars for the kernels: [tau, t_stance, stride, v]."""
    return np.array([g.tau, g.t_stance, g.stride, g.v], dtype=np.float64)


def static_steer_array(g: GaitSchedule) -> np.ndarray:
    """Kernel steering descriptor rows [value, ramp_delta, t0, t1] per side.

    A static schedule has no ramps, so delta is zero and the ramp window is
    irrelevant.
    """
    steer = np.zeros((2, 4), dtype=np.float64)
    steer[LEFT, 0] = g.steer[0]
    steer[RIGHT, 0] = g.steer[1]
    return steer
