"""Equations of motion of the planar segmented walker.

The model is a chain of rigid segments moving in the horizontal plane (no
gravity in the equations), driven entirely by the viscous reaction forces
of the stance leg tips and by the passive torsional springs in the body yaw
joints:

    K(q) qdd + h(q, qd) = u(q, qd) + lambda(q, qd, t)

with q = [x, y, th0, th1 .. th_{n-1}]; (x, y) and th0 are the front-module
pose and th1.. are the relative joint angles.  The straight walk
q(t) = [v t + x0, y0, 0, .., 0], qd = [v, 0, .., 0] is an exact solution:
every stance tip then moves backward relative to the body at exactly the
body speed, so all tip world velocities - and hence all forces - vanish.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as _k
from .gait import GaitSchedule, pack_gait, phase_offset_array, static_steer_array
from .params import ModelParams, pack_phys


@dataclass(frozen=True)
class State:
    """Mechanical state at time t: generalized positions and velocities."""

    q: np.ndarray
    qd: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        q = np.ascontiguousarray(np.asarray(self.q, dtype=np.float64))
        qd = np.ascontiguousarray(np.asarray(self.qd, dtype=np.float64))
        if q.shape != qd.shape or q.ndim != 1:
            raise ValueError("q and qd must be 1-D arrays of equal length")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "qd", qd)

    @property
    def z(self) -> np.ndarray:
        return np.concatenate([self.q, self.qd])


def straight_walk_state(p: ModelParams, g: GaitSchedule, t: float = 0.0,
                        x0: float = 0.0, y0: float = 0.0) -> State:
    """Exact straight-walk state at time t (heading along +x)."""
    nd = p.n_coords
    q = np.zeros(nd)
    q[0] = g.v * t + x0
    q[1] = y0
    qd = np.zeros(nd)
    qd[0] = g.v
    return State(q, qd, t)


def _buffers(n: int):
    nd = n + 2
    return (np.empty(n), np.empty(n), np.empty(n), np.empty(n),
            np.empty((n, n, 2)), np.empty((nd, nd)), np.empty(nd),
            np.empty(nd))


def _trig(q: np.ndarray, n: int):
    phi = np.empty(n)
    cph = np.empty(n)
    sph = np.empty(n)
    _k._chain_trig(q, n, phi, cph, sph)
    return phi, cph, sph


def mass_matrix(s: State, p: ModelParams) -> np.ndarray:
    """Symmetric positive-definite generalized mass matrix K(q)."""
    n = p.n_modules
    nd = p.n_coords
    phi, cph, sph = _trig(s.q, n)
    D = np.empty((n, n, 2))
    _k._angle_jacobian(n, p.seg_length, cph, sph, D)
    K = np.empty((nd, nd))
    _k._mass_matrix(n, p.seg_mass, p.seg_inertia, D, K)
    return K


def bias_spring_terms(s: State, p: ModelParams) -> tuple[np.ndarray, np.ndarray]:
    """Velocity-product force h(q, qd) and spring/damping force u(q, qd).

    Returns ``(h, u)``; the equations of motion read K qdd + h = u + lambda.
    """
    n = p.n_modules
    nd = p.n_coords
    phi, cph, sph = _trig(s.q, n)
    wphi = np.empty(n)
    _k._angular_rates(s.qd, n, wphi)
    D = np.empty((n, n, 2))
    _k._angle_jacobian(n, p.seg_length, cph, sph, D)
    h = np.empty(nd)
    _k._bias_vector(s.q, s.qd, n, p.seg_length, p.seg_mass, cph, sph, wphi,
                    D, h)
    u = np.zeros(nd)
    k_nm = p.k_array()
    damp = p.damping_array()
    for j in range(1, n):
        u[2 + j] = -k_nm[j - 1] * s.q[2 + j] - damp[j - 1] * s.qd[2 + j]
    return h, u


def reaction_forces(s: State, p: ModelParams, g: GaitSchedule,
                    t: float | None = None,
                    steer: np.ndarray | None = None) -> np.ndarray:
    """Generalized contact force lambda from the stance tips at time t.

    Stance membership uses the half-open convention (a leg exactly at
    stance onset counts as stance, at offset as swing).  ``steer`` may
    override the schedule's static leg-yaw descriptor (used by the turning
    controller).
    """
    n = p.n_modules
    nd = p.n_coords
    tt = s.t if t is None else t
    phi, cph, sph = _trig(s.q, n)
    wphi = np.empty(n)
    _k._angular_rates(s.qd, n, wphi)
    D = np.empty((n, n, 2))
    _k._angle_jacobian(n, p.seg_length, cph, sph, D)
    lam = np.empty(nd)
    st = static_steer_array(g) if steer is None else steer
    _k._reaction_vector(tt, tt, s.q, s.qd, n, pack_phys(p), pack_gait(g),
                        phase_offset_array(g, n), st, phi, cph, sph, wphi,
                        D, lam)
    return lam


def acceleration(s: State, p: ModelParams, g: GaitSchedule,
                 t: float | None = None,
                 steer: np.ndarray | None = None) -> np.ndarray:
    """Generalized acceleration qdd solving K qdd = u + lambda - h."""
    n = p.n_modules
    nd = p.n_coords
    tt = s.t if t is None else t
    bufs = _buffers(n)
    qdd = np.empty(nd)
    st = static_steer_array(g) if steer is None else steer
    status = _k._accel_into(tt, tt, s.z, n, pack_phys(p), p.k_array(),
                            p.damping_array(), pack_gait(g),
                            phase_offset_array(g, n), st, *bufs, qdd)
    if status != 0:
        raise ArithmeticError("mass matrix not positive definite")
    return qdd


def rhs(z: np.ndarray, t: float, p: ModelParams, g: GaitSchedule,
        steer: np.ndarray | None = None) -> np.ndarray:
    """First-order vector field f(z, t) with z = [q, qd]."""
    nd = p.n_coords
    s = State(z[:nd], z[nd:], t)
    return np.concatenate([s.qd, acceleration(s, p, g, t, steer)])


# -- kinematic / mechanical bookkeeping (used heavily by the test oracles) --

def segment_poses(s: State, p: ModelParams) -> tuple[np.ndarray, np.ndarray]:
    """World centers (n, 2) and headings (n,) of every segment."""
    n = p.n_modules
    L = p.seg_length
    phi, cph, sph = _trig(s.q, n)
    centers = np.empty((n, 2))
    centers[0, 0] = s.q[0]
    centers[0, 1] = s.q[1]
    for i in range(1, n):
        centers[i, 0] = centers[i - 1, 0] - 0.5 * L * (cph[i - 1] + cph[i])
        centers[i, 1] = centers[i - 1, 1] - 0.5 * L * (sph[i - 1] + sph[i])
    return centers, phi


def segment_velocities(s: State, p: ModelParams) -> tuple[np.ndarray, np.ndarray]:
    """World center velocities (n, 2) and heading rates (n,)."""
    n = p.n_modules
    phi, cph, sph = _trig(s.q, n)
    wphi = np.empty(n)
    _k._angular_rates(s.qd, n, wphi)
    D = np.empty((n, n, 2))
    _k._angle_jacobian(n, p.seg_length, cph, sph, D)
    vel = np.empty((n, 2))
    for i in range(n):
        vel[i, 0] = s.qd[0] + D[i, :, 0] @ s.qd[2:]
        vel[i, 1] = s.qd[1] + D[i, :, 1] @ s.qd[2:]
    return vel, wphi


def kinetic_energy(s: State, p: ModelParams) -> float:
    vel, wphi = segment_velocities(s, p)
    return float(0.5 * p.seg_mass * np.sum(vel**2)
                 + 0.5 * p.seg_inertia * np.sum(wphi**2))


def spring_energy(s: State, p: ModelParams) -> float:
    th = s.q[3:]
    return float(0.5 * np.sum(p.k_array() * th**2))


def linear_momentum(s: State, p: ModelParams) -> np.ndarray:
    vel, _ = segment_velocities(s, p)
    return p.seg_mass * vel.sum(axis=0)


def angular_momentum(s: State, p: ModelParams) -> float:
    """Total angular momentum about the world origin (z component)."""
    centers, _ = segment_poses(s, p)
    vel, wphi = segment_velocities(s, p)
    cross = centers[:, 0] * vel[:, 1] - centers[:, 1] * vel[:, 0]
    return float(p.seg_mass * cross.sum() + p.seg_inertia * wphi.sum())


def mirror_state(s: State) -> State:
    """Reflection about the walking axis (y -> -y, all angles negated)."""
    q = s.q.copy()
    qd = s.qd.copy()
    q[1] = -q[1]
    q[2:] = -q[2:]
    qd[1] = -qd[1]
    qd[2:] = -qd[2:]
    return State(q, qd, s.t)
