"""Floquet stability analysis of the straight walk.

The straight walk is an exact solution of the time-periodic dynamics
(period tau, the gait cycle).  Small deviations obey d(dz)/dt = A(t) dz
with A(t) the Jacobian of the vector field along the walk; the monodromy
matrix Z(tau) (fundamental solution over one period) has multipliers mu_j
whose logarithms give the Floquet exponents

    Lambda_j = log(mu_j) / tau          (principal branch).

Planar symmetry guarantees three neutral exponents (translations and the
heading family); the remaining leading exponent decides stability.  When a
*real* leading exponent crosses zero as the front-joint stiffness k1 is
lowered, the straight walk loses stability through a symmetric (pitchfork)
branching into curved walks; a complex-conjugate pair crossing instead
marks an oscillatory (Hopf/Neimark-Sacker) instability, which is what a
uniform softening of all joints produces.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels as _k
from .gait import GaitSchedule, pack_gait, phase_offset_array, stance_events
from .integrate import build_plan
from .params import (ModelParams, nm_rad_to_nmm_deg, pack_phys, with_k1_nmm,
                     with_uniform_k_nmm)

#: neutral modes guaranteed by planar symmetry (x, y translation + heading)
N_STRUCTURAL = 3

DEFAULT_TOL_ZERO = 1e-4   # 1/s, |Lambda| below this counts as neutral
DEFAULT_IM_TOL = 1e-3     # 1/s, |Im| below this counts as a real exponent


@dataclass(frozen=True)
class LinearizedSystem:
    """Periodic linear system dzdot = A(t) z for the straight walk."""

    params: ModelParams
    gait: GaitSchedule
    h_fd: float = 1e-6

    @property
    def dimension(self) -> int:
        return 2 * self.params.n_coords

    @property
    def period(self) -> float:
        return self.gait.tau

    def a_at(self, t: float) -> np.ndarray:
        """A(t) evaluated by central differences about the walk."""
        return jacobian_at(self.params, self.gait, t, h_fd=self.h_fd)


def jacobian_at(p: ModelParams, g: GaitSchedule, t: float,
                state: np.ndarray | None = None,
                h_fd: float = 1e-6) -> np.ndarray:
    """FD Jacobian of the vector field at time t.

    Defaults to the straight-walk state at t.  Stance membership follows the
    instantaneous (right-continuous) convention, matching reaction_forces.
    """
    n = p.n_modules
    dim = 2 * p.n_coords
    if state is None:
        z = np.zeros(dim)
        z[0] = g.v * t
        z[p.n_coords] = g.v
    else:
        z = np.asarray(state, dtype=np.float64)
    A = np.empty((dim, dim))
    steer = np.zeros((2, 4))
    steer[0, 0] = g.steer[0]
    steer[1, 0] = g.steer[1]
    status = _k.jacobian_fd_into(t, t, z, h_fd, n, pack_phys(p), p.k_array(),
                                 p.damping_array(), pack_gait(g),
                                 phase_offset_array(g, n), steer, A)
    if status != 0:
        raise ArithmeticError("dynamics evaluation failed in FD Jacobian")
    return A


@dataclass(frozen=True)
class FloquetResult:
    """Monodromy spectrum of the straight walk at one parameter point."""

    monodromy: np.ndarray
    multipliers: np.ndarray     # eigenvalues of Z(tau)
    exponents: np.ndarray       # log(mu)/tau, principal branch
    eigenvectors: np.ndarray    # columns matching multipliers
    period: float
    n_zero: int                 # exponents with |Lambda| < tol_zero
    leading: complex            # largest-Re exponent outside the neutral trio
    leading_index: int
    crossing_type: str          # none | real | complex-pair
    period_doubling: bool       # any multiplier on the negative real axis
    tol_zero: float

    def leading_vector(self) -> np.ndarray:
        return self.eigenvectors[:, self.leading_index]


def _classify(exponents: np.ndarray, tau: float, tol_zero: float,
              im_tol: float):
    """Split the spectrum into the structural trio and the rest.

    The three symmetry modes sit at Lambda = 0 up to integrator noise; the
    physically meaningful leading exponent is the largest-Re member of the
    remaining spectrum.  Identifying the trio as the three smallest |Lambda|
    keeps the classification stable even while the leading exponent itself
    passes through zero at a bifurcation (where a plain |Lambda| threshold
    would swallow it).
    """
    order_mag = np.argsort(np.abs(exponents))
    structural = set(order_mag[:N_STRUCTURAL].tolist())
    rest = [i for i in range(len(exponents)) if i not in structural]
    lead = max(rest, key=lambda i: exponents[i].real)
    n_zero = int(np.sum(np.abs(exponents) < tol_zero))
    lam = exponents[lead]
    if lam.real < -10.0 * tol_zero:
        ctype = "none"
    elif abs(lam.imag) < im_tol:
        ctype = "real"
    else:
        ctype = "complex-pair"
    return lead, n_zero, ctype


def monodromy(p: ModelParams, g: GaitSchedule, dt: float = 2e-4,
              h_fd: float = 1e-6, tol_zero: float = DEFAULT_TOL_ZERO,
              im_tol: float = DEFAULT_IM_TOL) -> FloquetResult:
    """Monodromy matrix and Floquet spectrum of the straight walk.

    Integrates Zdot = A(t) Z over one gait cycle with steps aligned to the
    stance events.  The walk requires zero steering, so any static steer in
    the schedule is ignored.
    """
    n = p.n_modules
    dim = 2 * p.n_coords
    tau = g.tau
    ev = stance_events(g, n)
    bks = np.unique(np.concatenate([ev, [0.0, tau]]))
    bks = bks[(bks >= 0.0) & (bks <= tau)]
    Z = np.empty((dim, dim))
    steer = np.zeros((2, 4))
    status = _k.monodromy_run(bks, dt, n, g.v, h_fd, pack_phys(p),
                              p.k_array(), p.damping_array(), pack_gait(g),
                              phase_offset_array(g, n), steer, Z)
    if status != 0:
        raise ArithmeticError("dynamics evaluation failed in monodromy")
    mult, vec = np.linalg.eig(Z)
    # multipliers of very strongly damped modes can underflow to ~0; pin
    # their exponents at a large negative value instead of log(0) = -inf.
    # eig returns a real array when every multiplier is real, and negative
    # reals must go through the complex log (branch Im = pi).
    safe = np.where(np.abs(mult) > 1e-300, mult, 1e-300).astype(np.complex128)
    expo = np.log(safe) / tau
    lead, n_zero, ctype = _classify(expo, tau, tol_zero, im_tol)
    # flag negative-real multipliers, ignoring dead modes whose multiplier
    # has numerically underflowed (their axis placement is rounding noise)
    pd_flag = bool(np.any((np.abs(mult) > 1e-12) & (mult.real < 0.0)
                          & (np.abs(mult.imag) < 1e-9 * np.abs(mult.real))))
    return FloquetResult(Z, mult, expo, vec, tau, n_zero, expo[lead],
                         lead, ctype, pd_flag, tol_zero)


def integrate_linear(a_of_t, dim: int, period: float,
                     breakpoints: np.ndarray | None = None,
                     dt: float = 1e-3) -> np.ndarray:
    """Reference RK4 integration of Zdot = A(t) Z for an arbitrary A(t).

    Plain-numpy twin of the production kernel, usable with any evaluator
    (constant test matrices, the FD evaluator of LinearizedSystem, ...).
    """
    if breakpoints is None:
        bks = np.array([0.0, period])
    else:
        bks = np.unique(np.concatenate([[0.0, period],
                                        np.asarray(breakpoints, float)]))
        bks = bks[(bks >= 0.0) & (bks <= period)]
    Z = np.eye(dim)
    for a0, b0 in zip(bks[:-1], bks[1:]):
        span = b0 - a0
        nst = max(1, int(math.ceil(span / dt - 1e-9)))
        h = span / nst
        for st in range(nst):
            t = a0 + st * h
            # evaluations are nudged strictly inside the interval: exactly
            # at a breakpoint the instantaneous stance set is float-fragile
            # (legs sit on the onset/offset boundary), while within the
            # interval every evaluator agrees with the event-aligned kernel
            A1 = a_of_t(max(t, a0 + 1e-12))
            A2 = a_of_t(t + 0.5 * h)
            A3 = a_of_t(min(t + h, b0 - 1e-12))
            K1 = A1 @ Z
            K2 = A2 @ (Z + 0.5 * h * K1)
            K3 = A2 @ (Z + 0.5 * h * K2)
            K4 = A3 @ (Z + h * K3)
            Z = Z + (h / 6.0) * (K1 + 2.0 * K2 + 2.0 * K3 + K4)
    return Z


def exponents_of(Z: np.ndarray, period: float) -> np.ndarray:
    """Floquet exponents from a monodromy matrix (principal branch)."""
    return np.log(np.linalg.eigvals(Z)) / period


@dataclass(frozen=True)
class CriticalPoint:
    """Result of the critical-stiffness bisection."""

    k_nmm_deg: float            # critical stiffness, N mm/deg
    crossing_type: str          # real | complex-pair
    eigvec_joints: np.ndarray   # joint-angle components, unit full vector
    leading: complex            # leading exponent at the returned k
    n_iter: int
    history: tuple              # (k, Re leading) bisection trace
    bracket: tuple


def _leading_real(p: ModelParams, g: GaitSchedule, k_nmm: float,
                  uniform: bool, dt: float, h_fd: float):
    pp = with_uniform_k_nmm(p, k_nmm) if uniform else with_k1_nmm(p, k_nmm)
    res = monodromy(pp, g, dt=dt, h_fd=h_fd)
    return res.leading.real, res


def _joint_components(res: FloquetResult, n_modules: int) -> np.ndarray:
    """Real joint-angle part of the leading eigenvector, sign-normalized."""
    v = res.leading_vector()
    # rotate the complex phase to make the dominant joint entry real
    joints = v[3:2 + n_modules]
    piv = joints[np.argmax(np.abs(joints))]
    if abs(piv) > 0.0:
        v = v * np.conj(piv) / abs(piv)
    v = v / np.linalg.norm(v)
    comps = np.real(v[3:2 + n_modules])
    if comps[0] < 0.0:
        comps = -comps
    return comps


def find_bracket(p: ModelParams, g: GaitSchedule, k_grid=None,
                 uniform: bool = False, dt: float = 2e-4,
                 h_fd: float = 1e-6) -> tuple[float, float]:
    """Scan a stiffness grid (N mm/deg) for a sign change of Re(leading)."""
    if k_grid is None:
        k_grid = np.geomspace(2.0, 80.0, 9)
    prev_k = None
    prev_re = None
    for k in k_grid:
        re, _ = _leading_real(p, g, float(k), uniform, dt, h_fd)
        if prev_re is not None and re * prev_re <= 0.0:
            return (prev_k, float(k)) if prev_re > 0 else (float(k), prev_k)
        prev_k, prev_re = float(k), re
    raise ValueError("no stability change found on the stiffness grid")


def critical_k1(p: ModelParams, g: GaitSchedule,
                bracket: tuple[float, float] | None = None,
                uniform: bool = False, dt: float = 2e-4, h_fd: float = 1e-6,
                re_tol: float = 1e-5, k_tol: float = 1e-3,
                max_iter: int = 60) -> CriticalPoint:
    """Bisect the leading exponent's real part to the critical stiffness.

    ``bracket`` is (unstable_k, stable_k) in N mm/deg, i.e. Re(leading) > 0
    at the first entry and < 0 at the second; when omitted it is found by a
    grid scan.  With ``uniform=True`` every joint is swept together (the
    oscillatory-instability protocol) instead of the front joint alone.
    """
    if bracket is None:
        k_un, k_st = find_bracket(p, g, uniform=uniform, dt=dt, h_fd=h_fd)
    else:
        k_un, k_st = bracket
    re_un, res_un = _leading_real(p, g, k_un, uniform, dt, h_fd)
    re_st, res_st = _leading_real(p, g, k_st, uniform, dt, h_fd)
    if not (re_un > 0.0 > re_st):
        raise ValueError(
            f"bracket does not straddle the crossing: Re(L)={re_un:.3g} at "
            f"k={k_un:.4g}, Re(L)={re_st:.3g} at k={k_st:.4g}")
    history = [(k_un, re_un), (k_st, re_st)]
    k_mid, res_mid, re_mid = k_un, res_un, re_un
    it = 0
    while it < max_iter:
        it += 1
        k_mid = 0.5 * (k_un + k_st)
        re_mid, res_mid = _leading_real(p, g, k_mid, uniform, dt, h_fd)
        history.append((k_mid, re_mid))
        if abs(re_mid) < re_tol or abs(k_un - k_st) < k_tol:
            break
        if re_mid > 0.0:
            k_un = k_mid
        else:
            k_st = k_mid
    # At the crossing the critical multiplier sits exactly on the unit
    # circle together with the three structural ones, so eig returns an
    # arbitrary basis of that cluster.  Step a few percent into the
    # unstable regime, where the critical mode separates cleanly, to read
    # off its eigenvector and its real/complex character.
    k_eval = min(0.95 * k_mid, k_mid - 0.2)
    if k_eval <= 0.0:
        k_eval = 0.5 * k_mid
    re_ev, res_ev = _leading_real(p, g, k_eval, uniform, dt, h_fd)
    probe = res_ev if re_ev > 0.0 else res_mid
    ctype = ("real" if abs(probe.leading.imag) < DEFAULT_IM_TOL
             else "complex-pair")
    comps = _joint_components(probe, p.n_modules)
    return CriticalPoint(k_mid, ctype, comps, res_mid.leading, it,
                         tuple(history), (k_un, k_st))


def _sweep_job(args) -> dict:
    p, g, k, uniform, dt, h_fd = args
    _, res = _leading_real(p, g, k, uniform, dt, h_fd)
    return {
        "k1_Nmm_deg": k,
        "inv_k1": 1.0 / k,
        "re_leading": res.leading.real,
        "im_leading": res.leading.imag,
        "crossing_type": res.crossing_type,
        "n_zero": res.n_zero,
    }


def sweep_exponents(p: ModelParams, g: GaitSchedule, k_list_nmm,
                    uniform: bool = False, dt: float = 2e-4,
                    h_fd: float = 1e-6, jobs: int = 1) -> list[dict]:
    """Leading-exponent locus over a stiffness list (N mm/deg).

    Entries are independent monodromy integrations; with ``jobs > 1`` they
    run in parallel processes and keep their input order.
    """
    args = [(p, g, float(k), uniform, dt, h_fd) for k in k_list_nmm]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(_sweep_job, args))
    return [_sweep_job(a) for a in args]


def critical_surface(p: ModelParams, g: GaitSchedule, vary: str, values,
                     dt: float = 2e-4, h_fd: float = 1e-6) -> list[dict]:
    """Critical front-joint stiffness under single-parameter variations.

    ``vary`` is one of ``k2345`` (other joints' stiffness, N mm/deg),
    ``gait_speed`` (stride in m at fixed timing), ``phase_lag`` (rad) or
    ``n_modules``.  Each row reports the re-bisected critical k1.
    """
    rows = []
    for val in values:
        pp, gg = p, g
        if vary == "k2345":
            ks = [nm_rad_to_nmm_deg(p.k_joint[0])] + [float(val)] * (p.n_joints - 1)
            from .params import nmm_deg_to_nm_rad
            pp = replace(p, k_joint=tuple(nmm_deg_to_nm_rad(k) for k in ks))
        elif vary == "gait_speed":
            gg = replace(g, stride=float(val))
        elif vary == "phase_lag":
            gg = replace(g, phase_lag=float(val))
        elif vary == "n_modules":
            from .params import default_params
            nv = int(val)
            pp = default_params(
                n_modules=nv,
                k1_nmm_deg=nm_rad_to_nmm_deg(p.k_joint[0]),
                k_rest_nmm_deg=nm_rad_to_nmm_deg(p.k_joint[-1]) if p.n_joints > 1
                else nm_rad_to_nmm_deg(p.k_joint[0]),
                c_fric=p.c_fric, d_leg=p.d_leg, hip_offset=p.hip_offset,
                seg_length=p.seg_length, total_mass=p.seg_mass * nv)
        else:
            raise ValueError(f"unknown variation '{vary}'")
        try:
            cp = critical_k1(pp, gg, dt=dt, h_fd=h_fd)
            rows.append({"vary": vary, "value": float(val),
                         "k_c_nmm_deg": cp.k_nmm_deg,
                         "crossing_type": cp.crossing_type, "error": ""})
        except (ValueError, ArithmeticError) as exc:
            rows.append({"vary": vary, "value": float(val),
                         "k_c_nmm_deg": float("nan"),
                         "crossing_type": "", "error": str(exc)})
    return rows
