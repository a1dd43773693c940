"""Nonlinear walk simulations and the curved-walk bifurcation diagram.

Below a critical front-joint stiffness the straight walk gives way to a
pair of mirror-image curved walks with constant same-sign joint angles.
This module runs perturbed walks, extracts steady joint angles and the
body-axis curvature radius, sweeps the front stiffness to build the
bifurcation diagram, and fits the square-root branch law

    |theta1| = a * sqrt(max(0, 1/k1 - 1/k_c))

whose fitted k_c can be checked against the Floquet prediction.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import least_squares

from .dynamics import State, straight_walk_state
from .gait import GaitSchedule
from .integrate import OK, SimResult, simulate_raw
from .params import ModelParams, nmm_deg_to_nm_rad, with_k1_nmm

#: joint-angle sum below which a walk counts as straight (rad)
STRAIGHT_THRESHOLD = math.radians(0.1)

#: per-cycle drift bound for convergence of steady angles (rad/cycle)
DRIFT_TOL = math.radians(0.05)


@dataclass(frozen=True)
class WalkTrace:
    """Sampled walk with its provenance.

    ``states`` holds rows [x, y, theta0, theta1..theta_{n-1}, rates...] at
    uniform ``dt_out`` spacing (the final row lands on t_end).
    """

    times: np.ndarray
    states: np.ndarray
    params: ModelParams
    gait: GaitSchedule
    dt: float
    dt_out: float
    perturbation: np.ndarray
    status: int
    t_end: float

    @property
    def aborted(self) -> bool:
        return self.status != OK

    def joint_angles(self) -> np.ndarray:
        """Joint-angle columns theta1..theta_{n-1}, rad."""
        return self.states[:, 3:2 + self.params.n_modules]


def simulate_walk(p: ModelParams, g: GaitSchedule, init: State | None = None,
                  T_sim: float = 60.0, dt: float = 2e-4, dt_out: float = 0.01,
                  perturb: float = 1e-3, perturb_joint: int = 0,
                  seed: int | None = None) -> WalkTrace:
    """Integrate a walk from a (perturbed) straight-walk start.

    The deterministic default nudges theta1 by ``perturb`` radians, standing
    in for the ambient disturbances that break symmetry on hardware.  With a
    ``seed``, all joints instead receive independent normal perturbations of
    scale |perturb|.  A run that folds past |theta| = pi/2 is truncated and
    flagged (``aborted``), never raised.
    """
    if init is None:
        init = straight_walk_state(p, g)
    z0 = init.z.copy()
    dq = np.zeros(p.n_joints)
    if seed is None:
        dq[perturb_joint] = perturb
    else:
        rng = np.random.default_rng(seed)
        dq = rng.normal(scale=abs(perturb), size=p.n_joints)
    z0[3:2 + p.n_modules] += dq
    res: SimResult = simulate_raw(p, g, z0, init.t, init.t + T_sim, dt, dt_out)
    return WalkTrace(res.times, res.states, p, g, dt, dt_out, dq,
                     res.status, res.t_end)


@dataclass(frozen=True)
class SteadyAngles:
    """Mean joint angles over the analysis window."""

    means: np.ndarray          # rad, one per joint
    converged: bool
    drift: float               # worst per-cycle change, rad/cycle
    window: float


def steady_angles(tr: WalkTrace, window: float = 5.0) -> SteadyAngles:
    """Per-joint means over the final window, with a convergence flag.

    The window is split into whole gait cycles; the walk counts as converged
    when no joint's cycle-mean moves by more than 0.05 deg between adjacent
    cycles (and the run did not abort).  An oscillatory post-critical walk
    trips the drift bound and reports unconverged.
    """
    tau = tr.gait.tau
    t1 = tr.t_end
    t0 = t1 - window
    if t0 < tr.times[0] - 1e-9:
        raise ValueError("trace shorter than the analysis window")
    sel = tr.times >= t0 - 1e-12
    ts = tr.times[sel]
    th = tr.joint_angles()[sel]
    means = th.mean(axis=0)
    n_cycles = int(math.floor(window / tau + 1e-9))
    drift = math.inf
    if n_cycles >= 2:
        edges = t1 - tau * np.arange(n_cycles, -1, -1)
        cyc = np.empty((n_cycles, th.shape[1]))
        for j in range(n_cycles):
            m = (ts >= edges[j] - 1e-12) & (ts < edges[j + 1] - 1e-12)
            cyc[j] = th[m].mean(axis=0)
        drift = float(np.max(np.abs(np.diff(cyc, axis=0)))) if n_cycles > 1 else 0.0
    converged = (not tr.aborted) and drift < DRIFT_TOL
    return SteadyAngles(means, converged, drift, window)


def curvature_radius(means: np.ndarray, L: float) -> float:
    """Body-axis curvature radius (n-1)L / sum |theta_i|.

    Returns ``math.inf`` (the straight-walk marker) when the summed joint
    magnitude is below 0.1 deg.
    """
    if L <= 0.0:
        raise ValueError("L must be positive")
    means = np.asarray(means, dtype=np.float64)
    total = float(np.abs(means).sum())
    if total < STRAIGHT_THRESHOLD:
        return math.inf
    return len(means) * L / total


@dataclass(frozen=True)
class BifurcationDiagram:
    """Steady-branch table over a front-stiffness sweep plus branch fit."""

    k1_nmm: np.ndarray          # sorted by 1/k1 ascending
    inv_k1: np.ndarray
    means: np.ndarray           # rad, rows match k1
    radius: np.ndarray          # m, inf marks straight
    converged: np.ndarray       # bool per row
    statuses: np.ndarray        # integrator status per row
    fit_a: float                # sqrt-law amplitude, rad*sqrt(N mm/deg)
    fit_kc: float               # fitted critical stiffness, N mm/deg
    fit_residual: float         # rms residual of the sqrt fit, rad
    params: ModelParams
    gait: GaitSchedule
    T_sim: float
    perturb: float

    def rows(self):
        for j in range(len(self.k1_nmm)):
            yield {
                "k1_Nmm_deg": float(self.k1_nmm[j]),
                "inv_k1": float(self.inv_k1[j]),
                **{f"th{i+1}_deg": math.degrees(self.means[j, i])
                   for i in range(self.means.shape[1])},
                "radius_m": float(self.radius[j]),
                "converged": bool(self.converged[j]),
            }


def _diagram_job(args):
    p, g, k1, T_sim, dt, dt_out, perturb, seed = args
    tr = simulate_walk(with_k1_nmm(p, k1), g, T_sim=T_sim, dt=dt,
                       dt_out=dt_out, perturb=perturb, seed=seed)
    try:
        st = steady_angles(tr)
    except ValueError:
        # run folded so early that no analysis window exists
        return np.full(p.n_joints, np.nan), False, tr.status
    return st.means, st.converged, tr.status


def fit_sqrt_branch(inv_k1: np.ndarray, th1_abs: np.ndarray,
                    inv_kc_guess: float | None = None):
    """Least-squares fit of |theta1| = a*sqrt(max(0, 1/k1 - 1/k_c)).

    Subcritical points participate with target 0, which anchors 1/k_c.
    Returns (a, k_c, rms residual).
    """
    inv_k1 = np.asarray(inv_k1, dtype=np.float64)
    th1_abs = np.asarray(th1_abs, dtype=np.float64)
    if inv_kc_guess is None:
        on = inv_k1[th1_abs > math.radians(0.2)]
        inv_kc_guess = float(on.min()) * 0.98 if len(on) else float(np.median(inv_k1))
    span = th1_abs.max() - 0.0
    a_guess = span / math.sqrt(max(inv_k1.max() - inv_kc_guess, 1e-6))

    def resid(x):
        a, inv_kc = x
        return a * np.sqrt(np.maximum(0.0, inv_k1 - inv_kc)) - th1_abs

    sol = least_squares(resid, x0=[max(a_guess, 1e-6), inv_kc_guess],
                        bounds=([0.0, 1e-4], [np.inf, 10.0]))
    a, inv_kc = sol.x
    rms = float(np.sqrt(np.mean(sol.fun ** 2)))
    return float(a), 1.0 / float(inv_kc), rms


def fit_power_branch(inv_k1: np.ndarray, th1_abs: np.ndarray,
                     kc_fixed: float | None = None):
    """Free-exponent branch fit |theta1| = a*(1/k1 - 1/k_c)^beta.

    Only supercritical points (|theta1| above the straight threshold) enter.
    With ``kc_fixed`` the critical stiffness is pinned and only (a, beta)
    are fitted.  Returns (a, k_c, beta, rms residual).
    """
    inv_k1 = np.asarray(inv_k1, dtype=np.float64)
    th1_abs = np.asarray(th1_abs, dtype=np.float64)
    on = th1_abs > STRAIGHT_THRESHOLD
    x, y = inv_k1[on], th1_abs[on]
    if len(x) < 3:
        raise ValueError("need at least 3 supercritical points for the fit")
    if kc_fixed is not None:
        inv_kc = 1.0 / kc_fixed

        def resid(v):
            a, beta = v
            return a * np.maximum(x - inv_kc, 1e-12) ** beta - y

        sol = least_squares(resid, x0=[y.max() / math.sqrt(x.max() - inv_kc),
                                       0.5],
                            bounds=([0.0, 0.05], [np.inf, 2.0]))
        a, beta = sol.x
        kc = kc_fixed
    else:
        a0, kc0, _ = fit_sqrt_branch(inv_k1, th1_abs)

        def resid(v):
            a, inv_kc, beta = v
            return a * np.maximum(x - inv_kc, 1e-12) ** beta - y

        sol = least_squares(resid, x0=[a0, 1.0 / kc0, 0.5],
                            bounds=([0.0, 1e-4, 0.05], [np.inf, min(x.max(), 10.0), 2.0]))
        a, inv_kc, beta = sol.x
        kc = 1.0 / inv_kc
    rms = float(np.sqrt(np.mean(sol.fun ** 2)))
    return float(a), float(kc), float(beta), rms


#: critical front stiffness at the default calibration, N mm/deg
DEFAULT_KC_HINT = 14.3647


def default_sweep_k1(kc_hint: float = DEFAULT_KC_HINT) -> list[float]:
    """Stiffness list spanning the straight regime into the curved branch.

    Supercritical points sit at fixed fractions of the critical stiffness
    so the sweep covers steady radii from roughly 1.4 m down to 0.45 m;
    subcritical points extend to the stiff regime used by the hardware.
    """
    branch = [round(kc_hint * f, 3) for f in (0.97, 0.94, 0.90, 0.85, 0.78, 0.70)]
    straight = [round(kc_hint * f, 3) for f in (1.02, 1.05, 1.2, 1.5)]
    return sorted(branch + straight + [41.0], reverse=True)


def sweep_diagram(p: ModelParams, g: GaitSchedule,
                  k1_list=None, T_sim: float = 60.0, dt: float = 2e-4,
                  dt_out: float = 0.01, perturb: float = 1e-3,
                  seed: int | None = None, jobs: int = 1) -> BifurcationDiagram:
    """Build the bifurcation diagram over a front-stiffness sweep.

    Rows are sorted by 1/k1 ascending (stiff to soft).  Each row is an
    independent walk; with ``jobs > 1`` rows run in parallel processes and
    are reassembled in deterministic sweep order.
    """
    if k1_list is None:
        k1_list = default_sweep_k1()
    k1 = np.asarray(sorted(set(float(k) for k in k1_list), reverse=True))
    if np.any(k1 <= 0.0):
        raise ValueError("stiffnesses must be positive")
    args = [(p, g, float(k), T_sim, dt, dt_out, perturb, seed) for k in k1]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_diagram_job, args))
    else:
        results = [_diagram_job(a) for a in args]
    means = np.array([r[0] for r in results])
    conv = np.array([r[1] for r in results], dtype=bool)
    stat = np.array([r[2] for r in results], dtype=np.int64)
    radius = np.array([curvature_radius(m, p.seg_length) for m in means])
    fit_rows = conv
    if fit_rows.sum() >= 4:
        a, kc, rms = fit_sqrt_branch(1.0 / k1[fit_rows],
                                     np.abs(means[fit_rows, 0]))
    else:
        a, kc, rms = math.nan, math.nan, math.nan
    return BifurcationDiagram(k1, 1.0 / k1, means, radius, conv, stat,
                              a, kc, rms, p, g, T_sim, perturb)


VARIATION_CONDITIONS = ("k2345_28", "stride_18mm", "phase_pi")


def variation_study(p: ModelParams, g: GaitSchedule, k1_lists=None,
                    T_sim: float = 60.0, perturb: float = 1e-3,
                    jobs: int = 1) -> dict:
    """Diagrams for the three standard parameter variations.

    Conditions: rear-joint stiffness 28 N mm/deg, stride 1.8 cm, and
    adjacent-module phase lag pi (keeping the default wave direction's
    magnitude convention).  ``k1_lists`` may map condition name to a
    stiffness list; conditions default to a sweep around each condition's
    own critical region.
    """
    k28 = tuple([p.k_joint[0]] + [nmm_deg_to_nm_rad(28.0)] * (p.n_joints - 1))
    conditions = {
        "baseline": (p, g),
        "k2345_28": (replace(p, k_joint=k28), g),
        "stride_18mm": (p, replace(g, stride=0.018)),
        "phase_pi": (p, replace(g, phase_lag=math.copysign(math.pi, g.phase_lag))),
    }
    hints = {"baseline": DEFAULT_KC_HINT, "k2345_28": 10.82,
             "stride_18mm": 13.09, "phase_pi": 14.08}
    out = {}
    for name, (pp, gg) in conditions.items():
        lst = None if k1_lists is None else k1_lists.get(name)
        if lst is None:
            lst = default_sweep_k1(hints[name])
        out[name] = sweep_diagram(pp, gg, k1_list=lst, T_sim=T_sim,
                                  perturb=perturb, jobs=jobs)
    return out
