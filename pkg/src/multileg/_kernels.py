"""Numeric kernels for the chain dynamics and its linearization.

Everything here operates on plain float64 ndarrays and scalars so the same
source compiles under numba or runs as ordinary numpy/Python (see
:mod:`multileg._accel`).  Higher-level modules own allocation, packing and
all bookkeeping; kernels only crunch.

Conventions
-----------
q  = [x, y, th0, th1 .. th_{n-1}]    (n = module count, nd = n + 2 coords)
z  = [q, qdot]                        (state vector, dim = 2 nd)
phys = [L, m_seg, I_seg, c_fric, d_leg, hip_offset]
gait = [tau, t_stance, stride, v]
phase_off[m, s] = cycle-unit phase offset of leg (module m, side s)
steer[s] = [base, ramp_delta, ramp_t0, ramp_t1] front-module leg yaw, rad

Module headings are cumulative: phi_i = th0 + sum_{j<=i} th_j, and module
i+1 hangs off the rear end of module i, so the front module is module 0.

Stance membership is evaluated at a reference time ``t_memb`` (midpoint of
the current integration interval) rather than at the evaluation time ``t``:
the integrator aligns interval boundaries with stance events, so membership
is constant inside an interval and evaluations exactly at a boundary use
the interval's own stance set (the left limit).  Stance timing is open-loop
(pure clock), which makes this exact, not an approximation.
"""
import math

import numpy as np

from ._accel import maybe_njit

HALF_PI = 0.5 * math.pi


@maybe_njit
def _steer_eval(base, delta, r0, r1, t):
    """Piecewise-linear leg-yaw command: hold, ramp over [r0, r1], hold."""
    if delta == 0.0:
        return base
    if t <= r0:
        return base
    if t >= r1:
        return base + delta
    return base + delta * (t - r0) / (r1 - r0)


@maybe_njit
def _chain_trig(q, n, phi, cph, sph):
    """Fill module headings and their cos/sin."""
    acc = q[2]
    phi[0] = acc
    cph[0] = math.cos(acc)
    sph[0] = math.sin(acc)
    for i in range(1, n):
        acc += q[2 + i]
        phi[i] = acc
        cph[i] = math.cos(acc)
        sph[i] = math.sin(acc)


@maybe_njit
def _angular_rates(qd, n, wphi):
    """Fill module angular velocities (cumulative joint rates)."""
    acc = qd[2]
    wphi[0] = acc
    for i in range(1, n):
        acc += qd[2 + i]
        wphi[i] = acc


@maybe_njit
def _angle_jacobian(n, L, cph, sph, D):
    """Fill D[i, k, :] = d(center_i)/d(theta_k).

    center_i = center_0 - L * sum_j w_ij e(phi_j) with w weights 1/2 at the
    chain ends of the sum and 1 between, so the theta_k column is the suffix
    sum of rotated unit vectors.  D is zero for k > i and for i = 0 (the
    front-module center is the coordinate (x, y) itself).
    """
    for i in range(n):
        for k in range(n):
            D[i, k, 0] = 0.0
            D[i, k, 1] = 0.0
    for i in range(1, n):
        ax = 0.0
        ay = 0.0
        for j in range(i, -1, -1):
            w = 0.5 if (j == 0 or j == i) else 1.0
            ax += w * (-sph[j])
            ay += w * cph[j]
            D[i, j, 0] = -L * ax
            D[i, j, 1] = -L * ay


@maybe_njit
def _mass_matrix(n, m_seg, I_seg, D, K):
    """Fill the (n+2)x(n+2) generalized mass matrix."""
    nd = n + 2
    for a in range(nd):
        for b in range(nd):
            K[a, b] = 0.0
    tot = n * m_seg
    K[0, 0] = tot
    K[1, 1] = tot
    for k in range(n):
        sx = 0.0
        sy = 0.0
        for i in range(k, n):
            sx += D[i, k, 0]
            sy += D[i, k, 1]
        K[0, 2 + k] = m_seg * sx
        K[2 + k, 0] = m_seg * sx
        K[1, 2 + k] = m_seg * sy
        K[2 + k, 1] = m_seg * sy
    for k in range(n):
        for l in range(k, n):
            s = 0.0
            for i in range(l, n):
                s += D[i, k, 0] * D[i, l, 0] + D[i, k, 1] * D[i, l, 1]
            val = m_seg * s + I_seg * (n - l)
            K[2 + k, 2 + l] = val
            K[2 + l, 2 + k] = val


@maybe_njit
def _bias_vector(q, qd, n, L, m_seg, cph, sph, wphi, D, hvec):
    """Fill the velocity-product (Coriolis/centrifugal) generalized force.

    h = sum_i m_i J_i^T (Jdot_i qdot); the rotational part vanishes because
    the heading Jacobian is configuration-independent.
    """
    nd = n + 2
    for a in range(nd):
        hvec[a] = 0.0
    for i in range(1, n):
        ax = 0.0
        ay = 0.0
        for j in range(0, i + 1):
            w = 0.5 if (j == 0 or j == i) else 1.0
            s = w * wphi[j] * wphi[j]
            ax += s * cph[j]
            ay += s * sph[j]
        ax *= L
        ay *= L
        hvec[0] += m_seg * ax
        hvec[1] += m_seg * ay
        for k in range(0, i + 1):
            hvec[2 + k] += m_seg * (D[i, k, 0] * ax + D[i, k, 1] * ay)


@maybe_njit
def _reaction_vector(t, t_memb, q, qd, n, phys, gait, phase_off, steer,
                     phi, cph, sph, wphi, D, lam):
    """Fill the generalized contact force from all stance leg tips.

    Each stance tip applies F = -c_fric * (world tip velocity); the
    generalized force is J_tip^T F summed over stance legs.  Swing legs are
    force-free.
    """
    L = phys[0]
    c_fric = phys[3]
    d_leg = phys[4]
    h_hip = phys[5]
    tau = gait[0]
    t_st = gait[1]
    stride = gait[2]
    v = gait[3]
    nd = n + 2
    for a in range(nd):
        lam[a] = 0.0
    for mi in range(n):
        vc_done = False
        vcx = 0.0
        vcy = 0.0
        for s in range(2):
            u_m = t_memb / tau - phase_off[mi, s]
            pm = u_m - math.floor(u_m)
            if pm * tau < t_st:
                if not vc_done:
                    vcx = qd[0]
                    vcy = qd[1]
                    for k in range(0, mi + 1):
                        vcx += D[mi, k, 0] * qd[2 + k]
                        vcy += D[mi, k, 1] * qd[2 + k]
                    vc_done = True
                ts = pm * tau + (t - t_memb)
                xi = 0.5 * stride - v * ts
                psi = 0.0
                if mi == 0:
                    psi = _steer_eval(steer[s, 0], steer[s, 1],
                                      steer[s, 2], steer[s, 3], t)
                ca = math.cos(phi[mi] + psi)
                sa = math.sin(phi[mi] + psi)
                dl = d_leg if s == 0 else -d_leg
                # tip offset from the module center (hip sits h_hip ahead of
                # the center on the segment axis, shifted laterally; the
                # stroke direction carries the yaw)
                rx = h_hip * cph[mi] - dl * sph[mi] + xi * ca
                ry = h_hip * sph[mi] + dl * cph[mi] + xi * sa
                w = wphi[mi]
                vtx = vcx - w * ry - v * ca
                vty = vcy + w * rx - v * sa
                fx = -c_fric * vtx
                fy = -c_fric * vty
                lam[0] += fx
                lam[1] += fy
                for k in range(0, mi + 1):
                    lam[2 + k] += (D[mi, k, 0] - ry) * fx + (D[mi, k, 1] + rx) * fy


@maybe_njit
def _solve_spd_inplace(A, b, nd):
    """Cholesky solve of A x = b for SPD A; A and b are overwritten.

    Returns 0 on success, 1 when A is not positive definite (a dynamics bug
    or a blown-up state; callers abort the run).
    """
    for j in range(nd):
        s = A[j, j]
        for k in range(j):
            s -= A[j, k] * A[j, k]
        if not (s > 0.0) or not math.isfinite(s):
            return 1
        d = math.sqrt(s)
        A[j, j] = d
        for i in range(j + 1, nd):
            s2 = A[i, j]
            for k in range(j):
                s2 -= A[i, k] * A[j, k]
            A[i, j] = s2 / d
    for i in range(nd):
        s = b[i]
        for k in range(i):
            s -= A[i, k] * b[k]
        b[i] = s / A[i, i]
    for i in range(nd - 1, -1, -1):
        s = b[i]
        for k in range(i + 1, nd):
            s -= A[k, i] * b[k]
        b[i] = s / A[i, i]
    return 0


@maybe_njit
def _accel_into(t, t_memb, z, n, phys, k_nm, damp, gait, phase_off, steer,
                phi, cph, sph, wphi, D, Km, fvec, lam, qdd):
    """Solve K(q) qdd = u + lambda - h for the given state."""
    nd = n + 2
    q = z[:nd]
    qd = z[nd:]
    _chain_trig(q, n, phi, cph, sph)
    _angular_rates(qd, n, wphi)
    _angle_jacobian(n, phys[0], cph, sph, D)
    _bias_vector(q, qd, n, phys[0], phys[1], cph, sph, wphi, D, fvec)
    for a in range(nd):
        fvec[a] = -fvec[a]
    for j in range(1, n):
        fvec[2 + j] += -k_nm[j - 1] * q[2 + j] - damp[j - 1] * qd[2 + j]
    _reaction_vector(t, t_memb, q, qd, n, phys, gait, phase_off, steer,
                     phi, cph, sph, wphi, D, lam)
    for a in range(nd):
        fvec[a] += lam[a]
    _mass_matrix(n, phys[1], phys[2], D, Km)
    status = _solve_spd_inplace(Km, fvec, nd)
    if status != 0:
        return status
    for a in range(nd):
        qdd[a] = fvec[a]
    return 0


@maybe_njit
def _rhs_into(t, t_memb, z, out, n, phys, k_nm, damp, gait, phase_off, steer,
              phi, cph, sph, wphi, D, Km, fvec, lam):
    """First-order RHS: out = [qdot, qddot]."""
    nd = n + 2
    for a in range(nd):
        out[a] = z[nd + a]
    return _accel_into(t, t_memb, z, n, phys, k_nm, damp, gait, phase_off,
                       steer, phi, cph, sph, wphi, D, Km, fvec, lam, out[nd:])


@maybe_njit
def rk4_run(z, bks, rec_mask, dt, n, phys, k_nm, damp, gait, phase_off, steer,
            records, check_capture, tgt_x, tgt_y, capture_r):
    """Fixed-step RK4 over the breakpoint plan ``bks`` (ascending times).

    ``z`` is advanced in place.  States are stored into ``records`` at
    breakpoints flagged in ``rec_mask``.  Between consecutive breakpoints
    the step is uniform and no larger than ``dt``; stance membership uses
    the interval midpoint (see module docstring).

    When ``check_capture`` is true the integration stops at the first RK4
    step that lands within ``capture_r`` of the target point.

    Returns ``(status, t_end, capture_time, n_recorded)`` with status 0 ok,
    1 blow-up (non-finite state or any |joint| > pi/2), 2 solver failure.
    Capture_time is -1.0 when no capture occurred.
    """
    nd = n + 2
    dim = 2 * nd
    phi = np.empty(n)
    cph = np.empty(n)
    sph = np.empty(n)
    wphi = np.empty(n)
    D = np.empty((n, n, 2))
    Km = np.empty((nd, nd))
    fvec = np.empty(nd)
    lam = np.empty(nd)
    k1 = np.empty(dim)
    k2 = np.empty(dim)
    k3 = np.empty(dim)
    k4 = np.empty(dim)
    ztmp = np.empty(dim)
    nrec = 0
    if rec_mask[0]:
        for a in range(dim):
            records[nrec, a] = z[a]
        nrec += 1
    cap_t = -1.0
    cap2 = capture_r * capture_r
    nseg = bks.shape[0] - 1
    for seg in range(nseg):
        a0 = bks[seg]
        b0 = bks[seg + 1]
        tm = 0.5 * (a0 + b0)
        span = b0 - a0
        nst = int(math.ceil(span / dt - 1e-9))
        if nst < 1:
            nst = 1
        h = span / nst
        for st in range(nst):
            t = a0 + st * h
            s1 = _rhs_into(t, tm, z, k1, n, phys, k_nm, damp, gait, phase_off,
                           steer, phi, cph, sph, wphi, D, Km, fvec, lam)
            for a in range(dim):
                ztmp[a] = z[a] + 0.5 * h * k1[a]
            s2 = _rhs_into(t + 0.5 * h, tm, ztmp, k2, n, phys, k_nm, damp,
                           gait, phase_off, steer, phi, cph, sph, wphi, D,
                           Km, fvec, lam)
            for a in range(dim):
                ztmp[a] = z[a] + 0.5 * h * k2[a]
            s3 = _rhs_into(t + 0.5 * h, tm, ztmp, k3, n, phys, k_nm, damp,
                           gait, phase_off, steer, phi, cph, sph, wphi, D,
                           Km, fvec, lam)
            for a in range(dim):
                ztmp[a] = z[a] + h * k3[a]
            s4 = _rhs_into(t + h, tm, ztmp, k4, n, phys, k_nm, damp, gait,
                           phase_off, steer, phi, cph, sph, wphi, D, Km,
                           fvec, lam)
            if s1 + s2 + s3 + s4 != 0:
                return 2, t, cap_t, nrec
            for a in range(dim):
                z[a] += (h / 6.0) * (k1[a] + 2.0 * k2[a] + 2.0 * k3[a] + k4[a])
            if check_capture:
                dx = z[0] - tgt_x
                dy = z[1] - tgt_y
                if dx * dx + dy * dy < cap2:
                    cap_t = t + h
                    return 0, cap_t, cap_t, nrec
        ok = True
        for a in range(dim):
            if not math.isfinite(z[a]):
                ok = False
        if ok:
            for j in range(1, n):
                if z[2 + j] > HALF_PI or z[2 + j] < -HALF_PI:
                    ok = False
        if not ok:
            return 1, b0, cap_t, nrec
        if rec_mask[seg + 1]:
            for a in range(dim):
                records[nrec, a] = z[a]
            nrec += 1
    return 0, bks[nseg], cap_t, nrec


@maybe_njit
def jacobian_fd_into(t, t_memb, z, h_fd, n, phys, k_nm, damp, gait, phase_off,
                     steer, A):
    """Central finite-difference Jacobian of the first-order RHS at z.

    Per-coordinate step h_fd * max(1, |z_j|); the division uses the actually
    realized step so exact RHS components (e.g. the dq/dt = qdot block)
    differentiate to exact 0/1 entries.
    """
    nd = n + 2
    dim = 2 * nd
    phi = np.empty(n)
    cph = np.empty(n)
    sph = np.empty(n)
    wphi = np.empty(n)
    D = np.empty((n, n, 2))
    Km = np.empty((nd, nd))
    fvec = np.empty(nd)
    lam = np.empty(nd)
    zw = np.empty(dim)
    fp = np.empty(dim)
    fm = np.empty(dim)
    for a in range(dim):
        zw[a] = z[a]
    status = 0
    for j in range(dim):
        base = zw[j]
        hj = h_fd * (1.0 if abs(base) < 1.0 else abs(base))
        up = base + hj
        dn = base - hj
        zw[j] = up
        status += _rhs_into(t, t_memb, zw, fp, n, phys, k_nm, damp, gait,
                            phase_off, steer, phi, cph, sph, wphi, D, Km,
                            fvec, lam)
        zw[j] = dn
        status += _rhs_into(t, t_memb, zw, fm, n, phys, k_nm, damp, gait,
                            phase_off, steer, phi, cph, sph, wphi, D, Km,
                            fvec, lam)
        zw[j] = base
        denom = up - dn
        for a in range(dim):
            A[a, j] = (fp[a] - fm[a]) / denom
    return status


@maybe_njit
def _jac_straight_into(t, t_memb, n, v_walk, h_fd, phys, k_nm, damp, gait,
                       phase_off, steer, A, zw, fp, fm,
                       phi, cph, sph, wphi, D, Km, fvec, lam):
    """FD Jacobian along the analytic straight walk z(t) = [vt,0,..,v,0,..].

    Columns 0 and 1 (x, y) are structurally zero - no force reads the
    absolute position - and are skipped.
    """
    nd = n + 2
    dim = 2 * nd
    for a in range(dim):
        zw[a] = 0.0
    zw[0] = v_walk * t
    zw[nd] = v_walk
    for a in range(dim):
        for b in range(dim):
            A[a, b] = 0.0
    status = 0
    for j in range(2, dim):
        base = zw[j]
        hj = h_fd * (1.0 if abs(base) < 1.0 else abs(base))
        up = base + hj
        dn = base - hj
        zw[j] = up
        status += _rhs_into(t, t_memb, zw, fp, n, phys, k_nm, damp, gait,
                            phase_off, steer, phi, cph, sph, wphi, D, Km,
                            fvec, lam)
        zw[j] = dn
        status += _rhs_into(t, t_memb, zw, fm, n, phys, k_nm, damp, gait,
                            phase_off, steer, phi, cph, sph, wphi, D, Km,
                            fvec, lam)
        zw[j] = base
        denom = up - dn
        for a in range(dim):
            A[a, j] = (fp[a] - fm[a]) / denom
    return status


@maybe_njit
def _matmul_into(A, B, C, dim):
    for i in range(dim):
        for j in range(dim):
            C[i, j] = 0.0
        for k in range(dim):
            aik = A[i, k]
            if aik != 0.0:
                for j in range(dim):
                    C[i, j] += aik * B[k, j]


@maybe_njit
def monodromy_run(bks, dt, n, v_walk, h_fd, phys, k_nm, damp, gait,
                  phase_off, steer, Z):
    """Integrate Zdot = A(t) Z over the breakpoint plan, Z(0) = I.

    A(t) is the FD linearization about the straight walk.  RK4 on the
    matrix equation, steps aligned like rk4_run; the A evaluation at a step
    end is reused as the next step's start within an interval.
    """
    nd = n + 2
    dim = 2 * nd
    phi = np.empty(n)
    cph = np.empty(n)
    sph = np.empty(n)
    wphi = np.empty(n)
    D = np.empty((n, n, 2))
    Km = np.empty((nd, nd))
    fvec = np.empty(nd)
    lam = np.empty(nd)
    zw = np.empty(dim)
    fp = np.empty(dim)
    fm = np.empty(dim)
    A1 = np.empty((dim, dim))
    A2 = np.empty((dim, dim))
    A3 = np.empty((dim, dim))
    K1 = np.empty((dim, dim))
    K2 = np.empty((dim, dim))
    K3 = np.empty((dim, dim))
    K4 = np.empty((dim, dim))
    Tm = np.empty((dim, dim))
    for i in range(dim):
        for j in range(dim):
            Z[i, j] = 1.0 if i == j else 0.0
    nseg = bks.shape[0] - 1
    status = 0
    for seg in range(nseg):
        a0 = bks[seg]
        b0 = bks[seg + 1]
        tm = 0.5 * (a0 + b0)
        span = b0 - a0
        nst = int(math.ceil(span / dt - 1e-9))
        if nst < 1:
            nst = 1
        h = span / nst
        for st in range(nst):
            t = a0 + st * h
            if st == 0:
                status += _jac_straight_into(t, tm, n, v_walk, h_fd, phys,
                                             k_nm, damp, gait, phase_off,
                                             steer, A1, zw, fp, fm, phi, cph,
                                             sph, wphi, D, Km, fvec, lam)
            status += _jac_straight_into(t + 0.5 * h, tm, n, v_walk, h_fd,
                                         phys, k_nm, damp, gait, phase_off,
                                         steer, A2, zw, fp, fm, phi, cph,
                                         sph, wphi, D, Km, fvec, lam)
            status += _jac_straight_into(t + h, tm, n, v_walk, h_fd, phys,
                                         k_nm, damp, gait, phase_off, steer,
                                         A3, zw, fp, fm, phi, cph, sph, wphi,
                                         D, Km, fvec, lam)
            if status != 0:
                return status
            _matmul_into(A1, Z, K1, dim)
            for i in range(dim):
                for j in range(dim):
                    Tm[i, j] = Z[i, j] + 0.5 * h * K1[i, j]
            _matmul_into(A2, Tm, K2, dim)
            for i in range(dim):
                for j in range(dim):
                    Tm[i, j] = Z[i, j] + 0.5 * h * K2[i, j]
            _matmul_into(A2, Tm, K3, dim)
            for i in range(dim):
                for j in range(dim):
                    Tm[i, j] = Z[i, j] + h * K3[i, j]
            _matmul_into(A3, Tm, K4, dim)
            for i in range(dim):
                for j in range(dim):
                    Z[i, j] += (h / 6.0) * (K1[i, j] + 2.0 * K2[i, j]
                                            + 2.0 * K3[i, j] + K4[i, j])
            tswap = A1
            A1 = A3
            A3 = tswap
    return status
