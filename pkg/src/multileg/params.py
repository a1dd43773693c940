"""Physical parameters of the planar segmented walker.

The robot is a chain of ``n_modules`` identical rigid segments joined
end-to-end by yaw joints, each segment carrying one leg pair.  Units are SI
internally (m, kg, N·m/rad); joint stiffnesses at API boundaries and in
config files use N·mm/deg, the convention natural for the small torsional
springs involved.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

# 1 N·mm/deg expressed in N·m/rad.
NMM_PER_DEG_TO_NM_PER_RAD = 1e-3 * 180.0 / math.pi

TOTAL_MASS_DEFAULT = 8.5  # kg, whole robot
BODY_LENGTH_DEFAULT = 1.35  # m, whole robot


def nmm_deg_to_nm_rad(k: float) -> float:
    """Convert a stiffness from N·mm/deg to N·m/rad."""
    return k * NMM_PER_DEG_TO_NM_PER_RAD


def nm_rad_to_nmm_deg(k: float) -> float:
    """Convert a stiffness from N·m/rad to N·mm/deg."""
    return k / NMM_PER_DEG_TO_NM_PER_RAD


@dataclass(frozen=True)
class ModelParams:
    """Immutable description of the mechanical model.

    Attributes
    ----------
    n_modules : number of body segments (>= 2).
    seg_length : segment length L in m; yaw joints join segment endpoints.
    seg_mass : mass of one segment in kg.
    seg_inertia : yaw inertia of one segment about its center, kg·m².
    k_joint : tuple of n_modules-1 joint stiffnesses, N·m/rad.  Entry 0 is
        the joint between the first (front) and second module.
    joint_damping : optional viscous damping per joint, N·m·s/rad (default 0).
    c_fric : viscous ground-contact coefficient of a stance leg tip, N·s/m.
    d_leg : lateral hip offset from the segment midline, m.  Hips sit at the
        segment center, one leg per side.
    hip_offset : longitudinal hip position along the segment axis relative
        to the segment center, m (positive toward the front coupling).
        Shifts every footprint fore/aft without changing the stroke.

    The hardware the model mirrors does not publish its ground-friction
    coefficient or exact leg-tip geometry, so ``c_fric``, ``d_leg`` and
    ``hip_offset`` are calibration constants.  The defaults
    (240 N·s/m, 0.05 m, 0.075 m) place the front-joint softening
    instability at k1 ≈ 14.4 N·mm/deg and the uniform-softening
    oscillatory instability at ≈ 11.2 N·mm/deg — the same order as the
    reference value 12 N·mm/deg — and make the post-critical curved-walk
    branch supercritical, with steady angles following a clean square-root
    amplitude law.  With the footprints at or behind the segment centers
    the branch is subcritical: walks jump to a tight body curl instead of
    settling on gentle arcs.  See the README calibration notes.
    """

    n_modules: int = 6
    seg_length: float = BODY_LENGTH_DEFAULT / 6
    seg_mass: float = TOTAL_MASS_DEFAULT / 6
    seg_inertia: float = (TOTAL_MASS_DEFAULT / 6) * (BODY_LENGTH_DEFAULT / 6) ** 2 / 12
    k_joint: tuple = tuple(nmm_deg_to_nm_rad(41.0) for _ in range(5))
    joint_damping: tuple = (0.0,) * 5
    c_fric: float = 240.0
    d_leg: float = 0.05
    hip_offset: float = 0.075

    def __post_init__(self):
        if self.n_modules < 2:
            raise ValueError("n_modules must be >= 2")
        if len(self.k_joint) != self.n_modules - 1:
            raise ValueError("k_joint must have n_modules-1 entries")
        if len(self.joint_damping) != self.n_modules - 1:
            raise ValueError("joint_damping must have n_modules-1 entries")
        for name in ("seg_length", "seg_mass", "seg_inertia", "c_fric", "d_leg"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")
        if any(k <= 0.0 for k in self.k_joint):
            raise ValueError("all joint stiffnesses must be positive")
        if any(c < 0.0 for c in self.joint_damping):
            raise ValueError("joint damping must be non-negative")
        if abs(self.hip_offset) >= 0.5 * self.seg_length:
            raise ValueError("hip_offset must stay within the segment")

    # -- convenience accessors -------------------------------------------
    @property
    def n_joints(self) -> int:
        return self.n_modules - 1

    @property
    def n_coords(self) -> int:
        """Generalized-coordinate count: x, y, theta0 and the joints."""
        return self.n_modules + 2

    @property
    def total_mass(self) -> float:
        return self.n_modules * self.seg_mass

    def k_array(self) -> np.ndarray:
        return np.asarray(self.k_joint, dtype=np.float64)

    def damping_array(self) -> np.ndarray:
        return np.asarray(self.joint_damping, dtype=np.float64)

    def k1_nmm_deg(self) -> float:
        return nm_rad_to_nmm_deg(self.k_joint[0])


def default_params(
    n_modules: int = 6,
    k1_nmm_deg: float = 41.0,
    k_rest_nmm_deg: float = 41.0,
    c_fric: float = 240.0,
    d_leg: float = 0.05,
    hip_offset: float = 0.075,
    total_mass: float = TOTAL_MASS_DEFAULT,
    seg_length: float = BODY_LENGTH_DEFAULT / 6,
) -> ModelParams:
    """Build parameters with stiffnesses given in N·mm/deg.

    Segment mass splits the total mass evenly; segment inertia uses the
    uniform-rod value m·L²/12.  The first joint gets ``k1_nmm_deg``; all
    others get ``k_rest_nmm_deg``.
    """
    m = total_mass / n_modules
    ks = [k1_nmm_deg] + [k_rest_nmm_deg] * (n_modules - 2)
    return ModelParams(
        n_modules=n_modules,
        seg_length=seg_length,
        seg_mass=m,
        seg_inertia=m * seg_length**2 / 12.0,
        k_joint=tuple(nmm_deg_to_nm_rad(k) for k in ks),
        joint_damping=(0.0,) * (n_modules - 1),
        c_fric=c_fric,
        d_leg=d_leg,
        hip_offset=hip_offset,
    )


def with_k1_nmm(p: ModelParams, k1_nmm_deg: float) -> ModelParams:
    """Copy of ``p`` with the first joint stiffness replaced (N·mm/deg)."""
    ks = list(p.k_joint)
    ks[0] = nmm_deg_to_nm_rad(k1_nmm_deg)
    return replace(p, k_joint=tuple(ks))


def with_uniform_k_nmm(p: ModelParams, k_nmm_deg: float) -> ModelParams:
    """Copy of ``p`` with every joint set to the same stiffness (N·mm/deg)."""
    k = nmm_deg_to_nm_rad(k_nmm_deg)
    return replace(p, k_joint=(k,) * p.n_joints)


def pack_phys(p: ModelParams) -> np.ndarray:
    """Flatten the scalar physical constants for the kernels."""
    return np.array(
        [p.seg_length, p.seg_mass, p.seg_inertia, p.c_fric, p.d_leg,
         p.hip_offset],
        dtype=np.float64,
    )
