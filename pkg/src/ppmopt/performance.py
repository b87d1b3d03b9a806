"""Dexterity measures and the pose-wise constraint stack g1..g6.

Dexterity is the inverse condition number of the kinematic Jacobian,
with the condition number taken in the Frobenius sense,

    kappa_F(M) = (1/m) sqrt( tr(M^T M) tr((M^T M)^-1) ),

which is analytic in the posture parameters and cheap to evaluate.  The
Jacobian mixes translational and rotational rates, so before conditioning
the rotational twist component is scaled by a characteristic length; by
default that length is chosen per design as the minimizer of kappa_F at
the symmetric home pose, found by golden-section search.

The constraint stack, evaluated at a pose:

    g1  assembly geometry       L_b + r >= R / 2
    g2  joint travel            architecture-specific stroke / reach limits
    g3  dexterity               1/kappa_F(J) >= threshold (default 0.1)
    g4  planar stiffness        k_xy  >= |F_xy| / max planar deflection
    g5  axial stiffness         k_z   >= F_z / max axial deflection
    g6  torsional stiffness     k_phiz >= tau_z / max rotational deflection

With the default 100 N / 100 N*m service wrench and the default accuracy
budget the stiffness thresholds come to 1e6 N/m, 1e5 N/m and
10/(pi/180) N*m/rad.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import HomeUnreachable, Unreachable
from .kinematics import (DEFAULT_MODE, HOME_POSE, Pose, WorkingMode, ik_batch,
                         jacobian_batch)
from .model import (ActuatorStiffness, DesignVector, Material, Wrench,
                    DEFAULT_MATERIAL)
from .stiffness import stiffness_batch, stiffness_indices_batch


@dataclass(frozen=True)
class DexterityConfig:
    """Dexterity threshold and characteristic-length policy.

    characteristic_length None means "minimize kappa_F at the home pose";
    a number fixes the normalization length for sensitivity studies.
    """

    threshold: float = 0.1
    characteristic_length: float | None = None
    lc_search_range: tuple[float, float] = (1e-3, 10.0)  # [m]

    def __post_init__(self):
        if not 0.0 < self.threshold <= 1.0:
            raise ValueError("dexterity threshold must be in (0, 1]")


@dataclass(frozen=True)
class AccuracySpec:
    """Allowed platform pose error under the service wrench.

    The rotational budget defaults to 10 degrees: together with the
    100 N*m service torque that reproduces the enforced torsional
    threshold 10/(pi/180) N*m/rad.
    """

    delta_xy_max: float = 1e-4         # [m], planar displacement norm
    delta_z_max: float = 1e-3          # [m]
    delta_phiz_max_deg: float = 10.0   # [deg]


@dataclass(frozen=True)
class StiffnessLimits:
    """Minimum stiffness indices g4..g6 compare against.

    Derived once from the service wrench and the accuracy budget (see
    from_requirements); afterwards the wrench in a report is informative
    only, so rescaling it never flips a constraint flag.
    """

    k_xy: float = 1.0e6                       # [N/m]
    k_z: float = 1.0e5                        # [N/m]
    k_phiz: float = 10.0 / math.radians(1.0)  # [N*m/rad]

    @staticmethod
    def from_requirements(wrench: Wrench, accuracy: AccuracySpec) -> "StiffnessLimits":
        return StiffnessLimits(
            k_xy=wrench.f_xy / accuracy.delta_xy_max,
            k_z=wrench.f_z / accuracy.delta_z_max,
            k_phiz=wrench.tau_z / math.radians(accuracy.delta_phiz_max_deg))


@dataclass(frozen=True)
class EvalContext:
    """Everything a constraint evaluation needs besides design and pose."""

    material: Material = DEFAULT_MATERIAL
    actuator: ActuatorStiffness = ActuatorStiffness()
    wrench: Wrench = Wrench()
    limits: StiffnessLimits = StiffnessLimits()
    dexterity: DexterityConfig = DexterityConfig()
    mode: WorkingMode = DEFAULT_MODE

    def stiffness_limits(self) -> tuple[float, float, float]:
        """Required (k_xy, k_z, k_phiz)."""
        return (self.limits.k_xy, self.limits.k_z, self.limits.k_phiz)


DEFAULT_CONTEXT = EvalContext()


def frobenius_condition(m: np.ndarray) -> float:
    """Frobenius condition number of a square matrix; +inf when singular."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("frobenius_condition expects a square matrix")
    g = m.T @ m
    try:
        tr_inv = np.trace(np.linalg.inv(g))
    except np.linalg.LinAlgError:
        return math.inf
    val = math.sqrt(abs(np.trace(g) * tr_inv)) / m.shape[0]
    return val if math.isfinite(val) else math.inf


def _inv_kappa_batch(j: np.ndarray) -> np.ndarray:
    """1/kappa_F for a batch of 3x3 matrices, zero where singular.

    Uses tr(G^-1) = tr(adj G)/det G with G = J^T J, so no per-item
    exception handling is needed on singular members.
    """
    g = np.swapaxes(j, -1, -2) @ j
    tr = g[..., 0, 0] + g[..., 1, 1] + g[..., 2, 2]
    minors = (g[..., 1, 1] * g[..., 2, 2] - g[..., 1, 2] * g[..., 2, 1]
              + g[..., 0, 0] * g[..., 2, 2] - g[..., 0, 2] * g[..., 2, 0]
              + g[..., 0, 0] * g[..., 1, 1] - g[..., 0, 1] * g[..., 1, 0])
    det = np.linalg.det(g)
    with np.errstate(divide="ignore", invalid="ignore"):
        k2 = tr * minors / det / 9.0
        inv = 1.0 / np.sqrt(k2)
    inv = np.where((det > 0.0) & (minors > 0.0) & (tr > 0.0), inv, 0.0)
    return np.where(np.isfinite(inv), inv, 0.0)


def _forward_jacobians(design: DesignVector, bik) -> tuple[np.ndarray, np.ndarray]:
    """J = A^-1 B per batch row plus a validity mask (False at det A = 0)."""
    amat, bmat = jacobian_batch(design, bik)
    n = amat.shape[0]
    ok = np.ones(n, dtype=bool)
    try:
        j = np.linalg.solve(amat, bmat)
    except np.linalg.LinAlgError:
        j = np.zeros_like(amat)
        for i in range(n):
            try:
                j[i] = np.linalg.solve(amat[i], bmat[i])
            except np.linalg.LinAlgError:
                ok[i] = False
    bad = ~np.isfinite(j).all(axis=(1, 2))
    j[bad] = 0.0
    return j, ok & ~bad


def _normalized(j: np.ndarray, l_c: float) -> np.ndarray:
    jn = j.copy()
    jn[..., 2, :] *= l_c
    return jn


@lru_cache(maxsize=4096)
def characteristic_length(design: DesignVector,
                          ctx: EvalContext = DEFAULT_CONTEXT) -> float:
    """Normalization length for the rotational twist component [m].

    Under the home-optimal policy: golden-section minimization of
    kappa_F(diag(1, 1, L) J_home) over the configured interval, to 1e-4
    relative width.  Raises HomeUnreachable when the symmetric home pose
    has no inverse-kinematic solution (or is singular there).
    """
    if ctx.dexterity.characteristic_length is not None:
        return ctx.dexterity.characteristic_length

    bik = ik_batch(design, HOME_POSE.as_array()[None, :], ctx.mode)
    if not bool(bik.ok()[0]):
        raise HomeUnreachable(f"design {design.as_tuple()}")
    j, ok = _forward_jacobians(design, bik)
    if not bool(ok[0]) or _inv_kappa_batch(j)[0] <= 0.0:
        raise HomeUnreachable("kinematic Jacobian singular at the home pose")
    j0 = j[0]

    def kappa(l_c: float) -> float:
        inv = _inv_kappa_batch(_normalized(j0[None], l_c))[0]
        return 1.0 / inv if inv > 0.0 else math.inf

    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    lo, hi = ctx.dexterity.lc_search_range
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = kappa(c), kappa(d)
    while (b - a) > 1e-4 * b:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = kappa(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = kappa(d)
    return 0.5 * (a + b)


def inverse_condition(design: DesignVector, pose: Pose,
                      ctx: EvalContext = DEFAULT_CONTEXT) -> float:
    """Normalized inverse condition number of the Jacobian, in [0, 1].

    Returns 0 at parallel singularities (det A = 0) and raises
    Unreachable when the pose has no inverse-kinematic solution.  The
    characteristic length is resolved once per design and reused for
    every pose.
    """
    l_c = characteristic_length(design, ctx)
    bik = ik_batch(design, pose.as_array()[None, :], ctx.mode)
    legs_ok = bik.reachable[0] & bik.stroke_ok[0]
    if not legs_ok.all():
        raise Unreachable(int(np.argmin(legs_ok)))
    j, ok = _forward_jacobians(design, bik)
    if not bool(ok[0]):
        return 0.0
    return float(np.clip(_inv_kappa_batch(_normalized(j, l_c))[0], 0.0, 1.0))


@dataclass(frozen=True)
class ConstraintReport:
    """Pose-wise constraint outcome; overall is the AND of every flag."""

    g1_geometry: bool
    g2_stroke: bool
    g3_dexterity: bool
    g4_kxy: bool
    g5_kz: bool
    g6_kphiz: bool
    ik_reachable: bool
    inverse_condition: float
    k_xy: float           # [N/m]
    k_z: float            # [N/m]
    k_phiz: float         # [N*m/rad]
    overall: bool


class BatchConstraints:
    """Struct-of-arrays constraint outcome over a pose batch."""

    __slots__ = ("g1", "g2", "g3", "g4", "g5", "g6", "ik", "kinv",
                 "kxy", "kz", "kphiz", "overall")

    def __init__(self, **kw):
        for name in self.__slots__:
            setattr(self, name, kw[name])

    def report(self, idx: int) -> ConstraintReport:
        return ConstraintReport(
            g1_geometry=bool(self.g1[idx]), g2_stroke=bool(self.g2[idx]),
            g3_dexterity=bool(self.g3[idx]), g4_kxy=bool(self.g4[idx]),
            g5_kz=bool(self.g5[idx]), g6_kphiz=bool(self.g6[idx]),
            ik_reachable=bool(self.ik[idx]),
            inverse_condition=float(self.kinv[idx]),
            k_xy=float(self.kxy[idx]), k_z=float(self.kz[idx]),
            k_phiz=float(self.kphiz[idx]), overall=bool(self.overall[idx]))


def geometry_ok(design: DesignVector) -> bool:
    """g1: the platform bar plus link must span half the base radius."""
    return design.link_length + design.platform_radius >= design.base_radius / 2.0


def constraints_batch(design: DesignVector, poses: np.ndarray,
                      ctx: EvalContext = DEFAULT_CONTEXT,
                      l_c: float | None = None) -> BatchConstraints:
    """Evaluate g1..g6 over an (N, 3) pose array.

    Dexterity and stiffness are computed only on rows whose inverse
    kinematics succeeds; other rows report zero indices.  Pass l_c when
    the characteristic length was already resolved (None triggers the
    per-design resolution and treats HomeUnreachable as zero dexterity).
    """
    poses = np.atleast_2d(np.asarray(poses, dtype=float))
    n = poses.shape[0]
    g1_flag = geometry_ok(design)

    if l_c is None:
        try:
            l_c = characteristic_length(design, ctx)
        except HomeUnreachable:
            l_c = math.nan

    bik = ik_batch(design, poses, ctx.mode)
    ik = bik.reachable.all(axis=1)
    g2 = bik.stroke_ok.all(axis=1)
    usable = ik & g2

    kinv = np.zeros(n)
    kxy = np.zeros(n)
    kz = np.zeros(n)
    kphiz = np.zeros(n)
    if usable.any() and g1_flag:
        sub = bik.take(usable)
        if math.isfinite(l_c):
            j, jok = _forward_jacobians(design, sub)
            kinv_sub = np.where(jok, _inv_kappa_batch(_normalized(j, l_c)), 0.0)
            kinv[usable] = np.clip(kinv_sub, 0.0, 1.0)
        k_mat, k_ok = stiffness_batch(design, sub, ctx.material, ctx.actuator)
        kxy_s, kz_s, kphiz_s = stiffness_indices_batch(k_mat, k_ok)
        kxy[usable] = kxy_s
        kz[usable] = kz_s
        kphiz[usable] = kphiz_s

    lim_xy, lim_z, lim_phiz = ctx.stiffness_limits()
    g1 = np.full(n, g1_flag)
    g3 = kinv >= ctx.dexterity.threshold
    g4 = kxy >= lim_xy
    g5 = kz >= lim_z
    g6 = kphiz >= lim_phiz
    overall = g1 & g2 & g3 & g4 & g5 & g6 & ik
    return BatchConstraints(g1=g1, g2=g2, g3=g3, g4=g4, g5=g5, g6=g6, ik=ik,
                            kinv=kinv, kxy=kxy, kz=kz, kphiz=kphiz,
                            overall=overall)


def evaluate_constraints(design: DesignVector, pose: Pose,
                         ctx: EvalContext = DEFAULT_CONTEXT) -> ConstraintReport:
    """Full constraint report for one pose (never raises; unreachable
    poses come back with ik_reachable False and overall False)."""
    return constraints_batch(design, pose.as_array()[None, :], ctx).report(0)
