"""Geometry conventions, inverse kinematics and kinematic Jacobians.

Frames and conventions, fixed project-wide:

* Base frame at the circumcenter O of the base triangle, x-axis parallel
  to A1 A2.  Platform frame at the platform center P, X-axis parallel to
  C1 C2.  The pose is (p_x, p_y, phi) of P in the base frame.
* Triangle vertices sit at polar angles (210, 330, 90) degrees, so both
  "parallel to segment" requirements hold and the equilateral side length
  is sqrt(3) times the circumradius.
* PRR rails run from A_i toward A_{i+1} (cyclic); the usable travel is
  the full side length sqrt(3) R.
* Platform twist ordering is (p_x_dot, p_y_dot, phi_dot) everywhere.

The velocity loop of each leg reads A * t_dot = B * q_dot; det(A) = 0 at
parallel (Type-2) singularities and det(B) = 0 at serial (Type-1) ones.

All pose-dependent math is implemented once, vectorized over an array of
poses (`ik_batch`, `jacobian_batch`); the scalar operations wrap the
batch path with N = 1 so both views cannot diverge.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np

from .errors import ModeViolation, NoConvergence, Unreachable
from .model import Architecture, DesignVector

# Polar angles of the base triangle corners: A1A2 horizontal, apex up.
VERTEX_ANGLES = (7.0 * math.pi / 6.0, 11.0 * math.pi / 6.0, math.pi / 2.0)

# Platform vertex angles per architecture.  The RPR/RRR platform is
# radially aligned with the base corners (legs point outward at home, so
# the home strut length is R - r).  The PRR platform points each vertex
# at the rail it rides (the side-normal angles), the only assembly that
# leaves the intermediate links enough clearance; C1C2 stays horizontal.
PLATFORM_ANGLES_ALIGNED = VERTEX_ANGLES
PLATFORM_ANGLES_PRR = (5.0 * math.pi / 6.0, math.pi / 6.0, 3.0 * math.pi / 2.0)

SQRT3 = math.sqrt(3.0)


def wrap_angle(phi: float) -> float:
    """Normalize an angle to (-pi, pi]."""
    w = math.atan2(math.sin(phi), math.cos(phi))
    return w if w > -math.pi else math.pi


@dataclass(frozen=True)
class Pose:
    """Moving-platform position and orientation."""

    p_x: float  # [m]
    p_y: float  # [m]
    phi: float  # [rad], stored normalized to (-pi, pi]

    def __post_init__(self):
        if not all(map(math.isfinite, (self.p_x, self.p_y, self.phi))):
            raise ValueError("pose components must be finite")
        object.__setattr__(self, "phi", wrap_angle(self.phi))

    def as_array(self) -> np.ndarray:
        return np.array([self.p_x, self.p_y, self.phi])


HOME_POSE = Pose(0.0, 0.0, 0.0)


class Branch(Enum):
    """Working-mode branch of one leg's inverse kinematics."""

    PLUS = 1
    MINUS = -1


WorkingMode = tuple[Branch, Branch, Branch]
#: Default working mode: the PLUS root for every leg (larger prismatic
#: root for the PRR, counterclockwise elbow for the RRR).
DEFAULT_MODE: WorkingMode = (Branch.PLUS, Branch.PLUS, Branch.PLUS)


@dataclass(frozen=True, eq=False)
class AnchorLayout:
    """Joint anchor points of a design.

    base_points are the A_i in the base frame, platform_points the C_i in
    the platform frame (leg order).  For the PRR, leg i's prismatic joint
    travels from rail_starts[i] along rail_directions[i]; each rail is a
    full triangle side, traversed corner to corner, facing platform
    vertex C_i.  Both rail fields are None for the other architectures.
    """

    base_points: np.ndarray       # (3, 2), triangle corners in label order
    platform_points: np.ndarray   # (3, 2)
    rail_starts: np.ndarray | None      # (3, 2) for PRR
    rail_directions: np.ndarray | None  # (3, 2) for PRR
    rail_length: float            # sqrt(3) R, the usable prismatic travel

    def leg_origins(self) -> np.ndarray:
        """Proximal joint location of each leg (rail start or corner)."""
        return self.rail_starts if self.rail_starts is not None else self.base_points


@dataclass(frozen=True)
class LegSolution:
    """One leg's joint coordinates for a given pose and branch.

    actuated_coordinate is rho_i [m] for the PRR/RPR and the base joint
    angle [rad] for the RRR.  passive_angles are the two passive revolute
    joint coordinates, in chain order, measured as relative angles.
    """

    actuated_coordinate: float
    passive_angles: tuple[float, float]
    branch: Branch


@dataclass(frozen=True, eq=False)
class JacobianPair:
    """Velocity-loop matrices: A * (px_dot, py_dot, phi_dot) = B * q_dot."""

    a_parallel: np.ndarray  # (3, 3), singular at Type-2 singularities
    b_serial: np.ndarray    # (3, 3), singular at Type-1 singularities


def platform_vertex_angles(arch: Architecture) -> tuple[float, float, float]:
    return (PLATFORM_ANGLES_PRR if arch is Architecture.PRR
            else PLATFORM_ANGLES_ALIGNED)


@lru_cache(maxsize=1024)
def anchor_layout(design: DesignVector) -> AnchorLayout:
    """Place the base and platform anchor triangles of a design."""
    ang = np.array(VERTEX_ANGLES)
    base = design.base_radius * np.stack([np.cos(ang), np.sin(ang)], axis=1)
    pang = np.array(platform_vertex_angles(design.architecture))
    plat = design.platform_radius * np.stack([np.cos(pang), np.sin(pang)], axis=1)
    starts = rails = None
    if design.architecture is Architecture.PRR:
        # Leg i rides the side whose inward normal points at C_i; in the
        # paper's corner labels every rail still runs A_i -> A_{i+1}.
        starts = base[[2, 1, 0]]
        ends = base[[0, 2, 1]]
        side = ends - starts
        rails = side / np.linalg.norm(side, axis=1, keepdims=True)
        starts.setflags(write=False)
        rails.setflags(write=False)
    for arr in (base, plat):
        arr.setflags(write=False)
    return AnchorLayout(base_points=base, platform_points=plat,
                        rail_starts=starts, rail_directions=rails,
                        rail_length=SQRT3 * design.base_radius)


class BatchIK:
    """Leg coordinates for a batch of poses, one architecture.

    Arrays are shaped (N, 3) or (N, 3, 2) with legs on the second axis:

    c_world     platform anchors C_i in the base frame
    moment      E * (C_i - p): the 90-degree-rotated platform vectors that
                multiply phi_dot in every velocity loop
    q           actuated coordinates (rho or theta)
    elbow       intermediate joint point B_i (PRR foot / RRR elbow; for
                the RPR this is A_i, the proximal joint)
    distal      unit vector along the distal link, foot/strut to C_i
    strut       current strut length |C_i - A_i| (RPR flexible length)
    reachable   the branch root exists and joint limits hold (per spec's
                unreachability definition for each architecture)
    stroke_ok   the g2 stroke/reach inequality for each leg
    """

    __slots__ = ("design", "mode", "c_world", "moment", "q", "elbow",
                 "distal", "strut", "reachable", "stroke_ok")

    def __init__(self, design, mode, c_world, moment, q, elbow, distal,
                 strut, reachable, stroke_ok):
        self.design = design
        self.mode = mode
        self.c_world = c_world
        self.moment = moment
        self.q = q
        self.elbow = elbow
        self.distal = distal
        self.strut = strut
        self.reachable = reachable
        self.stroke_ok = stroke_ok

    def ok(self) -> np.ndarray:
        """(N,) mask: all three legs reachable with valid strokes."""
        return (self.reachable & self.stroke_ok).all(axis=1)

    def take(self, mask: np.ndarray) -> "BatchIK":
        """Row subset of the batch (boolean mask or index array)."""
        return BatchIK(self.design, self.mode, self.c_world[mask],
                       self.moment[mask], self.q[mask], self.elbow[mask],
                       self.distal[mask], self.strut[mask],
                       self.reachable[mask], self.stroke_ok[mask])


def pose_array(poses) -> np.ndarray:
    """Stack Pose objects (or accept an (N, 3) array) into (N, 3)."""
    if isinstance(poses, np.ndarray):
        return np.atleast_2d(poses)
    if isinstance(poses, Pose):
        return poses.as_array()[None, :]
    return np.stack([p.as_array() for p in poses])


def ik_batch(design: DesignVector, poses: np.ndarray,
             mode: WorkingMode = DEFAULT_MODE) -> BatchIK:
    """Closed-form inverse kinematics over an (N, 3) pose array."""
    poses = np.atleast_2d(np.asarray(poses, dtype=float))
    layout = anchor_layout(design)
    arch = design.architecture
    lb = design.link_length
    n = poses.shape[0]

    px, py, phi = poses[:, 0], poses[:, 1], poses[:, 2]
    cphi, sphi = np.cos(phi), np.sin(phi)
    cp = layout.platform_points                      # (3, 2), platform frame
    # C_i in the base frame and the rotated anchor vectors E * R(phi) c_i.
    rx = cp[:, 0] * cphi[:, None] - cp[:, 1] * sphi[:, None]
    ry = cp[:, 0] * sphi[:, None] + cp[:, 1] * cphi[:, None]
    c_world = np.stack([px[:, None] + rx, py[:, None] + ry], axis=2)
    moment = np.stack([-ry, rx], axis=2)

    a = layout.leg_origins()                         # (3, 2)
    w = c_world - a[None, :, :]
    sign = np.array([b.value for b in mode], dtype=float)

    if arch is Architecture.RPR:
        rho = np.linalg.norm(w, axis=2)
        safe = np.maximum(rho, 1e-300)
        distal = w / safe[:, :, None]
        reachable = (rho >= lb / 2.0) & (rho <= lb)
        stroke_ok = reachable
        elbow = np.broadcast_to(a, (n, 3, 2))
        q = rho
        strut = rho
    elif arch is Architecture.PRR:
        u = layout.rail_directions
        s = np.einsum("nij,ij->ni", w, u)
        h2 = np.einsum("nij,nij->ni", w, w) - s * s
        disc = lb * lb - h2
        reachable = disc >= 0.0
        q = s + sign[None, :] * np.sqrt(np.maximum(disc, 0.0))
        elbow = a[None, :, :] + q[:, :, None] * u[None, :, :]
        distal = (c_world - elbow) / lb
        stroke_ok = (q > 0.0) & (q < layout.rail_length)
        strut = np.full_like(q, lb)
    else:  # RRR: two equal links of length lb
        dist = np.linalg.norm(w, axis=2)
        reachable = (dist <= 2.0 * lb) & (dist > 1e-12)
        half = np.clip(dist / (2.0 * lb), -1.0, 1.0)
        spread = np.arccos(half)
        alpha = np.arctan2(w[:, :, 1], w[:, :, 0])
        q = alpha + sign[None, :] * spread
        elbow = a[None, :, :] + lb * np.stack([np.cos(q), np.sin(q)], axis=2)
        distal = (c_world - elbow) / lb
        stroke_ok = reachable
        strut = np.full_like(q, lb)

    return BatchIK(design=design, mode=mode, c_world=c_world, moment=moment,
                   q=q, elbow=elbow, distal=distal, strut=strut,
                   reachable=reachable, stroke_ok=stroke_ok)


def jacobian_batch(design: DesignVector, bik: BatchIK) -> tuple[np.ndarray, np.ndarray]:
    """Velocity-loop matrices A, B of shape (N, 3, 3) for a batch."""
    n = bik.q.shape[0]
    d = bik.distal
    amat = np.empty((n, 3, 3))
    amat[:, :, :2] = d
    amat[:, :, 2] = np.einsum("nij,nij->ni", d, bik.moment)

    bmat = np.zeros((n, 3, 3))
    arch = design.architecture
    idx = np.arange(3)
    if arch is Architecture.RPR:
        bmat[:, idx, idx] = 1.0
    elif arch is Architecture.PRR:
        u = anchor_layout(design).rail_directions
        bmat[:, idx, idx] = np.einsum("nij,ij->ni", d, u)
    else:
        lever = bik.elbow - anchor_layout(design).base_points[None, :, :]
        # d . E(lever): rate gain of the distal constraint per theta_dot.
        bmat[:, idx, idx] = d[:, :, 1] * lever[:, :, 0] - d[:, :, 0] * lever[:, :, 1]
    return amat, bmat


def _platform_bar_angle(design: DesignVector, leg: int, phi: float) -> float:
    """Base-frame direction angle of the platform bar C_i -> P."""
    return phi + platform_vertex_angles(design.architecture)[leg] + math.pi


def _leg_solutions(design: DesignVector, pose: Pose, bik: BatchIK,
                   mode: WorkingMode) -> tuple[LegSolution, LegSolution, LegSolution]:
    layout = anchor_layout(design)
    arch = design.architecture
    sols = []
    for i in range(3):
        dvec = bik.distal[0, i]
        link_angle = math.atan2(dvec[1], dvec[0])
        bar_angle = _platform_bar_angle(design, i, pose.phi)
        if arch is Architecture.RPR:
            passive = (link_angle, bar_angle - link_angle)
        elif arch is Architecture.PRR:
            rail_angle = math.atan2(layout.rail_directions[i][1],
                                    layout.rail_directions[i][0])
            passive = (link_angle - rail_angle, bar_angle - link_angle)
        else:
            prox = bik.elbow[0, i] - layout.base_points[i]
            prox_angle = math.atan2(prox[1], prox[0])
            passive = (link_angle - prox_angle, bar_angle - link_angle)
        sols.append(LegSolution(actuated_coordinate=float(bik.q[0, i]),
                                passive_angles=(wrap_angle(passive[0]),
                                                wrap_angle(passive[1])),
                                branch=mode[i]))
    return tuple(sols)


def inverse_kinematics(design: DesignVector, pose: Pose,
                       mode: WorkingMode = DEFAULT_MODE
                       ) -> tuple[LegSolution, LegSolution, LegSolution]:
    """Solve the inverse kinematics of all three legs for one pose.

    Raises Unreachable when a leg has no solution (no real PRR root, RPR
    strut outside [L_b/2, L_b], RRR anchor distance beyond 2 L_b) and
    ModeViolation when the requested PRR branch root violates the rail
    travel limits.
    """
    bik = ik_batch(design, pose.as_array()[None, :], mode)
    for i in range(3):
        if not bik.reachable[0, i]:
            raise Unreachable(i, "no inverse-kinematic solution at this pose")
        if not bik.stroke_ok[0, i]:
            raise ModeViolation(i, f"actuated coordinate {bik.q[0, i]:.6g}")
    return _leg_solutions(design, pose, bik, mode)


def closure_residuals(design: DesignVector, q: np.ndarray,
                      poses: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Loop-closure residuals r_i(pose) and their pose gradients.

    For fixed actuated coordinates q, residual i is the distal-link (or
    strut) length error of leg i; rows of the gradient are exactly the
    rows of the parallel Jacobian A at the same pose.
    """
    poses = np.atleast_2d(poses)
    layout = anchor_layout(design)
    arch = design.architecture
    q = np.asarray(q, dtype=float)

    px, py, phi = poses[:, 0], poses[:, 1], poses[:, 2]
    cphi, sphi = np.cos(phi), np.sin(phi)
    cp = layout.platform_points
    rx = cp[:, 0] * cphi[:, None] - cp[:, 1] * sphi[:, None]
    ry = cp[:, 0] * sphi[:, None] + cp[:, 1] * cphi[:, None]
    c_world = np.stack([px[:, None] + rx, py[:, None] + ry], axis=2)
    moment = np.stack([-ry, rx], axis=2)

    a = layout.leg_origins()
    if arch is Architecture.PRR:
        root = a[None, :, :] + q[None, :, None] * layout.rail_directions[None, :, :]
        target = design.link_length
    elif arch is Architecture.RPR:
        root = np.broadcast_to(a, c_world.shape)
        target = q[None, :]
    else:
        e = np.stack([np.cos(q), np.sin(q)], axis=1)
        root = a[None, :, :] + design.link_length * e[None, :, :]
        target = design.link_length

    vec = c_world - root
    length = np.linalg.norm(vec, axis=2)
    res = length - target
    dhat = vec / np.maximum(length, 1e-300)[:, :, None]
    grad = np.concatenate([dhat, np.einsum("nij,nij->ni", dhat, moment)[:, :, None]],
                          axis=2)
    return res, grad


def forward_refine(design: DesignVector, q_actuated, pose_guess: Pose,
                   tol: float = 1e-10, max_iter: int = 50) -> Pose:
    """Newton forward kinematics from a nearby pose guess.

    Iterates on the three loop-closure residuals with the actuated
    coordinates held fixed; used as the independent oracle for the
    inverse kinematics.  Raises NoConvergence if the residual does not
    drop below tol within max_iter steps (e.g. at a Type-2 singularity).
    """
    x = pose_guess.as_array()
    q = np.asarray(q_actuated, dtype=float)
    for _ in range(max_iter):
        res, grad = closure_residuals(design, q, x[None, :])
        if np.max(np.abs(res)) <= tol:
            return Pose(*x)
        try:
            step = np.linalg.solve(grad[0], res[0])
        except np.linalg.LinAlgError as exc:
            raise NoConvergence("singular closure Jacobian") from exc
        if not np.all(np.isfinite(step)):
            raise NoConvergence("non-finite Newton step")
        x = x - step
    raise NoConvergence(f"residual {np.max(np.abs(res)):.3e} after {max_iter} iterations")


def jacobian(design: DesignVector, pose: Pose,
             legs: tuple[LegSolution, LegSolution, LegSolution] | None = None,
             mode: WorkingMode = DEFAULT_MODE) -> JacobianPair:
    """Velocity-loop matrices at one pose.

    Singular matrices are returned as-is; dexterity handles them.  When
    leg solutions are passed their branches select the working mode.
    """
    if legs is not None:
        mode = tuple(leg.branch for leg in legs)
    bik = ik_batch(design, pose.as_array()[None, :], mode)
    amat, bmat = jacobian_batch(design, bik)
    return JacobianPair(a_parallel=amat[0], b_serial=bmat[0])
