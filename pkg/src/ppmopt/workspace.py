"""Regular-workspace evaluation: the second objective.

The regular workspace is a cylinder in (x, y, phi): every position inside
a disc of radius R_w around the center must be reachable over the full
rotation band (default 20 degrees total) with every constraint satisfied
and a single fixed working mode.  Feasibility is checked on a
deterministic grid (center poses first, then rings radial-major), and the
maximal radius is found by bisection, which makes R_w a deterministic
function of the design vector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import HomeUnreachable
from .kinematics import Pose
from .model import Architecture, DesignVector
from .performance import (ConstraintReport, DEFAULT_CONTEXT, EvalContext,
                          characteristic_length, constraints_batch)

DELTA_PHI_DEFAULT = math.radians(20.0)  # total rotation range of the cylinder


@dataclass(frozen=True)
class WorkspaceSpec:
    """A candidate regular workspace: center, rotation band, radius."""

    radius: float                                  # R_w [m]
    center: tuple[float, float, float] = (0.0, 0.0, 0.0)  # (x_c, y_c, phi_c)
    delta_phi: float = DELTA_PHI_DEFAULT           # total band [rad]

    def __post_init__(self):
        if self.radius < 0.0 or self.delta_phi <= 0.0:
            raise ValueError("workspace radius must be >= 0 and band > 0")


@dataclass(frozen=True)
class GridSpec:
    """Discretization density of the workspace cylinder.

    angular_offset rotates the ring sampling phase; useful for checking
    grid-orientation independence on symmetric designs.
    """

    n_radial: int = 5
    n_angular: int = 12
    n_orientation: int = 5
    angular_offset: float = 0.0   # [rad]

    def __post_init__(self):
        if self.n_radial < 1 or self.n_angular < 2 or self.n_orientation < 2:
            raise ValueError("grid too coarse: need n_radial>=1, others >=2")


DEFAULT_GRID = GridSpec()


def grid_array(spec: WorkspaceSpec, grid: GridSpec) -> np.ndarray:
    """Grid poses as an (N, 3) array.

    Ordering is radial-major: the center at every orientation first, then
    each ring from the smallest radius outward, each position swept over
    the orientation band.  A zero radius yields only the center block.
    """
    xc, yc, pc = spec.center
    phis = np.linspace(pc - spec.delta_phi / 2.0, pc + spec.delta_phi / 2.0,
                       grid.n_orientation)
    blocks = [np.column_stack([np.full(grid.n_orientation, xc),
                               np.full(grid.n_orientation, yc), phis])]
    if spec.radius > 0.0:
        radii = spec.radius * np.arange(1, grid.n_radial + 1) / grid.n_radial
        ang = (grid.angular_offset
               + 2.0 * math.pi * np.arange(grid.n_angular) / grid.n_angular)
        for rad in radii:
            xs = xc + rad * np.cos(ang)
            ys = yc + rad * np.sin(ang)
            ring = np.empty((grid.n_angular * grid.n_orientation, 3))
            ring[:, 0] = np.repeat(xs, grid.n_orientation)
            ring[:, 1] = np.repeat(ys, grid.n_orientation)
            ring[:, 2] = np.tile(phis, grid.n_angular)
            blocks.append(ring)
    return np.concatenate(blocks, axis=0)


def grid_points(spec: WorkspaceSpec, grid: GridSpec) -> list[Pose]:
    """Grid poses as Pose objects, in evaluation order."""
    return [Pose(*row) for row in grid_array(spec, grid)]


def workspace_feasible(design: DesignVector, spec: WorkspaceSpec,
                       grid: GridSpec = DEFAULT_GRID,
                       ctx: EvalContext = DEFAULT_CONTEXT,
                       l_c: float | None = None, chunk: int = 80
                       ) -> tuple[bool, Pose | None, ConstraintReport | None]:
    """Check every grid pose of the cylinder against g1..g6.

    Returns (feasible, first failing pose, its report); evaluation stops
    at the first failing chunk, so hopeless designs exit early.
    """
    points = grid_array(spec, grid)
    for start in range(0, points.shape[0], chunk):
        block = points[start:start + chunk]
        res = constraints_batch(design, block, ctx, l_c=l_c)
        bad = np.flatnonzero(~res.overall)
        if bad.size:
            idx = int(bad[0])
            return False, Pose(*block[idx]), res.report(idx)
    return True, None, None


def upper_radius(design: DesignVector) -> float:
    """Safe bisection bracket: center offset can never exceed the base
    radius plus platform radius plus the maximal leg extension."""
    ext = {Architecture.PRR: math.sqrt(3.0) * design.base_radius + design.link_length,
           Architecture.RPR: design.link_length,
           Architecture.RRR: 2.0 * design.link_length}[design.architecture]
    return design.base_radius + design.platform_radius + ext


@dataclass(frozen=True)
class WorkspaceResult:
    """Outcome of the maximal-radius search."""

    radius: float
    limiting_pose: Pose | None
    limiting_report: ConstraintReport | None
    characteristic_length: float


def max_regular_workspace_detail(design: DesignVector,
                                 grid: GridSpec = DEFAULT_GRID,
                                 ctx: EvalContext = DEFAULT_CONTEXT,
                                 tol: float = 1e-3,
                                 center: tuple[float, float, float] = (0.0, 0.0, 0.0),
                                 delta_phi: float = DELTA_PHI_DEFAULT) -> WorkspaceResult:
    """Bisection for the largest feasible cylinder radius.

    Returns radius 0 when even the center poses fail; the limiting pose
    is the first grid failure at the smallest infeasible radius probed.
    """
    try:
        l_c = characteristic_length(design, ctx)
    except HomeUnreachable:
        l_c = math.nan

    def probe(radius: float):
        return workspace_feasible(design, WorkspaceSpec(radius, center, delta_phi),
                                  grid, ctx, l_c=l_c)

    feasible, pose, report = probe(0.0)
    if not feasible:
        return WorkspaceResult(0.0, pose, report, l_c)

    lo, hi = 0.0, upper_radius(design)
    feasible, pose, report = probe(hi)
    if feasible:
        return WorkspaceResult(hi, None, None, l_c)
    limiting = (pose, report)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        feasible, pose, report = probe(mid)
        if feasible:
            lo = mid
        else:
            hi = mid
            limiting = (pose, report)
    return WorkspaceResult(lo, limiting[0], limiting[1], l_c)


def max_regular_workspace(design: DesignVector, grid: GridSpec = DEFAULT_GRID,
                          ctx: EvalContext = DEFAULT_CONTEXT,
                          tol: float = 1e-3) -> float:
    """Largest regular-workspace radius of a design [m] (0 if infeasible)."""
    return max_regular_workspace_detail(design, grid, ctx, tol).radius
