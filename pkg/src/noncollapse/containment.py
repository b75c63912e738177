"""Pairwise flow runs verifying that minimal mutual distance cannot decrease.

Both hypersurfaces advance under the same speed with a shared time step (the
smaller of the two CFL bounds).  Axisymmetric pairs must share the x-axis as
symmetry axis, which reduces the distance search to one rotation angle.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from matplotlib.path import Path

from .errors import AxisViolation, DegenerateSpacing, InitialContact, Instability
from .flow import (CONE_EXIT, CURVATURE_CAP, INSTABILITY, REACHED_T_END,
                   SELF_INTERSECTION, cfl_dt, step)
from .geometry import AXISYM, CURVE, resample_arclength, self_intersection_check

DISJOINT = "Disjoint"
NESTED = "Nested"


@dataclass
class PairSnapshot:
    t: float
    A: object
    B: object


@dataclass
class PairTrajectory:
    snapshots: List[PairSnapshot]
    orientation_case: str
    termination: str


@dataclass
class DistanceSeries:
    rows: List[Tuple[float, float, np.ndarray, np.ndarray]]  # t, d_min, wit_a, wit_b
    defect: float  # max forward decrease of d_min


def _pair_distance_matrix(A, B):
    """Distances between A's generating samples and B's rotated grid.

    For shared-axis axisymmetric pairs the distance between (x1, r1) at angle
    0 and (x2, r2) at angle phi is sqrt((x1-x2)^2 + r1^2 + r2^2
    - 2 r1 r2 cos phi), minimized at phi = 0; so the profile-plane distance
    is already the true minimum and the search stays two-dimensional.
    """
    pa = A.nodes
    pb = B.nodes
    if A.backend == AXISYM:
        dx = pa[:, 0][:, None] - pb[:, 0][None, :]
        return np.sqrt(dx ** 2 + (pa[:, 1][:, None] - pb[:, 1][None, :]) ** 2)
    diff = pa[:, None, :] - pb[None, :, :]
    return np.linalg.norm(diff, axis=2)


def min_distance(A, B):
    """Brute-force min over all sample pairs; ties broken by lowest index pair."""
    if A.backend != B.backend:
        raise ValueError("both hypersurfaces must use the same backend")
    d = _pair_distance_matrix(A, B)
    flat = int(np.argmin(d))
    i, j = np.unravel_index(flat, d.shape)
    return float(d[i, j]), (A.nodes[i].copy(), B.nodes[j].copy())


def _profiles_intersect(A, B):
    """Segment-segment crossing test between the two generating polylines."""
    from .geometry import _cross2

    def segs(h):
        if h.closed:
            return h.nodes, np.roll(h.nodes, -1, axis=0)
        return h.nodes[:-1], h.nodes[1:]

    a1, a2 = segs(A)
    b1, b2 = segs(B)
    p1 = a1[:, None, :]
    p2 = a2[:, None, :]
    p3 = b1[None, :, :]
    p4 = b2[None, :, :]
    d1 = _cross2(p4 - p3, p1 - p3)
    d2 = _cross2(p4 - p3, p2 - p3)
    d3 = _cross2(p2 - p1, p3 - p1)
    d4 = _cross2(p2 - p1, p4 - p1)
    return bool(np.any((d1 * d2 <= 0) & (d3 * d4 <= 0) & ((d1 != 0) | (d3 != 0))))


def _strictly_inside(A, B):
    """All generating samples of A inside the region bounded by B."""
    if B.backend == CURVE or B.closed:
        poly = B.nodes
    else:
        # Sphere-like profile: reflect across the axis so that points with
        # r = 0 (the poles of A) are interior, not boundary.
        mirrored = B.nodes[-2:0:-1] * np.array([1.0, -1.0])
        poly = np.vstack((B.nodes, mirrored))
    path = Path(np.vstack((poly, poly[:1])))
    pts = A.nodes
    return bool(np.all(path.contains_points(pts)))


def run_pair(A0, B0, cfg, case=DISJOINT):
    """Flow both surfaces together and record the minimal-distance series."""
    d0, _ = min_distance(A0, B0)
    scale = max(A0.diameter, B0.diameter)
    if d0 <= 1e-9 * scale or _profiles_intersect(A0, B0):
        raise InitialContact(f"initial minimal distance {d0:g} is not positive")
    if case == NESTED and not _strictly_inside(A0, B0):
        raise InitialContact("nested case requires A strictly inside B")

    F = cfg.speed
    A, B = A0, B0
    t = 0.0
    nstep = 0
    termination = REACHED_T_END
    snapshots = [PairSnapshot(0.0, A, B)]
    rows = []

    def record(t):
        d, (wa, wb) = min_distance(A, B)
        rows.append((t, d, wa, wb))

    record(0.0)
    while t < cfg.t_end * (1.0 - 1e-14):
        if not (np.all(F.in_cone(A.kappa)) and np.all(F.in_cone(B.kappa))):
            termination = CONE_EXIT
            break
        cap = cfg.kappa_cap if cfg.kappa_cap is not None else 1e3 / scale
        if max(np.max(np.abs(A.kappa)), np.max(np.abs(B.kappa))) > cap:
            termination = CURVATURE_CAP
            break
        try:
            dt = min(cfl_dt(A, F, cfg.dt_safety), cfl_dt(B, F, cfg.dt_safety),
                     cfg.t_end - t)
            A = step(A, F, dt)
            B = step(B, F, dt)
        except (Instability, AxisViolation, DegenerateSpacing):
            termination = INSTABILITY
            break
        t += dt
        nstep += 1
        if nstep % cfg.resample_every == 0 and t < cfg.t_end * (1.0 - 1e-14):
            try:
                A = resample_arclength(A)
                B = resample_arclength(B)
            except (AxisViolation, DegenerateSpacing):
                termination = INSTABILITY
                break
        if nstep % cfg.snapshot_every == 0 or t >= cfg.t_end * (1.0 - 1e-14):
            snapshots.append(PairSnapshot(t, A, B))
            record(t)
            if self_intersection_check(A) or self_intersection_check(B):
                termination = SELF_INTERSECTION
                break
        if cfg.max_steps is not None and nstep >= cfg.max_steps:
            break

    dmins = np.array([r[1] for r in rows])
    defect = float(np.max(-np.diff(dmins))) if len(rows) > 1 else 0.0
    return PairTrajectory(snapshots, case, termination), DistanceSeries(rows, defect)
