"""Explicit time stepping of dX/dt = -F nu with CFL control and resampling.

Nodes move purely along the normal, so between resampling events they are
material points; the linearized-flow verifier relies on this.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional

import numpy as np

from .errors import AxisViolation, ConeViolation, DegenerateSpacing, Instability
from .geometry import DiscreteHypersurface, resample_arclength, self_intersection_check
from .speeds import SpeedFunction

REACHED_T_END = "ReachedTEnd"
CURVATURE_CAP = "CurvatureCap"
CONE_EXIT = "ConeExit"
SELF_INTERSECTION = "SelfIntersection"
INSTABILITY = "Instability"


@dataclass
class FlowConfig:
    speed: SpeedFunction
    t_end: float
    dt_safety: float = 0.2
    resample_every: int = 10
    kappa_cap: Optional[float] = None  # default 1e3 / initial diameter
    snapshot_every: int = 50
    max_steps: Optional[int] = None

    def __post_init__(self):
        if self.t_end <= 0:
            raise ValueError("t_end must be positive")
        if not (0 < self.dt_safety <= 1):
            raise ValueError("dt_safety must lie in (0, 1]")
        if self.resample_every < 1 or self.snapshot_every < 1:
            raise ValueError("cadences must be >= 1")


class Snapshot(NamedTuple):
    t: float
    step: int
    surface: DiscreteHypersurface


@dataclass
class FlowTrajectory:
    snapshots: List[Snapshot]
    termination: str
    resample_steps: List[int] = field(default_factory=list)

    @property
    def times(self):
        return np.array([s.t for s in self.snapshots])

    def resampled_between(self, step_a, step_b):
        return any(step_a < r <= step_b for r in self.resample_steps)


def cfl_dt(h, F, safety):
    """Parabolic stability bound: safety * (min spacing)^2 / (2 max dF/dkappa)."""
    F.require_cone(h.kappa)
    gmax = float(F.gradient(h.kappa).max())
    return safety * h.chord_min ** 2 / (2.0 * gmax)


def step(h, F, dt):
    """One forward-Euler step; every node moves by -dt * F * nu."""
    F.require_cone(h.kappa)
    speed_vals = F.value(h.kappa)
    new_nodes = h.nodes - dt * speed_vals[:, None] * h.normals
    if not np.all(np.isfinite(new_nodes)):
        raise Instability("non-finite coordinates after step")
    return h.replace_nodes(new_nodes)


def run(h0, cfg):
    """Drive the flow to t_end or until a stopping criterion fires."""
    F = cfg.speed
    kappa_cap = cfg.kappa_cap
    if kappa_cap is None:
        kappa_cap = 1e3 / h0.diameter

    snapshots = [Snapshot(0.0, 0, h0)]
    resample_steps: List[int] = []
    if self_intersection_check(h0):
        return FlowTrajectory(snapshots, SELF_INTERSECTION, resample_steps)

    h = h0
    t = 0.0
    nstep = 0
    termination = REACHED_T_END
    while t < cfg.t_end * (1.0 - 1e-14):
        if not np.all(F.in_cone(h.kappa)):
            termination = CONE_EXIT
            break
        if np.max(np.abs(h.kappa)) > kappa_cap:
            termination = CURVATURE_CAP
            break
        try:
            dt = min(cfl_dt(h, F, cfg.dt_safety), cfg.t_end - t)
            h = step(h, F, dt)
        except (Instability, AxisViolation, DegenerateSpacing):
            termination = INSTABILITY
            break
        t += dt
        nstep += 1
        if nstep % cfg.resample_every == 0 and t < cfg.t_end * (1.0 - 1e-14):
            try:
                h = resample_arclength(h)
            except (AxisViolation, DegenerateSpacing):
                termination = INSTABILITY
                break
            resample_steps.append(nstep)
        if nstep % cfg.snapshot_every == 0 or t >= cfg.t_end * (1.0 - 1e-14):
            snapshots.append(Snapshot(t, nstep, h))
            if self_intersection_check(h):
                termination = SELF_INTERSECTION
                break
        if cfg.max_steps is not None and nstep >= cfg.max_steps:
            break

    if snapshots[-1].step != nstep:
        snapshots.append(Snapshot(t, nstep, h))
    return FlowTrajectory(snapshots, termination, resample_steps)
