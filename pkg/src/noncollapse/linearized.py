"""Discrete verification of the linearized flow equation.

For a scalar field f on the evolving hypersurface the linearized flow reads

    df/dt = sum_i g_i f_,ii + (sum_i g_i kappa_i^2) f

in the principal frame, with g_i the speed gradient components.  On both
backends the coordinate directions are principal directions, so the second
derivative term reduces to arclength stencils along the generating polyline
(plus the rotational first-order term r'/r f_s on surfaces of revolution).

Verified solution fields: the speed itself, normal components of a fixed
direction, and <X, nu> + 2 t F (the scaling field).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .errors import ResampleBoundary
from .flow import FlowConfig, run
from .geometry import AXISYM, CURVE, TOPO_SPHERE

SPEED = "speed"
NORMAL = "normal"
SCALING = "scaling"
LABELS = (SPEED, NORMAL, SCALING)

POLE_MARGIN = 2  # samples dropped near each pole when taking residual norms


@dataclass
class ResidualReport:
    rows: List[Tuple[int, float, float]]  # (N, dt, residual_norm)
    order: float
    fit_residual: float
    label: str
    speed_name: str


def scalar_field(h, F, label, t=0.0, direction=None):
    """Sample one of the verified solution fields on a hypersurface."""
    if label == SPEED:
        return F.value(h.kappa)
    if label == NORMAL:
        if direction is None:
            direction = np.array([1.0, 0.0])
        return h.normals @ np.asarray(direction, float)
    if label == SCALING:
        support = np.einsum("ij,ij->i", h.nodes, h.normals)
        return support + 2.0 * t * F.value(h.kappa)
    raise ValueError(f"unknown field label {label!r}")


def _field_derivatives(h, f):
    """Arclength first and second derivatives of a scalar field on the grid."""
    from .geometry import _chain_derivatives, _ring_derivatives

    vals = np.asarray(f, float)[:, None]
    s = h.arclength
    if h.closed:
        d1, d2 = _ring_derivatives(vals, s, h.total_length)
    else:
        d1, d2 = _chain_derivatives(vals, s)
        # Poles: axisymmetric fields are even in arclength, so f_s = 0 and
        # f_ss comes from the symmetric one-sided stencil.
        d1[0] = 0.0
        d1[-1] = 0.0
        d2[0] = 2.0 * (vals[1] - vals[0]) / (s[1] - s[0]) ** 2
        d2[-1] = 2.0 * (vals[-2] - vals[-1]) / (s[-1] - s[-2]) ** 2
    return d1[:, 0], d2[:, 0]


def lin_operator(h, F, f):
    """Apply the linearized-flow spatial operator to a scalar field."""
    F.require_cone(h.kappa)
    g = F.gradient(h.kappa)
    f = np.asarray(f, float)
    f_s, f_ss = _field_derivatives(h, f)
    zero_order = np.einsum("ij,ij->i", g, h.kappa ** 2) * f
    if h.backend == CURVE:
        return g[:, 0] * f_ss + zero_order
    r = h.nodes[:, 1]
    rp = h.tangents[:, 1]
    mid = np.zeros(h.N)
    if h.topology == TOPO_SPHERE:
        mid[1:-1] = g[1:-1, 1] * (rp[1:-1] / r[1:-1]) * f_s[1:-1]
        # r'/r f_s -> f_ss in the smooth pole limit.
        mid[0] = g[0, 1] * f_ss[0]
        mid[-1] = g[-1, 1] * f_ss[-1]
    else:
        mid = g[:, 1] * (rp / r) * f_s
    return g[:, 0] * f_ss + mid + zero_order


def interior_mask(h):
    """Samples where stencils are centered; drops a margin near sphere poles."""
    mask = np.ones(h.N, dtype=bool)
    if not h.closed:
        mask[:POLE_MARGIN + 1] = False
        mask[h.N - POLE_MARGIN - 1:] = False
    return mask


def flow_time_derivative(traj, F, label, k, direction=None):
    """Material forward difference of the field between snapshots k and k+1."""
    sa = traj.snapshots[k]
    sb = traj.snapshots[k + 1]
    if traj.resampled_between(sa.step, sb.step):
        raise ResampleBoundary(
            f"resample inside window between steps {sa.step} and {sb.step}")
    fa = scalar_field(sa.surface, F, label, sa.t, direction)
    fb = scalar_field(sb.surface, F, label, sb.t, direction)
    return (fb - fa) / (sb.t - sa.t)


def solution_residual(traj, F, label, direction=None, window=None):
    """Max over interior samples and the window of |df/dt - L f|."""
    if window is None:
        window = range(len(traj.snapshots) - 1)
    worst = 0.0
    for k in window:
        sa = traj.snapshots[k]
        if traj.resampled_between(sa.step, traj.snapshots[k + 1].step):
            continue
        dfdt = flow_time_derivative(traj, F, label, k, direction)
        lf = lin_operator(sa.surface, F,
                          scalar_field(sa.surface, F, label, sa.t, direction))
        mask = interior_mask(sa.surface)
        worst = max(worst, float(np.max(np.abs(dfdt - lf)[mask])))
    return worst


def convergence_order(make_surface, F, label, resolutions, direction=None,
                      steps=12, dt_safety=0.2):
    """Residual vs resolution with dt tied to the CFL bound (dt ~ 1/N^2)."""
    if len(resolutions) < 3:
        raise ValueError("need at least three resolutions")
    rows = []
    for N in resolutions:
        h0 = make_surface(N)
        cfg = FlowConfig(speed=F, t_end=1e9, dt_safety=dt_safety,
                         resample_every=10 ** 9, snapshot_every=1,
                         max_steps=steps)
        traj = run(h0, cfg)
        res = solution_residual(traj, F, label, direction)
        dt = traj.snapshots[1].t - traj.snapshots[0].t
        rows.append((int(N), float(dt), float(res)))
    logn = np.log([r[0] for r in rows])
    logr = np.log([max(r[2], 1e-300) for r in rows])
    coef, rss = np.polyfit(logn, logr, 1, full=True)[:2]
    order = float(-coef[0])
    fit_residual = float(np.sqrt(rss[0] / len(rows))) if len(rss) else 0.0
    return ResidualReport(rows, order, fit_residual, label, F.name)
