"""Two-point chordal quantity, touching-sphere curvature fields, and ratios.

The chordal quantity at a sample x and a point y is

    Z(x, y) = 2 <X(x) - X(y), nu(x)> / |X(x) - X(y)|^2,

the curvature of the sphere tangent to the hypersurface at x (centered along
the normal) that passes through y.  The interior sphere curvature at x is
the supremum of Z over y, extended across the near-diagonal by the maximum
principal curvature; the exterior sphere curvature is the analogous infimum
extended by the minimum principal curvature.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Tuple

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .errors import CoincidentPoints, NonConvexInput, NonPositiveSpeed
from .geometry import AXISYM, CURVE

DIAGONAL = -1  # witness marker: extremum attained by the osculating value

DEFAULT_EXCLUSION_FACTOR = 3.0


class SphereCurvatureField(NamedTuple):
    Zbar: np.ndarray          # interior sphere curvature per sample
    Zlow: np.ndarray          # exterior sphere curvature per sample
    witness_bar: np.ndarray   # flat index into the search grid, or DIAGONAL
    witness_low: np.ndarray


@dataclass
class SeriesRecord:
    rows: List[Tuple[float, float, float, float, float]]  # t, sup, inf, minF, maxF
    defect_sup: float  # max forward increase of sup Zbar/F
    defect_inf: float  # max forward decrease of inf Zlow/F


def chordal_Z(position_x, normal_x, y_position):
    """The displayed two-point formula for a single pair."""
    diff = np.asarray(position_x, float) - np.asarray(y_position, float)
    d2 = float(np.dot(diff, diff))
    scale = max(np.linalg.norm(position_x), np.linalg.norm(y_position), 1.0)
    if d2 < (1e-12 * scale) ** 2:
        raise CoincidentPoints("chordal quantity needs distinct points")
    return 2.0 * float(np.dot(diff, normal_x)) / d2


def _search_grid(h, M):
    """Candidate y-points and (for axisym) the full rotated grid, flattened."""
    if h.backend == CURVE:
        return h.nodes.copy()
    return h.ring_points(M).reshape(-1, 3)


def _exclusion_radius(h, factor):
    return max(2.0, float(factor)) * h.chord_mean


def sphere_curvature_field(h, exclusion_radius_factor=DEFAULT_EXCLUSION_FACTOR, M=None):
    """Zbar/Zlow at every sample by brute-force search over the grid.

    x is fixed at rotation angle 0 (axisym symmetry); y runs over all nodes
    (curve) or the node x angle grid (axisym).  Pairs closer than the
    exclusion radius are replaced by the principal-curvature boundary value.
    """
    if M is None:
        M = max(16, h.N // 2)
    excl = _exclusion_radius(h, exclusion_radius_factor)
    grid = _search_grid(h, M)
    X = h.positions3d() if h.backend == AXISYM else h.nodes
    Nu = h.normals3d() if h.backend == AXISYM else h.normals

    kmax = h.kappa_max
    kmin = h.kappa_min
    N = h.N
    Zbar = np.empty(N)
    Zlow = np.empty(N)
    wbar = np.full(N, DIAGONAL, dtype=int)
    wlow = np.full(N, DIAGONAL, dtype=int)

    for i in range(N):
        diff = X[i] - grid
        d2 = np.einsum("ij,ij->i", diff, diff)
        z = 2.0 * (diff @ Nu[i]) / np.where(d2 > 0, d2, np.inf)
        admissible = d2 > excl * excl
        if np.any(admissible):
            za = np.where(admissible, z, -np.inf)
            j = int(np.argmax(za))
            if za[j] > kmax[i]:
                Zbar[i], wbar[i] = za[j], j
            else:
                Zbar[i] = kmax[i]
            zb = np.where(admissible, z, np.inf)
            j = int(np.argmin(zb))
            if zb[j] < kmin[i]:
                Zlow[i], wlow[i] = zb[j], j
            else:
                Zlow[i] = kmin[i]
        else:
            Zbar[i] = kmax[i]
            Zlow[i] = kmin[i]
    return SphereCurvatureField(Zbar, Zlow, wbar, wlow)


def interior_sphere_curvature(h, i, exclusion_radius_factor=DEFAULT_EXCLUSION_FACTOR,
                              M=None):
    f = sphere_curvature_field(h, exclusion_radius_factor, M)
    return f.Zbar[i], f.witness_bar[i]


def exterior_sphere_curvature(h, i, exclusion_radius_factor=DEFAULT_EXCLUSION_FACTOR,
                              M=None):
    f = sphere_curvature_field(h, exclusion_radius_factor, M)
    return f.Zlow[i], f.witness_low[i]


def witness_point(h, flat_index, M=None):
    """Ambient coordinates of a witness grid index."""
    if h.backend == CURVE:
        return h.nodes[flat_index]
    if M is None:
        M = max(16, h.N // 2)
    return _search_grid(h, M)[flat_index]


def witness_tangents(h, flat_index, M=None):
    """Unit tangent directions of the surface at a witness grid point."""
    if h.backend == CURVE:
        return [h.tangents[flat_index]]
    if M is None:
        M = max(16, h.N // 2)
    j, m = divmod(int(flat_index), M)
    phi = 2.0 * np.pi * m / M
    tx, tr = h.tangents[j]
    t_profile = np.array([tx, tr * np.cos(phi), tr * np.sin(phi)])
    out = [t_profile]
    r = h.nodes[j, 1]
    if r > 1e-9 * h.diameter:
        out.append(np.array([0.0, -np.sin(phi), np.cos(phi)]))
    return out


def tangency_residual(h, i, witness, M=None):
    """First-order condition at a grid witness: the touching sphere is tangent.

    Returns max over tangent directions tau at the witness of
    |<tau, nu(x) - d Z w>| with w the unit chord from y to x.
    """
    if witness == DIAGONAL:
        raise ValueError("tangency residual needs a grid witness, not the diagonal")
    X = h.positions3d() if h.backend == AXISYM else h.nodes
    Nu = h.normals3d() if h.backend == AXISYM else h.normals
    y = witness_point(h, witness, M)
    diff = X[i] - y
    d = float(np.linalg.norm(diff))
    if d == 0.0:
        raise CoincidentPoints("witness coincides with the base sample")
    w = diff / d
    z = 2.0 * float(np.dot(diff, Nu[i])) / d ** 2
    vec = Nu[i] - d * z * w
    return max(abs(float(np.dot(tau, vec))) for tau in witness_tangents(h, witness, M))


def ratio_series(traj, F, exclusion_radius_factor=DEFAULT_EXCLUSION_FACTOR, M=None):
    """Sup Zbar/F and inf Zlow/F per snapshot, with forward monotonicity defects."""
    rows = []
    for snap in traj.snapshots:
        h = snap.surface
        fvals = F.value(h.kappa)
        min_f = float(fvals.min())
        if min_f <= 0.0:
            raise NonPositiveSpeed(f"min F = {min_f:g} at t = {snap.t:g}")
        field = sphere_curvature_field(h, exclusion_radius_factor, M)
        sup_ratio = float(np.max(field.Zbar / fvals))
        inf_ratio = float(np.min(field.Zlow / fvals))
        rows.append((snap.t, sup_ratio, inf_ratio, min_f, float(fvals.max())))
    sups = np.array([r[1] for r in rows])
    infs = np.array([r[2] for r in rows])
    defect_sup = float(np.max(np.diff(sups))) if len(rows) > 1 else 0.0
    defect_inf = float(np.max(-np.diff(infs))) if len(rows) > 1 else 0.0
    return SeriesRecord(rows, defect_sup, defect_inf)


# -- circumradius / inradius ------------------------------------------------

def _profile_distances(h, center_x):
    x, r = h.nodes[:, 0], h.nodes[:, 1]
    return np.hypot(x - center_x, r)


def circum_inradius_ratio(h):
    """Circumradius over inradius by direct search; requires a convex body."""
    if np.any(h.kappa_min <= 0.0):
        raise NonConvexInput("circum/inradius ratio requires all kappa > 0")
    if h.backend == AXISYM:
        lo, hi = float(h.nodes[:, 0].min()), float(h.nodes[:, 0].max())
        circ = minimize_scalar(lambda c: _profile_distances(h, c).max(),
                               bounds=(lo, hi), method="bounded",
                               options={"xatol": 1e-10})
        circumradius = float(circ.fun)
        cand = np.linspace(lo, hi, 1024)
        mins = np.array([_profile_distances(h, c).min() for c in cand])
        k = int(np.argmax(mins))
        a = cand[max(0, k - 1)]
        b = cand[min(len(cand) - 1, k + 1)]
        inr = minimize_scalar(lambda c: -_profile_distances(h, c).min(),
                              bounds=(a, b), method="bounded",
                              options={"xatol": 1e-10})
        inradius = float(-inr.fun)
    else:
        centroid = h.nodes.mean(axis=0)

        def max_dist(c):
            return np.linalg.norm(h.nodes - c, axis=1).max()

        def neg_min_dist(c):
            return -np.linalg.norm(h.nodes - c, axis=1).min()

        res = minimize(max_dist, centroid, method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 4000})
        circumradius = float(res.fun)
        res = minimize(neg_min_dist, centroid, method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 4000})
        inradius = float(-res.fun)
    return circumradius / inradius
