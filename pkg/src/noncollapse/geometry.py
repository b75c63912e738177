"""Discrete geometry for closed plane curves and axisymmetric surfaces.

Both backends are generated by a polyline: the curve itself in R^2, or a
profile (x, r) in the half-plane r >= 0 rotated about the x-axis.  Geometry
(outward normals, principal curvatures, quadrature weights) is derived with
second-order centered differences on the arclength-normalized node ring;
sphere-like profiles get one-sided pole stencils that exploit the even/odd
symmetry of x and r through the axis.

Sign conventions are locked so that a circle or sphere of radius rho has
kappa = 1/rho with the unit normal pointing outward.
"""

from __future__ import annotations

import json
import os

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.interpolate import CubicSpline

from .errors import AxisViolation, DegenerateSpacing

CURVE = "curve"
AXISYM = "axisym"

TOPO_CLOSED = "closed"
TOPO_SPHERE = "sphere"
TOPO_TORUS = "torus"

MIN_NODES = 16
DEGENERATE_FRACTION = 1e-9


def _cross2(u, v):
    return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]


def _ring_derivatives(vals, s, total):
    """First and second derivatives on a periodic node ring, nonuniform 3-point."""
    hm = np.roll(np.diff(s, append=total + s[0]), 1)
    hp = np.diff(s, append=total + s[0])
    fp = np.roll(vals, -1, axis=0)
    fm = np.roll(vals, 1, axis=0)
    hm_ = hm[:, None]
    hp_ = hp[:, None]
    denom = hm_ * hp_ * (hm_ + hp_)
    d1 = (hm_ ** 2 * fp + (hp_ ** 2 - hm_ ** 2) * vals - hp_ ** 2 * fm) / denom
    d2 = 2.0 * (hm_ * fp - (hm_ + hp_) * vals + hp_ * fm) / denom
    return d1, d2


def _chain_derivatives(vals, s):
    """Interior nonuniform centered derivatives on an open chain.

    Endpoint rows are left zero; callers fill them from symmetry conditions.
    """
    d1 = np.zeros_like(vals)
    d2 = np.zeros_like(vals)
    hm = (s[1:-1] - s[:-2])[:, None]
    hp = (s[2:] - s[1:-1])[:, None]
    fm = vals[:-2]
    f0 = vals[1:-1]
    fp = vals[2:]
    denom = hm * hp * (hm + hp)
    d1[1:-1] = (hm ** 2 * fp + (hp ** 2 - hm ** 2) * f0 - hp ** 2 * fm) / denom
    d2[1:-1] = 2.0 * (hm * fp - (hm + hp) * f0 + hp * fm) / denom
    return d1, d2


def _even_second_derivative(u1, u2, d1, d2):
    """f''(0) for f even about 0, from f(u_i) - f(0) at two offsets u1 < u2."""
    v1, v2 = u1 * u1, u2 * u2
    a = (d1 * v2 * v2 - d2 * v1 * v1) / (v1 * v2 * (v2 - v1))
    return 2.0 * a


class DiscreteHypersurface:
    """Sampled hypersurface with derived normals, curvatures and weights.

    Treat instances as immutable: every flow or resampling operation builds
    a new object.
    """

    def __init__(self, nodes, backend, topology=None, orient=True, validate=True):
        nodes = np.ascontiguousarray(np.asarray(nodes, dtype=float))
        if nodes.ndim != 2 or nodes.shape[1] != 2:
            raise ValueError("nodes must have shape (N, 2)")
        if backend not in (CURVE, AXISYM):
            raise ValueError(f"unknown backend {backend!r}")
        if backend == CURVE:
            topology = TOPO_CLOSED
        elif topology not in (TOPO_SPHERE, TOPO_TORUS):
            raise ValueError(f"axisym backend needs topology sphere|torus, got {topology!r}")
        self.backend = backend
        self.topology = topology
        self.nodes = nodes
        if validate:
            self._validate()
        if orient:
            if not self._is_outward():
                self.nodes = nodes[::-1].copy()
        self._compute_geometry()
        self.nodes.setflags(write=False)

    # -- validation ---------------------------------------------------------

    @property
    def N(self):
        return self.nodes.shape[0]

    @property
    def n(self):
        """Number of principal curvatures (1 for curves, 2 for surfaces)."""
        return 1 if self.backend == CURVE else 2

    @property
    def closed(self):
        return self.topology in (TOPO_CLOSED, TOPO_TORUS)

    def _chords(self, nodes=None):
        nodes = self.nodes if nodes is None else nodes
        if self.closed:
            return np.linalg.norm(np.roll(nodes, -1, axis=0) - nodes, axis=1)
        return np.linalg.norm(np.diff(nodes, axis=0), axis=1)

    def _validate(self):
        nodes = self.nodes
        if nodes.shape[0] < MIN_NODES:
            raise ValueError(f"need at least {MIN_NODES} nodes, got {nodes.shape[0]}")
        if not np.all(np.isfinite(nodes)):
            raise ValueError("non-finite node coordinates")
        span = nodes.max(axis=0) - nodes.min(axis=0)
        diameter = float(np.linalg.norm(span))
        chords = self._chords()
        if np.min(chords) < DEGENERATE_FRACTION * diameter:
            raise DegenerateSpacing(
                f"min node spacing {np.min(chords):.3e} below "
                f"{DEGENERATE_FRACTION:g} x diameter {diameter:.3e}")
        if self.backend == AXISYM:
            r = nodes[:, 1]
            tol = DEGENERATE_FRACTION * diameter
            if np.any(r < -tol):
                raise AxisViolation("profile has r < 0")
            if self.topology == TOPO_SPHERE:
                if abs(r[0]) > tol or abs(r[-1]) > tol:
                    raise AxisViolation("sphere-like profile endpoints must sit on the axis")
                if np.any(r[1:-1] <= tol):
                    raise AxisViolation("sphere-like profile touches the axis off-endpoint")
                nodes[0, 1] = 0.0
                nodes[-1, 1] = 0.0
            else:
                if np.any(r <= tol):
                    raise AxisViolation("torus-like profile must stay off the axis")

    def _is_outward(self):
        if self.backend == CURVE:
            x, y = self.nodes[:, 0], self.nodes[:, 1]
            area2 = np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)
            return area2 > 0.0
        if self.topology == TOPO_TORUS:
            # Same convention as plane curves: CCW traversal of the profile
            # in the (x, r) plane makes nu = (r', -x') point outward.
            x, r = self.nodes[:, 0], self.nodes[:, 1]
            area2 = np.sum(x * np.roll(r, -1) - np.roll(x, -1) * r)
            return area2 > 0.0
        # Sphere-like: outward convention needs traversal from the max-x pole.
        return self.nodes[0, 0] > self.nodes[-1, 0]

    # -- derived geometry ---------------------------------------------------

    def _compute_geometry(self):
        nodes = self.nodes
        chords = self._chords(nodes)
        if self.closed:
            s = np.concatenate(([0.0], np.cumsum(chords[:-1])))
            total = float(chords.sum())
            d1, d2 = _ring_derivatives(nodes, s, total)
            hm = np.roll(chords, 1)
            hp = chords
            ds = 0.5 * (hm + hp)
        else:
            s = np.concatenate(([0.0], np.cumsum(chords)))
            total = float(s[-1])
            d1, d2 = _chain_derivatives(nodes, s)
            self._fill_pole_stencils(nodes, s, d1, d2)
            ds = np.empty(nodes.shape[0])
            ds[1:-1] = 0.5 * (s[2:] - s[:-2])
            ds[0] = 0.5 * (s[1] - s[0])
            ds[-1] = 0.5 * (s[-1] - s[-2])

        speed = np.linalg.norm(d1, axis=1)
        tangent = d1 / speed[:, None]
        normal = np.column_stack((tangent[:, 1], -tangent[:, 0]))
        kprof = _cross2(d1, d2) / speed ** 3

        self.arclength = s
        self.total_length = total
        self.chord_min = float(chords.min())
        self.chord_mean = float(chords.mean())
        self.tangents = tangent
        self.normals = normal
        span = nodes.max(axis=0) - nodes.min(axis=0)
        self.diameter = float(np.linalg.norm(span))

        if self.backend == CURVE:
            self.kappa = kprof[:, None]
            self.weights = ds
        else:
            r = nodes[:, 1]
            krot = np.empty_like(kprof)
            if self.topology == TOPO_SPHERE:
                krot[1:-1] = -tangent[1:-1, 0] / r[1:-1]
                krot[0] = kprof[0]
                krot[-1] = kprof[-1]
                w = 2.0 * np.pi * r * ds
                w[0] = 2.0 * np.pi * (0.5 * r[1]) * (0.5 * (s[1] - s[0]))
                w[-1] = 2.0 * np.pi * (0.5 * r[-2]) * (0.5 * (s[-1] - s[-2]))
            else:
                krot = -tangent[:, 0] / r
                w = 2.0 * np.pi * r * ds
            self.kappa = np.column_stack((kprof, krot))
            self.weights = w

    def _fill_pole_stencils(self, nodes, s, d1, d2):
        """Sphere-like endpoints: x even and r odd in arclength through the pole."""
        # Start pole: x'(0) = 0, r'(0) = +1, r''(0) = 0.
        u1, u2 = s[1], s[2]
        d1[0] = (0.0, 1.0)
        d2[0, 0] = _even_second_derivative(u1, u2, nodes[1, 0] - nodes[0, 0],
                                           nodes[2, 0] - nodes[0, 0])
        d2[0, 1] = 0.0
        # End pole: arclength measured backwards.
        u1 = s[-1] - s[-2]
        u2 = s[-1] - s[-3]
        d1[-1] = (0.0, -1.0)
        d2[-1, 0] = _even_second_derivative(u1, u2, nodes[-2, 0] - nodes[-1, 0],
                                            nodes[-3, 0] - nodes[-1, 0])
        d2[-1, 1] = 0.0

    # -- convenience views --------------------------------------------------

    @property
    def kappa_max(self):
        return self.kappa.max(axis=1)

    @property
    def kappa_min(self):
        return self.kappa.min(axis=1)

    def positions3d(self):
        """Sample positions in the ambient space (curve: R^2, axisym: R^3 at phi=0)."""
        if self.backend == CURVE:
            return self.nodes.copy()
        x, r = self.nodes[:, 0], self.nodes[:, 1]
        return np.column_stack((x, r, np.zeros_like(x)))

    def normals3d(self):
        if self.backend == CURVE:
            return self.normals.copy()
        nx, nr = self.normals[:, 0], self.normals[:, 1]
        return np.column_stack((nx, nr, np.zeros_like(nx)))

    def ring_points(self, M):
        """Axisymmetric sample grid (N, M, 3) over M uniform rotation angles."""
        if self.backend != AXISYM:
            raise ValueError("ring_points only applies to the axisym backend")
        phi = 2.0 * np.pi * np.arange(M) / M
        x, r = self.nodes[:, 0], self.nodes[:, 1]
        pts = np.empty((self.N, M, 3))
        pts[:, :, 0] = x[:, None]
        pts[:, :, 1] = r[:, None] * np.cos(phi)[None, :]
        pts[:, :, 2] = r[:, None] * np.sin(phi)[None, :]
        return pts

    def replace_nodes(self, nodes, orient=False, validate=True):
        return DiscreteHypersurface(nodes, self.backend, self.topology,
                                    orient=orient, validate=validate)


def plane_curve(points, orient=True, check_simple=True):
    h = DiscreteHypersurface(points, CURVE, orient=orient)
    if check_simple and self_intersection_check(h):
        raise ValueError("plane curve polyline is not simple")
    return h


def axisym_profile(profile, topology, orient=True, check_simple=True):
    h = DiscreteHypersurface(profile, AXISYM, topology, orient=orient)
    if check_simple and self_intersection_check(h):
        raise ValueError("profile polyline is not simple")
    return h


def curve_geometry(h):
    """Per-sample geometry rows (position, normal, kappa, weight) for a curve."""
    return [
        {"position": h.nodes[i], "outward_normal": h.normals[i],
         "kappa": h.kappa[i], "weight": h.weights[i]}
        for i in range(h.N)
    ]


axisym_geometry = curve_geometry


# -- resampling -------------------------------------------------------------

def _fit_spline(h):
    nodes = h.nodes
    if h.closed:
        pts = np.vstack((nodes, nodes[:1]))
        t = np.concatenate(([0.0], np.cumsum(np.linalg.norm(np.diff(pts, axis=0), axis=1))))
        return CubicSpline(t, pts, axis=0, bc_type="periodic"), t
    t = np.concatenate(([0.0], np.cumsum(np.linalg.norm(np.diff(nodes, axis=0), axis=1))))
    bc = ((1, np.array([0.0, 1.0])), (1, np.array([0.0, -1.0])))
    return CubicSpline(t, nodes, axis=0, bc_type=bc), t


def resample_arclength(h, subdiv=24, max_iter=6):
    """Redistribute nodes to uniform arclength of the interpolating cubic.

    Iterated to a fixed point: equidistributing against the spline through
    the previous nodes changes the spline slightly, so a single pass lands
    near but not at uniform spacing for its own interpolant.
    """
    out = h
    tol = 1e-12 * h.diameter
    for _ in range(max_iter):
        spline, t = _fit_spline(out)
        tf = np.linspace(0.0, t[-1], subdiv * (len(t) - 1) + 1)
        speed = np.linalg.norm(spline(tf, 1), axis=1)
        s_fine = cumulative_trapezoid(speed, tf, initial=0.0)
        length = s_fine[-1]
        if h.closed:
            s_targets = length * np.arange(h.N) / h.N
        else:
            s_targets = np.linspace(0.0, length, h.N)
        t_targets = np.interp(s_targets, s_fine, tf)
        new_nodes = spline(t_targets)
        if h.topology == TOPO_SPHERE:
            new_nodes[0] = out.nodes[0]
            new_nodes[-1] = out.nodes[-1]
            new_nodes[0, 1] = 0.0
            new_nodes[-1, 1] = 0.0
        moved = float(np.abs(new_nodes - out.nodes).max())
        out = out.replace_nodes(new_nodes)
        if moved <= tol:
            break
    return out


# -- self-intersection ------------------------------------------------------

def self_intersection_check(h):
    """True iff two non-adjacent segments of the generating polyline intersect."""
    nodes = h.nodes
    N = nodes.shape[0]
    if h.closed:
        a = nodes
        b = np.roll(nodes, -1, axis=0)
        nseg = N
    else:
        a = nodes[:-1]
        b = nodes[1:]
        nseg = N - 1

    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    i_idx, j_idx = np.triu_indices(nseg, k=2)
    if h.closed:
        keep = ~((i_idx == 0) & (j_idx == nseg - 1))
        i_idx, j_idx = i_idx[keep], j_idx[keep]
    # Bounding-box prefilter.
    overlap = np.all((lo[i_idx] <= hi[j_idx]) & (lo[j_idx] <= hi[i_idx]), axis=1)
    i_idx, j_idx = i_idx[overlap], j_idx[overlap]
    if i_idx.size == 0:
        return False

    p1, p2 = a[i_idx], b[i_idx]
    p3, p4 = a[j_idx], b[j_idx]
    d1 = _cross2(p4 - p3, p1 - p3)
    d2 = _cross2(p4 - p3, p2 - p3)
    d3 = _cross2(p2 - p1, p3 - p1)
    d4 = _cross2(p2 - p1, p4 - p1)
    proper = (d1 * d2 < 0) & (d3 * d4 < 0)
    if np.any(proper):
        return True
    # Degenerate contact: an endpoint lying exactly on the other segment.
    touch = ((d1 == 0) | (d2 == 0) | (d3 == 0) | (d4 == 0))
    if np.any(touch & (d1 * d2 <= 0) & (d3 * d4 <= 0)):
        return True
    return False


# -- generators -------------------------------------------------------------

def make_circle(radius=1.0, N=256, center=(0.0, 0.0), phases=None):
    theta = 2.0 * np.pi * np.arange(N) / N if phases is None else np.asarray(phases, float)
    pts = np.column_stack((center[0] + radius * np.cos(theta),
                           center[1] + radius * np.sin(theta)))
    return plane_curve(pts, check_simple=False)


def make_ellipse(a=2.0, b=1.0, N=512, center=(0.0, 0.0)):
    theta = 2.0 * np.pi * np.arange(N) / N
    pts = np.column_stack((center[0] + a * np.cos(theta),
                           center[1] + b * np.sin(theta)))
    return plane_curve(pts, check_simple=False)


def make_sphere(radius=1.0, N=256, cx=0.0):
    s = np.linspace(0.0, np.pi, N)
    prof = np.column_stack((cx + radius * np.cos(s), radius * np.sin(s)))
    return axisym_profile(prof, TOPO_SPHERE, check_simple=False)


def make_ellipsoid(a=1.5, b=1.0, N=256, cx=0.0):
    """Ellipsoid of revolution about the x-axis: semi-axis a along, b across."""
    s = np.linspace(0.0, np.pi, N)
    prof = np.column_stack((cx + a * np.cos(s), b * np.sin(s)))
    return axisym_profile(prof, TOPO_SPHERE, check_simple=False)


def make_torus(R=3.0, a=1.0, N=256):
    phi = 2.0 * np.pi * np.arange(N) / N
    prof = np.column_stack((a * np.sin(phi), R + a * np.cos(phi)))
    return axisym_profile(prof, TOPO_TORUS, check_simple=False)


def make_dumbbell(R=1.0, rho=0.4, neck=1.2, N=256):
    """Two spheres of radius R centered at +-neck, bridged by a cosine neck.

    The neck interpolates between radius rho*R on the axis midplane and the
    sphere equators at x = +-neck, where both value and slope match.
    """
    if not (0.0 < rho < 1.0):
        raise ValueError("rho must lie in (0, 1)")
    c = float(neck)
    X = c + R
    psi = np.linspace(0.0, np.pi, max(4 * N, 1024))
    x = X * np.cos(psi)
    ax = np.abs(x)
    r = np.empty_like(x)
    cap = ax >= c
    r[cap] = np.sqrt(np.maximum(R * R - (ax[cap] - c) ** 2, 0.0))
    mid = ~cap
    blend = 0.5 * (1.0 - np.cos(np.pi * ax[mid] / c))
    r[mid] = rho * R + (R - rho * R) * blend
    prof = np.column_stack((x, r))
    h = DiscreteHypersurface(prof, AXISYM, TOPO_SPHERE, orient=True)
    fine = resample_arclength(h)
    idx = np.linspace(0, fine.N - 1, N).round().astype(int)
    out = axisym_profile(fine.nodes[idx], TOPO_SPHERE, check_simple=False)
    return resample_arclength(out)


GENERATORS = {
    "circle": make_circle,
    "ellipse": make_ellipse,
    "sphere": make_sphere,
    "ellipsoid": make_ellipsoid,
    "torus": make_torus,
    "dumbbell": make_dumbbell,
}


# -- file IO ----------------------------------------------------------------

def _sidecar_path(csv_path):
    base, _ = os.path.splitext(csv_path)
    return base + ".json"


def save_geometry(h, csv_path):
    header = "x,y" if h.backend == CURVE else "x,r"
    with open(csv_path, "w", newline="") as f:
        f.write(header + "\n")
        for row in h.nodes:
            f.write(f"{row[0]:.17g},{row[1]:.17g}\n")
    meta = {"backend": h.backend}
    if h.backend == AXISYM:
        meta["topology"] = h.topology
    with open(_sidecar_path(csv_path), "w") as f:
        json.dump(meta, f)
        f.write("\n")


def load_geometry(csv_path):
    nodes = np.loadtxt(csv_path, delimiter=",", skiprows=1)
    with open(_sidecar_path(csv_path)) as f:
        meta = json.load(f)
    backend = meta["backend"]
    if backend == CURVE:
        return plane_curve(nodes)
    return axisym_profile(nodes, meta["topology"])
