"""Acceptance suite: one test per verification criterion.

Each test prints a single pass/fail line (bypassing capture) so the overall
verdict is visible in any pytest run. Expensive flow runs are cached at
module scope and shared between criteria.
"""

import os
from contextlib import contextmanager
from functools import lru_cache

import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from noncollapse.analyzer import sphere_curvature_field
from noncollapse.cli import EXIT_OK, main
from noncollapse.containment import DISJOINT, NESTED, run_pair
from noncollapse.flow import REACHED_T_END, FlowConfig, run
from noncollapse.geometry import (make_circle, make_ellipse, make_ellipsoid,
                                  make_sphere, make_torus)
from noncollapse.linearized import (NORMAL, SCALING, SPEED, convergence_order,
                                    flow_time_derivative, interior_mask,
                                    lin_operator, scalar_field)
from noncollapse.speeds import (check_euler_homogeneity, parse_speed,
                                support_inequality_residual)

CONFIG_DIR = os.path.join(os.path.dirname(__file__), os.pardir, "configs")

TOKENS = ("sum", "norm", "pmean:-1")
F11 = {"sum": 2.0, "norm": np.sqrt(2.0), "pmean:-1": 1.0}  # F(1,1) per builtin


_CAPTURE = None


@pytest.fixture(autouse=True)
def _route_criterion_lines(capfd):
    # Criterion verdict lines bypass pytest's output capture.
    global _CAPTURE
    _CAPTURE = capfd
    yield
    _CAPTURE = None


@contextmanager
def criterion(n, name):
    ok = False
    try:
        yield
        ok = True
    finally:
        line = f"\ncriterion {n} ({name}): {'PASS' if ok else 'FAIL'}"
        if _CAPTURE is not None:
            with _CAPTURE.disabled():
                print(line, flush=True)
        else:
            print(line, flush=True)


def mean_radius(h):
    if h.backend == "axisym":
        cx = 0.5 * (h.nodes[:, 0].max() + h.nodes[:, 0].min())
        return float(np.hypot(h.nodes[:, 0] - cx, h.nodes[:, 1]).mean())
    c = h.nodes.mean(axis=0)
    return float(np.linalg.norm(h.nodes - c, axis=1).mean())


@lru_cache(maxsize=None)
def shrink_run(shape, tok, N):
    """Flow a circle or sphere until the exact radius reaches 0.75."""
    F = parse_speed(tok)
    f = 1.0 if shape == "circle" else F11[tok]
    t_end = (1.0 - 0.75 ** 2) / (2.0 * f)
    h0 = make_circle(1.0, N) if shape == "circle" else make_sphere(1.0, N)
    traj = run(h0, FlowConfig(speed=F, t_end=t_end, snapshot_every=10 ** 9))
    assert traj.termination == REACHED_T_END
    return abs(mean_radius(traj.snapshots[-1].surface) - 0.75) / 0.75


@lru_cache(maxsize=None)
def ellipsoid_fields(tok, N):
    """Ellipsoid-of-revolution run with per-snapshot sphere-curvature fields."""
    F = parse_speed(tok)
    cadence = {256: 200, 512: 800}[N]
    traj = run(make_ellipsoid(1.5, 1.0, N),
               FlowConfig(speed=F, t_end=0.05, snapshot_every=cadence))
    assert traj.termination == REACHED_T_END
    fields = []
    sups = []
    infs = []
    for snap in traj.snapshots:
        h = snap.surface
        fld = sphere_curvature_field(h, M=N // 2)
        fvals = F.value(h.kappa)
        fields.append((h, fld, fvals))
        sups.append(float(np.max(fld.Zbar / fvals)))
        infs.append(float(np.min(fld.Zlow / fvals)))
    sups = np.array(sups)
    infs = np.array(infs)
    return {
        "fields": fields,
        "sup0": sups[0], "inf0": infs[0],
        "defect_sup": float(np.max(np.diff(sups))),
        "defect_inf": float(np.max(-np.diff(infs))),
    }


@lru_cache(maxsize=None)
def sphere_ratio_run(tok):
    F = parse_speed(tok)
    traj = run(make_sphere(1.0, 256),
               FlowConfig(speed=F, t_end=0.05, snapshot_every=800))
    assert traj.termination == REACHED_T_END
    fields = []
    for snap in traj.snapshots:
        h = snap.surface
        fld = sphere_curvature_field(h, M=128)
        fields.append((h, fld, F.value(h.kappa)))
    return fields


def axis_body_radii(h):
    """Independent circumradius/inradius search over axis center candidates."""
    x, r = h.nodes[:, 0], h.nodes[:, 1]
    lo, hi = float(x.min()), float(x.max())

    def dmax(c):
        return float(np.hypot(x - c, r).max())

    def dmin(c):
        return float(np.hypot(x - c, r).min())

    circ = minimize_scalar(dmax, bounds=(lo, hi), method="bounded",
                           options={"xatol": 1e-10}).fun
    cand = np.linspace(lo, hi, 2001)
    k = int(np.argmax([dmin(c) for c in cand]))
    a, b = cand[max(0, k - 1)], cand[min(len(cand) - 1, k + 1)]
    inr = -minimize_scalar(lambda c: -dmin(c), bounds=(a, b), method="bounded",
                           options={"xatol": 1e-10}).fun
    return float(circ), float(inr)


def test_criterion_1_exact_solutions():
    with criterion(1, "shrinking circle and sphere laws"):
        for shape in ("circle", "sphere"):
            for tok in TOKENS:
                err = {N: shrink_run(shape, tok, N) for N in (128, 256)}
                assert err[256] <= 5e-3, (shape, tok, err)
                assert err[256] <= err[128] / 3.0 + 1e-12, (shape, tok, err)


def test_criterion_2_speed_certificates():
    with criterion(2, "speed calculus certificates"):
        rng = np.random.default_rng(0)
        sweep = rng.uniform(0.1, 10.0, size=(1000, 2))
        for tok in TOKENS:
            F = parse_speed(tok)
            for kappa in sweep:
                fk = F.value(kappa)
                for lam in (0.5, 2.0, 7.0):
                    hom, euler = check_euler_homogeneity(F, kappa, lam)
                    assert hom <= 1e-10 * fk and euler <= 1e-10 * fk
            assert np.all(F.gradient(sweep) > 0)
        pairs = rng.uniform(0.1, 10.0, size=(1000, 2, 2))
        for tok in ("sum", "pmean:-1"):  # concave side
            F = parse_speed(tok)
            res = [support_inequality_residual(F, a, b) for a, b in pairs]
            assert min(res) >= -1e-10, tok
        for tok in ("sum", "norm"):  # convex side
            F = parse_speed(tok)
            res = [support_inequality_residual(F, a, b) for a, b in pairs]
            assert max(res) <= 1e-10, tok


def test_criterion_3_ratio_monotonicity():
    with criterion(3, "sup/inf ratio monotonicity on the ellipsoid"):
        for tok in ("pmean:-1", "sum"):  # concave speeds: sup ratio
            d256 = ellipsoid_fields(tok, 256)
            d512 = ellipsoid_fields(tok, 512)
            tol = 1e-3 * abs(d256["sup0"])
            assert d256["defect_sup"] <= tol, tok
            assert d512["defect_sup"] <= tol / 2.0, tok
            v256 = max(d256["defect_sup"], 0.0)
            v512 = max(d512["defect_sup"], 0.0)
            assert v512 <= v256 / 2.0 + 1e-15, tok
        for tok in ("norm", "sum"):  # convex speeds: inf ratio
            d256 = ellipsoid_fields(tok, 256)
            d512 = ellipsoid_fields(tok, 512)
            tol = 1e-3 * abs(d256["inf0"])
            assert d256["defect_inf"] <= tol, tok
            assert d512["defect_inf"] <= tol / 2.0, tok
            v256 = max(d256["defect_inf"], 0.0)
            v512 = max(d512["defect_inf"], 0.0)
            assert v512 <= v256 / 2.0 + 1e-15, tok


def test_criterion_4_sphere_ratio_exactness():
    with criterion(4, "sphere ratios constant at 1/F(1,1)"):
        for tok in TOKENS:
            target = 1.0 / F11[tok]
            for h, fld, fvals in sphere_ratio_run(tok):
                sup = float(np.max(fld.Zbar / fvals))
                inf = float(np.min(fld.Zlow / fvals))
                assert abs(sup - target) <= 1e-4, tok
                assert abs(inf - target) <= 1e-4, tok


def test_criterion_5_containment():
    with criterion(5, "pairwise minimal distance monotone and exact"):
        cases = [
            # (inner/near sphere, outer/far sphere, case, token)
            (make_sphere(1.0, 256), make_sphere(3.0, 256), NESTED, "sum"),
            (make_sphere(1.0, 256), make_sphere(3.0, 256), NESTED, "pmean:-1"),
            (make_sphere(1.0, 256), make_sphere(1.0, 256, cx=4.0), DISJOINT,
             "sum"),
            (make_sphere(1.0, 256), make_sphere(1.0, 256, cx=4.0), DISJOINT,
             "pmean:-1"),
        ]
        for A, B, case, tok in cases:
            F = parse_speed(tok)
            t_end = 0.15 if (case == DISJOINT and tok == "sum") else 0.2
            cfg = FlowConfig(speed=F, t_end=t_end, snapshot_every=500)
            traj, series = run_pair(A, B, cfg, case)
            assert traj.termination == REACHED_T_END, (case, tok)
            d0 = series.rows[0][1]
            assert series.defect <= 1e-3 * d0, (case, tok, series.defect)
            t_fin, d_fin = series.rows[-1][0], series.rows[-1][1]
            f = F11[tok]
            if case == NESTED:
                exact = np.sqrt(9 - 2 * f * t_fin) - np.sqrt(1 - 2 * f * t_fin)
            else:
                exact = 4.0 - 2.0 * np.sqrt(1 - 2 * f * t_fin)
            assert d_fin == pytest.approx(exact, rel=5e-3), (case, tok)


def test_criterion_6_linearized_solutions():
    with criterion(6, "linearized-flow residual convergence"):
        F = parse_speed("sum")
        bodies = {
            "sphere": lambda N: make_sphere(1.0, N),
            "ellipsoid": lambda N: make_ellipsoid(1.5, 1.0, N),
            "torus": lambda N: make_torus(3.0, 1.0, N),
        }
        for body, make in bodies.items():
            for label in (SPEED, NORMAL, SCALING):
                rep = convergence_order(make, F, label, [64, 128, 256])
                assert rep.order >= 1.0, (body, label, rep.order)
        # Sphere/Speed analytic check: both sides equal F(1,1)^2 / r^3 = 4.
        traj = run(make_sphere(1.0, 256),
                   FlowConfig(speed=F, t_end=1e9, snapshot_every=1,
                              resample_every=10 ** 9, max_steps=2))
        h = traj.snapshots[0].surface
        mask = interior_mask(h)
        dfdt = flow_time_derivative(traj, F, SPEED, 0)
        lf = lin_operator(h, F, scalar_field(h, F, SPEED))
        assert np.abs(dfdt[mask] - 4.0).max() <= 1e-3 * 4.0
        assert np.abs(lf[mask] - 4.0).max() <= 1e-3 * 4.0


def test_criterion_7_structural_invariants():
    with criterion(7, "sphere-curvature field structural bounds"):
        snapshots = []
        for tok in TOKENS:
            snapshots += ellipsoid_fields(tok, 256)["fields"]
            snapshots += sphere_ratio_run(tok)
        for h, fld, _ in snapshots:
            assert np.all(fld.Zbar >= h.kappa_max - 1e-12)
            assert np.all(fld.Zlow <= h.kappa_min + 1e-12)
        ell = make_ellipse(2.0, 1.0, 1024)
        fld = sphere_curvature_field(ell)
        tip = int(np.argmin(np.abs(ell.nodes[:, 0] - 2.0)
                            + np.abs(ell.nodes[:, 1])))
        flat = int(np.argmin(np.abs(ell.nodes[:, 0])
                             + np.abs(ell.nodes[:, 1] - 1.0)))
        assert fld.Zbar[tip] == pytest.approx(2.0, abs=1e-2)
        assert fld.Zbar[flat] == pytest.approx(1.0, abs=1e-2)


def test_criterion_8_circum_inradius():
    with criterion(8, "circumradius bounded via inf Zlow/F"):
        data = ellipsoid_fields("norm", 256)
        ratio_sup = max(float(np.max(fvals / fld.Zlow))
                        for _, fld, fvals in data["fields"])
        for h, _, _ in data["fields"]:
            circ, inr = axis_body_radii(h)
            assert circ <= ratio_sup * inr + 2e-2, (circ, inr, ratio_sup)


def test_criterion_9_determinism(tmp_path):
    with criterion(9, "byte-identical reruns of example configs"):
        for name, files in (
                ("small_determinism.json", ["series.csv", "field_0.csv"]),
                ("check_speeds.json", ["speeds.csv"])):
            cfg = os.path.join(CONFIG_DIR, name)
            outs = []
            for tag in ("a", "b"):
                out = tmp_path / (name + tag)
                code = main(["--config", cfg, "--output-dir", str(out),
                             "--no-plots"])
                assert code == EXIT_OK
                outs.append(out)
            for f in files:
                assert (outs[0] / f).read_bytes() == (outs[1] / f).read_bytes(), f
