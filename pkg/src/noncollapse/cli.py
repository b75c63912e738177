"""Command-line harness: reproducible experiment drivers and artifact output.

Exit codes: 0 success, 2 parse error, 3 validation error, 4 a theorem-verdict
tolerance was violated, 5 flow failure, 6 I/O error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import analyzer, containment, flow, linearized, plots, speeds
from .config import build_geometry, parse_config
from .errors import (ConfigParseError, ConfigValidationError, InitialContact,
                     NoncollapseError, SpeedParseError)
from .reporting import write_series, write_summary

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_VERDICT = 4
EXIT_FLOW = 5
EXIT_IO = 6


def _flow_config(cfg):
    f = cfg.flow
    return flow.FlowConfig(
        speed=cfg.speed_function(),
        t_end=float(f["t_end"]),
        dt_safety=float(f["dt_safety"]),
        resample_every=int(f["resample_every"]),
        kappa_cap=None if f["kappa_cap"] is None else float(f["kappa_cap"]),
        snapshot_every=int(f["snapshot_every"]),
        max_steps=None if f["max_steps"] is None else int(f["max_steps"]),
    )


def _snapshot_outputs(traj, F, out_dir):
    from .geometry import save_geometry

    rows = []
    for k, snap in enumerate(traj.snapshots):
        name = f"snap_{k}.csv"
        save_geometry(snap.surface, os.path.join(out_dir, name))
        fvals = F.value(snap.surface.kappa)
        rows.append((snap.t, name, float(fvals.min()), float(fvals.max()),
                     float(np.max(np.abs(snap.surface.kappa)))))
    write_series(os.path.join(out_dir, "index.csv"),
                 ["t", "file", "min_F", "max_F", "max_kappa"], rows)


def cmd_check_speeds(cfg):
    tokens = [cfg.speed] if cfg.speed else list(speeds.BUILTIN_TOKENS)
    rng = np.random.default_rng(cfg.seed)
    rows = []
    ok = True
    for token in tokens:
        F = speeds.parse_speed(token)
        sweep = rng.uniform(0.1, 10.0, size=(1000, 2))
        fvals = F.value(sweep)
        grads = F.gradient(sweep)
        hom = 0.0
        for lam in (0.5, 2.0, 7.0):
            hom = max(hom, float(np.max(
                np.abs(F.value(lam * sweep) - lam * fvals) / fvals)))
        euler = float(np.max(
            np.abs(np.einsum("ij,ij->i", grads, sweep) - fvals) / fvals))
        min_grad = float(grads.min())
        # Central finite differences as the gradient oracle.
        fd_rel = 0.0
        probe = sweep[:100]
        for axis in range(2):
            hstep = 1e-5 * np.linalg.norm(probe, axis=1)
            e = np.zeros_like(probe)
            e[:, axis] = hstep
            fd = (F.value(probe + e) - F.value(probe - e)) / (2 * hstep)
            fd_rel = max(fd_rel, float(np.max(
                np.abs(fd - F.gradient(probe)[:, axis]) / np.abs(fd))))
        pairs = rng.uniform(0.1, 10.0, size=(1000, 2, 2))
        support = np.array([
            speeds.support_inequality_residual(F, a, b) for a, b in pairs])
        convexity = speeds.classify_convexity(F, samples=200, seed=cfg.seed)
        rows.append((token, hom, euler, min_grad, fd_rel,
                     float(support.min()), float(support.max()), convexity))
        token_ok = hom <= 1e-10 and euler <= 1e-10 and min_grad > 0 and fd_rel <= 1e-6
        if convexity in (speeds.CONCAVE, speeds.BOTH):
            token_ok &= support.min() >= -1e-10
        if convexity in (speeds.CONVEX, speeds.BOTH):
            token_ok &= support.max() <= 1e-10
        ok &= bool(token_ok)
    write_series(os.path.join(cfg.output_dir, "speeds.csv"),
                 ["speed", "max_hom_rel", "max_euler_rel", "min_gradient",
                  "max_grad_fd_rel", "support_min", "support_max", "convexity"],
                 rows)
    return ok, {"speeds": [r[0] for r in rows], "certificates_ok": ok}


def cmd_run_flow(cfg):
    F = cfg.speed_function()
    h0 = build_geometry(cfg.geometry)
    traj = flow.run(h0, _flow_config(cfg))
    _snapshot_outputs(traj, F, cfg.output_dir)
    if cfg.plots:
        plots.plot_flow_snapshots(traj, os.path.join(cfg.output_dir, "flow.png"))
    final = traj.snapshots[-1]
    h = final.surface
    if h.backend == "axisym":
        cx = 0.5 * (h.nodes[:, 0].max() + h.nodes[:, 0].min())
        radii = np.hypot(h.nodes[:, 0] - cx, h.nodes[:, 1])
    else:
        radii = np.linalg.norm(h.nodes - h.nodes.mean(axis=0), axis=1)
    summary = {
        "termination": traj.termination,
        "t_final": final.t,
        "snapshots": len(traj.snapshots),
        "mean_radius_final": float(radii.mean()),
    }
    return traj.termination == flow.REACHED_T_END, summary, EXIT_FLOW


def cmd_analyze_noncollapse(cfg):
    F = cfg.speed_function()
    h0 = build_geometry(cfg.geometry)
    traj = flow.run(h0, _flow_config(cfg))
    if traj.termination != flow.REACHED_T_END:
        return False, {"termination": traj.termination}, EXIT_FLOW
    ana = cfg.analyzer
    M = ana["M"] and int(ana["M"])
    series = analyzer.ratio_series(traj, F, float(ana["exclusion_radius_factor"]), M)
    out_rows = []
    prev = None
    for row in series.rows:
        dsup = 0.0 if prev is None else row[1] - prev[1]
        dinf = 0.0 if prev is None else prev[2] - row[2]
        out_rows.append(row + (dsup, dinf))
        prev = row
    write_series(os.path.join(cfg.output_dir, "series.csv"),
                 ["t", "sup_ratio", "inf_ratio", "min_F", "max_F",
                  "defect_sup", "defect_inf"], out_rows)
    for k, snap in enumerate(traj.snapshots):
        h = snap.surface
        fld = analyzer.sphere_curvature_field(
            h, float(ana["exclusion_radius_factor"]), M)
        fvals = F.value(h.kappa)
        rows = [(i, fld.Zbar[i], fld.Zlow[i], h.kappa_max[i], h.kappa_min[i],
                 fvals[i], int(fld.witness_bar[i]), int(fld.witness_low[i]))
                for i in range(h.N)]
        write_series(os.path.join(cfg.output_dir, f"field_{k}.csv"),
                     ["i", "Zbar", "Zlow", "kappa_max", "kappa_min", "F",
                      "witness_bar", "witness_low"], rows)
    if cfg.plots:
        plots.plot_ratio_series(series.rows,
                                os.path.join(cfg.output_dir, "series.png"))
    tol = float(ana["defect_tol_rel"])
    convexity = speeds.classify_convexity(F, samples=200, seed=cfg.seed)
    ok = True
    verdicts = {"convexity": convexity,
                "defect_sup": series.defect_sup,
                "defect_inf": series.defect_inf}
    if convexity in (speeds.CONCAVE, speeds.BOTH):
        bound = tol * abs(series.rows[0][1])
        verdicts["sup_bound"] = bound
        ok &= series.defect_sup <= bound
    if convexity in (speeds.CONVEX, speeds.BOTH):
        bound = tol * abs(series.rows[0][2])
        verdicts["inf_bound"] = bound
        ok &= series.defect_inf <= bound
    return ok, {"termination": traj.termination, "verdicts": verdicts}, EXIT_VERDICT


def cmd_run_containment(cfg):
    A0 = build_geometry(cfg.geometry)
    B0 = build_geometry(cfg.geometry2)
    traj, series = containment.run_pair(A0, B0, _flow_config(cfg), cfg.case)
    out_rows = []
    prev = None
    for t, d, wa, wb in series.rows:
        defect = 0.0 if prev is None else max(prev - d, 0.0)
        out_rows.append((t, d, wa[0], wa[1], wb[0], wb[1], defect))
        prev = d
    write_series(os.path.join(cfg.output_dir, "distance.csv"),
                 ["t", "d_min", "ax", "ar_or_y", "bx", "br_or_y", "defect"],
                 out_rows)
    if cfg.plots:
        plots.plot_distance_series(series.rows,
                                   os.path.join(cfg.output_dir, "distance.png"))
    if traj.termination != flow.REACHED_T_END:
        return False, {"termination": traj.termination}, EXIT_FLOW
    d0 = series.rows[0][1]
    bound = float(cfg.analyzer["defect_tol_rel"]) * d0
    ok = series.defect <= bound
    return ok, {"termination": traj.termination,
                "verdicts": {"defect": series.defect, "bound": bound}}, EXIT_VERDICT


def cmd_verify_linearized(cfg):
    F = cfg.speed_function()
    lin = cfg.linearized
    reports = []
    rows = []
    ok = True
    for label in lin["labels"]:
        rep = linearized.convergence_order(
            lambda N: build_geometry(cfg.geometry, N=N), F, label,
            [int(n) for n in lin["resolutions"]], steps=int(lin["steps"]),
            dt_safety=float(cfg.flow["dt_safety"]))
        reports.append(rep)
        for N, dt, res in rep.rows:
            rows.append((N, dt, res, label, F.name))
        print(f"{rep.label},{rep.speed_name},{rep.order:.6g},{rep.fit_residual:.6g}")
        ok &= rep.order >= float(lin["min_order"])
    write_series(os.path.join(cfg.output_dir, "report.csv"),
                 ["N", "dt", "residual", "label", "speed"], rows)
    if cfg.plots:
        plots.plot_residual_reports(reports,
                                    os.path.join(cfg.output_dir, "residuals.png"))
    verdicts = {rep.label: {"order": rep.order, "fit_residual": rep.fit_residual}
                for rep in reports}
    return ok, {"verdicts": verdicts}, EXIT_VERDICT


def run_command(cfg):
    """Dispatch a validated config; returns the process exit code."""
    os.makedirs(cfg.output_dir, exist_ok=True)
    start = time.monotonic()
    fail_code = EXIT_VERDICT
    if cfg.command == "check-speeds":
        ok, summary = cmd_check_speeds(cfg)
    elif cfg.command == "run-flow":
        ok, summary, fail_code = cmd_run_flow(cfg)
    elif cfg.command == "analyze-noncollapse":
        ok, summary, fail_code = cmd_analyze_noncollapse(cfg)
    elif cfg.command == "run-containment":
        ok, summary, fail_code = cmd_run_containment(cfg)
    elif cfg.command == "verify-linearized":
        ok, summary, fail_code = cmd_verify_linearized(cfg)
    else:  # pragma: no cover - guarded by validation
        raise ConfigValidationError(f"unknown command {cfg.command!r}")
    summary["command"] = cfg.command
    summary["seed"] = cfg.seed
    summary["ok"] = bool(ok)
    summary["wall_clock_seconds"] = time.monotonic() - start
    write_summary(os.path.join(cfg.output_dir, "summary.json"), summary)
    return EXIT_OK if ok else fail_code


def _parse_override_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _collect_overrides(extra):
    """Turn leftover ["--a.b", "1", "--c.d=x"] tokens into a dotted-path dict."""
    overrides = {}
    i = 0
    while i < len(extra):
        tok = extra[i]
        if not tok.startswith("--"):
            raise ConfigParseError(f"unexpected argument {tok!r}")
        body = tok[2:]
        if "=" in body:
            key, val = body.split("=", 1)
            i += 1
        else:
            key = body
            if i + 1 >= len(extra):
                raise ConfigParseError(f"flag --{key} needs a value")
            val = extra[i + 1]
            i += 2
        overrides[key] = _parse_override_value(val)
    return overrides


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="noncollapse",
        description="Curvature-flow laboratory: evolve hypersurfaces and "
                    "verify non-collapsing, containment, and linearized-flow "
                    "identities.")
    parser.add_argument("command", nargs="?", default=None,
                        help="run-flow | analyze-noncollapse | run-containment "
                             "| verify-linearized | check-speeds")
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--output-dir", dest="output_dir")
    parser.add_argument("--speed")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--threads", type=int,
                        default=_env_threads())
    parser.add_argument("--no-plots", action="store_true")
    args, extra = parser.parse_known_args(argv)

    try:
        overrides = _collect_overrides(extra)
        flag_doc = {}
        if args.command:
            flag_doc["command"] = args.command
        if args.output_dir:
            flag_doc["output_dir"] = args.output_dir
        if args.speed:
            flag_doc["speed"] = args.speed
        if args.seed is not None:
            flag_doc["seed"] = args.seed
        if args.threads is not None:
            flag_doc["threads"] = args.threads
        if args.no_plots:
            flag_doc["plots"] = False
        cfg = parse_config(args.config, overrides, flag_doc)
    except (ConfigParseError, SpeedParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ConfigValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    try:
        return run_command(cfg)
    except InitialContact as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FLOW
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except NoncollapseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FLOW


def _env_threads():
    val = os.environ.get("NONCOLLAPSE_THREADS")
    return int(val) if val else None


if __name__ == "__main__":
    sys.exit(main())
