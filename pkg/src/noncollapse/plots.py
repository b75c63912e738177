"""Figure rendering for the report path; every figure lands next to its CSV."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def plot_flow_snapshots(traj, path):
    fig, ax = plt.subplots(figsize=(6, 6))
    n = len(traj.snapshots)
    for k, snap in enumerate(traj.snapshots):
        nodes = snap.surface.nodes
        closed = snap.surface.closed
        xs = list(nodes[:, 0]) + ([nodes[0, 0]] if closed else [])
        ys = list(nodes[:, 1]) + ([nodes[0, 1]] if closed else [])
        ax.plot(xs, ys, lw=1.0, color=plt.cm.viridis(k / max(n - 1, 1)),
                label=f"t={snap.t:.4g}" if k in (0, n - 1) else None)
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("y" if traj.snapshots[0].surface.backend == "curve" else "r")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_ratio_series(rows, path):
    fig, ax = plt.subplots(figsize=(7, 4))
    t = [r[0] for r in rows]
    ax.plot(t, [r[1] for r in rows], "o-", ms=3, label="sup Zbar/F")
    ax.plot(t, [r[2] for r in rows], "s-", ms=3, label="inf Zlow/F")
    ax.set_xlabel("t")
    ax.set_ylabel("ratio")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_distance_series(rows, path):
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot([r[0] for r in rows], [r[1] for r in rows], "o-", ms=3)
    ax.set_xlabel("t")
    ax.set_ylabel("min distance")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_residual_reports(reports, path):
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for rep in reports:
        ns = [r[0] for r in rep.rows]
        res = [r[2] for r in rep.rows]
        ax.loglog(ns, res, "o-", label=f"{rep.label} (p={rep.order:.2f})")
    ax.set_xlabel("N")
    ax.set_ylabel("residual")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
