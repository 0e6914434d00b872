"""Render campaign figures: RMSE band, RMSE ECDF, and trajectory snapshots.

All statistics come straight from the metrics file.  The only computed
quantity is the snapshot's information heatmap, which re-evaluates the
range-model log-determinant from the trace's radar positions (cross-checked
against the simulator's ``--probe`` output in the acceptance tests).
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .inputs import InputError, load_metrics, load_trace

KINDS = ("rmse_band", "ecdf", "snapshot")

RADAR_CLEARANCE_M = 10.0
TARGET_CLEARANCE_M = 125.0


@dataclass(frozen=True)
class FigureSpec:
    input_dir: str
    kind: str
    step: int = 0
    trial: int = 0
    mesh_size: int = 60

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InputError(f"unknown figure kind {self.kind!r}")
        if self.mesh_size < 2:
            raise InputError("mesh_size must be ≥ 2")


def logdet_information(radars_xyz: np.ndarray, probe_xyz: np.ndarray,
                       gamma: float) -> float:
    """Log det of the summed per-radar information about a probe position.

    Per radar: (p - r)(p - r)^T * (4 / (g d^6) + 8 / d^4); a trace-scaled
    diagonal jitter (1e-9 * (1 + tr/3)) keeps degenerate geometries finite.
    """
    delta = probe_xyz[None, :] - radars_xyz
    d2 = np.sum(delta * delta, axis=1)
    coef = 4.0 / (gamma * d2**3) + 8.0 / d2**2
    info = (coef[:, None, None] * delta[:, :, None]
            * delta[:, None, :]).sum(axis=0)
    info += 1e-9 * (1.0 + np.trace(info) / 3.0) * np.eye(3)
    sign, logdet = np.linalg.slogdet(info)
    return float(logdet) if sign > 0 else -1e12


def logdet_grid(radars_xyz: np.ndarray, xs: np.ndarray, ys: np.ndarray,
                z: float, gamma: float) -> np.ndarray:
    grid = np.empty((ys.size, xs.size))
    for i, y in enumerate(ys):
        for j, x in enumerate(xs):
            grid[i, j] = logdet_information(
                radars_xyz, np.array([x, y, z]), gamma)
    return grid


def _render_rmse_band(metrics: dict, ax) -> None:
    steps = np.arange(len(metrics["rmse_mean"]))
    ax.plot(steps, metrics["rmse_mean"], color="tab:blue", label="mean RMSE")
    ax.fill_between(steps, metrics["hdi_lo"], metrics["hdi_hi"],
                    color="tab:blue", alpha=0.25,
                    label=metrics.get("hdi_method", "band"))
    ax.set_xlabel("time step")
    ax.set_ylabel("RMSE")
    ax.set_title(f"{metrics['controller']}/{metrics['measurement_model']} "
                 f"({metrics['trials']} trials)")
    ax.legend()


def _render_ecdf(metrics: dict, ax) -> None:
    ax.step(metrics["ecdf_values"], metrics["ecdf_fractions"], where="post",
            color="tab:orange")
    ax.set_xlabel("RMSE")
    ax.set_ylabel("cumulative fraction")
    ax.set_ylim(0.0, 1.05)
    ax.set_title("RMSE ECDF over trials and steps")


def snapshot_geometry(spec: FigureSpec, metrics: dict):
    """Radar/target positions plus the heatmap mesh for one trace step."""
    sc = metrics["config"]["scenario"]
    trace = load_trace(spec.input_dir, spec.trial)
    if not 0 <= spec.step < trace.num_steps:
        raise InputError(f"snapshot step {spec.step} outside trace "
                         f"[0, {trace.num_steps})")
    radars = trace.positions("radar", sc["num_radars"], spec.step)
    truths = trace.positions("true_t", sc["num_targets"], spec.step)
    ests = trace.positions("est_t", sc["num_targets"], spec.step)

    pts = np.vstack([radars[:, :2], truths[:, :2]])
    lo = pts.min(axis=0) - 200.0
    hi = pts.max(axis=0) + 200.0
    xs = np.linspace(lo[0], hi[0], spec.mesh_size)
    ys = np.linspace(lo[1], hi[1], spec.mesh_size)
    probe_z = float(truths[:, 2].mean())
    grid = logdet_grid(radars, xs, ys, probe_z,
                       metrics["derived"]["gamma"])
    return radars, truths, ests, xs, ys, probe_z, grid


def _render_snapshot(spec: FigureSpec, metrics: dict, ax) -> None:
    radars, truths, ests, xs, ys, _, grid = snapshot_geometry(spec, metrics)
    mesh = ax.pcolormesh(xs, ys, grid, shading="nearest", cmap="viridis")
    plt.colorbar(mesh, ax=ax, label="log det information")
    ax.scatter(radars[:, 0], radars[:, 1], marker="^", s=70, color="red",
               label="radar", zorder=5)
    ax.scatter(truths[:, 0], truths[:, 1], marker="o", s=50, color="lime",
               label="target", zorder=5)
    ax.scatter(ests[:, 0], ests[:, 1], marker="x", s=50, color="white",
               label="estimate", zorder=5)
    for x, y in radars[:, :2]:
        ax.add_patch(plt.Circle((x, y), RADAR_CLEARANCE_M, fill=False,
                                linestyle="--", color="red"))
    for x, y in truths[:, :2]:
        ax.add_patch(plt.Circle((x, y), TARGET_CLEARANCE_M, fill=False,
                                linestyle="--", color="green"))
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_aspect("equal")
    ax.set_title(f"trial {spec.trial}, step {spec.step}")
    ax.legend(loc="upper right")


def render(spec: FigureSpec, out_path) -> Path:
    """Render one figure to ``out_path``; no file is written on error."""
    metrics = load_metrics(spec.input_dir)
    fig, ax = plt.subplots(figsize=(7.0, 5.5), dpi=110)
    try:
        if spec.kind == "rmse_band":
            _render_rmse_band(metrics, ax)
        elif spec.kind == "ecdf":
            _render_ecdf(metrics, ax)
        else:
            _render_snapshot(spec, metrics, ax)
        fig.tight_layout()
        fig.savefig(out_path, metadata={"Software": "radarfigs"})
    finally:
        plt.close(fig)
    return Path(out_path)
