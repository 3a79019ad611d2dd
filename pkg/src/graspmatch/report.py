"""Benchmark harness, figure rendering, and colored marker export."""

import io
import time
from dataclasses import dataclass

import numpy as np
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .cloud import Aabb, OrientedCloud
from .correlate import CorrelationPlan
from .models import lateral_model
from .orientation import EulerRotation
from .scenes import SceneObject, SceneSpec, gen_scene
from .voxel import build_object_grid, default_gripper_dims, rasterize_gripper

DEFAULT_BENCH_RES_M = (0.0025, 0.005, 0.010, 0.015, 0.020, 0.025, 0.030)
BENCH_BOX_DIMS = (0.5, 0.6, 0.3)

MARKER_COLORS = {
    "lateral": (255, 0, 255),
    "tripodal": (255, 255, 0),
    "power": (255, 0, 0),
}
FALLBACK_COLOR = (128, 128, 128)
MARKER_LENGTH = 0.05
MARKER_POINTS = 6


@dataclass
class BenchRow:
    res_m: float
    object_voxels: int
    padded_voxels: int
    fft_s: float


def run_correlation_bench(res_list=DEFAULT_BENCH_RES_M, repeats: int = 3,
                          box_dims=BENCH_BOX_DIMS, model=None) -> list:
    """Time the per-orientation correlation step on a box-surface grid.

    The object transform is cached once per scene in real use, so only the
    steady-state cost (gripper FFT, product, inverse) is measured; one
    warmup call absorbs library planning overhead.
    """
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    if model is None:
        model = lateral_model()
    dims = np.asarray(box_dims, dtype=float)
    cloud = gen_scene(SceneSpec([SceneObject("box", tuple(dims), tuple(dims / 2))], 0.01))
    box = Aabb(np.zeros(3), dims)
    ident = EulerRotation.identity()
    rows = []
    for res in res_list:
        volume = build_object_grid(cloud, box, res)
        plan = CorrelationPlan(volume, default_gripper_dims(res))
        gripper = rasterize_gripper(model, ident, res)
        plan.correlate(gripper)
        times = []
        for _ in range(repeats):
            start = time.perf_counter()
            plan.correlate(gripper)
            times.append(time.perf_counter() - start)
        rows.append(BenchRow(
            res_m=float(res),
            object_voxels=int(np.prod(volume.dims)),
            padded_voxels=int(np.prod(plan.fast_shape)),
            fft_s=float(np.mean(times)),
        ))
    return rows


def bench_rows_csv(rows) -> str:
    out = io.StringIO()
    out.write("res_cm,object_voxels,padded_voxels,fft_mean_s\n")
    for r in rows:
        out.write(f"{r.res_m * 100:g},{r.object_voxels},{r.padded_voxels},{r.fft_s:.6f}\n")
    return out.getvalue()


def fit_loglog_slope(volumes, times, min_volume: float = 1e4) -> float:
    """Least-squares slope of log(time) against log(voxels).

    Grids below min_volume are overhead-dominated and excluded from
    the fit.
    """
    v = np.asarray(volumes, dtype=float)
    t = np.asarray(times, dtype=float)
    keep = v >= min_volume
    if np.count_nonzero(keep) < 2:
        raise ValueError("need at least 2 rows above min_volume to fit a slope")
    return float(np.polyfit(np.log(v[keep]), np.log(t[keep]), 1)[0])


def render_bench_figure(rows, path) -> None:
    vols = [r.padded_voxels for r in rows]
    times = [r.fft_s for r in rows]
    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.loglog(vols, times, "o-", label="measured")
    try:
        slope = fit_loglog_slope(vols, times)
        ax.set_title(f"correlation time vs voxels (log-log slope {slope:.2f})")
    except ValueError:
        ax.set_title("correlation time vs voxels")
    ax.set_xlabel("padded voxel count")
    ax.set_ylabel("time per correlation [s]")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def _pose_color(grasp_type: str):
    return MARKER_COLORS.get(grasp_type, FALLBACK_COLOR)


def render_pose_figure(cloud: OrientedCloud, result, path, max_points: int = 20000) -> None:
    """3D scatter of the cloud with per-type colored approach arrows."""
    pts = cloud.points
    if len(pts) > max_points:
        step = int(np.ceil(len(pts) / max_points))
        pts = pts[::step]
    fig = plt.figure(figsize=(7, 6))
    ax = fig.add_subplot(projection="3d")
    if len(pts):
        ax.scatter(pts[:, 0], pts[:, 1], pts[:, 2], s=2, c="0.6", alpha=0.5)
    z_axis = np.array([0.0, 0.0, 1.0])
    for name, poses in result.poses.items():
        if not poses:
            continue
        origins = np.array([p.position for p in poses])
        approaches = np.array([p.rotation.apply(z_axis) for p in poses])
        color = np.array(_pose_color(name)) / 255.0
        # arrows point along the approach, tail offset back toward the wrist
        tails = origins - approaches * MARKER_LENGTH
        ax.quiver(tails[:, 0], tails[:, 1], tails[:, 2],
                  approaches[:, 0], approaches[:, 1], approaches[:, 2],
                  length=MARKER_LENGTH, color=color, label=name)
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_zlabel("z [m]")
    if any(result.poses.values()):
        ax.legend(loc="upper right")
    ax.set_box_aspect((1, 1, 1))
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def markers_ply(result) -> str:
    """Pose markers as colored PLY points, one short arrow tail per pose."""
    z_axis = np.array([0.0, 0.0, 1.0])
    rows = []
    for name, poses in result.poses.items():
        red, green, blue = _pose_color(name)
        for pose in poses:
            approach = pose.rotation.apply(z_axis)
            for s in np.linspace(0.0, MARKER_LENGTH, MARKER_POINTS):
                p = pose.position - approach * s
                rows.append((p[0], p[1], p[2], red, green, blue))
    out = io.StringIO()
    out.write("ply\nformat ascii 1.0\n")
    out.write(f"element vertex {len(rows)}\n")
    for axis in "xyz":
        out.write(f"property float {axis}\n")
    for channel in ("red", "green", "blue"):
        out.write(f"property uchar {channel}\n")
    out.write("end_header\n")
    for x, y, z, r, g, b in rows:
        out.write(f"{x:.6f} {y:.6f} {z:.6f} {r} {g} {b}\n")
    return out.getvalue()


def save_markers_ply(result, path) -> None:
    with open(path, "w") as fh:
        fh.write(markers_ply(result))
