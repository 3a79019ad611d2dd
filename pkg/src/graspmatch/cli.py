"""Command-line entry points: plan, bench, scene, inspect."""

import argparse
import os
import sys
import traceback

import numpy as np

from .cloud import (
    bounding_box,
    downsample,
    estimate_normals,
    load_cloud,
    merge_clouds,
    save_cloud,
)
from .correlate import dump_volume_csv
from .errors import (
    EmptyCloud,
    MalformedHeader,
    MissingNormals,
    ModelFormatError,
    NonFiniteCoordinate,
    NormalCountMismatch,
    SceneFormatError,
    TooFewPoints,
)
from .histogram import build_object_histogram
from .models import BUILTIN_NAMES, builtin_model, load_model
from .orientation import build_rank_histogram
from .planner import PlannerConfig, plan_grasps, save_result
from .report import (
    DEFAULT_BENCH_RES_M,
    bench_rows_csv,
    render_bench_figure,
    render_pose_figure,
    run_correlation_bench,
    save_markers_ply,
)
from .scenes import gen_scene, parse_scene, partial_scan
from .voxel import GRIPPER_GRID_EXTENT, build_object_grid

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_CONFIG = 3
EXIT_INTERNAL = 4

REFERENCE_RES_CM = 1.5
REFERENCE_STEP_DEG = 30.0
REFERENCE_BIN_DEG = 30.0

INPUT_ERRORS = (
    MalformedHeader,
    NonFiniteCoordinate,
    NormalCountMismatch,
    TooFewPoints,
    EmptyCloud,
    MissingNormals,
    ModelFormatError,
    SceneFormatError,
    OSError,
    UnicodeDecodeError,
)


class Parser(argparse.ArgumentParser):
    """Flag mistakes are configuration errors, not input errors."""

    def error(self, message):
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _load_with_normals(path, k: int):
    cloud = load_cloud(path)
    if len(cloud) and not cloud.has_normals:
        cloud = estimate_normals(cloud, k)
    return cloud


def _resolve_models(args):
    models = []
    for name in args.grasp or []:
        models.append(builtin_model(name))
    for path in args.model or []:
        models.append(load_model(path))
    if not models:
        models = [builtin_model(n) for n in BUILTIN_NAMES]
    return models


def cmd_plan(args) -> int:
    if args.reference_defaults:
        args.res_cm = REFERENCE_RES_CM
        args.step_deg = REFERENCE_STEP_DEG
        args.bin_deg = REFERENCE_BIN_DEG
        args.threshold = None
    cfg = PlannerConfig(
        voxel_res=args.res_cm / 100.0,
        bin_size=np.radians(args.bin_deg),
        orientation_step=np.radians(args.step_deg),
        max_candidates_per_orientation=args.max_candidates,
        verification_threshold=args.threshold,
        verify_on_full_cloud=args.full_cloud,
        threads=args.threads,
        time_budget_s=args.time_budget_s,
    )
    cloud = _load_with_normals(args.cloud, args.normal_k)
    models = _resolve_models(args)
    result = plan_grasps(cloud, models, cfg)
    save_result(result, args.out)
    if args.markers:
        save_markers_ply(result, args.markers)
    if args.figure:
        render_pose_figure(cloud, result, args.figure)
    for model in models:
        print(f"{model.name}: {len(result.poses[model.name])} poses")
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_bench(args) -> int:
    res_list = [r / 100.0 for r in args.res_cm]
    if any(r <= 0 for r in res_list):
        raise ValueError("resolutions must be positive")
    rows = run_correlation_bench(res_list, repeats=args.repeats)
    sys.stdout.write(bench_rows_csv(rows))
    if args.figure:
        render_bench_figure(rows, args.figure)
    return EXIT_OK


def cmd_scene(args) -> int:
    if (args.spec is None) == (not args.merge):
        raise ValueError("give a scene spec file or --merge, not both")
    if args.merge:
        cloud = merge_clouds([load_cloud(p) for p in args.merge])
        cloud = downsample(cloud, args.res_cm / 100.0)
    else:
        with open(args.spec) as fh:
            spec = parse_scene(fh.read())
        cloud = gen_scene(spec, seed=args.seed)
        if args.viewpoint is not None:
            cloud = partial_scan(cloud, np.asarray(args.viewpoint))
    save_cloud(cloud, args.out)
    print(f"wrote {args.out} ({len(cloud.points)} points)")
    return EXIT_OK


def cmd_inspect(args) -> int:
    cloud = _load_with_normals(args.cloud, args.normal_k)
    res = args.res_cm / 100.0
    bin_size = np.radians(args.bin_deg)
    work = downsample(cloud, res)
    box = bounding_box(work).inflated(GRIPPER_GRID_EXTENT / 2.0)
    volume = build_object_grid(work, box, res)
    h_o = build_object_histogram(work, bin_size)
    print(f"points: {len(cloud.points)} (downsampled {len(work.points)})")
    full_box = bounding_box(cloud)
    lo, hi = full_box.min, full_box.max
    print(f"bounds: [{lo[0]:.3f} {lo[1]:.3f} {lo[2]:.3f}] .. "
          f"[{hi[0]:.3f} {hi[1]:.3f} {hi[2]:.3f}]")
    print(f"object grid: {volume.dims[0]}x{volume.dims[1]}x{volume.dims[2]} "
          f"at {res:.4f} m, {int(volume.cells.sum())} occupied")
    print(f"normal histogram: {int(np.count_nonzero(h_o.counts))} occupied bins, "
          f"mass {h_o.counts.sum():.1f}")
    for name in args.grasp or BUILTIN_NAMES:
        model = builtin_model(name)
        h_r = build_rank_histogram(h_o, model)
        survivors = int(np.count_nonzero(h_r.ranks > 0))
        best = float(h_r.ranks.max()) if survivors else 0.0
        print(f"{name}: {survivors} candidate orientations, best rank {best:.3f}")
    if args.volume_csv:
        with open(args.volume_csv, "w") as fh:
            fh.write(dump_volume_csv(volume))
        print(f"wrote {args.volume_csv}")
    return EXIT_OK


def build_parser() -> Parser:
    parser = Parser(prog="graspmatch",
                    description="Grasp pose planning from point clouds")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    plan = sub.add_parser("plan", help="plan grasp poses for a cloud file")
    plan.add_argument("cloud", help="input cloud (.ply or .xyzn)")
    plan.add_argument("--grasp", action="append", choices=BUILTIN_NAMES,
                      help="built-in grasp type (repeatable; default all)")
    plan.add_argument("--model", action="append",
                      help="grasp model file (repeatable)")
    plan.add_argument("--res-cm", type=float, default=REFERENCE_RES_CM,
                      help="voxel resolution in cm (default 1.5)")
    plan.add_argument("--step-deg", type=float, default=REFERENCE_STEP_DEG,
                      help="orientation sweep step in degrees (default 30)")
    plan.add_argument("--bin-deg", type=float, default=REFERENCE_BIN_DEG,
                      help="histogram bin size in degrees (default 30)")
    plan.add_argument("--threshold", type=float, default=None,
                      help="verification inner-product threshold "
                           "(default cos of half the bin size)")
    plan.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                      help="worker threads (default all cores)")
    plan.add_argument("--time-budget-s", type=float, default=None,
                      help="soft cap on correlation time per grasp type")
    plan.add_argument("--max-candidates", type=int, default=32,
                      help="candidates kept per orientation (default 32)")
    plan.add_argument("--full-cloud", action="store_true",
                      help="verify against the full-resolution cloud")
    plan.add_argument("--normal-k", type=int, default=10,
                      help="neighbors for normal estimation when the "
                           "input has no normals")
    plan.add_argument("--reference-defaults", action="store_true",
                      help="pin the reference parameter set: res 1.5 cm, "
                           "step 30 deg, bin 30 deg, derived threshold")
    plan.add_argument("--out", default="result.json",
                      help="result file (default result.json)")
    plan.add_argument("--markers", default=None,
                      help="write colored pose markers to this PLY file")
    plan.add_argument("--figure", default=None,
                      help="render cloud plus poses to this image file")
    plan.set_defaults(func=cmd_plan)

    bench = sub.add_parser("bench", help="time the correlation stage")
    bench.add_argument("--res-cm", type=float, nargs="+",
                       default=[r * 100 for r in DEFAULT_BENCH_RES_M],
                       help="resolutions to sweep in cm")
    bench.add_argument("--repeats", type=int, default=3,
                       help="timing repeats per resolution (default 3)")
    bench.add_argument("--figure", default=None,
                       help="render log-log timing plot to this image file")
    bench.set_defaults(func=cmd_bench)

    scene = sub.add_parser("scene", help="generate or merge synthetic clouds")
    scene.add_argument("spec", nargs="?", default=None,
                       help="scene spec text file")
    scene.add_argument("--out", default="scene.ply", help="output cloud file")
    scene.add_argument("--seed", type=int, default=0,
                       help="noise seed (default 0)")
    scene.add_argument("--viewpoint", type=float, nargs=3, default=None,
                       metavar=("X", "Y", "Z"),
                       help="keep only surface visible from this point")
    scene.add_argument("--merge", nargs="+", default=None,
                       help="merge these cloud files instead of generating")
    scene.add_argument("--res-cm", type=float, default=REFERENCE_RES_CM,
                       help="downsample resolution for --merge (default 1.5)")
    scene.set_defaults(func=cmd_scene)

    inspect = sub.add_parser("inspect", help="print cloud and match statistics")
    inspect.add_argument("cloud", help="input cloud file")
    inspect.add_argument("--res-cm", type=float, default=REFERENCE_RES_CM)
    inspect.add_argument("--bin-deg", type=float, default=REFERENCE_BIN_DEG)
    inspect.add_argument("--grasp", action="append", choices=BUILTIN_NAMES,
                         help="grasp types to summarize (default all)")
    inspect.add_argument("--normal-k", type=int, default=10)
    inspect.add_argument("--volume-csv", default=None,
                         help="dump the object voxel grid as CSV")
    inspect.set_defaults(func=cmd_inspect)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:
        traceback.print_exc()
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
