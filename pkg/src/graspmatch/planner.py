"""End-to-end grasp planning over a cloud and a set of grasp type models.

Pipeline per model: object normal histogram ranks every orientation on the
Euler grid (Stage 1); surviving orientations, best first, get a rasterized
gripper grid cross-correlated against the object grid and peak placements
extracted (Stage 2); candidates that pass nearest-neighbor normal checks
become poses. The pose list is exhaustive and ranked; picking one is the
caller's job.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .cloud import Aabb, OrientedCloud, bounding_box, downsample
from .correlate import CorrelationPlan, extract_candidates
from .histogram import build_object_histogram
from .orientation import (
    DEFAULT_RANGES,
    DEFAULT_STEP,
    build_rank_histogram,
    select_orientations,
)
from .verify import GraspPose, build_nn_index, default_threshold, verify_candidate
from .voxel import (
    GRIPPER_GRID_EXTENT,
    build_object_grid,
    default_gripper_dims,
    rasterize_gripper,
)

MATCH_DISTANCE_CELLS = 2


@dataclass
class PlannerConfig:
    """Knobs for one planning run; defaults mirror the 1.5 cm / pi/6 setup."""

    voxel_res: float = 0.015
    bin_size: float = np.pi / 6
    orientation_step: float = DEFAULT_STEP
    orientation_ranges: tuple = DEFAULT_RANGES
    object_box: Aabb | None = None
    max_candidates_per_orientation: int = 32
    verification_threshold: float | None = None
    verify_on_full_cloud: bool = False
    threads: int = 1
    time_budget_s: float | None = None

    def __post_init__(self) -> None:
        if self.voxel_res <= 0:
            raise ValueError("voxel_res must be positive")
        if not 0.0 < self.bin_size <= np.pi:
            raise ValueError("bin_size must be in (0, pi]")
        if self.orientation_step <= 0:
            raise ValueError("orientation_step must be positive")
        if self.max_candidates_per_orientation < 1:
            raise ValueError("max_candidates_per_orientation must be >= 1")
        if self.verification_threshold is not None and not (
            0.0 < self.verification_threshold <= 1.0
        ):
            raise ValueError("verification_threshold must be in (0, 1]")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")

    @property
    def threshold(self) -> float:
        if self.verification_threshold is not None:
            return self.verification_threshold
        return default_threshold(self.bin_size)


@dataclass
class GraspPlanResult:
    """Poses grouped by grasp type plus per-stage counters and timings."""

    poses: dict = field(default_factory=dict)
    stats: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)

    def all_poses(self) -> list:
        return [p for group in self.poses.values() for p in group]


def _empty_stats(orientations: int = 0) -> dict:
    return {
        "orientations": orientations,
        "stage1_survivors": 0,
        "correlations_run": 0,
        "candidates": 0,
        "verified": 0,
    }


def plan_grasps(
    cloud: OrientedCloud, models: list, cfg: PlannerConfig | None = None
) -> GraspPlanResult:
    """Ranked, verified grasp poses for every model against one cloud.

    The cloud must carry normals (estimate first if it does not). Output
    order is deterministic for fixed inputs regardless of cfg.threads; a
    time budget, when set, truncates Stage 2 and gives up that guarantee.
    """
    if not models:
        raise ValueError("need at least one grasp type model")
    cfg = cfg or PlannerConfig()
    result = GraspPlanResult()
    t_total = time.perf_counter()

    if len(cloud.points) == 0:
        for model in models:
            result.poses[model.name] = []
            result.stats[model.name] = _empty_stats()
        result.timings["total_s"] = time.perf_counter() - t_total
        return result

    t0 = time.perf_counter()
    work = downsample(cloud, cfg.voxel_res)
    h_o = build_object_histogram(work, cfg.bin_size)
    box = cfg.object_box or bounding_box(work).inflated(GRIPPER_GRID_EXTENT / 2.0)
    v_o = build_object_grid(work, box, cfg.voxel_res)
    dims = default_gripper_dims(cfg.voxel_res)
    plan = CorrelationPlan(v_o, dims)
    index = build_nn_index(cloud if cfg.verify_on_full_cloud else work)
    result.timings["prepare_s"] = time.perf_counter() - t0

    threshold = cfg.threshold
    max_match = MATCH_DISTANCE_CELLS * cfg.voxel_res

    def run_orientation(model, entry):
        rotation, rank = entry
        v_g = rasterize_gripper(model, rotation, cfg.voxel_res, dims)
        volume = plan.correlate(v_g)
        cands = extract_candidates(
            volume, model.n_contacts, rotation, rank, grasp_type=model.name
        )
        # the cap bounds kept poses, not verification input: weak candidates
        # (stray chord overlaps) often outscore well-aligned ones via palm
        # or extra-surface contact, so all candidates get verified
        poses = []
        for cand in cands:
            got = verify_candidate(
                cand, model, index, threshold, cfg.voxel_res, max_match
            )
            if isinstance(got, GraspPose):
                poses.append(got)
                if len(poses) >= cfg.max_candidates_per_orientation:
                    break
        return len(cands), poses

    stage1_s = stage2_s = 0.0
    for model in models:
        t1 = time.perf_counter()
        h_r = build_rank_histogram(
            h_o, model, cfg.orientation_ranges, cfg.orientation_step
        )
        surviving = select_orientations(h_r)
        stage1_s += time.perf_counter() - t1

        t2 = time.perf_counter()
        stats = _empty_stats(int(h_r.ranks.size))
        stats["stage1_survivors"] = len(surviving)
        outcomes = []
        if cfg.time_budget_s is not None:
            # budgeted runs stop early: counts then depend on wall time
            for entry in surviving:
                if time.perf_counter() - t2 > cfg.time_budget_s:
                    break
                outcomes.append(run_orientation(model, entry))
        elif cfg.threads > 1:
            with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
                outcomes = list(
                    pool.map(lambda e: run_orientation(model, e), surviving)
                )
        else:
            outcomes = [run_orientation(model, e) for e in surviving]

        poses = []
        for n_cands, verified in outcomes:
            stats["candidates"] += n_cands
            poses.extend(verified)
        stats["correlations_run"] = len(outcomes)
        stats["verified"] = len(poses)
        poses.sort(key=lambda p: (-p.stage1_rank, -p.correlation))
        result.poses[model.name] = poses
        result.stats[model.name] = stats
        stage2_s += time.perf_counter() - t2

    result.timings["stage1_s"] = stage1_s
    result.timings["stage2_s"] = stage2_s
    result.timings["total_s"] = time.perf_counter() - t_total
    return result


def result_to_dict(result: GraspPlanResult) -> dict:
    """JSON-shaped view of a result; timings are excluded so that equal
    inputs serialize to equal bytes."""
    poses = {
        name: [
            {
                "grasp_type": p.grasp_type,
                "position_m": [float(v) for v in p.position],
                "euler_rad": [
                    float(p.rotation.roll),
                    float(p.rotation.pitch),
                    float(p.rotation.yaw),
                ],
                "rank": float(p.stage1_rank),
                "correlation": float(p.correlation),
            }
            for p in group
        ]
        for name, group in result.poses.items()
    }
    return {"poses": poses, "stats": result.stats}


def serialize_result(result: GraspPlanResult) -> str:
    return json.dumps(result_to_dict(result), indent=2, sort_keys=True) + "\n"


def save_result(result: GraspPlanResult, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_result(result))
