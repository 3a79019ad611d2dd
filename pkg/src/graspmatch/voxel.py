"""Voxel grids: object occupancy and signed gripper rasterization.

Object grids hold {0, 1}; gripper grids hold {−255, 0, 1} where +1 cells
score overlap with the object and −255 cells veto it (collision and
approach-corridor constraints).
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .errors import ModelExceedsGrid
from .histogram import snapped_floor
from .orientation import EulerRotation

GRIPPER_GRID_EXTENT = 0.30
CONSTRAINT_VALUE = -255
BOUNDS_EPS = 1e-9


@dataclass
class VoxelGrid:
    """Dense cubic-cell grid; origin is the min corner of cell (0,0,0).

    Object grids use world coordinates; gripper grids use gripper-frame
    coordinates with frame {g} at the grid center. `ignored` counts input
    points that fell outside the grid's bounding box.
    """

    resolution: float
    dims: tuple
    origin: np.ndarray
    frame_center: np.ndarray
    cells: np.ndarray
    ignored: int = 0

    def __post_init__(self) -> None:
        self.dims = tuple(int(d) for d in self.dims)
        self.origin = np.asarray(self.origin, dtype=float).reshape(3)
        self.frame_center = np.asarray(self.frame_center, dtype=float).reshape(3)
        if self.cells.shape != self.dims:
            raise ValueError("cells shape disagrees with dims")

    @property
    def cell_count(self) -> int:
        return int(np.prod(self.dims))

    def occupied_indices(self) -> np.ndarray:
        return np.transpose(np.nonzero(self.cells))


def build_object_grid(cloud, box, res: float) -> VoxelGrid:
    """Occupancy grid of a cloud over a bounding box.

    The origin snaps down to the world res lattice so the grid's cells
    coincide with down-sampling cells: voxelizing a cloud and voxelizing
    its down-sampled version occupy identical cells. Points outside the
    box are skipped and counted in `ignored`.
    """
    if res <= 0.0:
        raise ValueError("res must be positive")
    origin = np.floor(box.min / res + BOUNDS_EPS) * res
    dims = np.maximum(np.ceil((box.max - origin) / res - BOUNDS_EPS), 1).astype(int)
    cells = np.zeros(tuple(dims), dtype=np.int16)
    pts = np.asarray(cloud.points, dtype=float).reshape(-1, 3)
    inside = np.all(
        (pts >= box.min - BOUNDS_EPS) & (pts <= box.max + BOUNDS_EPS), axis=1
    )
    idx = np.floor((pts[inside] - origin) / res).astype(int)
    idx = np.clip(idx, 0, dims - 1)  # points on the upper boundary
    cells[idx[:, 0], idx[:, 1], idx[:, 2]] = 1
    return VoxelGrid(
        resolution=res,
        dims=tuple(dims),
        origin=origin,
        frame_center=origin + dims * res / 2.0,
        cells=cells,
        ignored=int(np.count_nonzero(~inside)),
    )


def default_gripper_dims(res: float, extent: float = GRIPPER_GRID_EXTENT) -> tuple:
    n = max(int(round(extent / res)), 1)
    return (n, n, n)


def _indices_or_raise(points: np.ndarray, origin: np.ndarray, dims, res: float, what: str):
    if len(points) == 0:
        return np.zeros((0, 3), dtype=int)
    # snapped floor keeps samples that sit exactly on a cell boundary in
    # the same cell at every orientation (rotation noise is ~1e-16)
    idx = snapped_floor((points - origin) / res)
    if np.any(idx < 0) or np.any(idx >= np.asarray(dims)):
        raise ModelExceedsGrid(f"{what} falls outside the {dims} gripper grid")
    return idx


def rasterize_gripper(
    model, rotation: EulerRotation, res: float, dims: tuple | None = None
) -> VoxelGrid:
    """Signed gripper grid for one orientation, centered on frame {g}.

    Positive-segment samples of every contact vector (palm included) mark
    +1 cells; negative segments and constraint-block interiors mark −255,
    and −255 wins wherever both land.
    """
    if res <= 0.0:
        raise ValueError("res must be positive")
    if dims is None:
        dims = default_gripper_dims(res)
    dims = tuple(int(d) for d in dims)
    origin = -np.asarray(dims) * res / 2.0
    cells = np.zeros(dims, dtype=np.int16)

    contacts = model.all_contacts()
    pos = [rotation.apply(c.positive_samples(res)) for c in contacts]
    neg = [rotation.apply(c.negative_samples(res)) for c in contacts]
    pos_idx = _indices_or_raise(
        np.vstack(pos), origin, dims, res, "contact positive segment"
    )
    neg_idx = _indices_or_raise(
        np.vstack(neg) if any(len(s) for s in neg) else np.zeros((0, 3)),
        origin,
        dims,
        res,
        "contact negative segment",
    )
    cells[pos_idx[:, 0], pos_idx[:, 1], pos_idx[:, 2]] = 1

    for block in model.constraint_blocks:
        signs = np.array(list(product((-1.0, 1.0), repeat=3)))
        corners = rotation.apply(block.center + signs * block.half_extents)
        _indices_or_raise(corners, origin, dims, res, "constraint block")
        lo = np.maximum(np.floor((corners.min(axis=0) - origin) / res).astype(int), 0)
        hi = np.ceil((corners.max(axis=0) - origin) / res).astype(int)
        sub = np.stack(
            np.meshgrid(
                *(np.arange(lo[a], min(hi[a] + 1, dims[a])) for a in range(3)),
                indexing="ij",
            ),
            axis=-1,
        ).reshape(-1, 3)
        centers = origin + (sub + 0.5) * res
        local = (centers - rotation.apply(block.center)) @ rotation.matrix
        hit = sub[np.all(np.abs(local) <= block.half_extents + BOUNDS_EPS, axis=1)]
        cells[hit[:, 0], hit[:, 1], hit[:, 2]] = CONSTRAINT_VALUE

    cells[neg_idx[:, 0], neg_idx[:, 1], neg_idx[:, 2]] = CONSTRAINT_VALUE
    return VoxelGrid(
        resolution=res,
        dims=dims,
        origin=origin,
        frame_center=np.zeros(3),
        cells=cells,
    )


def export_grid_ply(grid: VoxelGrid) -> str:
    """Debug view: one colored vertex per nonzero cell center
    (green = +1, red = constraint)."""
    idx = grid.occupied_indices()
    centers = grid.origin + (idx + 0.5) * grid.resolution
    values = grid.cells[idx[:, 0], idx[:, 1], idx[:, 2]]
    head = [
        "ply",
        "format ascii 1.0",
        f"element vertex {len(idx)}",
        "property float x",
        "property float y",
        "property float z",
        "property uchar red",
        "property uchar green",
        "property uchar blue",
        "end_header",
    ]
    rows = []
    for p, v in zip(centers, values):
        color = "0 255 0" if v > 0 else "255 0 0"
        rows.append(f"{p[0]:.6f} {p[1]:.6f} {p[2]:.6f} {color}")
    return "\n".join(head + rows) + "\n"
