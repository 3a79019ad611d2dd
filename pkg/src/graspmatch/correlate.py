"""Cross-correlation of gripper grids against object grids.

The correlation volume scores every integer placement of the gripper grid
over the object grid: +1 cells add 1 per occupied object cell they cover,
constraint cells add -255. A placement is a grasp candidate when its value
reaches the grasp type's counted contact count.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft

from .errors import ResolutionMismatch
from .orientation import EulerRotation
from .voxel import VoxelGrid

VALUE_TOL = 1e-6


@dataclass
class CorrelationVolume:
    """Correlation values over all placements with any overlap.

    dims = object dims + gripper dims - 1 per axis. `origin` maps an index
    t to the world position of the gripper frame center at that placement:
    position(t) = origin + t*resolution.
    """

    resolution: float
    dims: tuple
    origin: np.ndarray
    values: np.ndarray

    def position(self, index) -> np.ndarray:
        return self.origin + np.asarray(index, dtype=float) * self.resolution


@dataclass
class GraspCandidate:
    grasp_type: str
    position: np.ndarray
    rotation: EulerRotation
    correlation: float
    stage1_rank: float
    grid_index: tuple = field(default=())


def _check_pair(vg: VoxelGrid, vo: VoxelGrid):
    if abs(vg.resolution - vo.resolution) > 1e-9:
        raise ResolutionMismatch(
            f"gripper grid res {vg.resolution} vs object grid res {vo.resolution}"
        )


def _volume_origin(vo: VoxelGrid, g_dims) -> np.ndarray:
    # placement t aligns gripper cell I with object cell t-(Ng-1)+I, so the
    # gripper grid min corner sits at Vo.origin + (t-Ng+1)*res and the frame
    # center (grid center) at Vo.origin + (t+1-Ng/2)*res
    return vo.origin + (1.0 - np.asarray(g_dims) / 2.0) * vo.resolution


def xcorr_naive(vg: VoxelGrid, vo: VoxelGrid) -> CorrelationVolume:
    """Direct sum over placements; the independent oracle for xcorr_fft."""
    _check_pair(vg, vo)
    ng = np.asarray(vg.dims)
    no = np.asarray(vo.dims)
    out_dims = tuple(int(n) for n in no + ng - 1)
    out = np.zeros(out_dims, dtype=np.float64)
    obj = vo.cells.astype(np.float64)
    for i, j, k in np.transpose(np.nonzero(vg.cells)):
        s = ng - 1 - np.array([i, j, k])
        out[
            s[0] : s[0] + no[0], s[1] : s[1] + no[1], s[2] : s[2] + no[2]
        ] += float(vg.cells[i, j, k]) * obj
    return CorrelationVolume(
        resolution=vo.resolution,
        dims=out_dims,
        origin=_volume_origin(vo, vg.dims),
        values=out,
    )


class CorrelationPlan:
    """Reusable FFT plan over one object grid.

    Padding the object transform once and reusing it across orientations
    saves the dominant rfftn(V_o) per correlation.
    """

    def __init__(self, object_grid: VoxelGrid, gripper_dims):
        self.object_grid = object_grid
        self.gripper_dims = tuple(int(d) for d in gripper_dims)
        out = [o + g - 1 for o, g in zip(object_grid.dims, self.gripper_dims)]
        self.out_dims = tuple(out)
        self.fast_shape = tuple(sfft.next_fast_len(n, real=True) for n in out)
        self._f_object = sfft.rfftn(
            object_grid.cells.astype(np.float64), self.fast_shape
        )

    def correlate(self, vg: VoxelGrid) -> CorrelationVolume:
        _check_pair(vg, self.object_grid)
        if tuple(vg.dims) != self.gripper_dims:
            raise ResolutionMismatch(
                f"gripper dims {vg.dims} do not match plan dims {self.gripper_dims}"
            )
        f_gripper = sfft.rfftn(vg.cells.astype(np.float64), self.fast_shape)
        raw = sfft.irfftn(np.conj(f_gripper) * self._f_object, self.fast_shape)
        shift = [g - 1 for g in self.gripper_dims]
        rolled = np.roll(raw, shift, axis=(0, 1, 2))
        values = rolled[: self.out_dims[0], : self.out_dims[1], : self.out_dims[2]]
        return CorrelationVolume(
            resolution=self.object_grid.resolution,
            dims=self.out_dims,
            origin=_volume_origin(self.object_grid, self.gripper_dims),
            values=np.ascontiguousarray(values),
        )


def xcorr_fft(vg: VoxelGrid, vo: VoxelGrid) -> CorrelationVolume:
    """FFT correlation, zero-padded to linear (no circular aliasing)."""
    return CorrelationPlan(vo, vg.dims).correlate(vg)


def extract_candidates(
    volume: CorrelationVolume,
    n_contacts: int,
    rotation: EulerRotation,
    rank: float,
    grasp_type: str = "",
    limit: int | None = None,
) -> list:
    """Candidates at every placement scoring >= the counted contact count.

    Sorted by descending correlation, ties by flat C-order index; palm
    contributions push values above n_contacts and so sort first without
    changing the threshold itself.
    """
    flat = volume.values.reshape(-1)
    hits = np.nonzero(flat >= n_contacts - VALUE_TOL)[0]
    order = hits[np.argsort(-flat[hits], kind="stable")]
    if limit is not None:
        order = order[:limit]
    out = []
    for f in order:
        idx = np.unravel_index(int(f), volume.dims)
        out.append(
            GraspCandidate(
                grasp_type=grasp_type,
                position=volume.position(idx),
                rotation=rotation,
                correlation=float(flat[f]),
                stage1_rank=float(rank),
                grid_index=tuple(int(i) for i in idx),
            )
        )
    return out


def dump_volume_csv(volume, decimals: int = 3) -> str:
    """One CSV block per z slice, for eyeballing peak neighborhoods.

    Accepts a correlation volume or any grid exposing dims/resolution
    plus a cells array.
    """
    values = volume.values if hasattr(volume, "values") else volume.cells
    lines = [
        f"# volume dims {tuple(volume.dims)} res {volume.resolution}",
    ]
    for k in range(volume.dims[2]):
        lines.append(f"# z slice {k}")
        for row in np.round(values[:, :, k], decimals):
            lines.append(",".join(f"{v:g}" for v in row))
    return "\n".join(lines) + "\n"
