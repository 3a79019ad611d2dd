"""Surface-normal histograms over discretized spherical angles.

A histogram bins unit normals by (elevation, azimuth) with a common angular
bin size. Normals at the poles have no defined azimuth, so their weight is
spread uniformly over the polar elevation row.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import MissingNormals, NotUnitVector

POLE_EPS = 1e-9
UNIT_TOL = 1e-6
TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class PoleCase:
    """Marker for a normal at ±z, where azimuth is undefined."""

    north: bool


@dataclass
class NormalHistogram:
    """Bin counts indexed (elevation_idx, azimuth_idx).

    Elevation rows ascend from −π/2 (row 0 holds the south pole, the last
    row the north pole); azimuth columns ascend from 0 and wrap at 2π.
    Counts are reals: pole insertions deposit fractional mass per column.
    """

    bin_size: float
    counts: np.ndarray

    def __post_init__(self) -> None:
        self.counts = np.asarray(self.counts, dtype=float)
        if self.counts.ndim != 2:
            raise ValueError("counts must be 2D (elevation, azimuth)")

    @classmethod
    def empty(cls, bin_size: float) -> "NormalHistogram":
        if not 0.0 < bin_size <= np.pi:
            raise ValueError("bin_size must lie in (0, pi]")
        azimuth_bins = int(round(TWO_PI / bin_size))
        elevation_bins = int(round(np.pi / bin_size))
        return cls(bin_size, np.zeros((max(elevation_bins, 1), max(azimuth_bins, 1))))

    @property
    def elevation_bins(self) -> int:
        return self.counts.shape[0]

    @property
    def azimuth_bins(self) -> int:
        return self.counts.shape[1]

    @property
    def total(self) -> float:
        return float(self.counts.sum())

    def nonzero_bins(self) -> list[tuple[int, int]]:
        rows, cols = np.nonzero(self.counts)
        return list(zip(rows.tolist(), cols.tolist()))


def spherical_angles(n) -> tuple[float, float] | PoleCase:
    """Map a unit normal to (elevation in [−π/2, π/2], azimuth in [0, 2π)).

    Elevation is measured from the equator (π/2 − polar angle). Returns a
    PoleCase for normals within 1e-9 of ±z.
    """
    n = np.asarray(n, dtype=float).reshape(3)
    length = float(np.linalg.norm(n))
    if abs(length - 1.0) > UNIT_TOL:
        raise NotUnitVector(f"|n| = {length:.8f}, expected 1")
    nz = min(max(n[2] / length, -1.0), 1.0)
    if abs(nz) >= 1.0 - POLE_EPS:
        return PoleCase(north=nz > 0.0)
    elevation = np.pi / 2.0 - float(np.arccos(nz))
    azimuth = float(np.arctan2(n[1], n[0])) % TWO_PI
    if azimuth >= TWO_PI:
        azimuth = 0.0
    return elevation, azimuth


EDGE_SNAP = 1e-9


def snapped_floor(ratio):
    """floor with half-open semantics held stable at bin edges: values within
    1e-9 of an edge belong to the upper bin regardless of float rounding."""
    ratio = np.asarray(ratio, dtype=float)
    nearest = np.round(ratio)
    out = np.where(np.abs(ratio - nearest) <= EDGE_SNAP, nearest, np.floor(ratio))
    return out.astype(int)


def elevation_index(elevation, bin_size: float, elevation_bins: int):
    """Half-open bins from −π/2; the last bin absorbs the upper remainder."""
    idx = snapped_floor((np.asarray(elevation) + np.pi / 2.0) / bin_size)
    return np.clip(idx, 0, elevation_bins - 1)


def azimuth_index(azimuth, bin_size: float, azimuth_bins: int):
    idx = snapped_floor(np.asarray(azimuth) / bin_size)
    if bin_size * azimuth_bins >= TWO_PI - 1e-6:
        idx = idx % azimuth_bins
    return np.clip(idx, 0, azimuth_bins - 1)


def bin_weights_for(n, hist: NormalHistogram) -> list[tuple[tuple[int, int], float]]:
    """Expand one unit normal into ((elev_idx, azim_idx), weight) deposits.

    Weight fractions sum to 1 when azimuth_bins · bin_size = 2π exactly.
    """
    angles = spherical_angles(n)
    if isinstance(angles, PoleCase):
        row = hist.elevation_bins - 1 if angles.north else 0
        frac = hist.bin_size / TWO_PI
        return [((row, col), frac) for col in range(hist.azimuth_bins)]
    elevation, azimuth = angles
    ei = int(elevation_index(elevation, hist.bin_size, hist.elevation_bins))
    ai = int(azimuth_index(azimuth, hist.bin_size, hist.azimuth_bins))
    return [((ei, ai), 1.0)]


def insert_normal(hist: NormalHistogram, n, weight: float = 1.0) -> None:
    """Deposit `weight` into the bin containing n (spread over the polar row
    for pole normals, bin_size/2π per column)."""
    if weight <= 0.0:
        raise ValueError("weight must be positive")
    for (ei, ai), frac in bin_weights_for(n, hist):
        hist.counts[ei, ai] += weight * frac


def accumulate_normals(hist: NormalHistogram, normals: np.ndarray) -> None:
    """Bulk weight-1 insertion, equivalent to insert_normal per row."""
    normals = np.asarray(normals, dtype=float).reshape(-1, 3)
    if len(normals) == 0:
        return
    lengths = np.linalg.norm(normals, axis=1)
    if np.any(np.abs(lengths - 1.0) > UNIT_TOL):
        worst = float(np.abs(lengths - 1.0).max())
        raise NotUnitVector(f"normal length off unit by {worst:g}")
    nz = np.clip(normals[:, 2] / lengths, -1.0, 1.0)
    pole = np.abs(nz) >= 1.0 - POLE_EPS
    frac = hist.bin_size / TWO_PI
    hist.counts[-1, :] += float(np.count_nonzero(pole & (nz > 0))) * frac
    hist.counts[0, :] += float(np.count_nonzero(pole & (nz < 0))) * frac

    rest = normals[~pole]
    if len(rest) == 0:
        return
    elevation = np.pi / 2.0 - np.arccos(nz[~pole])
    azimuth = np.arctan2(rest[:, 1], rest[:, 0]) % TWO_PI
    ei = elevation_index(elevation, hist.bin_size, hist.elevation_bins)
    ai = azimuth_index(azimuth, hist.bin_size, hist.azimuth_bins)
    np.add.at(hist.counts, (ei, ai), 1.0)


def build_object_histogram(cloud, bin_size: float) -> NormalHistogram:
    """Histogram of a cloud's normals, one weight-1 insertion per point."""
    hist = NormalHistogram.empty(bin_size)
    if len(cloud) == 0:
        return hist
    if not cloud.has_normals:
        raise MissingNormals("object histogram requires normals")
    accumulate_normals(hist, cloud.normals)
    return hist


def build_gripper_histogram(model, bin_size: float) -> NormalHistogram:
    """Histogram of a grasp model's inverted contact normals.

    The gripper closes onto surfaces whose normals oppose its contact
    normals, so each counted contact contributes −n with weight 1.
    """
    hist = NormalHistogram.empty(bin_size)
    accumulate_normals(hist, -np.asarray(model.contact_normals, dtype=float))
    return hist


def dump_histogram(hist: NormalHistogram) -> str:
    """Plain-text matrix, one line per elevation row, south pole first."""
    lines = [
        f"# bin_size {hist.bin_size!r} elevation_bins {hist.elevation_bins}"
        f" azimuth_bins {hist.azimuth_bins}"
    ]
    for row in hist.counts:
        lines.append(" ".join(f"{v:.9g}" for v in row))
    return "\n".join(lines) + "\n"
