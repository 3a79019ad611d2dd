"""Stage 1: enumerate gripper orientations and rank them by histogram match.

An orientation survives when the object histogram contains the rotated
gripper histogram, i.e. every bin the rotated inverted contact normals fall
into holds at least the accumulated gripper weight. Surviving orientations
are scored by the log of the object counts at those bins.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BinSizeMismatch
from .histogram import NormalHistogram, bin_weights_for

TWO_PI = 2.0 * np.pi

DEFAULT_STEP = np.pi / 6
# roll and yaw sweep the full circle; pitch stays within the band where the
# approach still points at the upper half-space
DEFAULT_RANGES = (
    (0.0, TWO_PI),
    (-np.pi / 2, np.pi / 6),
    (0.0, TWO_PI),
)

CONTAIN_EPS = 1e-9


def _rx(a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def _ry(a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def _rz(a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


@dataclass(frozen=True, eq=False)
class EulerRotation:
    """Extrinsic roll-pitch-yaw rotation, matrix = Rz(yaw)·Ry(pitch)·Rx(roll)."""

    roll: float
    pitch: float
    yaw: float
    matrix: np.ndarray

    @classmethod
    def from_angles(cls, roll: float, pitch: float, yaw: float) -> "EulerRotation":
        return cls(roll, pitch, yaw, _rz(yaw) @ _ry(pitch) @ _rx(roll))

    @classmethod
    def identity(cls) -> "EulerRotation":
        return cls.from_angles(0.0, 0.0, 0.0)

    def apply(self, vectors) -> np.ndarray:
        return np.asarray(vectors, dtype=float) @ self.matrix.T


@dataclass
class RankHistogram:
    """Per-orientation match scores over the (roll, pitch, yaw) grid.

    Zero means the gripper's normal shape cannot match at that orientation.
    """

    roll_step: float
    pitch_step: float
    yaw_step: float
    ranges: tuple
    ranks: np.ndarray

    def axis_samples(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        steps = (self.roll_step, self.pitch_step, self.yaw_step)
        return tuple(
            _axis_samples(lo, hi, step)
            for (lo, hi), step in zip(self.ranges, steps)
        )


def _axis_samples(lo: float, hi: float, step: float) -> np.ndarray:
    if step <= 0.0:
        raise ValueError("step must be positive")
    if hi < lo:
        raise ValueError("range upper bound below lower bound")
    count = int(np.floor((hi - lo) / step + 1e-9)) + 1
    samples = lo + step * np.arange(count)
    # a full circle excludes the duplicate endpoint
    if count > 1 and samples[-1] >= lo + TWO_PI - 1e-9:
        samples = samples[:-1]
    return samples


def enumerate_orientations(
    ranges=DEFAULT_RANGES, step: float = DEFAULT_STEP
) -> list[EulerRotation]:
    """Cartesian product of per-axis angle samples lo, lo+step, ..."""
    rolls, pitches, yaws = (_axis_samples(lo, hi, step) for lo, hi in ranges)
    return [
        EulerRotation.from_angles(r, p, y)
        for r in rolls
        for p in pitches
        for y in yaws
    ]


def rank_orientation(
    h_o: NormalHistogram,
    contact_normals,
    rotation: EulerRotation,
    bin_size: float | None = None,
) -> float:
    """Match score of one gripper orientation against the object histogram.

    Rotates every inverted contact normal, accumulates gripper weight per
    bin (pole normals spread over the polar row), and requires the object
    count to cover that weight at each touched bin. The score sums
    ln(object count) over the touched bins, each bin counted once; counts
    below 1 contribute nothing rather than a negative term.
    """
    if bin_size is not None and abs(bin_size - h_o.bin_size) > 1e-12:
        raise BinSizeMismatch(
            f"gripper bin size {bin_size} vs object {h_o.bin_size}"
        )
    contact_normals = np.asarray(contact_normals, dtype=float).reshape(-1, 3)
    rotated = rotation.apply(-contact_normals)
    weights: dict[tuple[int, int], float] = {}
    for n in rotated:
        for key, frac in bin_weights_for(n, h_o):
            weights[key] = weights.get(key, 0.0) + frac
    rank = 0.0
    for (ei, ai), w in weights.items():
        count = h_o.counts[ei, ai]
        if count + CONTAIN_EPS < w:
            return 0.0
        if count > 1.0:
            rank += float(np.log(count))
    return rank


def build_rank_histogram(
    h_o: NormalHistogram,
    model,
    ranges=DEFAULT_RANGES,
    step: float = DEFAULT_STEP,
) -> RankHistogram:
    """Evaluate rank_orientation over the full orientation grid."""
    normals = np.asarray(model.contact_normals, dtype=float).reshape(-1, 3)
    rolls, pitches, yaws = (_axis_samples(lo, hi, step) for lo, hi in ranges)
    ranks = np.zeros((len(rolls), len(pitches), len(yaws)))
    for i, r in enumerate(rolls):
        for j, p in enumerate(pitches):
            for k, y in enumerate(yaws):
                ranks[i, j, k] = rank_orientation(
                    h_o, normals, EulerRotation.from_angles(r, p, y)
                )
    return RankHistogram(step, step, step, tuple(ranges), ranks)


def select_orientations(h_r: RankHistogram) -> list[tuple[EulerRotation, float]]:
    """Orientations with positive rank, best first; ties in index order."""
    rolls, pitches, yaws = h_r.axis_samples()
    entries = []
    for i, j, k in zip(*np.nonzero(h_r.ranks > 0.0)):
        entries.append(((int(i), int(j), int(k)), float(h_r.ranks[i, j, k])))
    entries.sort(key=lambda e: (-e[1], e[0]))
    return [
        (EulerRotation.from_angles(rolls[i], pitches[j], yaws[k]), rank)
        for (i, j, k), rank in entries
    ]


def dump_ranks(h_r: RankHistogram) -> str:
    """Nonzero rank entries as text rows: roll pitch yaw rank."""
    rolls, pitches, yaws = h_r.axis_samples()
    lines = [f"# orientations {h_r.ranks.size} nonzero {int((h_r.ranks > 0).sum())}"]
    for i, j, k in zip(*np.nonzero(h_r.ranks > 0.0)):
        lines.append(
            f"{rolls[i]:.9g} {pitches[j]:.9g} {yaws[k]:.9g}"
            f" {h_r.ranks[i, j, k]:.9g}"
        )
    return "\n".join(lines) + "\n"
