"""Nearest-neighbor contact verification of grasp candidates.

Correlation peaks only prove voxel overlap. A peak can straddle one plane
or a corner where the jaws cannot actually oppose the surface, so each
counted contact must find a nearby cloud point whose normal opposes the
contact's closing direction before a candidate becomes a pose.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import EmptyCloud, MissingNormals
from .orientation import EulerRotation


class NeighborIndex:
    """Exact Euclidean nearest-neighbor queries over a cloud."""

    def __init__(self, points: np.ndarray, normals):
        self.points = np.asarray(points, dtype=float).reshape(-1, 3)
        if len(self.points) == 0:
            raise EmptyCloud("cannot index an empty cloud")
        self.normals = None
        if normals is not None and len(normals):
            self.normals = np.asarray(normals, dtype=float).reshape(-1, 3)
        self._tree = cKDTree(self.points)

    def __len__(self) -> int:
        return len(self.points)

    def nearest(self, queries: np.ndarray):
        """(distances, point indices) of the closest cloud point per query."""
        dists, idxs = self._tree.query(np.asarray(queries, dtype=float))
        return np.atleast_1d(dists), np.atleast_1d(idxs)


def build_nn_index(cloud) -> NeighborIndex:
    return NeighborIndex(cloud.points, cloud.normals)


def default_threshold(bin_size: float) -> float:
    """Inner-product floor matching one histogram bin of angular slack."""
    if not 0.0 < bin_size <= np.pi:
        raise ValueError("bin_size must be in (0, pi]")
    return float(np.cos(bin_size / 2.0))


@dataclass
class ContactMatch:
    gripper_point: np.ndarray
    cloud_point: np.ndarray
    inner_product: float


@dataclass
class Rejection:
    """Why a candidate failed; a value, not an error."""

    contact_index: int
    reason: str
    inner_product: float | None = None
    distance: float | None = None


@dataclass
class GraspPose:
    grasp_type: str
    position: np.ndarray
    rotation: EulerRotation
    stage1_rank: float
    correlation: float
    contact_matches: tuple


def verify_candidate(
    cand,
    model,
    index: NeighborIndex,
    threshold: float,
    sample_res: float = 0.015,
    max_match_distance: float | None = None,
):
    """GraspPose when every counted contact opposes the surface, else Rejection.

    Per finger contact: its positive-segment samples go to world via the
    candidate pose, the (sample, cloud point) pair at minimum distance is
    the match, and the cloud normal must satisfy n_s . (R @ -contact_normal)
    >= threshold. The palm is excluded; it favours but never gates. A match
    farther than max_match_distance (when set) rejects outright, since such
    a contact cannot have produced its correlation contribution.
    """
    if index.normals is None:
        raise MissingNormals("verification needs cloud normals")
    rot = cand.rotation
    matches = []
    for ci, contact in enumerate(model.finger_contacts):
        samples = cand.position + rot.apply(contact.positive_samples(sample_res))
        dists, idxs = index.nearest(samples)
        best = int(np.argmin(dists))
        dist = float(dists[best])
        if max_match_distance is not None and dist > max_match_distance:
            return Rejection(ci, "distance", distance=dist)
        hit = int(idxs[best])
        inner = float(np.dot(index.normals[hit], rot.apply(-contact.contact_normal)))
        if inner < threshold:
            return Rejection(ci, "normal", inner_product=inner, distance=dist)
        matches.append(ContactMatch(samples[best], index.points[hit], inner))
    return GraspPose(
        grasp_type=cand.grasp_type,
        position=np.asarray(cand.position, dtype=float),
        rotation=rot,
        stage1_rank=float(cand.stage1_rank),
        correlation=float(cand.correlation),
        contact_matches=tuple(matches),
    )
