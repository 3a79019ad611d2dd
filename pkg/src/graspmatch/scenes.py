"""Synthetic test scenes: primitive surfaces with exact analytic normals.

Scenes provide ground truth the planner tests can assert against: every
point carries the true outward normal of its primitive, optionally with
Gaussian positional noise (normals stay exact). Partial scans emulate a
depth sensor via back-face culling plus a spherical z-buffer.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cloud import OrientedCloud, merge_clouds
from .errors import SceneFormatError
from .orientation import EulerRotation

BOX = "box"
CYLINDER = "cylinder"

OCCLUSION_ANGLE = np.deg2rad(0.5)
OCCLUSION_DEPTH_TOL = 0.01


@dataclass
class SceneObject:
    """One primitive posed in world. Local frames are centered: the box
    spans +-dim/2 per axis, the cylinder axis is local z over +-height/2.

    dimensions: box (lx, ly, lz); cylinder (diameter, height).
    """

    primitive: str
    dimensions: tuple
    position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    rotation: EulerRotation = field(default_factory=EulerRotation.identity)

    def __post_init__(self) -> None:
        if self.primitive not in (BOX, CYLINDER):
            raise SceneFormatError(f"unknown primitive {self.primitive!r}")
        want = 3 if self.primitive == BOX else 2
        self.dimensions = tuple(float(d) for d in self.dimensions)
        if len(self.dimensions) != want or any(d <= 0 for d in self.dimensions):
            raise SceneFormatError(
                f"{self.primitive} needs {want} positive dimensions, got {self.dimensions}"
            )
        self.position = np.asarray(self.position, dtype=float).reshape(3)


@dataclass
class SceneSpec:
    objects: list
    sample_spacing: float = 0.005
    noise_sigma: float = 0.0

    def __post_init__(self) -> None:
        if self.sample_spacing <= 0:
            raise SceneFormatError("sample_spacing must be positive")
        if self.noise_sigma < 0:
            raise SceneFormatError("noise_sigma must be non-negative")


def _axis_offsets(length: float, spacing: float) -> np.ndarray:
    return np.arange(spacing / 2.0, length, spacing) - length / 2.0


def _sample_box(dims, spacing):
    lx, ly, lz = dims
    pts, nrm = [], []
    spans = {0: (ly, lz), 1: (lx, lz), 2: (lx, ly)}
    for axis in range(3):
        a, b = spans[axis]
        ua, ub = _axis_offsets(a, spacing), _axis_offsets(b, spacing)
        uu, vv = np.meshgrid(ua, ub, indexing="ij")
        face = np.zeros((uu.size, 3))
        others = [i for i in range(3) if i != axis]
        face[:, others[0]] = uu.ravel()
        face[:, others[1]] = vv.ravel()
        for sign in (-1.0, 1.0):
            p = face.copy()
            p[:, axis] = sign * dims[axis] / 2.0
            n = np.zeros((len(p), 3))
            n[:, axis] = sign
            pts.append(p)
            nrm.append(n)
    return np.vstack(pts), np.vstack(nrm)


def _sample_cylinder(dims, spacing):
    diameter, height = dims
    r = diameter / 2.0
    n_theta = max(int(round(np.pi * diameter / spacing)), 3)
    theta = 2 * np.pi * np.arange(n_theta) / n_theta
    zs = _axis_offsets(height, spacing)
    tt, zz = np.meshgrid(theta, zs, indexing="ij")
    side = np.column_stack(
        [r * np.cos(tt.ravel()), r * np.sin(tt.ravel()), zz.ravel()]
    )
    side_n = np.column_stack(
        [np.cos(tt.ravel()), np.sin(tt.ravel()), np.zeros(tt.size)]
    )
    ax = np.arange(spacing / 2.0, r, spacing)
    coords = np.concatenate([-ax[::-1], ax]) if len(ax) else np.zeros(1)
    gx, gy = np.meshgrid(coords, coords, indexing="ij")
    inside = gx**2 + gy**2 <= r**2
    disk = np.column_stack([gx[inside], gy[inside]])
    pts, nrm = [side], [side_n]
    for sign in (-1.0, 1.0):
        cap = np.column_stack([disk, np.full(len(disk), sign * height / 2.0)])
        n = np.zeros((len(cap), 3))
        n[:, 2] = sign
        pts.append(cap)
        nrm.append(n)
    return np.vstack(pts), np.vstack(nrm)


def sample_object(obj: SceneObject, spacing: float) -> OrientedCloud:
    sampler = _sample_box if obj.primitive == BOX else _sample_cylinder
    pts, nrm = sampler(obj.dimensions, spacing)
    return OrientedCloud(
        obj.position + obj.rotation.apply(pts), obj.rotation.apply(nrm)
    )


def gen_scene(spec: SceneSpec, seed: int = 0) -> OrientedCloud:
    """World cloud of all objects; noise moves points, never normals."""
    clouds = [sample_object(o, spec.sample_spacing) for o in spec.objects]
    cloud = merge_clouds(clouds)
    if spec.noise_sigma > 0:
        rng = np.random.default_rng(seed)
        cloud = OrientedCloud(
            cloud.points + rng.normal(0.0, spec.noise_sigma, cloud.points.shape),
            cloud.normals,
            cloud.frame_id,
        )
    return cloud


def partial_scan(
    cloud: OrientedCloud,
    viewpoint,
    angle_res: float = OCCLUSION_ANGLE,
    depth_tol: float = OCCLUSION_DEPTH_TOL,
) -> OrientedCloud:
    """Points visible from `viewpoint`: front-facing and not occluded.

    Occlusion uses a spherical z-buffer: directions from the viewpoint are
    binned at angle_res, and only points within depth_tol of the nearest
    point in their bin survive.
    """
    viewpoint = np.asarray(viewpoint, dtype=float).reshape(3)
    to_view = viewpoint - cloud.points
    front = np.einsum("ij,ij->i", cloud.normals, to_view) > 0.0
    pts = cloud.points[front]
    if len(pts) == 0:
        return OrientedCloud(pts, cloud.normals[front], cloud.frame_id)
    d = pts - viewpoint
    depth = np.linalg.norm(d, axis=1)
    az = np.arctan2(d[:, 1], d[:, 0])
    el = np.arcsin(np.clip(d[:, 2] / np.maximum(depth, 1e-12), -1.0, 1.0))
    cell = np.floor(az / angle_res).astype(np.int64) * 100000 + np.floor(
        el / angle_res
    ).astype(np.int64)
    ids, inverse = np.unique(cell, return_inverse=True)
    nearest = np.full(len(ids), np.inf)
    np.minimum.at(nearest, inverse, depth)
    keep = depth <= nearest[inverse] + depth_tol
    return OrientedCloud(pts[keep], cloud.normals[front][keep], cloud.frame_id)


def perturb_registration(cloud: OrientedCloud, offset) -> OrientedCloud:
    """Rigid offset emulating scan misregistration; apply to one scan
    before merging to create a seamed cloud."""
    offset = np.asarray(offset, dtype=float).reshape(3)
    return OrientedCloud(cloud.points + offset, cloud.normals, cloud.frame_id)


def ring_viewpoints(
    center, radius: float, height: float, count: int = 5, start: float = 0.0
) -> np.ndarray:
    """Counter-clockwise ring of sensor positions around `center`."""
    center = np.asarray(center, dtype=float).reshape(3)
    angles = start + 2 * np.pi * np.arange(count) / count
    return np.column_stack(
        [
            center[0] + radius * np.cos(angles),
            center[1] + radius * np.sin(angles),
            np.full(count, height),
        ]
    )


def can_object(position=(0.0, 0.0, 0.105), rotation=None) -> SceneObject:
    """Tin-can stand-in: 0.105 m diameter, 0.21 m tall cylinder."""
    return SceneObject(
        CYLINDER,
        (0.105, 0.21),
        position,
        rotation or EulerRotation.identity(),
    )


def l_block_objects(position=(0.0, 0.0, 0.0)) -> list:
    """Drill stand-in: an L of two boxes, vertical handle under a
    horizontal body that overhangs toward +x."""
    position = np.asarray(position, dtype=float)
    handle = SceneObject(BOX, (0.065, 0.065, 0.17), position + [0.0, 0.0, 0.085])
    body = SceneObject(BOX, (0.19, 0.065, 0.05), position + [0.0625, 0.0, 0.195])
    return [handle, body]


def write_scene(spec: SceneSpec) -> str:
    lines = [
        "# graspmatch scene",
        f"spacing {spec.sample_spacing!r}",
        f"noise {spec.noise_sigma!r}",
    ]
    for o in spec.objects:
        dims = " ".join(repr(d) for d in o.dimensions)
        pos = " ".join(repr(float(v)) for v in o.position)
        rot = o.rotation
        lines.append(
            f"{o.primitive} {dims} pos {pos} euler {rot.roll!r} {rot.pitch!r} {rot.yaw!r}"
        )
    return "\n".join(lines) + "\n"


def _floats(tokens, n, context):
    if len(tokens) != n:
        raise SceneFormatError(f"{context}: expected {n} numbers, got {len(tokens)}")
    try:
        return [float(t) for t in tokens]
    except ValueError as exc:
        raise SceneFormatError(f"{context}: {exc}") from None


def parse_scene(text: str) -> SceneSpec:
    spacing, noise = 0.005, 0.0
    objects = []
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        keyword, rest = tokens[0].lower(), tokens[1:]
        if keyword == "spacing":
            spacing = _floats(rest, 1, f"line {ln}")[0]
        elif keyword == "noise":
            noise = _floats(rest, 1, f"line {ln}")[0]
        elif keyword in (BOX, CYLINDER):
            ndim = 3 if keyword == BOX else 2
            if "pos" not in rest or "euler" not in rest:
                raise SceneFormatError(f"line {ln}: need 'pos' and 'euler' clauses")
            p = rest.index("pos")
            e = rest.index("euler")
            dims = _floats(rest[:p], ndim, f"line {ln} dims")
            pos = _floats(rest[p + 1 : e], 3, f"line {ln} pos")
            ang = _floats(rest[e + 1 :], 3, f"line {ln} euler")
            objects.append(
                SceneObject(keyword, dims, pos, EulerRotation.from_angles(*ang))
            )
        else:
            raise SceneFormatError(f"line {ln}: unknown keyword {keyword!r}")
    return SceneSpec(objects, spacing, noise)


def load_scene(path) -> SceneSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_scene(fh.read())


def save_scene(spec: SceneSpec, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(write_scene(spec))
