"""Oriented point clouds: parsing, normal estimation, down-sampling, serialization.

Supported formats are ASCII PLY (element ``vertex`` with x,y,z and optionally
nx,ny,nz) and plain ``x y z [nx ny nz]`` text. All lengths are meters.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import (
    DegenerateNeighborhood,
    EmptyCloud,
    MalformedHeader,
    NonFiniteCoordinate,
    NormalCountMismatch,
    TooFewPoints,
)

PLY_ASCII = "ply_ascii"
XYZN_TEXT = "xyzn_text"

DEFAULT_NORMAL_K = 10


@dataclass
class OrientedCloud:
    """Points and unit surface normals expressed in one world frame.

    ``normals`` may be empty (shape (0, 3)) for clouds awaiting normal
    estimation; otherwise it matches ``points`` row for row.
    """

    points: np.ndarray
    normals: np.ndarray
    frame_id: str = "world"

    def __post_init__(self) -> None:
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 3)
        self.normals = np.asarray(self.normals, dtype=float).reshape(-1, 3)
        if len(self.normals) and len(self.normals) != len(self.points):
            raise NormalCountMismatch(
                f"{len(self.points)} points but {len(self.normals)} normals"
            )

    def __len__(self) -> int:
        return len(self.points)

    @property
    def has_normals(self) -> bool:
        return len(self.normals) == len(self.points) and len(self.points) > 0

    def validate(self, tol: float = 1e-6) -> None:
        """Check unit-normal and shape invariants, raising on violation."""
        if not np.isfinite(self.points).all():
            raise NonFiniteCoordinate("non-finite point coordinate")
        if len(self.normals):
            if len(self.normals) != len(self.points):
                raise NormalCountMismatch("normals/points length differ")
            norms = np.linalg.norm(self.normals, axis=1)
            if not np.allclose(norms, 1.0, atol=tol):
                worst = float(np.abs(norms - 1.0).max())
                raise NonFiniteCoordinate(f"normal length off unit by {worst:g}")


@dataclass
class Aabb:
    """Axis-aligned bounding box, min/max corners in meters."""

    min: np.ndarray
    max: np.ndarray

    def __post_init__(self) -> None:
        self.min = np.asarray(self.min, dtype=float).reshape(3)
        self.max = np.asarray(self.max, dtype=float).reshape(3)
        if np.any(self.min > self.max):
            raise ValueError("Aabb min must be <= max componentwise")

    @property
    def extent(self) -> np.ndarray:
        return self.max - self.min

    def inflated(self, margin: float | np.ndarray) -> "Aabb":
        m = np.broadcast_to(np.asarray(margin, dtype=float), (3,))
        return Aabb(self.min - m, self.max + m)


def merge_clouds(clouds: list[OrientedCloud]) -> OrientedCloud:
    """Concatenate clouds; all inputs must agree on having normals or not."""
    clouds = [c for c in clouds if len(c)]
    if not clouds:
        return OrientedCloud(np.zeros((0, 3)), np.zeros((0, 3)))
    with_n = [c.has_normals for c in clouds]
    if any(with_n) and not all(with_n):
        raise NormalCountMismatch("cannot merge clouds with and without normals")
    pts = np.vstack([c.points for c in clouds])
    nrm = (
        np.vstack([c.normals for c in clouds])
        if all(with_n)
        else np.zeros((0, 3))
    )
    return OrientedCloud(pts, nrm, frame_id=clouds[0].frame_id)


# ---------------------------------------------------------------------------
# Parsing / writing


def _parse_floats(tokens: list[str], line_no: int) -> np.ndarray:
    try:
        vals = np.array([float(t) for t in tokens], dtype=float)
    except ValueError as exc:
        raise MalformedHeader(f"line {line_no}: non-numeric value") from exc
    if not np.isfinite(vals).all():
        raise NonFiniteCoordinate(f"line {line_no}: non-finite value")
    return vals


def _parse_xyzn(text: str) -> OrientedCloud:
    pts: list[np.ndarray] = []
    nrms: list[np.ndarray] = []
    width = None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if len(tokens) not in (3, 6):
            raise MalformedHeader(
                f"line {line_no}: expected 3 or 6 columns, got {len(tokens)}"
            )
        if width is None:
            width = len(tokens)
        elif width != len(tokens):
            raise NormalCountMismatch(f"line {line_no}: inconsistent column count")
        vals = _parse_floats(tokens, line_no)
        pts.append(vals[:3])
        if width == 6:
            nrms.append(vals[3:])
    points = np.array(pts).reshape(-1, 3)
    normals = np.array(nrms).reshape(-1, 3) if nrms else np.zeros((0, 3))
    return OrientedCloud(points, normals)


def _parse_ply(text: str) -> OrientedCloud:
    lines = text.splitlines()
    if not lines or lines[0].strip() != "ply":
        raise MalformedHeader("missing 'ply' magic line")
    elements: list[tuple[str, int, list[str]]] = []  # (name, count, props)
    fmt_seen = False
    i = 1
    while i < len(lines):
        tokens = lines[i].strip().split()
        i += 1
        if not tokens or tokens[0] == "comment":
            continue
        if tokens[0] == "format":
            if len(tokens) < 2 or tokens[1] != "ascii":
                raise MalformedHeader("only ascii PLY is supported")
            fmt_seen = True
        elif tokens[0] == "element":
            if len(tokens) != 3:
                raise MalformedHeader("bad element line")
            try:
                elements.append((tokens[1], int(tokens[2]), []))
            except ValueError as exc:
                raise MalformedHeader("bad element count") from exc
        elif tokens[0] == "property":
            if not elements:
                raise MalformedHeader("property before any element")
            elements[-1][2].append(tokens[-1])
        elif tokens[0] == "end_header":
            break
        else:
            raise MalformedHeader(f"unexpected header token {tokens[0]!r}")
    else:
        raise MalformedHeader("missing end_header")
    if not fmt_seen:
        raise MalformedHeader("missing format line")

    body = [ln for ln in lines[i:] if ln.strip()]
    points = np.zeros((0, 3))
    normals = np.zeros((0, 3))
    cursor = 0
    for name, count, props in elements:
        rows = body[cursor : cursor + count]
        if len(rows) != count:
            raise MalformedHeader(f"element {name}: expected {count} rows")
        cursor += count
        if name != "vertex":
            continue
        for axis in ("x", "y", "z"):
            if axis not in props:
                raise MalformedHeader(f"vertex element lacks property {axis}")
        has_n = all(p in props for p in ("nx", "ny", "nz"))
        col = {p: j for j, p in enumerate(props)}
        data = np.zeros((count, len(props)))
        for r, row in enumerate(rows):
            vals = _parse_floats(row.split(), r + 1)
            if len(vals) != len(props):
                raise MalformedHeader(f"vertex row {r}: wrong column count")
            data[r] = vals
        points = data[:, [col["x"], col["y"], col["z"]]]
        if has_n:
            normals = data[:, [col["nx"], col["ny"], col["nz"]]]
    return OrientedCloud(points, normals)


def parse_cloud(text: str | io.TextIOBase, fmt: str) -> OrientedCloud:
    """Parse a cloud from text in PLY_ASCII or XYZN_TEXT format.

    A file without normal columns yields an empty ``normals`` array, flagging
    the cloud for normal estimation.
    """
    if hasattr(text, "read"):
        text = text.read()
    if fmt == PLY_ASCII:
        return _parse_ply(text)
    if fmt == XYZN_TEXT:
        return _parse_xyzn(text)
    raise ValueError(f"unknown cloud format {fmt!r}")


def sniff_format(text: str) -> str:
    return PLY_ASCII if text.lstrip().startswith("ply") else XYZN_TEXT


def load_cloud(path) -> OrientedCloud:
    with open(path, "r", encoding="ascii") as fh:
        text = fh.read()
    return parse_cloud(text, sniff_format(text))


def write_cloud(cloud: OrientedCloud, fmt: str = XYZN_TEXT) -> str:
    """Serialize a cloud; XYZN_TEXT round-trips at full decimal precision."""
    if fmt == XYZN_TEXT:
        rows = []
        if cloud.has_normals:
            for p, n in zip(cloud.points, cloud.normals):
                rows.append(" ".join(repr(float(v)) for v in (*p, *n)))
        else:
            for p in cloud.points:
                rows.append(" ".join(repr(float(v)) for v in p))
        return "\n".join(rows) + ("\n" if rows else "")
    if fmt == PLY_ASCII:
        props = ["x", "y", "z"] + (["nx", "ny", "nz"] if cloud.has_normals else [])
        head = ["ply", "format ascii 1.0", f"element vertex {len(cloud)}"]
        head += [f"property float {p}" for p in props]
        head.append("end_header")
        rows = []
        for idx in range(len(cloud)):
            vals = list(cloud.points[idx])
            if cloud.has_normals:
                vals += list(cloud.normals[idx])
            rows.append(" ".join(repr(float(v)) for v in vals))
        return "\n".join(head + rows) + "\n"
    raise ValueError(f"unknown cloud format {fmt!r}")


def save_cloud(cloud: OrientedCloud, path, fmt: str | None = None) -> None:
    if fmt is None:
        fmt = PLY_ASCII if str(path).endswith(".ply") else XYZN_TEXT
    with open(path, "w", encoding="ascii") as fh:
        fh.write(write_cloud(cloud, fmt))


# ---------------------------------------------------------------------------
# Geometry operations


def estimate_normals(
    cloud: OrientedCloud, k: int = DEFAULT_NORMAL_K, viewpoint=(0.0, 0.0, 0.0)
) -> OrientedCloud:
    """Estimate normals by k-NN PCA, oriented toward ``viewpoint``.

    Each normal is the smallest-eigenvalue eigenvector of the covariance of
    the point and its k nearest neighbors, sign-flipped so that
    normal . (viewpoint - point) >= 0.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    n_pts = len(cloud)
    if n_pts < k + 1:
        raise TooFewPoints(f"need at least {k + 1} points, have {n_pts}")
    viewpoint = np.asarray(viewpoint, dtype=float).reshape(3)

    tree = cKDTree(cloud.points)
    _, idx = tree.query(cloud.points, k=k + 1)
    neighborhoods = cloud.points[idx]  # (N, k+1, 3)
    centered = neighborhoods - neighborhoods.mean(axis=1, keepdims=True)
    covs = np.einsum("nki,nkj->nij", centered, centered)
    eigvals, eigvecs = np.linalg.eigh(covs)
    if np.any(eigvals[:, 2] <= 1e-18):
        raise DegenerateNeighborhood("coincident neighborhood points")
    normals = eigvecs[:, :, 0]
    flip = np.einsum("ni,ni->n", normals, viewpoint - cloud.points) < 0.0
    normals[flip] *= -1.0
    normals /= np.linalg.norm(normals, axis=1, keepdims=True)
    return OrientedCloud(cloud.points.copy(), normals, frame_id=cloud.frame_id)


def _cell_keys(points: np.ndarray, res: float) -> np.ndarray:
    return np.floor(points / res).astype(np.int64)


def downsample(cloud: OrientedCloud, res: float) -> OrientedCloud:
    """One point per occupied cubic cell of edge ``res``: centroid of members
    with the normalized mean of member normals. Cells are anchored at the
    world origin so repeated calls are stable."""
    if res <= 0:
        raise ValueError("res must be positive")
    if len(cloud) == 0:
        return OrientedCloud(np.zeros((0, 3)), np.zeros((0, 3)), cloud.frame_id)
    keys = _cell_keys(cloud.points, res)
    order = np.lexsort((keys[:, 2], keys[:, 1], keys[:, 0]))
    keys_sorted = keys[order]
    boundaries = np.any(np.diff(keys_sorted, axis=0) != 0, axis=1)
    starts = np.concatenate(([0], np.nonzero(boundaries)[0] + 1))
    group_ids = np.cumsum(np.concatenate(([0], boundaries.astype(int))))
    n_cells = len(starts)

    pts_sorted = cloud.points[order]
    sums = np.zeros((n_cells, 3))
    np.add.at(sums, group_ids, pts_sorted)
    counts = np.bincount(group_ids, minlength=n_cells).astype(float)
    centroids = sums / counts[:, None]

    if cloud.has_normals:
        nrm_sorted = cloud.normals[order]
        nsums = np.zeros((n_cells, 3))
        np.add.at(nsums, group_ids, nrm_sorted)
        lens = np.linalg.norm(nsums, axis=1)
        normals = np.zeros((n_cells, 3))
        ok = lens > 1e-12
        normals[ok] = nsums[ok] / lens[ok, None]
        # opposing members cancel: fall back to the first member's normal
        for cell in np.nonzero(~ok)[0]:
            normals[cell] = nrm_sorted[starts[cell]]
    else:
        normals = np.zeros((0, 3))
    return OrientedCloud(centroids, normals, frame_id=cloud.frame_id)


def bounding_box(cloud: OrientedCloud) -> Aabb:
    """Tight componentwise min/max box of a nonempty cloud."""
    if len(cloud) == 0:
        raise EmptyCloud("bounding_box of empty cloud")
    return Aabb(cloud.points.min(axis=0), cloud.points.max(axis=0))
