import io

import numpy as np
import pytest

from graspmatch.cloud import (
    Aabb,
    OrientedCloud,
    PLY_ASCII,
    XYZN_TEXT,
    bounding_box,
    downsample,
    estimate_normals,
    merge_clouds,
    parse_cloud,
    sniff_format,
    write_cloud,
)
from graspmatch.errors import (
    EmptyCloud,
    MalformedHeader,
    NonFiniteCoordinate,
    NormalCountMismatch,
    TooFewPoints,
)


def unit_sphere_cloud(n=400, radius=0.1, seed=7):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=(n, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return OrientedCloud(radius * v, v)


PLY_SAMPLE = """ply
format ascii 1.0
comment test fixture
element vertex 2
property float x
property float y
property float z
property float nx
property float ny
property float nz
end_header
0.0 0.0 0.0 0.0 0.0 1.0
0.5 -0.25 1.0 1.0 0.0 0.0
"""


class TestParse:
    def test_ply_roundtrip_values(self):
        cloud = parse_cloud(PLY_SAMPLE, PLY_ASCII)
        assert len(cloud) == 2
        assert np.allclose(cloud.points[1], [0.5, -0.25, 1.0])
        assert np.allclose(cloud.normals[0], [0.0, 0.0, 1.0])

    def test_ply_without_normals(self):
        text = "\n".join(
            [
                "ply",
                "format ascii 1.0",
                "element vertex 1",
                "property float x",
                "property float y",
                "property float z",
                "end_header",
                "1 2 3",
                "",
            ]
        )
        cloud = parse_cloud(text, PLY_ASCII)
        assert len(cloud) == 1
        assert not cloud.has_normals

    def test_ply_from_stream(self):
        cloud = parse_cloud(io.StringIO(PLY_SAMPLE), PLY_ASCII)
        assert len(cloud) == 2

    def test_xyzn_text(self):
        text = "# comment\n0 0 0 0 0 1\n1 1 1 1 0 0\n"
        cloud = parse_cloud(text, XYZN_TEXT)
        assert len(cloud) == 2
        assert cloud.has_normals

    def test_xyzn_points_only(self):
        cloud = parse_cloud("0 0 0\n1 2 3\n", XYZN_TEXT)
        assert len(cloud) == 2
        assert not cloud.has_normals

    def test_missing_magic_raises(self):
        with pytest.raises(MalformedHeader):
            parse_cloud("plx\nend_header\n", PLY_ASCII)

    def test_truncated_body_raises(self):
        bad = PLY_SAMPLE.replace("element vertex 2", "element vertex 3")
        with pytest.raises(MalformedHeader):
            parse_cloud(bad, PLY_ASCII)

    def test_nan_coordinate_raises(self):
        with pytest.raises(NonFiniteCoordinate):
            parse_cloud("0 0 nan 0 0 1\n", XYZN_TEXT)

    def test_mixed_column_counts_raise(self):
        with pytest.raises(NormalCountMismatch):
            parse_cloud("0 0 0 0 0 1\n1 1 1\n", XYZN_TEXT)

    def test_sniff(self):
        assert sniff_format(PLY_SAMPLE) == PLY_ASCII
        assert sniff_format("0 0 0\n") == XYZN_TEXT


class TestWrite:
    def test_xyzn_roundtrip_exact(self):
        cloud = unit_sphere_cloud(50)
        back = parse_cloud(write_cloud(cloud, XYZN_TEXT), XYZN_TEXT)
        assert np.array_equal(back.points, cloud.points)
        assert np.array_equal(back.normals, cloud.normals)

    def test_ply_roundtrip_exact(self):
        cloud = unit_sphere_cloud(50)
        back = parse_cloud(write_cloud(cloud, PLY_ASCII), PLY_ASCII)
        assert np.array_equal(back.points, cloud.points)
        assert np.array_equal(back.normals, cloud.normals)


class TestValidate:
    def test_normal_count_mismatch(self):
        with pytest.raises(NormalCountMismatch):
            OrientedCloud(np.zeros((2, 3)), np.array([[0.0, 0.0, 1.0]]))

    def test_non_unit_normal_rejected(self):
        cloud = OrientedCloud(np.zeros((1, 3)), np.array([[0.0, 0.0, 0.5]]))
        with pytest.raises(NonFiniteCoordinate):
            cloud.validate()

    def test_valid_cloud_passes(self):
        unit_sphere_cloud(20).validate()


class TestEstimateNormals:
    def test_sphere_normals_radial(self):
        # viewpoint far outside flips all normals outward; PCA direction
        # must agree with the exact radial normal within 5 degrees
        rng = np.random.default_rng(3)
        v = rng.normal(size=(2000, 3))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        pts = 0.1 * v
        est = estimate_normals(
            OrientedCloud(pts, np.zeros((0, 3))), k=10, viewpoint=(10.0, 0.0, 0.0)
        )
        visible = v[:, 0] > 0.3
        dots = np.einsum("ni,ni->n", est.normals[visible], v[visible])
        assert np.all(np.abs(dots) > np.cos(np.radians(5.0)))

    def test_plane_normals_exact(self):
        rng = np.random.default_rng(11)
        pts = np.column_stack(
            [rng.uniform(size=200), rng.uniform(size=200), np.zeros(200)]
        )
        est = estimate_normals(
            OrientedCloud(pts, np.zeros((0, 3))), k=8, viewpoint=(0.0, 0.0, 5.0)
        )
        assert np.allclose(est.normals[:, 2], 1.0, atol=1e-9)

    def test_viewpoint_orientation(self):
        rng = np.random.default_rng(2)
        pts = np.column_stack(
            [rng.uniform(size=100), rng.uniform(size=100), np.zeros(100)]
        )
        below = estimate_normals(
            OrientedCloud(pts, np.zeros((0, 3))), k=8, viewpoint=(0.5, 0.5, -3.0)
        )
        assert np.all(below.normals[:, 2] < 0)

    def test_too_few_points(self):
        with pytest.raises(TooFewPoints):
            estimate_normals(OrientedCloud(np.zeros((3, 3)), np.zeros((0, 3))), k=5)

    def test_unit_length_output(self):
        est = estimate_normals(unit_sphere_cloud(100), k=6)
        assert np.allclose(np.linalg.norm(est.normals, axis=1), 1.0)


class TestDownsample:
    def test_cell_count_matches_hash_oracle(self):
        cloud = unit_sphere_cloud(500)
        res = 0.03
        out = downsample(cloud, res)
        expected = {tuple(np.floor(p / res).astype(int)) for p in cloud.points}
        assert len(out) == len(expected)

    def test_centroid_of_single_cell(self):
        pts = np.array([[0.001, 0.001, 0.001], [0.003, 0.001, 0.001]])
        nrm = np.array([[0.0, 0.0, 1.0], [0.0, 1.0, 0.0]])
        out = downsample(OrientedCloud(pts, nrm), 0.01)
        assert len(out) == 1
        assert np.allclose(out.points[0], [0.002, 0.001, 0.001])
        assert np.allclose(out.normals[0], np.array([0, 1, 1]) / np.sqrt(2))

    def test_opposing_normals_fall_back(self):
        pts = np.array([[0.001, 0.0, 0.0], [0.002, 0.0, 0.0]])
        nrm = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]])
        out = downsample(OrientedCloud(pts, nrm), 0.01)
        assert len(out) == 1
        assert np.linalg.norm(out.normals[0]) == pytest.approx(1.0)

    def test_idempotent_when_sparse(self):
        cloud = unit_sphere_cloud(300)
        once = downsample(cloud, 0.02)
        twice = downsample(once, 0.02)
        assert len(once) == len(twice)

    def test_output_unit_normals(self):
        out = downsample(unit_sphere_cloud(400), 0.05)
        assert np.allclose(np.linalg.norm(out.normals, axis=1), 1.0)

    def test_empty_input(self):
        out = downsample(OrientedCloud(np.zeros((0, 3)), np.zeros((0, 3))), 0.01)
        assert len(out) == 0


class TestBoundingBox:
    def test_matches_linear_scan(self):
        cloud = unit_sphere_cloud(200)
        box = bounding_box(cloud)
        lo = np.array([min(p[i] for p in cloud.points) for i in range(3)])
        hi = np.array([max(p[i] for p in cloud.points) for i in range(3)])
        assert np.array_equal(box.min, lo)
        assert np.array_equal(box.max, hi)

    def test_empty_raises(self):
        with pytest.raises(EmptyCloud):
            bounding_box(OrientedCloud(np.zeros((0, 3)), np.zeros((0, 3))))

    def test_inflated(self):
        box = Aabb([0, 0, 0], [1, 1, 1]).inflated(0.25)
        assert np.allclose(box.min, -0.25)
        assert np.allclose(box.max, 1.25)

    def test_degenerate_box_allowed(self):
        box = bounding_box(OrientedCloud(np.zeros((1, 3)), np.zeros((0, 3))))
        assert np.allclose(box.extent, 0.0)


class TestMerge:
    def test_merge_concatenates(self):
        a = unit_sphere_cloud(10, seed=1)
        b = unit_sphere_cloud(20, seed=2)
        m = merge_clouds([a, b])
        assert len(m) == 30

    def test_merge_mixed_normals_raises(self):
        a = unit_sphere_cloud(10)
        b = OrientedCloud(np.zeros((5, 3)), np.zeros((0, 3)))
        with pytest.raises(NormalCountMismatch):
            merge_clouds([a, b])
