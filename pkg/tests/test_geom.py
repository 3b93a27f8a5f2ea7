import math

import numpy as np
import pytest

from promptfill.geom import (
    PointCloud,
    SpatialIndex,
    MetricsConfig,
    chamfer_l2,
    fps,
    fscore,
    knn,
    load_xyz,
    load_xyz_binary,
    mmd,
    normalize_unit_sphere,
    save_xyz,
    save_xyz_binary,
    tmd,
    uhd,
)


class TestPointCloud:
    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            PointCloud(np.zeros((0, 3)))

    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            PointCloud(np.array([[0.0, np.nan, 0.0]]))

    def test_rejects_inf(self):
        with pytest.raises(ValueError):
            PointCloud(np.array([[0.0, np.inf, 0.0]]))

    def test_rejects_bad_shape(self):
        with pytest.raises(ValueError):
            PointCloud(np.zeros((4, 2)))


class TestNormalize:
    def test_identity_case(self):
        pts = np.array([[1.0, 0, 0], [-1.0, 0, 0]])
        out, center, scale = normalize_unit_sphere(pts)
        np.testing.assert_array_equal(out.points, pts)
        np.testing.assert_array_equal(center, [0, 0, 0])
        assert scale == 1.0

    def test_two_point_line(self):
        out, center, scale = normalize_unit_sphere([[2.0, 0, 0], [4.0, 0, 0]])
        np.testing.assert_allclose(out.points, [[-1, 0, 0], [1, 0, 0]])
        np.testing.assert_allclose(center, [3, 0, 0])
        assert scale == 1.0

    def test_single_point_degenerate(self):
        out, center, scale = normalize_unit_sphere([[5.0, 5.0, 5.0]])
        np.testing.assert_array_equal(out.points, [[0, 0, 0]])
        np.testing.assert_allclose(center, [5, 5, 5])
        assert scale == 1.0

    def test_postconditions_random(self):
        rng = np.random.default_rng(3)
        pts = rng.normal(size=(200, 3)) * 7 + 4
        out, center, scale = normalize_unit_sphere(pts)
        assert np.abs(out.points.mean(axis=0)).max() < 1e-9
        norms = np.sqrt((out.points**2).sum(axis=1))
        assert abs(norms.max() - 1.0) < 1e-12
        np.testing.assert_allclose(out.points * scale + center, pts, atol=1e-12)


class TestFps:
    def test_exhaustive_m_equals_n(self):
        rng = np.random.default_rng(0)
        pts = rng.normal(size=(17, 3))
        idx = fps(pts, 17)
        assert sorted(idx.tolist()) == list(range(17))

    def test_collinear_hand_case(self):
        pts = [[0.0, 0, 0], [1.0, 0, 0], [10.0, 0, 0]]
        assert fps(pts, 2).tolist() == [2, 0]

    def test_m1_farthest_from_centroid(self):
        pts = [[0.0, 0, 0], [3.0, 0, 0], [1.0, 0, 0]]
        assert fps(pts, 1).tolist() == [1]

    def test_error_on_oversample(self):
        with pytest.raises(ValueError, match="exceeds cloud"):
            fps([[0.0, 0, 0]], 2)

    def test_distinct_indices(self):
        rng = np.random.default_rng(5)
        pts = rng.normal(size=(40, 3))
        idx = fps(pts, 25)
        assert len(set(idx.tolist())) == 25

    def test_duplicate_points_still_distinct(self):
        pts = np.zeros((5, 3))
        idx = fps(pts, 5)
        assert sorted(idx.tolist()) == [0, 1, 2, 3, 4]

    def test_min_pairwise_distance_nonincreasing(self):
        rng = np.random.default_rng(11)
        pts = rng.normal(size=(64, 3))
        prev = math.inf
        for m in range(2, 30):
            sel = pts[fps(pts, m)]
            d2 = ((sel[:, None] - sel[None]) ** 2).sum(axis=2)
            np.fill_diagonal(d2, np.inf)
            cur = d2.min()
            assert cur <= prev + 1e-12
            prev = cur

    def test_prefix_stability(self):
        # growing m only appends picks
        rng = np.random.default_rng(13)
        pts = rng.normal(size=(50, 3))
        full = fps(pts, 30).tolist()
        assert fps(pts, 12).tolist() == full[:12]


class TestKnn:
    def test_self_query(self):
        rng = np.random.default_rng(2)
        pts = rng.normal(size=(30, 3))
        idx = knn(pts, pts, 1)
        assert idx[:, 0].tolist() == list(range(30))

    def test_hand_case(self):
        ref = [[1.0, 0, 0], [2.0, 0, 0], [3.0, 0, 0]]
        idx = knn([[0.0, 0, 0]], ref, 2)
        assert idx.tolist() == [[0, 1]]

    def test_tie_lowest_index(self):
        ref = [[1.0, 0, 0], [-1.0, 0, 0]]
        idx = knn([[0.0, 0, 0]], ref, 1)
        assert idx.tolist() == [[0]]

    def test_k_exceeds_reference_errors(self):
        with pytest.raises(ValueError):
            knn([[0.0, 0, 0]], [[1.0, 0, 0]], 2)

    def test_accepts_prebuilt_index(self):
        ref = np.arange(30, dtype=float).reshape(10, 3)
        si = SpatialIndex(ref)
        idx = knn(ref[:3], si, 2)
        assert idx.shape == (3, 2)


class TestChamfer:
    def test_identity_zero(self):
        rng = np.random.default_rng(4)
        pts = rng.normal(size=(20, 3))
        assert chamfer_l2(pts, pts) == 0.0

    def test_single_point_pair(self):
        assert chamfer_l2([[0.0, 0, 0]], [[1.0, 0, 0]]) == 2.0

    def test_two_to_one(self):
        assert chamfer_l2([[0.0, 0, 0], [1.0, 0, 0]], [[0.0, 0, 0]]) == 0.5

    def test_symmetry(self):
        rng = np.random.default_rng(6)
        P, Q = rng.normal(size=(25, 3)), rng.normal(size=(31, 3))
        assert chamfer_l2(P, Q) == chamfer_l2(Q, P)

    def test_zero_iff_mutual_subset(self):
        P = np.array([[0.0, 0, 0], [1.0, 0, 0]])
        Q = np.array([[1.0, 0, 0], [0.0, 0, 0], [0.0, 0, 0]])
        assert chamfer_l2(P, Q) == 0.0
        assert chamfer_l2(P, np.array([[0.0, 0, 0], [1.0, 0, 0], [2.0, 0, 0]])) > 0


class TestFscore:
    def test_identity(self):
        rng = np.random.default_rng(7)
        pts = rng.normal(size=(15, 3))
        assert fscore(pts, pts, 0.01) == (1.0, 1.0, 1.0)

    def test_disjoint(self):
        assert fscore([[0.0, 0, 0]], [[100.0, 0, 0]], 0.01) == (0.0, 0.0, 0.0)

    def test_hand_case(self):
        p, r, f1 = fscore([[0.0, 0, 0], [1.0, 0, 0]], [[0.0, 0, 0]], 0.01)
        assert (p, r) == (0.5, 1.0)
        assert abs(f1 - 2.0 / 3.0) < 1e-15

    def test_threshold_must_be_positive(self):
        with pytest.raises(ValueError):
            fscore([[0.0, 0, 0]], [[0.0, 0, 0]], 0.0)


class TestUhd:
    def test_subset_zero(self):
        rng = np.random.default_rng(8)
        partial = rng.normal(size=(10, 3))
        completed = np.vstack([partial, rng.normal(size=(5, 3))])
        assert uhd(partial, completed) == 0.0

    def test_single_distance(self):
        assert uhd([[0.0, 0, 0]], [[0.0, 3, 4]]) == 5.0

    def test_max_rule(self):
        assert uhd([[0.0, 0, 0], [10.0, 0, 0]], [[0.0, 0, 0]]) == 10.0


class TestTmd:
    def test_identical_clouds_zero(self):
        pts = np.ones((4, 3))
        assert tmd([pts, pts, pts]) == 0.0

    def test_k2_hand_case(self):
        assert tmd([[[0.0, 0, 0]], [[1.0, 0, 0]]]) == 4.0

    def test_permutation_invariant(self):
        rng = np.random.default_rng(9)
        clouds = [rng.normal(size=(12, 3)) for _ in range(5)]
        ref = tmd(clouds)
        assert tmd(clouds[::-1]) == ref
        assert tmd([clouds[i] for i in [2, 0, 4, 1, 3]]) == ref

    def test_k1_errors(self):
        with pytest.raises(ValueError, match="diversity undefined"):
            tmd([np.ones((3, 3))])


class TestMmd:
    def test_gt_among_completions(self):
        gt = np.array([[0.5, 0.5, 0.5], [1.0, 0, 0]])
        assert mmd([gt + 1.0, gt], gt) == 0.0

    def test_min_rule(self):
        gt = [[0.0, 0, 0]]
        comps = [[[1.0, 0, 0]], [[0.5, 0, 0]]]
        assert mmd(comps, gt) == 0.5

    def test_extra_completion_never_increases(self):
        rng = np.random.default_rng(10)
        gt = rng.normal(size=(8, 3))
        comps = [rng.normal(size=(8, 3)) for _ in range(3)]
        base = mmd(comps, gt)
        assert mmd(comps + [rng.normal(size=(8, 3))], gt) <= base


class TestRigidMotionInvariance:
    def _rotation(self, rng):
        q = rng.normal(size=4)
        q /= np.linalg.norm(q)
        w, x, y, z = q
        return np.array(
            [
                [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
                [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
                [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
            ]
        )

    def test_metrics_invariant(self):
        rng = np.random.default_rng(12)
        P, Q = rng.normal(size=(40, 3)), rng.normal(size=(35, 3))
        R = self._rotation(rng)
        t = rng.normal(size=3)
        Pr, Qr = P @ R.T + t, Q @ R.T + t
        assert abs(chamfer_l2(P, Q) - chamfer_l2(Pr, Qr)) <= 1e-9
        assert abs(uhd(P, Q) - uhd(Pr, Qr)) <= 1e-9
        f_ref = fscore(P, Q, 0.5)
        f_rot = fscore(Pr, Qr, 0.5)
        assert all(abs(a - b) <= 1e-9 for a, b in zip(f_ref, f_rot))


class TestMetricsConfig:
    def test_defaults(self):
        cfg = MetricsConfig()
        assert cfg.fscore_threshold == 0.01
        assert (cfg.cd_scale, cfg.tmd_scale, cfg.uhd_scale, cfg.mmd_scale) == (1e3, 1e2, 1e2, 1e3)
        assert cfg.k_completions == 10

    def test_rejects_bad_values(self):
        with pytest.raises(ValueError):
            MetricsConfig(fscore_threshold=-1)
        with pytest.raises(ValueError):
            MetricsConfig(k_completions=1)
        with pytest.raises(ValueError):
            MetricsConfig(cd_scale=0)


class TestCloudIO:
    def test_xyz_roundtrip(self, tmp_path):
        rng = np.random.default_rng(14)
        pts = rng.normal(size=(37, 3))
        path = tmp_path / "cloud.xyz"
        save_xyz(path, pts)
        back = load_xyz(path)
        np.testing.assert_array_equal(back.points, pts)

    def test_binary_roundtrip_f32_exact(self, tmp_path):
        rng = np.random.default_rng(15)
        pts = rng.normal(size=(53, 3)).astype(np.float32).astype(np.float64)
        path = tmp_path / "cloud.bin"
        save_xyz_binary(path, pts)
        back = load_xyz_binary(path)
        np.testing.assert_array_equal(back.points, pts)

    def test_binary_truncation_detected(self, tmp_path):
        path = tmp_path / "bad.bin"
        save_xyz_binary(path, np.ones((4, 3)))
        data = path.read_bytes()
        path.write_bytes(data[:-5])
        with pytest.raises(ValueError, match="truncated"):
            load_xyz_binary(path)

    def test_xyz_malformed_line(self, tmp_path):
        path = tmp_path / "bad.xyz"
        path.write_text("1 2 3\n4 5\n")
        with pytest.raises(ValueError, match="bad.xyz:2"):
            load_xyz(path)
