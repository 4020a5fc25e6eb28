"""k-means clustering and robust centroid selection."""

import numpy as np
import pytest

from soptdpid.cluster import (
    NonConvexRegionError,
    kmeans,
    median_distance,
    robust_gains,
)
from soptdpid.explorer import DesignRanges, NoStableRegionError, sample_region
from soptdpid.placement import KpSource, NonDominantPoleType, closedloop_poles, is_stable
from soptdpid.plant import benchmark


class TestMedianDistance:
    def test_odd_count(self):
        pts = [[0.0, 0.0], [3.0, 4.0], [6.0, 8.0]]
        assert median_distance(pts, [0.0, 0.0]) == 5.0

    def test_even_count_mean_of_middle_two(self):
        pts = [[1.0], [2.0], [3.0], [10.0]]
        assert median_distance(pts, [0.0]) == 2.5

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            median_distance(np.zeros((0, 3)), [0.0, 0.0, 0.0])


class TestKmeans:
    def test_k1_is_mean(self):
        rng = np.random.default_rng(0)
        pts = rng.normal(size=(100, 3))
        res = kmeans(pts, k=1)
        assert np.allclose(res.centroids[0], pts.mean(axis=0), atol=1e-12)
        assert res.k == 1
        assert np.all(res.assignments == 0)

    def test_k1_restart_invariance(self):
        rng = np.random.default_rng(1)
        pts = rng.normal(size=(50, 3))
        a = kmeans(pts, k=1, restarts=1)
        b = kmeans(pts, k=1, restarts=10)
        assert np.array_equal(a.centroids, b.centroids)

    def test_two_well_separated_blobs(self):
        rng = np.random.default_rng(2)
        pts = np.vstack([
            rng.normal(0.0, 0.1, size=(60, 2)),
            rng.normal(10.0, 0.1, size=(40, 2)),
        ])
        res = kmeans(pts, k=2, restarts=10, seed=5)
        centers = sorted(res.centroids[:, 0])
        assert abs(centers[0] - 0.0) < 0.1
        assert abs(centers[1] - 10.0) < 0.1
        sizes = sorted(np.bincount(res.assignments))
        assert sizes == [40, 60]

    def test_determinism(self):
        rng = np.random.default_rng(3)
        pts = rng.normal(size=(80, 3))
        a = kmeans(pts, k=3, seed=11)
        b = kmeans(pts, k=3, seed=11)
        assert np.array_equal(a.centroids, b.centroids)
        assert a.within_ss == b.within_ss

    def test_within_ss_never_worse_with_more_restarts(self):
        rng = np.random.default_rng(4)
        pts = np.vstack([rng.normal(c, 0.5, size=(30, 2)) for c in (0.0, 5.0, 10.0, 15.0)])
        w1 = kmeans(pts, k=4, restarts=1, seed=9).within_ss
        w10 = kmeans(pts, k=4, restarts=10, seed=9).within_ss
        assert w10 <= w1 + 1e-9

    def test_argument_validation(self):
        with pytest.raises(ValueError):
            kmeans(np.zeros((0, 2)), k=1)
        with pytest.raises(ValueError):
            kmeans(np.zeros((5, 2)), k=6)
        with pytest.raises(ValueError):
            kmeans(np.zeros((5, 2)), k=0)


@pytest.fixture(scope="module")
def g5_dataset():
    wide = DesignRanges(omega_cl_range=(0.0, 10.0))
    return sample_region(benchmark("G5"), NonDominantPoleType.ALL_REAL,
                         wide, 5000, seed=7, plant_id="G5")


class TestRobustGains:

    def test_centroid_is_mean_of_stable_cloud(self, g5_dataset):
        gains = robust_gains(g5_dataset)
        from soptdpid.explorer import best_expression
        pts = g5_dataset.stable_gains(best_expression(g5_dataset))
        assert np.allclose(gains.as_array(), pts.mean(axis=0), atol=1e-12)

    def test_centroid_verified_stable(self, g5_dataset):
        gains = robust_gains(g5_dataset)
        assert is_stable(closedloop_poles(g5_dataset.model, gains))

    def test_explicit_source_override(self, g5_dataset):
        g1 = robust_gains(g5_dataset, which=KpSource.S1)
        pts = g5_dataset.stable_gains(KpSource.S1)
        assert np.allclose(g1.as_array(), pts.mean(axis=0), atol=1e-12)

    def test_empty_region_raises(self):
        ds = sample_region(benchmark("G1"), NonDominantPoleType.ALL_COMPLEX,
                           DesignRanges(), 0, seed=0)
        with pytest.raises(NoStableRegionError):
            robust_gains(ds)

    def test_nonconvex_centroid_rejected(self, g5_dataset):
        # Craft a dataset whose "stable" flags select two distant gain triples
        # whose mean does not stabilize the plant.
        from dataclasses import replace
        model = g5_dataset.model
        a = np.array([0.3531, 0.3623, 1.0217])
        gains = g5_dataset.gains.copy()
        stable = np.zeros_like(g5_dataset.stable)
        gains[0, 0] = a
        gains[0, 1] = np.array([-6.0, -3.0, -6.0])
        stable[0, 0] = True
        stable[0, 1] = True  # forged flag: the pair's mean is unstable
        ds = replace(g5_dataset, gains=gains, stable=stable)
        with pytest.raises(NonConvexRegionError):
            robust_gains(ds, which=KpSource.S1)
