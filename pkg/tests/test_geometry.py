import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kvariates import (
    CenterSet,
    Dataset,
    PotentialBreakdown,
    brute_force_optimum,
    centroid,
    enclosing_radius,
    phi_bias,
    phi_variance,
    potential,
    sq_dist,
    total_jensen,
)
from kvariates.densities import (
    LocalDensity,
    dirac_densities,
    product_laplace_densities,
)
from kvariates.geometry import Distortion, pairwise_sq_dists


def norm_sq(x):
    return float(np.sum(np.atleast_1d(np.asarray(x, float)) ** 2))


class TestSqDist:
    def test_identity(self):
        assert sq_dist(np.array([0.0, 0.0]), np.array([0.0, 0.0])) == 0.0

    def test_three_four_five(self):
        assert sq_dist(np.array([0.0, 0.0]), np.array([3.0, 4.0])) == 25.0

    def test_matches_coordinate_loop(self):
        rng = np.random.default_rng(5)
        a, b = rng.normal(size=5), rng.normal(size=5)
        acc = 0.0
        for i in range(5):
            acc += (a[i] - b[i]) ** 2
        assert sq_dist(a, b) == pytest.approx(acc, rel=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            sq_dist(np.zeros(2), np.zeros(3))


class TestPotential:
    def test_single_point_at_center(self):
        data = Dataset.from_points([[0.0, 0.0]])
        assert potential(data, np.array([[0.0, 0.0]])) == 0.0

    def test_middle_point_between_centers(self):
        data = Dataset.from_points([[0.0, 0.0], [2.0, 0.0], [4.0, 0.0]])
        centers = np.array([[0.0, 0.0], [4.0, 0.0]])
        assert potential(data, centers) == pytest.approx(4.0)

    def test_matches_exhaustive_nearest_sum(self):
        rng = np.random.default_rng(11)
        pts = rng.normal(size=(10, 3))
        centers = rng.normal(size=(2, 3))
        expected = 0.0
        for a in pts:
            expected += min(sq_dist(a, c) for c in centers)
        assert potential(Dataset.from_points(pts), centers) == pytest.approx(
            expected, rel=1e-12
        )

    def test_empty_centers_rejected(self):
        data = Dataset.from_points([[0.0]])
        with pytest.raises(ValueError):
            potential(data, np.zeros((0, 1)))

    def test_monotone_in_centers(self):
        rng = np.random.default_rng(3)
        for trial in range(20):
            pts = rng.normal(size=(12, 2))
            data = Dataset.from_points(pts)
            centers = rng.normal(size=(3, 2))
            extra = np.vstack([centers, rng.normal(size=(1, 2))])
            assert potential(data, extra) <= potential(data, centers) + 1e-12


class TestCentroid:
    def test_single(self):
        assert np.allclose(centroid(Dataset.from_points([[0.0, 0.0]])), [0, 0])

    def test_midpoint(self):
        data = Dataset.from_points([[0.0, 0.0], [2.0, 0.0]])
        assert np.allclose(centroid(data), [1.0, 0.0])

    def test_coordinate_mean(self):
        data = Dataset.from_points([[1.0, 1.0], [3.0, 5.0], [5.0, 3.0]])
        assert np.allclose(centroid(data), [3.0, 3.0])


class TestBruteForceOptimum:
    def test_line_instance(self):
        data = Dataset.from_points([[0.0], [1.0], [4.0]])
        centers, phi_opt = brute_force_optimum(data, 2)
        assert phi_opt == pytest.approx(0.5)
        assert np.allclose(sorted(centers.centers.ravel()), [0.5, 4.0])

    def test_k_equals_m(self):
        data = Dataset.from_points([[0.0], [2.0], [5.0], [9.0]])
        _, phi_opt = brute_force_optimum(data, 4)
        assert phi_opt == pytest.approx(0.0, abs=1e-12)

    def test_k_one_is_centroid_cost(self):
        rng = np.random.default_rng(2)
        pts = rng.normal(size=(6, 2))
        data = Dataset.from_points(pts)
        centers, phi_opt = brute_force_optimum(data, 1)
        c = centroid(data)
        assert np.allclose(centers.centers[0], c)
        assert phi_opt == pytest.approx(sum(sq_dist(a, c) for a in pts))

    def test_guard(self):
        data = Dataset.from_points(np.zeros((15, 1)))
        with pytest.raises(ValueError):
            brute_force_optimum(data, 2)
        with pytest.raises(ValueError):
            brute_force_optimum(Dataset.from_points([[0.0]]), 2)

    def test_beats_every_centroid_partition(self):
        # exhaustive optimality over all k-partitions at small m
        from kvariates.geometry import _restricted_growth_strings

        rng = np.random.default_rng(8)
        pts = rng.normal(size=(8, 2))
        data = Dataset.from_points(pts)
        for k in (2, 3):
            best_centers, _ = brute_force_optimum(data, k)
            phi_star = potential(data, best_centers)
            for labels in _restricted_growth_strings(8, k):
                centers = np.stack(
                    [pts[labels == b].mean(axis=0) for b in range(k)]
                )
                assert phi_star <= potential(data, centers) + 1e-9


class TestPhiBias:
    def test_dirac_equals_phi_opt(self):
        rng = np.random.default_rng(4)
        data = Dataset.from_points(rng.normal(size=(7, 2)))
        c_opt, phi_opt = brute_force_optimum(data, 2)
        assert phi_bias(data, dirac_densities(data), c_opt) == pytest.approx(phi_opt)

    def test_zero_when_means_sit_on_centers(self):
        data = Dataset.from_points([[0.0], [1.0], [4.0]])
        c_opt, _ = brute_force_optimum(data, 2)
        own = pairwise_sq_dists(data.points, c_opt.centers).argmin(axis=1)
        dens = [
            LocalDensity.dirac(c_opt.centers[own[i]], owner=i) for i in range(3)
        ]
        assert phi_bias(data, dens, c_opt) == pytest.approx(0.0, abs=1e-12)

    def test_laplace_means_on_line_instance(self):
        data = Dataset.from_points([[0.0], [1.0], [4.0]])
        c_opt, phi_opt = brute_force_optimum(data, 2)
        dens = product_laplace_densities(data, 0.3)
        assert phi_bias(data, dens, c_opt) == pytest.approx(phi_opt) == 0.5


class TestPhiVariance:
    def test_dirac_zero(self):
        data = Dataset.from_points(np.arange(6.0).reshape(3, 2))
        assert phi_variance(dirac_densities(data)) == 0.0

    def test_laplace_closed_form(self):
        # scale b = sigma/sqrt(2) gives variance sigma^2 per coordinate
        sigma = 0.7
        rng = np.random.default_rng(6)
        data = Dataset.from_points(rng.normal(size=(10, 3)))
        dens = product_laplace_densities(data, sigma / math.sqrt(2))
        assert phi_variance(dens) == pytest.approx(10 * 3 * sigma**2, rel=1e-12)

    def test_uniform_on_subset_equals_peer_spread(self):
        from kvariates import PeerNetwork, forgy_spread

        rng = np.random.default_rng(9)
        pts = rng.normal(size=(9, 2))
        data = Dataset.from_points(pts)
        assign = np.array([0, 0, 0, 1, 1, 1, 2, 2, 2])
        net = PeerNetwork.from_assignment(data, assign)
        dens = [
            LocalDensity.uniform_on_subset(pts[assign == assign[i]], owner=i)
            for i in range(9)
        ]
        assert phi_variance(dens) == pytest.approx(forgy_spread(net), rel=1e-9)


class TestEnclosingRadius:
    def test_single_point(self):
        data = Dataset.from_points([[1.0, 2.0]])
        assert enclosing_radius(data, "l2") == 0.0
        assert enclosing_radius(data, "l1") == 0.0

    def test_l2_diameter(self):
        data = Dataset.from_points([[0.0, 0.0], [2.0, 0.0]])
        assert enclosing_radius(data, "l2") == pytest.approx(2.0)

    def test_l1_upper_bounds_half_diameter(self):
        rng = np.random.default_rng(10)
        pts = rng.uniform(-3, 3, size=(20, 4))
        data = Dataset.from_points(pts)
        r = enclosing_radius(data, "l1")
        pair_max = max(
            np.abs(a - b).sum() for a in pts for b in pts
        )
        assert r >= pair_max / 2 - 1e-12
        # and it covers every point from the midrange center
        center = 0.5 * (pts.min(axis=0) + pts.max(axis=0))
        assert r >= np.abs(pts - center).sum(axis=1).max() - 1e-12


class TestTotalJensen:
    def test_equal_points(self):
        a = np.array([1.0, 2.0])
        assert total_jensen(a, a, 0.5, norm_sq) == 0.0

    def test_hand_evaluation(self):
        val = total_jensen(np.array([0.0]), np.array([2.0]), 0.5, norm_sq)
        assert val == pytest.approx(1.0 / math.sqrt(5.0), rel=1e-12)

    def test_never_exceeds_plain_jensen(self):
        rng = np.random.default_rng(12)
        for _ in range(200):
            a, b = rng.normal(size=2), rng.normal(size=2)
            alpha = rng.uniform(0.1, 0.9)
            tj = total_jensen(a, b, alpha, norm_sq)
            j = alpha * norm_sq(a) + (1 - alpha) * norm_sq(b) - norm_sq(
                alpha * a + (1 - alpha) * b
            )
            assert tj <= j + 1e-12

    @settings(max_examples=200, deadline=None)
    @given(
        st.lists(st.floats(-50, 50), min_size=2, max_size=2),
        st.lists(st.floats(-50, 50), min_size=2, max_size=2),
        st.floats(0.01, 0.99),
    )
    def test_nonnegative_for_convex_generator(self, a, b, alpha):
        val = total_jensen(np.array(a), np.array(b), alpha, norm_sq)
        assert val >= -1e-9

    def test_distortion_plugs_into_potential(self):
        data = Dataset.from_points([[0.0], [2.0]])
        dist = Distortion.jensen(0.5, norm_sq)
        val = potential(data, np.array([[0.0]]), dist)
        assert val == pytest.approx(1.0 / math.sqrt(5.0))


class TestPotentialBreakdown:
    def test_theorem_composition(self):
        b = PotentialBreakdown(phi_opt=1.0, phi_bias=2.0, phi_variance=3.0, eta=0.5)
        assert b.phi == pytest.approx((6 + 2) * 1.0 + 4.0 + 6.0)

    def test_dirac_reduction_gives_eight(self):
        # point-mass densities: bias = optimal, variance = 0, eta = 0
        b = PotentialBreakdown(phi_opt=2.0, phi_bias=2.0, phi_variance=0.0)
        assert b.phi == pytest.approx(8 * 2.0)

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            PotentialBreakdown(-1.0, 0.0, 0.0)


class TestDatasetValidation:
    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            Dataset.from_points(np.zeros((0, 2)))

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            Dataset.from_points([[np.nan]])

    def test_rejects_nonpositive_weights(self):
        with pytest.raises(ValueError):
            Dataset.from_points([[0.0], [1.0]], weights=[1.0, 0.0])

    def test_immutable(self):
        data = Dataset.from_points([[0.0], [1.0]])
        with pytest.raises(ValueError):
            data.points[0, 0] = 5.0

    def test_center_set_alignment(self):
        with pytest.raises(ValueError):
            CenterSet(np.zeros((2, 1)), provenance=(None,))
