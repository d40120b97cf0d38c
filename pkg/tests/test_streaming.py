import math

import numpy as np
import pytest

from kvariates import (
    Dataset,
    MinibatchStream,
    brute_force_optimum,
    build_synopses_online,
    build_synopses_uniform,
    estimate_varsigma,
    kmeanspp_seed,
    okmeans_run,
    potential,
    probe_spread,
    skmeans,
)


class TestOnlineBuilder:
    def test_capacity_at_least_stream_gives_identity(self):
        rng = np.random.default_rng(0)
        pts = rng.normal(size=(7, 2))
        s = build_synopses_online(Dataset.from_points(pts), n=10)
        assert np.array_equal(s.points, pts)
        assert np.all(s.counts == 1)

    def test_constant_stream_single_synopsis(self):
        pts = np.tile([[2.0, 2.0]], (9, 1))
        s = build_synopses_online(Dataset.from_points(pts), n=4)
        assert s.size == 1
        assert s.counts[0] == 9

    def test_counts_sum_to_stream_length(self):
        rng = np.random.default_rng(1)
        for trial in range(10):
            m = int(rng.integers(5, 60))
            pts = rng.normal(size=(m, 2))
            s = build_synopses_online(Dataset.from_points(pts), n=5)
            assert s.consumed == pytest.approx(m)

    def test_running_mean_matches_assignment_mean(self):
        pts = np.array([[0.0], [10.0], [0.5], [-0.5]])
        s = build_synopses_online(Dataset.from_points(pts), n=2)
        # 0.5 and -0.5 join the synopsis seeded at 0
        assert s.size == 2
        assert s.counts.tolist() == [3.0, 1.0]
        assert s.points[0, 0] == pytest.approx((0 + 0.5 - 0.5) / 3)


class TestUniformBuilder:
    def test_identity_when_capacity_covers(self):
        rng = np.random.default_rng(2)
        pts = rng.normal(size=(6, 2))
        s = build_synopses_uniform(Dataset.from_points(pts), n=6, rng_seed=1)
        assert np.array_equal(s.points, pts)
        assert np.all(s.counts == 1)

    def test_counts_sum_to_m(self):
        rng = np.random.default_rng(3)
        pts = rng.normal(size=(40, 2))
        s = build_synopses_uniform(Dataset.from_points(pts), n=7, rng_seed=2)
        assert s.consumed == pytest.approx(40)

    def test_reservoir_marginal_inclusion(self):
        from scipy.stats import chisquare

        rng = np.random.default_rng(4)
        pts = rng.normal(size=(10, 1))
        data = Dataset.from_points(pts)
        n = 3
        counts = np.zeros(10)
        trials = 10_000
        for seed in range(trials):
            s = build_synopses_uniform(data, n=n, rng_seed=seed)
            for row in s.points:
                counts[np.flatnonzero((pts == row).all(axis=1))[0]] += 1
        # marginal inclusion n/m for every index
        assert chisquare(counts).pvalue > 0.001
        assert np.allclose(counts / trials, n / 10, atol=0.02)


class TestSkmeans:
    def test_identity_synopses_match_classical(self):
        rng = np.random.default_rng(5)
        pts = rng.normal(size=(12, 2))
        data = Dataset.from_points(pts)
        for seed in range(15):
            a = skmeans(data, n=12, k=4, rng_seed=seed)
            b = kmeanspp_seed(data, 4, seed=seed)
            assert np.array_equal(a.centers, b.centers)

    def test_weight_vectors_sum_to_one(self):
        rng = np.random.default_rng(6)
        data = Dataset.from_points(rng.normal(size=(30, 2)))
        trace = []
        skmeans(data, n=6, k=4, rng_seed=3, trace=trace)
        assert len(trace) == 4
        for w in trace:
            assert w.sum() == pytest.approx(1.0, rel=1e-9)

    def test_count_weighted_pick_probabilities(self):
        # counts {3,1} with equal distances give picks (0.75, 0.25)
        data = Dataset.from_points([[0.0], [0.0], [0.0], [2.0]])
        trace = []
        skmeans(data, n=2, k=2, rng_seed=0, trace=trace)
        # second draw: centers hold one synopsis; the other has weight 1
        assert trace[0].tolist() == [0.5, 0.5]

    def test_centers_are_synopses(self):
        rng = np.random.default_rng(7)
        data = Dataset.from_points(rng.normal(size=(25, 2)))
        s = build_synopses_online(data, n=5)
        out = skmeans(data, n=5, k=3, rng_seed=9)
        for c in out.centers:
            assert any(np.array_equal(c, p) for p in s.points)

    def test_k_exceeding_synopses_rejected(self):
        pts = np.tile([[1.0]], (6, 1))  # collapses to one synopsis
        with pytest.raises(ValueError):
            skmeans(Dataset.from_points(pts), n=3, k=2, rng_seed=0)

    def test_streaming_bound_small_scale(self):
        from kvariates import Probe, estimate_eta

        rng = np.random.default_rng(8)
        pts = rng.normal(size=(10, 2))
        data = Dataset.from_points(pts)
        k, n = 2, 4
        c_opt, phi_opt = brute_force_optimum(data, k)
        syn = build_synopses_online(data, n)
        spread = probe_spread(data, syn)
        eta = estimate_eta(data, Probe.nearest_synopsis(syn.points), c_opt).value
        runs = [
            potential(data, skmeans(data, n, k, rng_seed=s)) for s in range(400)
        ]
        bound = (2 + math.log(k)) * ((8 + 4 * eta * 2) * phi_opt + 2 * spread)
        assert np.mean(runs) <= bound


class TestProbeSpread:
    def test_identity_synopses_zero(self):
        rng = np.random.default_rng(9)
        pts = rng.normal(size=(8, 2))
        data = Dataset.from_points(pts)
        s = build_synopses_online(data, n=8)
        assert probe_spread(data, s) == pytest.approx(0.0, abs=1e-12)

    def test_two_points_one_synopsis(self):
        data = Dataset.from_points([[0.0], [2.0]])
        s = build_synopses_online(data, n=1)
        # running mean lands at 1; both points at squared distance 1
        assert probe_spread(data, s) == pytest.approx(2.0)

    def test_decreasing_in_capacity_on_average(self):
        rng = np.random.default_rng(10)
        means = []
        for n in (2, 4, 8):
            vals = []
            for seed in range(20):
                pts = np.random.default_rng(seed).normal(size=(40, 2))
                data = Dataset.from_points(pts)
                vals.append(probe_spread(data, build_synopses_online(data, n)))
            means.append(np.mean(vals))
        assert means[0] >= means[1] >= means[2]


class TestOkmeans:
    def test_singleton_batches_return_first_k(self):
        rng = np.random.default_rng(11)
        pts = rng.normal(size=(6, 2))
        data = Dataset.from_points(pts)
        stream = MinibatchStream.fixed_size(data, k=6, batch_size=1)
        out = okmeans_run(stream, 6, rng_seed=5)
        assert np.array_equal(out.centers, pts)

    def test_far_point_forced_when_center_in_batch(self):
        data = Dataset.from_points([[0.0], [0.0], [100.0]])
        stream = MinibatchStream(
            (data.subset([0]), data.subset([1, 2]))
        )
        for seed in range(10):
            out = okmeans_run(stream, 2, rng_seed=seed)
            assert out.centers[1, 0] == 100.0

    def test_extra_batches_warn(self):
        data = Dataset.from_points([[0.0], [1.0], [2.0]])
        stream = MinibatchStream.fixed_size(data, k=3, batch_size=1)
        with pytest.warns(UserWarning):
            okmeans_run(stream, 2, rng_seed=0)

    def test_too_few_batches_rejected(self):
        data = Dataset.from_points([[0.0], [1.0]])
        stream = MinibatchStream.fixed_size(data, k=1)
        with pytest.raises(ValueError):
            okmeans_run(stream, 2, rng_seed=0)

    def test_weight_vectors_sum_to_one(self):
        rng = np.random.default_rng(12)
        data = Dataset.from_points(rng.normal(size=(12, 2)))
        stream = MinibatchStream.fixed_size(data, k=3)
        trace = []
        okmeans_run(stream, 3, rng_seed=1, trace=trace)
        assert len(trace) == 3
        for w in trace:
            assert w.sum() == pytest.approx(1.0, rel=1e-9)

    def test_centers_come_from_their_batches(self):
        rng = np.random.default_rng(13)
        data = Dataset.from_points(rng.normal(size=(20, 2)))
        stream = MinibatchStream.fixed_size(data, k=4)
        out = okmeans_run(stream, 4, rng_seed=2)
        for j, p in enumerate(out.provenance):
            assert p.source == f"batch:{j}"
            assert np.array_equal(out.centers[j], data.points[p.reference])


class TestEstimateVarsigma:
    def test_simplex_cluster_spanning_batches(self):
        # 6 mutually equidistant points (5-simplex), one optimal cluster,
        # two balanced batches: pairwise ratio attains exactly 1 and the
        # worst single-data-point center set leaves each batch 4/10 of the
        # potential, so the estimate is 0.4 under the data-point convention
        pts = np.eye(6)
        data = Dataset.from_points(pts)
        stream = MinibatchStream.fixed_size(data, k=2, batch_size=3)
        c_opt, _ = brute_force_optimum(data, 1)
        est = estimate_varsigma(stream, c_opt)
        assert est.value == pytest.approx(0.4)
        oracle = direct_varsigma_oracle(data, stream, c_opt, k=1)
        assert est.value == pytest.approx(oracle)

    def test_crafted_six_point_instance(self):
        # cluster {0,1} concentrated in batch 1; far cluster spread evenly
        pts = np.array([[0.0], [0.2], [10.0], [10.2], [10.4], [10.6]])
        data = Dataset.from_points(pts)
        stream = MinibatchStream(
            (data.subset([0, 1, 2]), data.subset([3, 4, 5]))
        )
        c_opt, _ = brute_force_optimum(data, 2)
        est = estimate_varsigma(stream, c_opt)
        oracle = direct_varsigma_oracle(data, stream, c_opt, k=2)
        assert est.value == pytest.approx(oracle, rel=1e-9)

    def test_never_exceeds_one(self):
        rng = np.random.default_rng(14)
        for trial in range(5):
            data = Dataset.from_points(rng.normal(size=(8, 2)))
            stream = MinibatchStream.fixed_size(data, k=2)
            c_opt, _ = brute_force_optimum(data, 2)
            assert estimate_varsigma(stream, c_opt).value <= 1.0

    def test_online_bound_with_measured_constant(self):
        # interleave the two clusters so every batch keeps 3 points of each
        # (a sampled size-2 center set can then never zero a batch share)
        rng = np.random.default_rng(15)
        low = rng.normal(size=(6, 1))
        high = rng.normal(size=(6, 1)) + 20.0
        pts = np.concatenate(
            [low[:3], high[:3], low[3:], high[3:]]
        )
        data = Dataset.from_points(pts)
        k = 2
        stream = MinibatchStream.fixed_size(data, k=k)
        c_opt, phi_opt = brute_force_optimum(data, k)
        vs = estimate_varsigma(stream, c_opt).value
        assert 0 < vs <= 1
        runs = [
            potential(data, okmeans_run(stream, k, rng_seed=s)) for s in range(400)
        ]
        bound = (2 + math.log(k)) * (4 + 32 / vs**2) * phi_opt
        assert np.mean(runs) <= bound


def direct_varsigma_oracle(data, stream, c_opt, k):
    """Independent evaluation of both coverage conditions by direct loops."""
    import itertools

    from kvariates.geometry import pairwise_sq_dists

    full = stream.full
    radius = max(
        np.linalg.norm(a - b) for a in full.points for b in full.points
    )
    own = pairwise_sq_dists(full.points, c_opt.centers).argmin(axis=1)
    batch_of = np.concatenate(
        [np.full(b.m, j) for j, b in enumerate(stream.batches)]
    )
    worst = 1.0
    for b in range(len(c_opt)):
        cluster = np.flatnonzero(own == b)
        if cluster.size >= 2:
            pair = sum(
                np.sum((full.points[i] - full.points[j]) ** 2)
                for i in cluster
                for j in cluster
                if i < j
            )
            n_pairs = cluster.size * (cluster.size - 1) / 2
            worst = min(worst, pair / (n_pairs * radius**2))
        for size in range(1, k + 1):
            for combo in itertools.combinations(range(full.m), size):
                d = pairwise_sq_dists(
                    full.points[cluster], full.points[list(combo)]
                ).min(axis=1)
                denom = d.sum()
                if denom <= 0:
                    continue
                for j in np.unique(batch_of[cluster]):
                    share = d[batch_of[cluster] == j].sum() / denom
                    worst = min(worst, share)
    return worst
