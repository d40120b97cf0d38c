import math

import numpy as np
import pytest

from kvariates import LocalDensity
from kvariates.densities import sample_product_laplace
from kvariates.sampling import categorical, mix_seed, rng_from_seed


class TestLocalDensity:
    def test_dirac_mean_and_trace(self):
        d = LocalDensity.dirac([1.0, 2.0])
        assert np.allclose(d.mean(), [1.0, 2.0])
        assert d.trace_cov() == 0.0
        assert np.allclose(d.sample(rng_from_seed(0)), [1.0, 2.0])

    def test_laplace_trace(self):
        d = LocalDensity.product_laplace([0.0, 0.0, 0.0], 0.5)
        assert d.trace_cov() == pytest.approx(3 * 2 * 0.25)

    def test_uniform_subset_mean_is_centroid(self):
        d = LocalDensity.uniform_on_subset([[0.0, 0.0], [2.0, 2.0]])
        assert np.allclose(d.mean(), [1.0, 1.0])
        assert d.trace_cov() == pytest.approx(2.0)  # mean sq dist to centroid

    def test_uniform_subset_samples_members(self):
        members = np.array([[0.0], [5.0], [9.0]])
        d = LocalDensity.uniform_on_subset(members)
        rng = rng_from_seed(3)
        for _ in range(50):
            s = d.sample(rng)
            assert any(np.array_equal(s, m) for m in members)

    def test_laplace_pdf_value(self):
        d = LocalDensity.product_laplace([0.0], 1.0)
        assert d.pdf(np.array([0.0])) == pytest.approx(0.5)
        assert d.pdf(np.array([1.0])) == pytest.approx(0.5 * math.exp(-1))

    def test_reanchor(self):
        d = LocalDensity.product_laplace([0.0, 0.0], 0.3)
        moved = d.reanchor([5.0, 5.0])
        assert np.allclose(moved.mean(), [5.0, 5.0])
        assert np.allclose(moved.scale, d.scale)

    def test_validation(self):
        with pytest.raises(ValueError):
            LocalDensity.product_laplace([0.0], 0.0)
        with pytest.raises(ValueError):
            LocalDensity.uniform_on_subset(np.zeros((0, 2)))


class TestSampleProductLaplace:
    def test_moments(self):
        # per-coordinate variance sigma^2, mean mu
        sigma = 2.0
        mu = np.array([1.0, -3.0])
        rng = rng_from_seed(44)
        draws = np.stack([sample_product_laplace(mu, sigma, rng) for _ in range(100_000)])
        assert np.allclose(draws.mean(axis=0), mu, atol=0.05 * sigma)
        assert np.allclose(draws.var(axis=0), sigma**2, rtol=0.05)

    def test_sigma_to_zero_limit(self):
        rng = rng_from_seed(1)
        out = sample_product_laplace(np.array([2.0]), 1e-12, rng)
        assert out == pytest.approx([2.0], abs=1e-9)

    def test_rejects_bad_sigma(self):
        with pytest.raises(ValueError):
            sample_product_laplace(np.zeros(2), 0.0, rng_from_seed(0))


class TestSamplingHelpers:
    def test_categorical_respects_weights(self):
        rng = rng_from_seed(5)
        counts = np.zeros(3)
        for _ in range(30_000):
            counts[categorical(rng, np.array([1.0, 2.0, 1.0]))] += 1
        assert np.allclose(counts / 30_000, [0.25, 0.5, 0.25], atol=0.02)

    def test_categorical_skips_zero_weights(self):
        rng = rng_from_seed(6)
        for _ in range(200):
            assert categorical(rng, np.array([0.0, 1.0, 0.0])) == 1

    def test_categorical_rejects_all_zero(self):
        with pytest.raises(ValueError):
            categorical(rng_from_seed(0), np.zeros(3))

    def test_mix_seed_spreads(self):
        seeds = {mix_seed(7, i) for i in range(1000)}
        assert len(seeds) == 1000
