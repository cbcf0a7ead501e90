import numpy as np
import pytest

import biphoton.montecarlo as mc
from biphoton import (PhysicsError, SamplerConfig, Scheme, bin_probabilities,
                      mix64, normalize_density, sample_events)

from .test_physics import make_config

MASK64 = (1 << 64) - 1


def reference_splitmix64(seed, k):
    """Independent splitmix64 finalizer, straight from its published constants."""
    z = (seed + k * 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


class TestMix64:
    def test_matches_reference(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            seed = int(rng.integers(0, MASK64, dtype=np.uint64))
            k = int(rng.integers(0, 1 << 32))
            assert mix64(seed, k) == reference_splitmix64(seed, k)

    def test_stays_in_64_bits(self):
        assert 0 <= mix64(MASK64, MASK64 >> 1) <= MASK64


class TestSamplerConfig:
    def test_zero_events_rejected(self):
        with pytest.raises(ValueError):
            SamplerConfig(n_events=0)

    @pytest.mark.parametrize("kwargs", [
        {"n_bins": 7}, {"chunk_size": 0}, {"seed": -1}, {"seed": 1 << 64},
    ])
    def test_bad_fields_rejected(self, kwargs):
        with pytest.raises(ValueError):
            SamplerConfig(n_events=10, **kwargs)


class TestNormalizeDensity:
    def test_whole_period_window_without_envelope(self):
        # Window = 4 single-photon periods on each axis: the cosine integrates
        # away and Z is exactly the window area.
        period = 800e-9 * 0.547 / 400e-6
        w = 2 * period
        cfg = make_config(window=w, use_envelope=False)
        z = normalize_density(cfg)
        assert z == pytest.approx(4 * w * w, rel=1e-9)

    def test_tiny_window_limit(self):
        w = 1e-9
        cfg = make_config(window=w)
        assert normalize_density(cfg) == pytest.approx(8 * w * w, rel=1e-6)

    def test_quadrature_convergence(self):
        cfg = make_config(lambda1=760e-9, lambda2=840e-9)
        z512 = normalize_density(cfg, grid_size=512)
        z1024 = normalize_density(cfg, grid_size=1024)
        assert abs(z512 - z1024) / z1024 < 1e-4

    def test_minimum_grid_enforced(self):
        with pytest.raises(ValueError):
            normalize_density(make_config(), grid_size=256)


class TestSampleEvents:
    def test_count_conservation(self):
        cfg = make_config()
        hist = sample_events(cfg, SamplerConfig(n_events=5000, seed=1, n_bins=16))
        assert hist.counts.sum() == 5000
        assert np.array_equal(hist.counts.sum(axis=1), hist.singles1)
        assert np.array_equal(hist.counts.sum(axis=0), hist.singles2)
        assert hist.total_events == 5000

    def test_single_event(self):
        hist = sample_events(make_config(), SamplerConfig(n_events=1, seed=3, n_bins=8))
        assert hist.counts.sum() == 1
        assert (hist.counts == 1).sum() == 1
        assert hist.singles1.sum() == 1 and hist.singles2.sum() == 1

    def test_deterministic_rerun(self):
        cfg = make_config(lambda1=760e-9, lambda2=840e-9)
        scfg = SamplerConfig(n_events=20_000, seed=99, chunk_size=4096)
        a = sample_events(cfg, scfg)
        b = sample_events(cfg, scfg)
        assert np.array_equal(a.counts, b.counts)

    def test_worker_count_does_not_change_result(self):
        cfg = make_config()
        scfg = SamplerConfig(n_events=50_000, seed=5, chunk_size=8192)
        serial = sample_events(cfg, scfg, n_workers=1)
        threaded = sample_events(cfg, scfg, n_workers=4)
        assert np.array_equal(serial.counts, threaded.counts)
        assert np.array_equal(serial.singles1, threaded.singles1)

    def test_different_seeds_differ(self):
        cfg = make_config()
        a = sample_events(cfg, SamplerConfig(n_events=10_000, seed=1))
        b = sample_events(cfg, SamplerConfig(n_events=10_000, seed=2))
        assert not np.array_equal(a.counts, b.counts)

    def test_poisson_noise_breaks_conservation_only(self):
        cfg = make_config()
        noisy = sample_events(cfg, SamplerConfig(n_events=20_000, seed=11,
                                                 poisson_noise=True))
        clean = sample_events(cfg, SamplerConfig(n_events=20_000, seed=11))
        assert noisy.total_events == 20_000
        assert not np.array_equal(noisy.counts, clean.counts)
        # Noise is itself seeded: a rerun reproduces it bit for bit.
        again = sample_events(cfg, SamplerConfig(n_events=20_000, seed=11,
                                                 poisson_noise=True))
        assert np.array_equal(noisy.counts, again.counts)

    def test_acceptance_bound_self_check(self, monkeypatch):
        # Force an invalid bound: the sampler must refuse to run with it.
        monkeypatch.setattr(mc, "envelope",
                            lambda x, lam, cfg: np.full(np.shape(x), 0.25))
        with pytest.raises(PhysicsError, match="upper bound"):
            sample_events(make_config(), SamplerConfig(n_events=10))

    def test_chi_square_consistency_quick(self):
        cfg = make_config()
        hist = sample_events(cfg, SamplerConfig(n_events=200_000, seed=21, n_bins=32))
        expected = bin_probabilities(cfg, 32) * hist.total_events
        mask = expected >= 10
        chi2 = float(((hist.counts[mask] - expected[mask]) ** 2 / expected[mask]).sum())
        dof = int(mask.sum()) - 1
        assert 0.8 < chi2 / dof < 1.2

    def test_histogram_converges_with_events(self):
        # Max bin-wise deviation from the density shrinks roughly as 1/sqrt(N).
        cfg = make_config()
        p = bin_probabilities(cfg, 32)
        devs = {}
        for n in (10_000, 1_000_000):
            hist = sample_events(cfg, SamplerConfig(n_events=n, seed=17, n_bins=32))
            devs[n] = np.abs(hist.counts / n - p).max()
        assert devs[1_000_000] < devs[10_000] / 3

    def test_scheme2_sampling(self):
        cfg = make_config(scheme=Scheme.II, lambda1=760e-9, lambda2=840e-9,
                          distance=0.303)
        hist = sample_events(cfg, SamplerConfig(n_events=5000, seed=8))
        assert hist.counts.sum() == 5000


class TestHistogramInvariants:
    def test_marginal_mismatch_rejected(self):
        cfg = make_config()
        hist = sample_events(cfg, SamplerConfig(n_events=100, seed=2, n_bins=8))
        bad = np.array(hist.singles1)
        bad[0] += 1
        with pytest.raises(ValueError):
            mc.CoincidenceHistogram(
                edges1=hist.edges1, edges2=hist.edges2, counts=hist.counts,
                singles1=bad, singles2=hist.singles2,
                total_events=hist.total_events, experiment=cfg,
                sampler=hist.sampler)

    def test_centers_between_edges(self):
        hist = sample_events(make_config(), SamplerConfig(n_events=100, seed=2, n_bins=8))
        assert hist.centers1.size == 8
        assert np.all(hist.centers1 > hist.edges1[:-1])
        assert np.all(hist.centers1 < hist.edges1[1:])
