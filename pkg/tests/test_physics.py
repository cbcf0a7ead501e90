import numpy as np
import pytest

from biphoton import (ExperimentConfig, Provenance, RateSurface, Scheme,
                      coincidence_rate, envelope, rate_surface)


def make_config(scheme=Scheme.I, lambda1=800e-9, lambda2=800e-9, distance=0.547,
                window=3e-3, use_envelope=True):
    return ExperimentConfig(scheme=scheme, lambda1=lambda1, lambda2=lambda2,
                            slit_spacing=400e-6, slit_width=100e-6,
                            distance=distance, window_halfwidth=window,
                            use_envelope=use_envelope)


class TestConfigValidation:
    def test_valid_config_accepted(self):
        cfg = make_config()
        assert cfg.lambda1 == 800e-9

    @pytest.mark.parametrize("kwargs", [
        {"lambda1": 0.0},
        {"lambda2": -1e-9},
        {"distance": 0.0},
        {"window": 0.0},
    ])
    def test_bad_values_rejected(self, kwargs):
        with pytest.raises(ValueError):
            make_config(**kwargs)

    def test_slit_width_must_be_smaller_than_spacing(self):
        with pytest.raises(ValueError, match="slit_spacing > slit_width"):
            ExperimentConfig(scheme=Scheme.I, lambda1=800e-9, lambda2=800e-9,
                             slit_spacing=100e-6, slit_width=400e-6,
                             distance=0.547, window_halfwidth=3e-3)

    def test_non_paraxial_geometry_rejected(self):
        with pytest.raises(ValueError, match="paraxial"):
            make_config(distance=0.05)

    def test_derived_frequencies(self):
        cfg = make_config(lambda1=760e-9, lambda2=840e-9)
        c = cfg.light_speed
        assert cfg.omega1 == pytest.approx(2 * np.pi * c / 760e-9, rel=1e-15)
        assert cfg.omega_sum == pytest.approx(cfg.omega1 + cfg.omega2, rel=1e-15)
        assert cfg.omega_diff == pytest.approx(cfg.omega1 - cfg.omega2, rel=1e-15)


class TestEnvelope:
    def test_unity_at_center(self):
        cfg = make_config()
        assert envelope(0.0, 800e-9, cfg) == 1.0
        assert envelope(0.0, 760e-9, cfg) == 1.0

    def test_first_null(self):
        # First zero of sinc^2 at x = lambda*z/b = 4.376 mm for 800 nm, z=54.7 cm.
        cfg = make_config(window=4.5e-3)
        x0 = 800e-9 * 0.547 / 100e-6
        assert x0 == pytest.approx(4.376e-3, rel=1e-12)
        assert envelope(x0, 800e-9, cfg) < 1e-12

    def test_even_symmetry_exact(self):
        cfg = make_config()
        x = np.random.default_rng(1).uniform(0, 3e-3, 1000)
        assert np.array_equal(envelope(x, 800e-9, cfg), envelope(-x, 800e-9, cfg))

    def test_range(self):
        cfg = make_config()
        x = np.linspace(-3e-3, 3e-3, 4001)
        vals = envelope(x, 760e-9, cfg)
        assert np.all(vals >= 0) and np.all(vals <= 1)

    def test_toggle_off(self):
        cfg = make_config(use_envelope=False)
        assert envelope(2e-3, 800e-9, cfg) == 1.0


class TestCoincidenceRate:
    def test_center_maximum(self):
        assert coincidence_rate(0.0, 0.0, make_config()) == pytest.approx(2.0, abs=1e-15)

    def test_degenerate_comoving_null(self):
        # x = lambda*z/(4d) puts the co-moving phase at pi: interference factor 0.
        cfg = make_config()
        x = 800e-9 * 0.547 / (4 * 400e-6)
        assert x == pytest.approx(0.2735e-3, rel=1e-12)
        assert coincidence_rate(x, x, cfg) < 1e-12

    def test_scheme2_comoving_direction_is_flat(self):
        # Degenerate Scheme II along x1=x2: the phase vanishes identically.
        cfg = make_config(scheme=Scheme.II)
        x = np.random.default_rng(2).uniform(-3e-3, 3e-3, 500)
        rate = coincidence_rate(x, x, cfg)
        expected = 2.0 * envelope(x, 800e-9, cfg) ** 2
        assert np.array_equal(rate, expected)

    def test_rejects_non_finite(self):
        cfg = make_config()
        with pytest.raises(ValueError):
            coincidence_rate(np.nan, 0.0, cfg)
        with pytest.raises(ValueError):
            coincidence_rate(0.0, np.inf, cfg)

    def test_bounds(self):
        cfg = make_config(lambda1=760e-9, lambda2=840e-9)
        rng = np.random.default_rng(3)
        x1 = rng.uniform(-3e-3, 3e-3, 20_000)
        x2 = rng.uniform(-3e-3, 3e-3, 20_000)
        rate = coincidence_rate(x1, x2, cfg)
        ceiling = 2.0 * envelope(x1, cfg.lambda1, cfg) * envelope(x2, cfg.lambda2, cfg)
        assert np.all(rate >= 0)
        assert np.all(rate <= ceiling * (1 + 1e-12))
        assert np.all(ceiling <= 2.0)

    def test_sum_difference_identity(self):
        # Per-arm and sum/difference-frequency phase forms agree everywhere.
        cfg = make_config(lambda1=760e-9, lambda2=840e-9)
        rng = np.random.default_rng(4)
        x1 = rng.uniform(-3e-3, 3e-3, 100_000)
        x2 = rng.uniform(-3e-3, 3e-3, 100_000)
        direct = coincidence_rate(x1, x2, cfg, phase_form="arm")
        sumdiff = coincidence_rate(x1, x2, cfg, phase_form="sumdiff")
        assert np.abs(direct - sumdiff).max() < 1e-12

    def test_scheme_mirror_relation_exact(self):
        cfg1 = make_config(scheme=Scheme.I, lambda1=760e-9, lambda2=840e-9)
        cfg2 = make_config(scheme=Scheme.II, lambda1=760e-9, lambda2=840e-9)
        rng = np.random.default_rng(5)
        x1 = rng.uniform(-3e-3, 3e-3, 50_000)
        x2 = rng.uniform(-3e-3, 3e-3, 50_000)
        assert np.array_equal(coincidence_rate(x1, x2, cfg2),
                              coincidence_rate(x1, -x2, cfg1))

    def test_photon_swap_symmetry(self):
        cfg = make_config(scheme=Scheme.I, lambda1=760e-9, lambda2=840e-9)
        swapped = make_config(scheme=Scheme.I, lambda1=840e-9, lambda2=760e-9)
        rng = np.random.default_rng(6)
        x1 = rng.uniform(-3e-3, 3e-3, 50_000)
        x2 = rng.uniform(-3e-3, 3e-3, 50_000)
        assert np.array_equal(coincidence_rate(x1, x2, cfg),
                              coincidence_rate(x2, x1, swapped))

    def test_unknown_phase_form_rejected(self):
        with pytest.raises(ValueError):
            coincidence_rate(0.0, 0.0, make_config(), phase_form="bogus")


class TestRateSurface:
    def test_grid_shape_and_provenance(self):
        surface = rate_surface(make_config(), 32)
        assert surface.values.shape == (32, 32)
        assert surface.provenance is Provenance.ANALYTIC
        assert np.all(surface.values >= 0)

    def test_degenerate_antidiagonal_is_flat(self):
        # Stripes run along the anti-diagonal: constant interference there.
        cfg = make_config()
        surface = rate_surface(cfg, 129)
        anti = surface.values[np.arange(129), 128 - np.arange(129)]
        expected = 2.0 * envelope(surface.axis1, 800e-9, cfg) ** 2
        assert np.abs(anti - expected).max() < 1e-12

    def test_tiny_window_limit(self):
        surface = rate_surface(make_config(window=1e-9), 8)
        assert np.abs(surface.values - 2.0).max() < 1e-6

    def test_minimum_bins_enforced(self):
        with pytest.raises(ValueError):
            rate_surface(make_config(), 7)

    def test_invariants_enforced(self):
        axis = np.linspace(-1e-3, 1e-3, 16)
        good = np.ones((16, 16))
        with pytest.raises(ValueError):
            RateSurface(axis1=axis, axis2=axis, values=np.ones((16, 8)),
                        provenance=Provenance.ANALYTIC)
        with pytest.raises(ValueError):
            RateSurface(axis1=axis, axis2=axis, values=-good,
                        provenance=Provenance.ANALYTIC)
        with pytest.raises(ValueError):
            RateSurface(axis1=axis[::-1], axis2=axis, values=good,
                        provenance=Provenance.ANALYTIC)
        crooked = np.concatenate([axis[:8], axis[8:] * 1.5])
        with pytest.raises(ValueError):
            RateSurface(axis1=crooked, axis2=axis, values=good,
                        provenance=Provenance.ANALYTIC)

    def test_values_read_only(self):
        surface = rate_surface(make_config(), 16)
        with pytest.raises(ValueError):
            surface.values[0, 0] = 5.0
