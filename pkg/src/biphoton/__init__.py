"""Two-photon double-slit interference simulator and analysis toolkit.

Computes analytic coincidence-rate surfaces for photon pairs traversing a
double slit (same-slit and opposite-slit configurations, degenerate or
two-color), validates them against a brute-force exact-path computation,
generates synthetic coincidence counts by seeded Monte Carlo, and extracts
fringe periods, visibilities and stripe-tilt angles from the patterns.
"""

from .analysis import (CutKind, CutProfile, FringeFit, NoFringeError,
                       NoStripesError, cut_envelope, estimate_tilt,
                       extract_cut, fit_fringe, marginal_visibility,
                       predicted_period)
from .config import (ConfigError, PRESETS, RunManifest, load_config,
                     load_preset, manifest_from_items, manifest_to_text,
                     parse_length)
from .montecarlo import (CoincidenceHistogram, SamplerConfig,
                         bin_probabilities, mix64, normalize_density,
                         sample_events)
from .physics import (ExperimentConfig, PhysicsError, Provenance, RateSurface,
                      Scheme, SPEED_OF_LIGHT, coincidence_rate, envelope,
                      max_normalized_deviation, oracle_rate, oracle_surface,
                      rate_surface, slit_propagator)
from .runner import expected_tilt_deg, run

__version__ = "0.1.0"

__all__ = [
    "CoincidenceHistogram", "ConfigError", "CutKind", "CutProfile",
    "ExperimentConfig", "FringeFit", "NoFringeError", "NoStripesError",
    "PRESETS", "PhysicsError", "Provenance", "RateSurface", "RunManifest",
    "SPEED_OF_LIGHT", "SamplerConfig", "Scheme", "bin_probabilities",
    "coincidence_rate", "cut_envelope", "envelope", "estimate_tilt",
    "expected_tilt_deg", "extract_cut", "fit_fringe", "load_config",
    "load_preset", "manifest_from_items", "manifest_to_text",
    "marginal_visibility", "max_normalized_deviation", "mix64",
    "normalize_density", "oracle_rate", "oracle_surface", "parse_length",
    "predicted_period", "rate_surface", "run", "sample_events",
    "slit_propagator",
]
