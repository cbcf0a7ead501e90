import pytest

from biphoton import SamplerConfig, load_preset, sample_events

PRESET_NAMES = (
    "scheme1-degenerate-800nm",
    "scheme1-nondegenerate",
    "scheme2-degenerate-800nm",
    "scheme2-nondegenerate",
)


@pytest.fixture(scope="session")
def preset_configs():
    """ExperimentConfig for each bundled preset."""
    return {name: load_preset(name).experiment for name in PRESET_NAMES}


@pytest.fixture(scope="session")
def mc_histograms(preset_configs):
    """One million events per preset, shared across tests (a few seconds each)."""
    scfg = SamplerConfig(n_events=1_000_000, seed=42, n_bins=64)
    return {name: sample_events(cfg, scfg) for name, cfg in preset_configs.items()}
