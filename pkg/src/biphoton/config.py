"""Run configuration: flat key-value config files, presets, and manifests.

Config grammar: one ``key = value`` pair per line; ``#`` starts a comment;
blank lines are ignored. Length values accept a unit suffix (nm, um, mm, cm,
m); a bare number means meters. Recognized keys:

    scheme            I or II (also accepts 1 / 2)
    lambda1, lambda2  detected wavelengths          [length]
    slit_spacing      center-to-center separation   [length]
    slit_width        single-slit aperture          [length]
    distance          slit-to-detector propagation  [length]
    window            detector scan half-width      [length, default 3mm]
    envelope          true/false, finite-slit-width factor (default true)
    events            Monte Carlo event count; enables the sampler
    seed              64-bit sampler seed            (default 42)
    bins              histogram bins per axis        (default 64)
    poisson_noise     true/false                     (default false)
    chunk_size        events per deterministic sub-stream (default 65536)
    surface_bins      analytic surface resolution    (default 256)
    quadrature_points per-slit points for the brute-force check (default 64)
    oracle_tolerance  allowed analytic-vs-brute-force deviation (default 0.02)
    outputs           comma list from: surface, histogram, cuts, fits, tilt,
                      oracle-check, summary
    output_dir        where files are written        (default out)
    format_version    embedded in every output       (default 1.0.0)

Sampler keys (seed, bins, poisson_noise, chunk_size) are only meaningful
together with `events`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional

from .montecarlo import SamplerConfig
from .physics import ExperimentConfig, Scheme

ALLOWED_OUTPUTS = ("surface", "histogram", "cuts", "fits", "tilt", "oracle-check", "summary")

DEFAULT_OUTPUTS = ("surface", "cuts", "fits", "tilt", "summary")

_UNIT_SCALE = {"nm": 1e-9, "um": 1e-6, "µm": 1e-6, "mm": 1e-3, "cm": 1e-2, "m": 1.0}

_LENGTH_RE = re.compile(r"^([-+0-9.eE]+)\s*(nm|um|µm|mm|cm|m)?$")

_VERSION_RE = re.compile(r"^\d+\.\d+\.\d+$")

_COMMON_PRESET = {
    "slit_spacing": "400um",
    "slit_width": "100um",
    "window": "3mm",
}

PRESETS: dict[str, dict[str, str]] = {
    "scheme1-degenerate-800nm": {
        "scheme": "I", "lambda1": "800nm", "lambda2": "800nm",
        "distance": "54.7cm", **_COMMON_PRESET,
    },
    "scheme1-nondegenerate": {
        "scheme": "I", "lambda1": "760nm", "lambda2": "840nm",
        "distance": "54.7cm", **_COMMON_PRESET,
    },
    "scheme2-degenerate-800nm": {
        "scheme": "II", "lambda1": "800nm", "lambda2": "800nm",
        "distance": "30.3cm", **_COMMON_PRESET,
    },
    "scheme2-nondegenerate": {
        "scheme": "II", "lambda1": "760nm", "lambda2": "840nm",
        "distance": "30.3cm", **_COMMON_PRESET,
    },
}


class ConfigError(Exception):
    """A config file, preset, or flag combination is invalid."""


@dataclass(frozen=True)
class RunManifest:
    """Everything one driver invocation needs: experiment, sampler, outputs."""

    experiment: ExperimentConfig
    sampler: Optional[SamplerConfig]
    requested_outputs: tuple[str, ...]
    output_dir: Path
    format_version: str = "1.0.0"
    surface_bins: int = 256
    quadrature_points: int = 64
    oracle_tolerance: float = 0.02

    def __post_init__(self):
        if not self.requested_outputs:
            raise ConfigError("requested outputs must not be empty")
        unknown = [o for o in self.requested_outputs if o not in ALLOWED_OUTPUTS]
        if unknown:
            raise ConfigError(
                f"unknown outputs: {', '.join(unknown)} (allowed: {', '.join(ALLOWED_OUTPUTS)})")
        if "histogram" in self.requested_outputs and self.sampler is None:
            raise ConfigError("histogram output requires events")
        if not _VERSION_RE.match(self.format_version):
            raise ConfigError("format_version must look like MAJOR.MINOR.PATCH")
        if self.surface_bins < 8:
            raise ConfigError("surface_bins must be at least 8")
        if self.quadrature_points < 16:
            raise ConfigError("quadrature_points must be at least 16")
        if not 0.0 < self.oracle_tolerance < 1.0:
            raise ConfigError("oracle_tolerance must be in (0, 1)")
        object.__setattr__(self, "output_dir", Path(self.output_dir))


def parse_length(text: str) -> float:
    """Parse a length with optional nm/um/mm/cm/m suffix into meters."""
    m = _LENGTH_RE.match(text.strip())
    if not m:
        raise ConfigError(f"cannot parse length {text!r}")
    try:
        value = float(m.group(1))
    except ValueError as exc:
        raise ConfigError(f"cannot parse length {text!r}") from exc
    return value * _UNIT_SCALE[m.group(2) or "m"]


def format_length(value: float) -> str:
    """Emit a length in meters with full float precision (round-trip exact)."""
    return repr(float(value))


def _parse_bool(key: str, text: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise ConfigError(f"{key} must be true or false, got {text!r}")


def _parse_int(key: str, text: str) -> int:
    try:
        return int(text.strip())
    except ValueError as exc:
        raise ConfigError(f"{key} must be an integer, got {text!r}") from exc


def _parse_scheme(text: str) -> Scheme:
    norm = text.strip().upper()
    if norm in ("I", "1", "SCHEMEI", "SCHEME1"):
        return Scheme.I
    if norm in ("II", "2", "SCHEMEII", "SCHEME2"):
        return Scheme.II
    raise ConfigError(f"scheme must be I or II, got {text!r}")


_LENGTH_KEYS = ("lambda1", "lambda2", "slit_spacing", "slit_width", "distance", "window")
_SAMPLER_KEYS = ("seed", "bins", "poisson_noise", "chunk_size")
_ALL_KEYS = frozenset(_LENGTH_KEYS) | frozenset(_SAMPLER_KEYS) | {
    "scheme", "envelope", "events", "surface_bins", "quadrature_points",
    "oracle_tolerance", "outputs", "output_dir", "format_version",
}


def parse_config_text(text: str, source: str = "<config>") -> dict[str, str]:
    """Parse config grammar into a key-value dict; rejects unknown keys."""
    items: dict[str, str] = {}
    unknown: list[str] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _ALL_KEYS:
            unknown.append(key)
            continue
        if key in items:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        items[key] = value
    if unknown:
        raise ConfigError(f"{source}: unknown keys: {', '.join(sorted(set(unknown)))}")
    return items


def manifest_from_items(items: Mapping[str, str]) -> RunManifest:
    """Build and validate a RunManifest from parsed key-value items."""
    missing = [k for k in ("scheme", "lambda1", "lambda2", "slit_spacing",
                           "slit_width", "distance") if k not in items]
    if missing:
        raise ConfigError(f"missing required keys: {', '.join(missing)}")

    lengths = {}
    for key in _LENGTH_KEYS:
        if key in items:
            lengths[key] = parse_length(items[key])
    try:
        experiment = ExperimentConfig(
            scheme=_parse_scheme(items["scheme"]),
            lambda1=lengths["lambda1"],
            lambda2=lengths["lambda2"],
            slit_spacing=lengths["slit_spacing"],
            slit_width=lengths["slit_width"],
            distance=lengths["distance"],
            window_halfwidth=lengths.get("window", 3e-3),
            use_envelope=_parse_bool("envelope", items.get("envelope", "true")),
        )
    except ValueError as exc:
        raise ConfigError(f"invalid experiment configuration: {exc}") from exc

    sampler = None
    if "events" in items:
        try:
            sampler = SamplerConfig(
                n_events=_parse_int("events", items["events"]),
                seed=_parse_int("seed", items.get("seed", "42")),
                n_bins=_parse_int("bins", items.get("bins", "64")),
                poisson_noise=_parse_bool("poisson_noise", items.get("poisson_noise", "false")),
                chunk_size=_parse_int("chunk_size", items.get("chunk_size", "65536")),
            )
        except ValueError as exc:
            raise ConfigError(f"invalid sampler configuration: {exc}") from exc
    else:
        stray = [k for k in _SAMPLER_KEYS if k in items]
        if stray:
            raise ConfigError(f"keys {', '.join(stray)} require events")

    outputs = tuple(
        part.strip() for part in items.get("outputs", ",".join(DEFAULT_OUTPUTS)).split(",")
        if part.strip())

    try:
        tolerance = float(items.get("oracle_tolerance", "0.02"))
    except ValueError as exc:
        raise ConfigError("oracle_tolerance must be a number") from exc

    return RunManifest(
        experiment=experiment,
        sampler=sampler,
        requested_outputs=outputs,
        output_dir=Path(items.get("output_dir", "out")),
        format_version=items.get("format_version", "1.0.0"),
        surface_bins=_parse_int("surface_bins", items.get("surface_bins", "256")),
        quadrature_points=_parse_int("quadrature_points", items.get("quadrature_points", "64")),
        oracle_tolerance=tolerance,
    )


def load_config(path) -> RunManifest:
    """Load and validate a config file into a RunManifest."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    return manifest_from_items(parse_config_text(path.read_text(), source=str(path)))


def preset_items(name: str) -> dict[str, str]:
    """Key-value items of a bundled preset; raises ConfigError for unknown names."""
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r} (available: {', '.join(sorted(PRESETS))})")
    return dict(PRESETS[name])


def load_preset(name: str) -> RunManifest:
    return manifest_from_items(preset_items(name))


def manifest_to_items(manifest: RunManifest) -> dict[str, str]:
    """Flatten a manifest back into config-grammar items (lengths in meters)."""
    cfg = manifest.experiment
    items = {
        "scheme": cfg.scheme.value,
        "lambda1": format_length(cfg.lambda1),
        "lambda2": format_length(cfg.lambda2),
        "slit_spacing": format_length(cfg.slit_spacing),
        "slit_width": format_length(cfg.slit_width),
        "distance": format_length(cfg.distance),
        "window": format_length(cfg.window_halfwidth),
        "envelope": "true" if cfg.use_envelope else "false",
    }
    if manifest.sampler is not None:
        s = manifest.sampler
        items.update({
            "events": str(s.n_events),
            "seed": str(s.seed),
            "bins": str(s.n_bins),
            "poisson_noise": "true" if s.poisson_noise else "false",
            "chunk_size": str(s.chunk_size),
        })
    items.update({
        "surface_bins": str(manifest.surface_bins),
        "quadrature_points": str(manifest.quadrature_points),
        "oracle_tolerance": repr(manifest.oracle_tolerance),
        "outputs": ",".join(manifest.requested_outputs),
        "output_dir": str(manifest.output_dir),
        "format_version": manifest.format_version,
    })
    return items


def manifest_to_text(manifest: RunManifest) -> str:
    """Emit a manifest in the config grammar; load_config of it round-trips."""
    return "".join(f"{key} = {value}\n" for key, value in manifest_to_items(manifest).items())
