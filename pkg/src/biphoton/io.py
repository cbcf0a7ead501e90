"""Deterministic file emission and parsing for run outputs.

Every emitted file starts with comment lines embedding the format version and
the full resolved run configuration (the config grammar, each line prefixed
with '# '), so outputs are self-describing and can be reloaded without the
original config. Numeric columns are written with 9 significant digits;
identical runs produce byte-identical files.

Files are written to `<name>.partial` and renamed into place on completion,
so an interrupted stage leaves only `.partial` artifacts behind.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np

from .config import RunManifest, manifest_from_items, manifest_to_items, parse_config_text
from .montecarlo import CoincidenceHistogram
from .physics import Provenance, RateSurface

GRID_COLUMNS = "# x1_m,x2_m,value"
CUT_COLUMNS = "# x_m,value,err"
SINGLES_COLUMNS = "# x_m,count"


def fmt(value: float) -> str:
    """Canonical 9-significant-digit rendering of a number."""
    return format(float(value), ".9g")


def config_header(manifest: RunManifest) -> list[str]:
    return [f"# {key} = {value}" for key, value in manifest_to_items(manifest).items()]


def config_items_payload(manifest: RunManifest) -> dict[str, str]:
    """Resolved configuration as grammar strings, for embedding in JSON."""
    return manifest_to_items(manifest)


def write_text(path: Path, text: str) -> None:
    """Write via a .partial temp name, renamed into place on completion."""
    partial = path.with_name(path.name + ".partial")
    partial.write_text(text)
    os.replace(partial, path)


def grid_csv(manifest: RunManifest, axis1, axis2, values) -> str:
    lines = config_header(manifest)
    lines.append(GRID_COLUMNS)
    for i, x1 in enumerate(axis1):
        row = values[i]
        for j, x2 in enumerate(axis2):
            lines.append(f"{fmt(x1)},{fmt(x2)},{fmt(row[j])}")
    return "\n".join(lines) + "\n"


def cut_csv(manifest: RunManifest, x, y, y_err) -> str:
    lines = config_header(manifest)
    lines.append(CUT_COLUMNS)
    err = y_err if y_err is not None else np.zeros_like(np.asarray(y))
    for xi, yi, ei in zip(x, y, err):
        lines.append(f"{fmt(xi)},{fmt(yi)},{fmt(ei)}")
    return "\n".join(lines) + "\n"


def singles_csv(manifest: RunManifest, x, counts) -> str:
    lines = config_header(manifest)
    lines.append(SINGLES_COLUMNS)
    for xi, ci in zip(x, counts):
        lines.append(f"{fmt(xi)},{fmt(ci)}")
    return "\n".join(lines) + "\n"


def plot_dat(manifest: RunManifest, x, y) -> str:
    """Two-column plot-ready data (space separated, gnuplot-style comments)."""
    lines = config_header(manifest)
    lines.append("# x_m value")
    for xi, yi in zip(x, y):
        lines.append(f"{fmt(xi)} {fmt(yi)}")
    return "\n".join(lines) + "\n"


def summary_json(payload: dict) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _split_file(path: Path) -> tuple[dict[str, str], list[str]]:
    """Separate a file into embedded-config items and data rows."""
    comment_lines: list[str] = []
    data: list[str] = []
    for raw in Path(path).read_text().splitlines():
        if raw.startswith("#"):
            comment_lines.append(raw[1:].strip())
        elif raw.strip():
            data.append(raw.strip())
    config_text = "\n".join(line for line in comment_lines if "=" in line)
    return parse_config_text(config_text, source=str(path)), data


def read_grid_csv(path) -> tuple[RunManifest, np.ndarray, np.ndarray, np.ndarray]:
    """Read a grid CSV back into (manifest, axis1, axis2, values)."""
    items, data = _split_file(Path(path))
    manifest = manifest_from_items(items)
    triples = np.array([[float(f) for f in line.split(",")] for line in data])
    axis1 = np.unique(triples[:, 0])
    axis2 = np.unique(triples[:, 1])
    values = triples[:, 2].reshape(axis1.size, axis2.size)
    return manifest, axis1, axis2, values


def read_surface_csv(path) -> RateSurface:
    _, axis1, axis2, values = read_grid_csv(path)
    return RateSurface(axis1=axis1, axis2=axis2, values=values,
                       provenance=Provenance.ANALYTIC)


def read_histogram_csv(path) -> CoincidenceHistogram:
    """Rebuild a histogram from an emitted grid file.

    Singles are recomputed as the count marginals, which matches the
    originals exactly for runs without Poisson noise (noisy runs store
    independently fluctuating singles in their own files).
    """
    manifest, axis1, axis2, values = read_grid_csv(path)
    if manifest.sampler is None:
        raise ValueError(f"{path} carries no sampler configuration")
    counts = np.rint(values).astype(np.int64)
    h1 = axis1[1] - axis1[0]
    h2 = axis2[1] - axis2[0]
    edges1 = np.append(axis1 - h1 / 2, axis1[-1] + h1 / 2)
    edges2 = np.append(axis2 - h2 / 2, axis2[-1] + h2 / 2)
    return CoincidenceHistogram(
        edges1=edges1, edges2=edges2, counts=counts,
        singles1=counts.sum(axis=1), singles2=counts.sum(axis=0),
        total_events=int(counts.sum()), experiment=manifest.experiment,
        sampler=manifest.sampler)
