"""Driver executing the stages requested by a RunManifest.

Stage order: surface -> histogram -> cuts -> fits -> tilt, with oracle-check
independent and summary last. The analytic surface is computed whenever a
later stage needs it, but only written when requested. All requested stages
must succeed (including internal self-checks) for exit status 0; on failure
the summary so far is retained as ``summary.json.partial`` together with any
half-written file of the failing stage.

Exit status: 0 success, 2 physics/validation failure, 3 I/O failure.
(Config errors are raised before a run starts and map to status 1.)
"""

from __future__ import annotations

import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import io
from .analysis import (CutKind, NoFringeError, estimate_tilt, extract_cut,
                       fit_fringe, marginal_visibility, predicted_period)
from .config import RunManifest
from .montecarlo import sample_events
from .physics import (PhysicsError, Scheme, max_normalized_deviation,
                      oracle_surface, rate_surface)

STAGE_ORDER = ("surface", "histogram", "cuts", "fits", "tilt", "oracle-check", "summary")

# Grid used for the analytic-vs-brute-force comparison.
ORACLE_CHECK_BINS = 128

# Allowed relative change of the brute-force surface when the per-slit
# quadrature count is doubled.
QUADRATURE_REFINEMENT_TOLERANCE = 1e-3


def expected_tilt_deg(cfg) -> float:
    """Closed-form stripe-normal angle for a configuration."""
    sign = 1.0 if cfg.scheme is Scheme.I else -1.0
    return float(np.degrees(np.arctan2(sign * cfg.omega2, cfg.omega1)))


def _fit_payload(fit, predicted) -> dict:
    payload = asdict(fit)
    payload["predicted_period_m"] = predicted
    return payload


class _Runner:
    def __init__(self, manifest: RunManifest, quiet: bool = False):
        self.manifest = manifest
        self.quiet = quiet
        self.out = Path(manifest.output_dir)
        self.surface = None
        self.histogram = None
        self.summary: dict = {
            "schema_version": manifest.format_version,
            "config": io.config_items_payload(manifest),
        }

    def _log(self, message: str) -> None:
        if not self.quiet:
            print(message)

    def _write(self, name: str, text: str) -> None:
        io.write_text(self.out / name, text)
        self._log(f"wrote {self.out / name}")

    def _need_surface(self):
        if self.surface is None:
            self.surface = rate_surface(self.manifest.experiment, self.manifest.surface_bins)
        return self.surface

    def _need_histogram(self):
        if self.histogram is None:
            self.histogram = sample_events(self.manifest.experiment, self.manifest.sampler)
        return self.histogram

    def stage_surface(self):
        surface = self._need_surface()
        self._write("surface.csv",
                    io.grid_csv(self.manifest, surface.axis1, surface.axis2, surface.values))
        self.summary["surface"] = {"bins": self.manifest.surface_bins, "file": "surface.csv"}

    def stage_histogram(self):
        hist = self._need_histogram()
        self._write("histogram.csv",
                    io.grid_csv(self.manifest, hist.centers1, hist.centers2, hist.counts))
        self._write("singles1.csv", io.singles_csv(self.manifest, hist.centers1, hist.singles1))
        self._write("singles2.csv", io.singles_csv(self.manifest, hist.centers2, hist.singles2))
        self.summary["histogram"] = {
            "events": hist.total_events,
            "coincidences_binned": int(hist.counts.sum()),
            "file": "histogram.csv",
        }

    def _cut_sources(self):
        sources = [("analytic", self._need_surface())]
        if self.manifest.sampler is not None and "histogram" in self.manifest.requested_outputs:
            sources.append(("mc", self._need_histogram()))
        return sources

    def stage_cuts(self):
        for label, source in self._cut_sources():
            for kind in CutKind:
                cut = extract_cut(source, kind)
                stem = f"{label}_{kind.value}"
                self._write(f"cut_{stem}.csv",
                            io.cut_csv(self.manifest, cut.x, cut.y, cut.y_err))
                self._write(f"plot_{stem}.dat", io.plot_dat(self.manifest, cut.x, cut.y))

    def stage_fits(self):
        cfg = self.manifest.experiment
        fits: dict = {}
        for label, source in self._cut_sources():
            fits[label] = {}
            for kind in CutKind:
                cut = extract_cut(source, kind)
                fit = fit_fringe(cut, cfg)
                try:
                    predicted = predicted_period(cfg, kind)
                except NoFringeError:
                    predicted = None
                fits[label][kind.value] = _fit_payload(fit, predicted)
        self.summary["fits"] = fits
        if self.manifest.sampler is not None and "histogram" in self.manifest.requested_outputs:
            hist = self._need_histogram()
            self.summary["singles_visibility"] = {
                "arm1": marginal_visibility(hist, cfg, 1),
                "arm2": marginal_visibility(hist, cfg, 2),
            }

    def stage_tilt(self):
        tilt: dict = {"expected_deg": expected_tilt_deg(self.manifest.experiment)}
        tilt["analytic_deg"] = estimate_tilt(self._need_surface())
        if self.manifest.sampler is not None and "histogram" in self.manifest.requested_outputs:
            tilt["mc_deg"] = estimate_tilt(self._need_histogram())
        self.summary["tilt"] = tilt

    def stage_oracle_check(self):
        manifest = self.manifest
        analytic = rate_surface(manifest.experiment, ORACLE_CHECK_BINS)
        oracle = oracle_surface(manifest.experiment, ORACLE_CHECK_BINS,
                                manifest.quadrature_points)
        refined = oracle_surface(manifest.experiment, ORACLE_CHECK_BINS,
                                 2 * manifest.quadrature_points)
        deviation = max_normalized_deviation(analytic, oracle)
        refinement = max_normalized_deviation(oracle, refined)
        report = {
            "grid_bins": ORACLE_CHECK_BINS,
            "quadrature_points": manifest.quadrature_points,
            "max_normalized_deviation": deviation,
            "quadrature_refinement_delta": refinement,
            "tolerance": manifest.oracle_tolerance,
            "passed": bool(deviation < manifest.oracle_tolerance
                           and refinement < QUADRATURE_REFINEMENT_TOLERANCE),
        }
        self.summary["oracle_check"] = report
        if not report["passed"]:
            raise PhysicsError(
                f"analytic-vs-brute-force deviation {deviation:.4%} "
                f"(tolerance {manifest.oracle_tolerance:.4%}), quadrature refinement "
                f"delta {refinement:.4%}")

    def stage_summary(self):
        self._write("summary.json", io.summary_json(self.summary))

    def execute(self) -> int:
        stages = {
            "surface": self.stage_surface,
            "histogram": self.stage_histogram,
            "cuts": self.stage_cuts,
            "fits": self.stage_fits,
            "tilt": self.stage_tilt,
            "oracle-check": self.stage_oracle_check,
            "summary": self.stage_summary,
        }
        try:
            self.out.mkdir(parents=True, exist_ok=True)
            probe = self.out / ".write-probe.partial"
            probe.write_text("")
            probe.unlink()
        except OSError as exc:
            print(f"error: output directory not writable: {exc}", file=sys.stderr)
            return 3
        for name in STAGE_ORDER:
            if name not in self.manifest.requested_outputs:
                continue
            try:
                stages[name]()
            except (PhysicsError, ValueError) as exc:
                return self._fail(name, exc, 2)
            except OSError as exc:
                return self._fail(name, exc, 3)
        return 0

    def _fail(self, stage: str, exc: Exception, status: int) -> int:
        self.summary["error"] = {"stage": stage, "message": str(exc)}
        try:
            partial = self.out / "summary.json.partial"
            partial.write_text(io.summary_json(self.summary))
        except OSError:
            pass
        print(f"error in stage {stage}: {exc}", file=sys.stderr)
        return status


def run(manifest: RunManifest, quiet: bool = False) -> int:
    """Execute a manifest; returns the process exit status."""
    return _Runner(manifest, quiet=quiet).execute()
