"""Analytic coincidence-rate model for two-photon double-slit interference.

Two photons (wavelengths lambda1, lambda2) pass a double-slit either together
through the same slit (Scheme I) or separately through opposite slits
(Scheme II) and are detected in coincidence at transverse positions x1, x2.
The far-field joint rate is

    R(x1, x2) = env1(x1) * env2(x2) * (1 + cos(phi)),

with phi = (w1*x1 + w2*x2) * d / (c*z) for Scheme I and
     phi = (w1*x1 - w2*x2) * d / (c*z) for Scheme II,

where w_i = 2*pi*c/lambda_i, d is the slit spacing and z the propagation
distance. env_i is the single-slit sinc^2 diffraction envelope of the finite
slit width (toggleable, on by default). An independent brute-force check sums
exact-path phasors over each slit aperture (`oracle_rate`, `oracle_surface`)
without the far-field phase approximation.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0  # m/s

# Far-field (paraxial) validity bound for (window + slit spacing) / distance.
PARAXIAL_LIMIT = 0.05


class PhysicsError(RuntimeError):
    """An internal physics self-check failed (bound or tolerance violated)."""


class Scheme(enum.Enum):
    """Which slit combination the photon pair takes.

    I:  both photons traverse the same slit (either one).
    II: the photons traverse opposite slits.
    """

    I = "I"
    II = "II"


class Provenance(enum.Enum):
    ANALYTIC = "analytic"
    ORACLE = "oracle"


@dataclass(frozen=True)
class ExperimentConfig:
    """Geometry and wavelengths of one double-slit coincidence experiment.

    All lengths in meters. `distance` is the slit-to-detector propagation
    length (for the lens-folded Scheme II setup, the effective diffraction
    length). Detectors scan [-window_halfwidth, +window_halfwidth] on each
    axis. `use_envelope` toggles the finite-slit-width sinc^2 factor so the
    bare two-slit fringe term can be studied in isolation.
    """

    scheme: Scheme
    lambda1: float
    lambda2: float
    slit_spacing: float
    slit_width: float
    distance: float
    window_halfwidth: float
    light_speed: float = SPEED_OF_LIGHT
    use_envelope: bool = True

    def __post_init__(self):
        if self.lambda1 <= 0 or self.lambda2 <= 0:
            raise ValueError("wavelengths must be positive")
        if not self.slit_spacing > self.slit_width > 0:
            raise ValueError("slit geometry requires slit_spacing > slit_width > 0")
        if self.distance <= 0:
            raise ValueError("distance must be positive")
        if self.window_halfwidth <= 0:
            raise ValueError("window_halfwidth must be positive")
        if self.light_speed <= 0:
            raise ValueError("light_speed must be positive")
        paraxial = (self.window_halfwidth + self.slit_spacing) / self.distance
        if not paraxial < PARAXIAL_LIMIT:
            raise ValueError(
                f"configuration is not paraxial: (window + slit spacing)/distance "
                f"= {paraxial:.4g} exceeds {PARAXIAL_LIMIT}"
            )

    @property
    def omega1(self) -> float:
        """Angular frequency detected at D1 (rad/s)."""
        return 2.0 * np.pi * self.light_speed / self.lambda1

    @property
    def omega2(self) -> float:
        """Angular frequency detected at D2 (rad/s)."""
        return 2.0 * np.pi * self.light_speed / self.lambda2

    @property
    def omega_sum(self) -> float:
        return self.omega1 + self.omega2

    @property
    def omega_diff(self) -> float:
        return self.omega1 - self.omega2


@dataclass(frozen=True)
class RateSurface:
    """Coincidence rate sampled on a uniform (x1, x2) grid.

    `axis1`/`axis2` are the bin-center positions (m), strictly increasing
    with uniform spacing; `values[i, j]` is the rate at (axis1[i], axis2[j]).
    """

    axis1: np.ndarray
    axis2: np.ndarray
    values: np.ndarray
    provenance: Provenance

    def __post_init__(self):
        axis1 = np.asarray(self.axis1, dtype=float)
        axis2 = np.asarray(self.axis2, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if values.shape != (axis1.size, axis2.size):
            raise ValueError("values shape must be (len(axis1), len(axis2))")
        for ax in (axis1, axis2):
            steps = np.diff(ax)
            if ax.size < 2 or np.any(steps <= 0):
                raise ValueError("axes must be strictly increasing")
            # Tolerance admits axes recovered from 9-significant-digit files.
            if not np.allclose(steps, steps[0], rtol=1e-6, atol=0.0):
                raise ValueError("axes must be uniformly spaced")
        if np.any(values < 0):
            raise ValueError("rate values must be non-negative")
        for name, arr in (("axis1", axis1), ("axis2", axis2), ("values", values)):
            arr = arr.copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def spacing(self) -> float:
        return float(self.axis1[1] - self.axis1[0])


def envelope(x, lam: float, cfg: ExperimentConfig):
    """Single-slit diffraction envelope sinc^2(pi*b*x / (lam*z)).

    Even in x, 1 at x=0, first null at x = lam*z/b. Returns 1 everywhere
    when the config has the envelope disabled. Accepts scalars or arrays.
    """
    x = np.asarray(x, dtype=float)
    if not cfg.use_envelope:
        out = np.ones_like(x)
        return float(out) if out.ndim == 0 else out
    # |x| keeps the evenness exact in floating point.
    arg = cfg.slit_width * np.abs(x) / (lam * cfg.distance)
    out = np.sinc(arg) ** 2
    return float(out) if out.ndim == 0 else out


def _phase(x1, x2, cfg: ExperimentConfig, form: str):
    d_over_cz = cfg.slit_spacing / (cfg.light_speed * cfg.distance)
    sign = 1.0 if cfg.scheme is Scheme.I else -1.0
    if form == "arm":
        return (cfg.omega1 * x1 + sign * (cfg.omega2 * x2)) * d_over_cz
    if form == "sumdiff":
        # Same phase rewritten with sum/difference frequencies; the +/-
        # combinations swap between the two schemes.
        wp, wm = cfg.omega_sum, cfg.omega_diff
        if cfg.scheme is Scheme.I:
            return (wp * (x1 + x2) / 2 + wm * (x1 - x2) / 2) * d_over_cz
        return (wp * (x1 - x2) / 2 + wm * (x1 + x2) / 2) * d_over_cz
    raise ValueError(f"unknown phase form {form!r}")


def coincidence_rate(x1, x2, cfg: ExperimentConfig, phase_form: str = "arm"):
    """Analytic joint detection rate at detector positions (x1, x2).

    Returns env1(x1)*env2(x2)*(1 + cos(phi)) in [0, 2]. `phase_form`
    selects between the per-arm phase ("arm") and the algebraically equal
    sum/difference-frequency rewriting ("sumdiff"); both exist so the
    identity between them can be checked directly.
    """
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if not (np.all(np.isfinite(x1)) and np.all(np.isfinite(x2))):
        raise ValueError("detector positions must be finite")
    phi = _phase(x1, x2, cfg, phase_form)
    out = envelope(x1, cfg.lambda1, cfg) * envelope(x2, cfg.lambda2, cfg) * (1.0 + np.cos(phi))
    out = np.asarray(out)
    return float(out) if out.ndim == 0 else out


def rate_surface(cfg: ExperimentConfig, n_bins: int) -> RateSurface:
    """Analytic rate on an n_bins x n_bins grid of bin centers over the window."""
    if n_bins < 8:
        raise ValueError("n_bins must be at least 8")
    axis = grid_centers(cfg.window_halfwidth, n_bins)
    env1 = envelope(axis, cfg.lambda1, cfg)
    env2 = envelope(axis, cfg.lambda2, cfg)
    phi = _phase(axis[:, None], axis[None, :], cfg, "arm")
    values = env1[:, None] * env2[None, :] * (1.0 + np.cos(phi))
    # 1 + cos can round to just below zero at the fringe nulls.
    np.maximum(values, 0.0, out=values)
    return RateSurface(axis1=axis, axis2=axis, values=values, provenance=Provenance.ANALYTIC)


def grid_centers(halfwidth: float, n_bins: int) -> np.ndarray:
    """Bin-center positions of n_bins uniform bins over [-halfwidth, +halfwidth]."""
    edges = np.linspace(-halfwidth, halfwidth, n_bins + 1)
    return 0.5 * (edges[:-1] + edges[1:])


def slit_propagator(x, slit_index: int, lam: float, cfg: ExperimentConfig,
                    quadrature_points: int = 64):
    """Mean phasor from one finite-width slit to detector position x.

    Midpoint quadrature of exp(i*w*r/c) over the slit aperture, with the
    exact path length r = sqrt(z^2 + (x - s)^2); slit 1 is centered at +d/2,
    slit 2 at -d/2. 1/r amplitude decay is omitted (far-field regime), so
    |result| <= 1. Accepts scalar or array x.
    """
    if slit_index not in (1, 2):
        raise ValueError("slit_index must be 1 or 2")
    if quadrature_points < 16:
        raise ValueError("quadrature_points must be at least 16")
    x = np.asarray(x, dtype=float)
    center = 0.5 * cfg.slit_spacing if slit_index == 1 else -0.5 * cfg.slit_spacing
    n = quadrature_points
    s = center + ((np.arange(n) + 0.5) / n - 0.5) * cfg.slit_width
    r = np.hypot(cfg.distance, x[..., None] - s)
    omega_over_c = 2.0 * np.pi / lam
    g = np.exp(1j * omega_over_c * r).mean(axis=-1)
    return complex(g) if g.ndim == 0 else g


def oracle_rate(x1, x2, cfg: ExperimentConfig, quadrature_points: int = 64):
    """Brute-force coincidence rate |A|^2 from exact-path slit sums.

    Scheme I amplitude: g1(x1)g1(x2) + g2(x1)g2(x2); Scheme II:
    g1(x1)g2(x2) + g2(x1)g1(x2), with arm 1 at omega1 and arm 2 at omega2.
    Independent of the analytic far-field formula; used to validate it.
    """
    g1_a1 = slit_propagator(x1, 1, cfg.lambda1, cfg, quadrature_points)
    g2_a1 = slit_propagator(x1, 2, cfg.lambda1, cfg, quadrature_points)
    g1_a2 = slit_propagator(x2, 1, cfg.lambda2, cfg, quadrature_points)
    g2_a2 = slit_propagator(x2, 2, cfg.lambda2, cfg, quadrature_points)
    if cfg.scheme is Scheme.I:
        amp = g1_a1 * g1_a2 + g2_a1 * g2_a2
    else:
        amp = g1_a1 * g2_a2 + g2_a1 * g1_a2
    out = np.abs(amp) ** 2
    return float(out) if np.ndim(out) == 0 else out


def oracle_surface(cfg: ExperimentConfig, n_bins: int,
                   quadrature_points: int = 64) -> RateSurface:
    """Brute-force rate on the window grid, via per-axis slit sums.

    The amplitude factorizes per detector axis, so the whole surface costs
    two slit sums per axis plus outer products.
    """
    if n_bins < 8:
        raise ValueError("n_bins must be at least 8")
    axis = grid_centers(cfg.window_halfwidth, n_bins)
    g1_a1 = slit_propagator(axis, 1, cfg.lambda1, cfg, quadrature_points)
    g2_a1 = slit_propagator(axis, 2, cfg.lambda1, cfg, quadrature_points)
    g1_a2 = slit_propagator(axis, 1, cfg.lambda2, cfg, quadrature_points)
    g2_a2 = slit_propagator(axis, 2, cfg.lambda2, cfg, quadrature_points)
    if cfg.scheme is Scheme.I:
        amp = g1_a1[:, None] * g1_a2[None, :] + g2_a1[:, None] * g2_a2[None, :]
    else:
        amp = g1_a1[:, None] * g2_a2[None, :] + g2_a1[:, None] * g1_a2[None, :]
    values = np.abs(amp) ** 2
    return RateSurface(axis1=axis, axis2=axis, values=values, provenance=Provenance.ORACLE)


def max_normalized_deviation(a: RateSurface, b: RateSurface) -> float:
    """Largest pointwise gap between two surfaces, each normalized to unit peak.

    Deviation is measured relative to the peak value (not pointwise-relative,
    which is ill-defined at the fringe nulls where both surfaces approach 0).
    """
    if a.values.shape != b.values.shape:
        raise ValueError("surfaces must share a grid")
    va = a.values / a.values.max()
    vb = b.values / b.values.max()
    return float(np.abs(va - vb).max())
