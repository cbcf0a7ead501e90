"""Fringe extraction and quantification for coincidence patterns.

Takes rate surfaces or Monte Carlo histograms and produces the four canonical
detector-scan profiles (single-arm scans and the two diagonal joint scans),
fits fringe period/visibility/phase, estimates the 2D stripe orientation from
the dominant spatial-frequency peak, and computes the closed-form periods the
fits are checked against.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .physics import ExperimentConfig, RateSurface, Scheme, envelope
from .montecarlo import CoincidenceHistogram

# Envelope values below this are clamped before division so noise near the
# sinc nulls is not amplified.
ENVELOPE_FLOOR = 0.02

# Levenberg-style damping schedule for the fringe refinement.
LM_DAMPING_START = 1e-3
LM_MAX_ITERATIONS = 200
LM_RELATIVE_TOLERANCE = 1e-8


class NoFringeError(ValueError):
    """The requested cut has zero effective frequency: no fringe exists."""


class NoStripesError(ValueError):
    """The surface carries no significant periodic modulation."""


class CutKind(enum.Enum):
    """The four canonical detector trajectories through the (x1, x2) plane.

    FIX_D2_SCAN_D1: x2 = 0, x1 = x      (single-arm fringe at omega1)
    FIX_D1_SCAN_D2: x1 = 0, x2 = x      (single-arm fringe at omega2)
    COUNTER_MOVING: x1 = -x2 = x        (anti-diagonal joint scan)
    CO_MOVING:      x1 = x2 = x         (diagonal joint scan)
    """

    FIX_D2_SCAN_D1 = "fix_d2_scan_d1"
    FIX_D1_SCAN_D2 = "fix_d1_scan_d2"
    COUNTER_MOVING = "counter_moving"
    CO_MOVING = "co_moving"


@dataclass(frozen=True)
class CutProfile:
    """1D coincidence profile along one canonical trajectory.

    `x` is the scan parameter in meters (detector coordinate, not arc length),
    `y` the rate or counts, `y_err` optional per-point uncertainties
    (sqrt(counts) for histogram cuts).
    """

    kind: CutKind
    x: np.ndarray
    y: np.ndarray
    y_err: Optional[np.ndarray] = None

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.size != y.size:
            raise ValueError("x and y must have equal length")
        if np.any(np.diff(x) <= 0):
            raise ValueError("x must be strictly increasing")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        if self.y_err is not None:
            err = np.asarray(self.y_err, dtype=float)
            if err.size != x.size:
                raise ValueError("y_err must match x length")
            if np.any(err < 0):
                raise ValueError("y_err must be non-negative")
            object.__setattr__(self, "y_err", err)


@dataclass(frozen=True)
class FringeFit:
    """Result of fitting y ~ amplitude * env(x) * (1 + visibility*cos(2*pi*x/period + phase)).

    `converged` is False when the period could not be determined independently
    (insufficient span or no modulation); the remaining parameters are then a
    best-effort fit at a fixed period. `rms_residual` is quoted in the
    envelope-divided domain, i.e. in units comparable to `amplitude`.
    """

    amplitude: float
    visibility: float
    period: float
    phase: float
    rms_residual: float
    converged: bool


def cut_coordinates(kind: CutKind, x):
    """Map the scan parameter to (x1, x2) detector positions."""
    x = np.asarray(x, dtype=float)
    if kind is CutKind.FIX_D2_SCAN_D1:
        return x, np.zeros_like(x)
    if kind is CutKind.FIX_D1_SCAN_D2:
        return np.zeros_like(x), x
    if kind is CutKind.CO_MOVING:
        return x, x
    return x, -x


def cut_envelope(x, kind: CutKind, cfg: ExperimentConfig):
    """Diffraction envelope along a cut: product of the per-arm envelopes."""
    x1, x2 = cut_coordinates(kind, x)
    return envelope(x1, cfg.lambda1, cfg) * envelope(x2, cfg.lambda2, cfg)


def predicted_period(cfg: ExperimentConfig, kind: CutKind) -> float:
    """Closed-form fringe period 2*pi*c*z / (w_eff*d) for a cut.

    The effective frequency is omega1 or omega2 for the single-arm scans; for
    the joint scans it is the sum frequency along the in-phase direction and
    |difference frequency| along the out-of-phase one, which swap between the
    two schemes. Raises NoFringeError when the effective frequency vanishes
    (degenerate pair scanned along its null direction).
    """
    if kind is CutKind.FIX_D2_SCAN_D1:
        w_eff = cfg.omega1
    elif kind is CutKind.FIX_D1_SCAN_D2:
        w_eff = cfg.omega2
    elif kind is CutKind.CO_MOVING:
        w_eff = cfg.omega_sum if cfg.scheme is Scheme.I else abs(cfg.omega_diff)
    else:
        w_eff = abs(cfg.omega_diff) if cfg.scheme is Scheme.I else cfg.omega_sum
    if w_eff == 0.0:
        raise NoFringeError(f"no fringe along {kind.name} for this configuration")
    return 2.0 * np.pi * cfg.light_speed * cfg.distance / (w_eff * cfg.slit_spacing)


def _bilinear(axis1, axis2, values, x1, x2):
    """Bilinear interpolation on a uniform grid; exact at grid nodes."""
    h1 = axis1[1] - axis1[0]
    h2 = axis2[1] - axis2[0]
    t1 = (x1 - axis1[0]) / h1
    t2 = (x2 - axis2[0]) / h2
    if np.any(t1 < -1e-9) or np.any(t1 > axis1.size - 1 + 1e-9) \
            or np.any(t2 < -1e-9) or np.any(t2 > axis2.size - 1 + 1e-9):
        raise ValueError("cut line exits the surface grid")
    i = np.clip(np.floor(t1).astype(int), 0, axis1.size - 2)
    j = np.clip(np.floor(t2).astype(int), 0, axis2.size - 2)
    f1 = t1 - i
    f2 = t2 - j
    return (values[i, j] * (1 - f1) * (1 - f2)
            + values[i + 1, j] * f1 * (1 - f2)
            + values[i, j + 1] * (1 - f1) * f2
            + values[i + 1, j + 1] * f1 * f2)


def _nearest_index(axis, value) -> int:
    return int(np.argmin(np.abs(axis - value)))


def extract_cut(source: Union[RateSurface, CoincidenceHistogram], kind: CutKind,
                n_points: int = 0) -> CutProfile:
    """Sample a surface or histogram along one canonical trajectory.

    Surfaces are sampled with bilinear interpolation at `n_points` positions
    spanning the grid (default: the grid resolution, in which case samples
    land exactly on grid nodes and interpolation is exact). Histograms use
    nearest-bin lookup with sqrt(N) error bars, at most one point per bin, so
    the Poisson errors stay meaningful.
    """
    if n_points and n_points < 16:
        raise ValueError("n_points must be at least 16")
    if isinstance(source, RateSurface):
        n = n_points or source.axis1.size
        x = np.linspace(source.axis1[0], source.axis1[-1], n)
        if kind is CutKind.FIX_D1_SCAN_D2:
            x = np.linspace(source.axis2[0], source.axis2[-1], n)
        x1, x2 = cut_coordinates(kind, x)
        y = _bilinear(source.axis1, source.axis2, source.values, x1, x2)
        return CutProfile(kind=kind, x=x, y=y)

    centers1 = source.centers1
    centers2 = source.centers2
    n_bins = centers1.size
    n = min(n_points or n_bins, n_bins)
    idx = np.unique(np.round(np.linspace(0, n_bins - 1, n)).astype(int))
    if kind is CutKind.FIX_D2_SCAN_D1:
        j0 = _nearest_index(centers2, 0.0)
        x, y = centers1[idx], source.counts[idx, j0].astype(float)
    elif kind is CutKind.FIX_D1_SCAN_D2:
        i0 = _nearest_index(centers1, 0.0)
        x, y = centers2[idx], source.counts[i0, idx].astype(float)
    else:
        x = centers1[idx]
        partner = x if kind is CutKind.CO_MOVING else -x
        lo, hi = centers2[0], centers2[-1]
        if np.any(partner < lo - 1e-12) or np.any(partner > hi + 1e-12):
            raise ValueError("cut line exits the histogram grid")
        j = np.array([_nearest_index(centers2, p) for p in partner])
        y = source.counts[idx, j].astype(float)
    return CutProfile(kind=kind, x=x, y=y, y_err=np.sqrt(y))


def _seed_from_spectrum(x, v):
    """Period/phase/modulation seed from the dominant DFT peak of v(x).

    `v` should already have its envelope-shaped baseline removed. Uses
    3-point parabolic interpolation of the magnitude spectrum around the peak
    bin so the subsequent refinement starts inside its convergence basin.
    Returns (period, cos_sum, sin_sum); period is None when the spectrum
    carries no nonzero-frequency peak.
    """
    n = v.size
    span = x[-1] - x[0]
    mag = np.abs(np.fft.rfft(v))
    if mag.size < 4:
        return None, 0.0, 0.0
    # Below two cycles per span, modulation is not separable from what is
    # left of the envelope baseline; genuine fringes live at k >= 2.
    k = 2 + int(np.argmax(mag[2:]))
    if mag[k] == 0.0:
        return None, 0.0, 0.0
    delta = 0.0
    if 1 <= k < mag.size - 1:
        denom = mag[k - 1] - 2 * mag[k] + mag[k + 1]
        if denom != 0.0:
            delta = float(np.clip(0.5 * (mag[k - 1] - mag[k + 1]) / denom, -0.5, 0.5))
    freq = (k + delta) * (n - 1) / (n * span)
    if freq <= 0.0:
        return None, 0.0, 0.0
    period = 1.0 / freq
    theta = 2.0 * np.pi * x / period
    c = float(np.sum(v * np.cos(theta)))
    s = float(np.sum(v * np.sin(theta)))
    return period, c, s


def _lm_refine(x, y, env, weights, params, fit_period):
    """Damped least-squares refinement of a*env*(1 + v*cos(2*pi*x/t + phase)).

    params = [amplitude, visibility, period, phase]; `fit_period` fixes or
    frees the period column. Damping starts at 1e-3, is multiplied by 10 on a
    rejected step and divided by 10 on an accepted one, for at most 200
    iterations; convergence is declared when the relative parameter change
    drops below 1e-8 (a proposed step that small also terminates: the fit
    cannot move further).
    """
    p = np.asarray(params, dtype=float)

    def residual(q):
        a, v, t, ph = q
        return weights * (a * env * (1.0 + v * np.cos(2.0 * np.pi * x / t + ph)) - y)

    def unpack(dq):
        full = np.zeros(4)
        if fit_period:
            full[:] = dq
        else:
            full[[0, 1, 3]] = dq
        return full

    r = residual(p)
    cost = float(r @ r)
    lam = LM_DAMPING_START
    converged = False
    for _ in range(LM_MAX_ITERATIONS):
        a, v, t, ph = p
        theta = 2.0 * np.pi * x / t + ph
        c, s = np.cos(theta), np.sin(theta)
        cols = [env * (1.0 + v * c), a * env * c]
        if fit_period:
            cols.append(a * env * v * s * 2.0 * np.pi * x / t ** 2)
        cols.append(-a * env * v * s)
        jac = weights[:, None] * np.stack(cols, axis=1)
        jtj = jac.T @ jac
        jtr = jac.T @ r
        damp = np.diag(jtj).copy()
        damp[damp <= 0] = 1e-12
        try:
            step = np.linalg.solve(jtj + lam * np.diag(damp), -jtr)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(jtj + lam * np.diag(damp), -jtr, rcond=None)[0]
        full_step = unpack(step)
        rel = np.abs(full_step) / np.maximum(np.abs(p), 1e-300)
        if rel.max() < LM_RELATIVE_TOLERANCE:
            converged = True
            break
        trial = p + full_step
        if trial[0] <= 0 or trial[2] <= 0:
            lam *= 10.0
            continue
        r_trial = residual(trial)
        cost_trial = float(r_trial @ r_trial)
        if cost_trial < cost:
            p, r, cost = trial, r_trial, cost_trial
            lam /= 10.0
            if rel.max() < LM_RELATIVE_TOLERANCE:
                converged = True
                break
        else:
            lam *= 10.0
    return p, converged


def fit_fringe(profile: CutProfile, cfg: ExperimentConfig) -> FringeFit:
    """Fit amplitude, visibility, period and phase of a cut profile.

    The model is y = amplitude * env(x) * (1 + visibility*cos(2*pi*x/period
    + phase)) with env the known diffraction envelope along the cut. The
    period is seeded from the dominant discrete-Fourier peak of the profile
    after subtracting its envelope-shaped baseline, then all parameters are
    refined by damped least squares on the raw counts, weighted by 1/y_err^2
    when error bars are present.

    The period is only fit freely when the profile spans at least two
    expected periods; otherwise the fit is repeated with the period pinned
    (to the closed-form prediction when one exists, else to the spectral
    seed) and `converged` is False to flag the period as not independently
    determined. `rms_residual` is quoted for the envelope-divided profile,
    restricted to points where the envelope exceeds the 0.02 division floor.
    """
    if profile.x.size < 16:
        raise ValueError("profile must have at least 16 points")
    x = profile.x
    y = profile.y
    env = cut_envelope(x, profile.kind, cfg)
    if profile.y_err is not None:
        # Zero-count bins get a one-count floor so their weight stays finite.
        weights = 1.0 / np.maximum(profile.y_err, 1.0)
    else:
        weights = np.ones_like(y)

    # Baseline scale, then the purely oscillatory part for spectral seeding.
    # Unweighted on purpose: Poisson weights emphasize the fringe minima and
    # would drag the baseline far below the mean level.
    scale = float(np.sum(y * env) / np.sum(env ** 2))
    period_seed, cos_sum, sin_sum = _seed_from_spectrum(x, y - scale * env)
    env_sum = float(np.sum(env))
    if scale > 0 and env_sum > 0:
        vis_seed = 2.0 * np.hypot(cos_sum, sin_sum) / (scale * env_sum)
    else:
        vis_seed = 0.0
    vis_seed = min(max(vis_seed, 0.01), 1.0)
    phase_seed = float(np.arctan2(-sin_sum, cos_sum))

    try:
        expected = predicted_period(cfg, profile.kind)
    except NoFringeError:
        expected = None

    span = float(x[-1] - x[0])
    fit_period = expected is not None and span >= 2.0 * expected
    if fit_period:
        period0 = period_seed if period_seed is not None else expected
    else:
        period0 = expected if expected is not None else period_seed
        if period0 is None:
            period0 = 2.0 * span  # flat profile; placeholder scale
    p0 = [max(scale, 1e-300), vis_seed, period0, phase_seed]
    params, lm_ok = _lm_refine(x, y, env, weights, p0, fit_period)

    amplitude, visibility, period, phase = params
    if visibility < 0:
        visibility = -visibility
        phase += np.pi
    visibility = float(min(visibility, 1.0))
    phase = float((phase + np.pi) % (2.0 * np.pi) - np.pi)
    if phase == -np.pi:
        phase = np.pi
    clear = env >= ENVELOPE_FLOOR
    model_u = amplitude * (1.0 + visibility * np.cos(2.0 * np.pi * x[clear] / period + phase))
    rms = float(np.sqrt(np.mean((model_u - y[clear] / env[clear]) ** 2))) if clear.any() else 0.0
    return FringeFit(amplitude=float(amplitude), visibility=visibility,
                     period=float(period), phase=phase, rms_residual=rms,
                     converged=bool(fit_period and lm_ok))


def estimate_tilt(source: Union[RateSurface, CoincidenceHistogram],
                  pad_factor: int = 8) -> float:
    """Stripe-normal angle (degrees from the +x1 axis) of a 2D pattern.

    Finds the dominant nonzero spatial-frequency peak of the zero-padded 2D
    DFT of the mean-subtracted pattern and refines it by a magnitude centroid
    over the peak's spectral support (two frequency bins on each side,
    sampled on the padded grid); the returned angle is atan2 of the peak
    frequency vector, standardized to the f1 >= 0 half-plane. Frequencies
    within two cycles per window of the origin are excluded: below that the
    fringe peak is not separable from the envelope's own low-frequency lobe
    (at least two stripe periods must fit in the window).

    Raises NoStripesError for patterns without significant modulation.
    """
    if isinstance(source, RateSurface):
        values = source.values
        spacing1 = float(source.axis1[1] - source.axis1[0])
        spacing2 = float(source.axis2[1] - source.axis2[0])
    else:
        values = source.counts.astype(float)
        spacing1 = float(source.centers1[1] - source.centers1[0])
        spacing2 = float(source.centers2[1] - source.centers2[0])
    n1, n2 = values.shape
    if n1 < 32 or n2 < 32:
        raise ValueError("tilt estimation needs at least a 32x32 grid")

    mean = values.mean()
    if mean <= 0 or values.std() / mean < 1e-6:
        raise NoStripesError("surface is flat: no stripes to orient")

    m1, m2 = pad_factor * n1, pad_factor * n2
    spectrum = np.fft.fft2(values - mean, s=(m1, m2))
    mag = np.abs(spectrum)
    f1 = np.fft.fftfreq(m1, d=spacing1)
    f2 = np.fft.fftfreq(m2, d=spacing2)
    # Mask radii below two cycles per window (in unpadded frequency bins).
    bins1 = f1 * n1 * spacing1
    bins2 = f2 * n2 * spacing2
    radius = np.hypot(bins1[:, None], bins2[None, :])
    mag_masked = np.where(radius >= 2.0, mag, 0.0)

    peak = np.unravel_index(np.argmax(mag_masked), mag_masked.shape)
    peak_mag = mag_masked[peak]
    others = mag_masked[mag_masked > 0]
    if peak_mag == 0.0 or peak_mag < 5.0 * np.median(others):
        raise NoStripesError("no dominant nonzero-frequency peak")

    di = np.arange(-2 * pad_factor, 2 * pad_factor + 1)
    ii = (peak[0] + di) % m1
    jj = (peak[1] + di) % m2
    patch = mag_masked[np.ix_(ii, jj)]
    w = patch / patch.sum()
    fi = (f1[peak[0]] + di / (m1 * spacing1)) @ w.sum(axis=1)
    fj = (f2[peak[1]] + di / (m2 * spacing2)) @ w.sum(axis=0)
    if fi < 0 or (fi == 0 and fj < 0):
        fi, fj = -fi, -fj
    return float(np.degrees(np.arctan2(fj, fi)))


def marginal_visibility(hist: CoincidenceHistogram, cfg: ExperimentConfig,
                        arm: int, return_fit: bool = False):
    """Fitted fringe visibility of one arm's singles counts, envelope-corrected.

    Returns a float in [0, 1]; with return_fit=True returns the full
    FringeFit instead, whose `converged` flag marks whether the (expectedly
    absent) modulation was reliably characterized. Requires the window to
    span at least five single-photon fringe periods so a genuinely flat
    marginal cannot masquerade as an under-resolved fringe.
    """
    if arm not in (1, 2):
        raise ValueError("arm must be 1 or 2")
    if arm == 1:
        kind, centers, singles = CutKind.FIX_D2_SCAN_D1, hist.centers1, hist.singles1
    else:
        kind, centers, singles = CutKind.FIX_D1_SCAN_D2, hist.centers2, hist.singles2
    period = predicted_period(cfg, kind)
    span = centers[-1] - centers[0]
    if span < 5.0 * period:
        raise ValueError("window must span at least 5 single-photon fringe periods")
    y = singles.astype(float)
    profile = CutProfile(kind=kind, x=centers, y=y, y_err=np.sqrt(y))
    fit = fit_fringe(profile, cfg)
    if return_fit:
        return fit
    return float(min(max(fit.visibility, 0.0), 1.0))
