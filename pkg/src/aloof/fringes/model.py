"""Fringe model function and its least-squares fit to a 1D histogram.

I(x) = I0 (1 + C cos(2 pi x / s + phi0)) sinc^2(2 pi x / s1 + phi1)

with the unnormalized sinc(u) = sin(u)/u.  Positions are measured from the
histogram center, so bin i of n sits at x = (i - (n - 1)/2) * pitch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ConvergenceError, DomainError
from ..fitting import least_squares_fit
from ..special import sinc

#: Spectral peaks below this multiple of the noise floor count as absent.
PERIODICITY_THRESHOLD = 12.0

#: Lowest fringe order searched in the spectrum; lower orders belong to the envelope.
MIN_FRINGE_ORDER = 3


class PeriodicityError(ConvergenceError):
    """The histogram shows no fringe frequency above the noise floor."""


@dataclass(frozen=True)
class FringeModelParams:
    i0: float
    contrast: float
    spacing: float
    phase: float = 0.0
    envelope_width: float = 1.0
    envelope_phase: float = 0.0

    def __post_init__(self):
        if not self.i0 > 0:
            raise DomainError("I0 must be positive")
        if not 0.0 <= self.contrast <= 1.0:
            raise DomainError("contrast must lie in [0, 1]")
        if not (self.spacing > 0 and self.envelope_width > 0):
            raise DomainError("fringe spacing and envelope width must be positive")

    def as_array(self):
        return np.array([self.i0, self.contrast, self.spacing, self.phase,
                         self.envelope_width, self.envelope_phase])

    def with_contrast(self, contrast):
        from dataclasses import replace
        return replace(self, contrast=contrast)


def _model(p, x):
    i0, c, s, phi0, s1, phi1 = p
    return i0 * (1.0 + c * np.cos(2.0 * math.pi * x / s + phi0)) \
        * sinc(2.0 * math.pi * x / s1 + phi1) ** 2


def _model_jacobian(p, x):
    i0, c, s, phi0, s1, phi1 = p
    a = 2.0 * math.pi * x / s + phi0
    u = 2.0 * math.pi * x / s1 + phi1
    cosa, sina = np.cos(a), np.sin(a)
    env = sinc(u)
    small = np.abs(u) < 1e-4
    safe = np.where(small, 1.0, u)
    # d sinc / du, with its Taylor series near the origin
    dsinc = np.where(small, -u / 3.0 + u**3 / 30.0, (np.cos(safe) - np.sin(safe) / safe) / safe)
    fr = 1.0 + c * cosa
    env2 = env * env
    denv = 2.0 * env * dsinc
    out = np.empty((len(x), 6))
    out[:, 0] = fr * env2
    out[:, 1] = i0 * cosa * env2
    out[:, 3] = -i0 * c * sina * env2
    out[:, 2] = out[:, 3] * (-2.0 * math.pi * x / s**2)
    out[:, 5] = i0 * fr * denv
    out[:, 4] = out[:, 5] * (-2.0 * math.pi * x / s1**2)
    return out


def fringe_intensity(p: FringeModelParams, x):
    """Model intensity at positions ``x`` (same length unit as the spacings)."""
    return _model(p.as_array(), np.asarray(x, dtype=float))


def bin_positions(n, pitch):
    return (np.arange(n) - 0.5 * (n - 1)) * pitch


@dataclass(frozen=True)
class SpectralPeak:
    order: int          # refined, may be fractional
    amplitude: float    # |F_m|
    phase: float        # phi0 seed for centered coordinates
    significance: float # |F_m|^2 / noise floor


def dominant_peak(hist):
    """Strongest fringe order of the histogram's discrete spectrum.

    The noise floor is the mean power of the remaining orders, estimated
    robustly from their median (power of white noise is exponential).
    """
    h = np.asarray(hist, dtype=float)
    n = len(h)
    spectrum = np.fft.rfft(h - h.mean())
    power = np.abs(spectrum) ** 2
    lo = min(MIN_FRINGE_ORDER, len(power) - 2)
    if lo < 1 or len(power) - lo < 3:
        raise PeriodicityError("histogram too short for a spectral estimate")
    m = lo + int(np.argmax(power[lo:]))
    rest = np.delete(power[lo:], np.arange(max(m - lo - 2, 0), min(m - lo + 3, len(power) - lo)))
    floor = float(np.median(rest)) / math.log(2.0) if len(rest) else 0.0
    # quadratic interpolation of the magnitude peak
    order = float(m)
    if 0 < m < len(power) - 1:
        a, b, c = np.abs(spectrum[m - 1:m + 2])
        denom = a - 2.0 * b + c
        if denom < 0:
            order += 0.5 * (a - c) / denom
    centre = 0.5 * (n - 1)
    phase = float(np.angle(spectrum[m]) + 2.0 * math.pi * m * centre / n)
    phase = math.remainder(phase, 2.0 * math.pi)
    if not power[m] > 0:
        sig = 0.0          # flat histogram: no fringe at all
    else:
        sig = float(power[m] / floor) if floor > 0 else math.inf
    return SpectralPeak(order, float(abs(spectrum[m])), phase, sig)


def seed_params(hist, pitch):
    """Start values from the histogram mean and its dominant spectral peak."""
    h = np.asarray(hist, dtype=float)
    n = len(h)
    peak = dominant_peak(h)
    if not peak.significance >= PERIODICITY_THRESHOLD:
        raise PeriodicityError(f"no fringe frequency above noise floor "
                               f"(significance {peak.significance:.3g})")
    total = float(h.sum())
    spacing = n * pitch / peak.order
    contrast = min(max(2.0 * peak.amplitude / total, 1e-3), 1.0) if total > 0 else 0.5
    # envelope: wide main lobe over the window; refined by the fit
    x = bin_positions(n, pitch)
    s1 = 3.0 * n * pitch
    env = sinc(2.0 * math.pi * x / s1) ** 2
    i0 = total / float(env.sum())
    return np.array([i0, contrast, spacing, peak.phase, s1, 0.0]), peak


@dataclass
class FringeFit:
    params: np.ndarray
    covariance: np.ndarray
    converged: bool
    max_abs_residual: float
    significance: float
    message: str = ""

    @property
    def contrast(self):
        return abs(float(self.params[1]))

    @property
    def contrast_sigma(self):
        return math.sqrt(abs(float(self.covariance[1, 1])))

    @property
    def spacing_identifiable(self):
        return bool(np.isfinite(self.covariance[2, 2]))

    def to_params(self):
        i0, c, s, phi0, s1, phi1 = self.params
        if c < 0:
            c, phi0 = -c, phi0 + math.pi
        if s1 < 0:
            s1, phi1 = -s1, -phi1
        return FringeModelParams(i0, min(c, 1.0), abs(s), math.remainder(phi0, 2 * math.pi),
                                 s1, phi1)


def fit_fringe_model(hist, pitch, initial=None, weights="poisson"):
    """Fit the fringe model to a histogram by damped least squares.

    ``initial`` (FringeModelParams or 6-array) skips spectral seeding.
    Weights default to 1/max(n, 1).  Returns a ``FringeFit`` with the raw
    parameter vector and its covariance.

    Raises
    ------
    PeriodicityError
        No usable fringe frequency for seeding (only without ``initial``).
    DomainError
        Fewer than 8 bins.
    """
    h = np.asarray(hist, dtype=float)
    if h.ndim != 1 or len(h) < 8:
        raise DomainError("fringe fit needs a 1D histogram with at least 8 bins")
    if not pitch > 0:
        raise DomainError("pitch must be positive")
    x = bin_positions(len(h), pitch)
    if initial is None:
        p0, peak = seed_params(h, pitch)
        significance = peak.significance
    else:
        p0 = initial.as_array() if isinstance(initial, FringeModelParams) else np.asarray(initial, float)
        significance = math.nan
    w = None
    if isinstance(weights, str) and weights == "poisson":
        w = 1.0 / np.maximum(h, 1.0)
    elif weights is not None:
        w = np.asarray(weights, dtype=float)
    # fit in bin units with unit mean intensity so all parameters are O(1)
    scale = np.array([max(float(h.mean()), 1e-300), 1.0, pitch, 1.0, pitch, 1.0])
    hs = h / scale[0]
    ws = None if w is None else w * scale[0] ** 2
    fit = least_squares_fit(_model, x / pitch, hs, p0 / scale, weights=ws,
                            jacobian=_model_jacobian)
    params = fit.params * scale
    cov = fit.covariance * np.outer(scale, scale)
    resid = float(np.max(np.abs(h - _model(params, x))))
    return FringeFit(params, cov, fit.converged, resid, significance, fit.message)


def fit_contrast_fixed_shape(hist, pitch, shape, weights="poisson"):
    """Contrast with spacing and envelope fixed, as a linear fit.

    I = E(x) (a + b cos(2 pi x/s) + c sin(2 pi x/s)) with E the fixed
    envelope gives C = sqrt(b^2 + c^2)/a.  Used for slabs whose own spectrum
    is too weak to pin the period.  Returns (C, sigma_C, phi0, I0).
    """
    h = np.asarray(hist, dtype=float)
    x = bin_positions(len(h), pitch)
    s, s1, phi1 = shape
    env = sinc(2.0 * math.pi * x / s1 + phi1) ** 2
    arg = 2.0 * math.pi * x / s
    A = np.column_stack([env, env * np.cos(arg), env * np.sin(arg)])
    w = 1.0 / np.maximum(h, 1.0) if isinstance(weights, str) and weights == "poisson" else np.ones_like(h)
    sw = np.sqrt(w)
    coef, *_ = np.linalg.lstsq(A * sw[:, None], h * sw, rcond=None)
    a, b, c = coef
    resid = (h - A @ coef) * sw
    dof = max(len(h) - 3, 1)
    cov = np.linalg.pinv((A * sw[:, None]).T @ (A * sw[:, None])) * float(resid @ resid) / dof
    if not a > 0:
        return math.nan, math.inf, 0.0, a
    amp = math.hypot(b, c)
    C = amp / a
    # gradient of C = sqrt(b^2 + c^2)/a
    if amp > 0:
        g = np.array([-amp / a**2, b / (amp * a), c / (amp * a)])
    else:
        g = np.array([0.0, 1.0 / a, 0.0])
    sigma = math.sqrt(max(float(g @ cov @ g), 0.0))
    phi0 = math.atan2(-c, b)
    return C, sigma, phi0, a
