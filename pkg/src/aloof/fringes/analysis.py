"""Contrast-versus-height analysis of a fringe image.

Rows are grouped into slabs of fixed height, each slab is summed into a
column histogram and the fringe model is fitted to it.  A fit of the whole
image first fixes the fringe period and envelope; a slab whose own spectrum
does not show the fringe frequency is fitted with that shape held fixed
(flag ``reduced``) instead of being discarded.

Slab flags
    ok              full nonlinear fit
    reduced         contrast from the fixed-shape fit
    clamped         fitted contrast above 1, reported as 1
    nonconverged    fit failed; contrast is NaN
    no_periodicity  the whole image shows no fringes; contrast is NaN
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..csvio import write_csv
from ..errors import DomainError
from .model import (PERIODICITY_THRESHOLD, PeriodicityError, dominant_peak, fit_contrast_fixed_shape,
                    fit_fringe_model)

VALID_FLAGS = ("ok", "reduced", "clamped")


@dataclass
class ContrastProfile:
    z_centers: np.ndarray
    contrast: np.ndarray
    sigma: np.ndarray
    flags: list
    slab_height: float
    normalized: bool = False
    normalization_constant: float = 1.0
    reference_band: float = 0.0
    global_params: np.ndarray | None = None

    @property
    def valid(self):
        return np.array([f in VALID_FLAGS for f in self.flags], dtype=bool)

    @property
    def degraded(self):
        return not self.valid.any() or any(f in ("nonconverged", "no_periodicity") for f in self.flags)


def apply_shear(counts, coefficients):
    """Shift each row by round(sum_k a_k i^k) columns (i = row index).

    Used to straighten tilted or bent fringes of measured images; circular
    shifts keep the count total.
    """
    if not coefficients:
        return counts
    out = np.empty_like(counts)
    rows = np.arange(counts.shape[0], dtype=float)
    shifts = np.rint(np.polyval(list(coefficients)[::-1], rows)).astype(int)
    for i, k in enumerate(shifts):
        out[i] = np.roll(counts[i], -k)
    return out


def _slab_fit(hist, pitch, shape_params):
    """Return (contrast, sigma, flag) for one slab histogram."""
    i0_scale = float(hist.sum()) / max(float(shape_params[0]), 1e-300)
    s, s1, phi1 = shape_params[2], shape_params[4], shape_params[5]
    try:
        peak = dominant_peak(hist)
        strong = peak.significance >= PERIODICITY_THRESHOLD
    except PeriodicityError:
        strong = False
    if strong:
        start = np.array(shape_params, dtype=float)
        start[0] = shape_params[0] * i0_scale / len(hist)
        c_lin, _, phi_lin, a_lin = fit_contrast_fixed_shape(hist, pitch, (s, s1, phi1))
        if a_lin > 0 and math.isfinite(c_lin):
            start[0], start[1], start[3] = a_lin, min(max(c_lin, 1e-3), 1.0), phi_lin
        fit = fit_fringe_model(hist, pitch, initial=start)
        if fit.converged and math.isfinite(fit.contrast_sigma):
            c = fit.contrast
            if c > 1.0:
                return 1.0, fit.contrast_sigma, "clamped"
            return c, fit.contrast_sigma, "ok"
    c, sig, _, a = fit_contrast_fixed_shape(hist, pitch, (s, s1, phi1))
    if not (a > 0 and math.isfinite(c) and math.isfinite(sig)):
        return math.nan, math.nan, "nonconverged"
    if c > 1.0:
        return 1.0, sig, "clamped"
    return c, sig, "reduced"


def slice_and_fit(image, dz=2e-6, shear=None):
    """Contrast profile of ``image`` in slabs of height ``dz``.

    ``dz`` is rounded to a whole number of rows (at least one).  Slabs start
    at the bottom row; an incomplete slab at the top is dropped.
    """
    pz = image.pixel_pitch_z
    rows = int(round(dz / pz))
    if rows < 1:
        raise DomainError("slab height is below one pixel row")
    counts = apply_shear(image.counts, shear)
    n_slabs = counts.shape[0] // rows
    if n_slabs == 0:
        raise DomainError("image is shorter than one slab")
    pitch = image.pixel_pitch_x
    z_rows = image.row_z()
    z_c = np.array([z_rows[k * rows:(k + 1) * rows].mean() for k in range(n_slabs)])
    c = np.full(n_slabs, math.nan)
    sig = np.full(n_slabs, math.nan)
    hists = [counts[k * rows:(k + 1) * rows].sum(axis=0).astype(float) for k in range(n_slabs)]
    try:
        glob = fit_fringe_model(counts[:n_slabs * rows].sum(axis=0).astype(float), pitch)
        if not glob.converged:
            raise PeriodicityError("global fringe fit did not converge")
    except PeriodicityError:
        return ContrastProfile(z_c, c, sig, ["no_periodicity"] * n_slabs, rows * pz)
    shape = glob.params.copy()
    flags = []
    for k, h in enumerate(hists):
        c[k], sig[k], f = _slab_fit(h, pitch, shape)
        flags.append(f)
    return ContrastProfile(z_c, c, sig, flags, rows * pz, global_params=shape)


def reference_mask(profile, band):
    top = float(profile.z_centers.max()) + 0.5 * profile.slab_height
    return (profile.z_centers >= top - band) & profile.valid


def normalize_profile(profile, band=5e-6):
    """Divide the profile by the mean contrast of slabs centered in the top ``band``.

    The constant is kept on the result.  A profile whose band mean is
    already 1 (to 1e-12) is returned unchanged, so normalization is
    idempotent.
    """
    mask = reference_mask(profile, band)
    if not mask.any():
        raise DomainError("reference band holds no valid slab")
    const = float(np.mean(profile.contrast[mask]))
    if not const > 0:
        raise DomainError("reference band mean contrast is not positive")
    if profile.normalized and abs(const - 1.0) <= 1e-12:
        return replace(profile, flags=list(profile.flags))
    total = const * profile.normalization_constant if profile.normalized else const
    return replace(profile, contrast=profile.contrast / const, sigma=profile.sigma / const,
                   flags=list(profile.flags), normalized=True, normalization_constant=total,
                   reference_band=band)


def profile_rows(profile):
    return [(float(z), float(c), float(s), profile.normalized, f)
            for z, c, s, f in zip(profile.z_centers, profile.contrast, profile.sigma, profile.flags)]


def write_profile_csv(profile, path, provenance=None):
    prov = dict(provenance or {})
    prov.update({"slab_height_m": profile.slab_height,
                 "normalized": profile.normalized,
                 "normalization_constant": profile.normalization_constant,
                 "reference_band_m": profile.reference_band})
    return write_csv(path, prov, ["z_m", "contrast", "sigma", "normalized", "flag"],
                     profile_rows(profile))
