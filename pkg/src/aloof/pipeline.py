"""Synthetic experiment: model curve -> interferogram -> contrast profile."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .decoherence.curves import VisibilityCurve
from .fringes import (ContrastProfile, FringeImage, FringeModelParams, ImageGeometry,
                      normalize_profile, reference_mask, slice_and_fit, synthesize_image)

DEFAULT_BASE = FringeModelParams(i0=1.0, contrast=0.6, spacing=12e-6, phase=0.3,
                                 envelope_width=300e-6, envelope_phase=0.0)


@dataclass
class PipelineResult:
    curve: VisibilityCurve
    image: FringeImage
    raw_profile: ContrastProfile
    profile: ContrastProfile
    model_at_slabs: np.ndarray
    model_normalized: np.ndarray
    compare_mask: np.ndarray

    def max_deviation(self, normalized_model=True):
        """max |C_extracted - V_model| over valid slabs in the comparison region."""
        ref = self.model_normalized if normalized_model else self.model_at_slabs
        sel = self.compare_mask & self.profile.valid
        if not sel.any():
            return float("nan")
        return float(np.max(np.abs(self.profile.contrast[sel] - ref[sel])))

    def median_sigma(self):
        s = self.profile.sigma[self.profile.valid]
        return float(np.median(s)) if s.size else float("nan")


def image_grid(geometry):
    """z grid that covers every image row, for evaluating the model curve."""
    z = geometry.row_z()
    return z


def run_pipeline(curve, geometry=ImageGeometry(), base=DEFAULT_BASE, total_counts=5e5, seed=0,
                 slab_height=2e-6, reference_band=5e-6, z_compare_min=5e-6):
    """Synthesize, slice, fit and normalize.

    The model is compared after dividing it by its own mean over the slabs
    of the reference band, the same operation applied to the data.
    """
    image = synthesize_image(curve, base, geometry, total_counts, seed)
    raw = slice_and_fit(image, slab_height)
    profile = normalize_profile(raw, reference_band)
    model = curve.interpolate(profile.z_centers)
    band = reference_mask(profile, reference_band)
    model_norm = model / float(np.mean(model[band]))
    mask = profile.z_centers > z_compare_min
    return PipelineResult(curve, image, raw, profile, model, model_norm, mask)
