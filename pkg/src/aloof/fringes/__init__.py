"""Synthetic interferograms and the contrast-profile analysis chain."""

from .analysis import (VALID_FLAGS, ContrastProfile, apply_shear, normalize_profile,
                       reference_mask, slice_and_fit, write_profile_csv)
from .image import (FringeImage, ImageGeometry, decode_pgm, encode_pgm, expected_image, read_image,
                    sidecar_path, synthesize_image, write_image)
from .model import (FringeFit, FringeModelParams, PeriodicityError, bin_positions, dominant_peak,
                    fit_contrast_fixed_shape, fit_fringe_model, fringe_intensity)

__all__ = [
    "VALID_FLAGS", "ContrastProfile", "apply_shear", "normalize_profile", "reference_mask",
    "slice_and_fit", "write_profile_csv", "FringeImage", "ImageGeometry", "decode_pgm",
    "encode_pgm", "expected_image", "read_image", "sidecar_path", "synthesize_image",
    "write_image", "FringeFit", "FringeModelParams", "PeriodicityError", "bin_positions",
    "dominant_peak", "fit_contrast_fixed_shape", "fit_fringe_model", "fringe_intensity",
]
