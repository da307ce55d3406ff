"""Synthetic interferograms and their PGM/sidecar storage.

``FringeImage.counts`` is indexed [row, column] with row 0 the row closest
to the surface (smallest z).  PGM files store rows top to bottom, so the
writer flips the array; reading flips it back.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..config import parse_sections
from ..errors import ConfigError, DomainError, FormatError
from .model import FringeModelParams, bin_positions, fringe_intensity

PGM_MAXVAL = 65535


@dataclass(frozen=True)
class ImageGeometry:
    """Pixel grid; row centers sit at z_bottom + i * pitch_z."""

    n_x: int = 200
    n_z: int = 160
    pitch_x: float = 1.0e-6
    pitch_z: float = 0.25e-6
    z_bottom: float = 0.125e-6

    def __post_init__(self):
        if self.n_x < 8 or self.n_z < 1:
            raise DomainError("image needs at least 8 columns and 1 row")
        if not (self.pitch_x > 0 and self.pitch_z > 0):
            raise DomainError("pixel pitches must be positive")

    def row_z(self):
        return self.z_bottom + self.pitch_z * np.arange(self.n_z)


@dataclass
class FringeImage:
    counts: np.ndarray
    pixel_pitch_x: float
    pixel_pitch_z: float
    z_of_bottom_row: float
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        c = np.asarray(self.counts)
        if c.ndim != 2:
            raise DomainError("counts must be a 2D array")
        if np.any(c < 0):
            raise DomainError("counts must be nonnegative")
        if not (self.pixel_pitch_x > 0 and self.pixel_pitch_z > 0):
            raise DomainError("pixel pitches must be positive")
        self.counts = c.astype(np.int64)

    @property
    def shape(self):
        return self.counts.shape

    def row_z(self):
        return self.z_of_bottom_row + self.pixel_pitch_z * np.arange(self.counts.shape[0])


def expected_image(curve_visibility, base: FringeModelParams, geometry: ImageGeometry,
                   total_counts):
    """Expected counts per pixel for per-row visibilities ``curve_visibility``."""
    v = np.asarray(curve_visibility, dtype=float)
    x = bin_positions(geometry.n_x, geometry.pitch_x)
    rows = np.array([fringe_intensity(base.with_contrast(base.contrast * vi), x) for vi in v])
    total = rows.sum()
    if not total > 0:
        raise DomainError("model intensity vanishes on the image")
    return rows * (total_counts / total)


def synthesize_image(curve, base: FringeModelParams, geometry=ImageGeometry(),
                     total_counts=5e5, seed=0, intensity_scale=1.0):
    """Poisson interferogram whose row contrast is base.C * V(z).

    ``curve`` is a VisibilityCurve (anything with ``interpolate``) or a
    callable z -> V.  Every row draws from its own generator spawned from
    ``seed``, so the image does not depend on evaluation order.
    ``intensity_scale`` multiplies the expected counts.
    """
    z = geometry.row_z()
    vis = curve.interpolate(z) if hasattr(curve, "interpolate") else np.asarray(curve(z), float)
    lam = expected_image(vis, base, geometry, total_counts * intensity_scale)
    streams = np.random.SeedSequence(seed).spawn(geometry.n_z)
    counts = np.empty(lam.shape, dtype=np.int64)
    for i, ss in enumerate(streams):
        counts[i] = np.random.default_rng(ss).poisson(lam[i])
    if counts.max(initial=0) > PGM_MAXVAL:
        raise DomainError("pixel counts exceed the 16-bit range")
    meta = {"seed": seed, "total_counts": float(total_counts * intensity_scale),
            "base_contrast": base.contrast, "fringe_spacing_m": base.spacing,
            "envelope_width_m": base.envelope_width}
    return FringeImage(counts, geometry.pitch_x, geometry.pitch_z, geometry.z_bottom, meta)


# -- PGM (P5) -----------------------------------------------------------------

_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def encode_pgm(counts):
    c = np.asarray(counts)
    if c.ndim != 2 or np.any(c < 0) or c.max(initial=0) > PGM_MAXVAL:
        raise FormatError("PGM needs a 2D array of values in [0, 65535]")
    h, w = c.shape
    header = f"P5\n{w} {h}\n{PGM_MAXVAL}\n".encode("ascii")
    return header + np.flipud(c).astype(">u2").tobytes()


def decode_pgm(data: bytes):
    """Decode a binary PGM (8 or 16 bit); returns rows bottom-first."""
    pos = 0
    tokens = []
    for _ in range(4):
        m = _TOKEN.match(data, pos)
        if not m:
            raise FormatError("truncated PGM header")
        tokens.append(m.group(1))
        pos = m.end()
    if tokens[0] != b"P5":
        raise FormatError(f"not a binary PGM (magic {tokens[0][:8]!r})")
    try:
        w, h, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise FormatError("non-integer PGM header field") from None
    if w <= 0 or h <= 0 or not 0 < maxval <= PGM_MAXVAL:
        raise FormatError("invalid PGM dimensions or maxval")
    if pos >= len(data) or not data[pos:pos + 1].isspace():
        raise FormatError("truncated PGM header")
    pos += 1
    dtype = ">u2" if maxval > 255 else "u1"
    nbytes = w * h * np.dtype(dtype).itemsize
    body = data[pos:]
    if len(body) < nbytes:
        raise FormatError(f"truncated PGM raster: {len(body)} of {nbytes} bytes")
    arr = np.frombuffer(body[:nbytes], dtype=dtype).reshape(h, w).astype(np.int64)
    if arr.max(initial=0) > maxval:
        raise FormatError("PGM sample exceeds maxval")
    return np.flipud(arr)


def sidecar_path(image_path):
    return Path(image_path).with_suffix(".meta")


def render_sidecar(image: FringeImage):
    lines = ["# fringe image metadata", "[image]",
             f"pixel_pitch_x = {image.pixel_pitch_x!r}",
             f"pixel_pitch_z = {image.pixel_pitch_z!r}",
             f"z_of_bottom_row = {image.z_of_bottom_row!r}"]
    for key in sorted(image.metadata):
        value = image.metadata[key]
        lines.append(f"{key} = {value!r}" if isinstance(value, float) else f"{key} = {value}")
    return "\n".join(lines) + "\n"


def write_image(image: FringeImage, path):
    """Write ``path`` (PGM) and its ``.meta`` sidecar."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_pgm(image.counts))
    sidecar_path(path).write_text(render_sidecar(image))
    return path


def read_image(path, sidecar=None):
    """Read a PGM image and its sidecar metadata.

    Raises FormatError for unreadable or malformed files.
    """
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise FormatError(f"{path}: {exc.strerror}") from None
    counts = decode_pgm(data)
    meta_path = Path(sidecar) if sidecar else sidecar_path(path)
    try:
        text = meta_path.read_text()
    except OSError as exc:
        raise FormatError(f"{meta_path}: {exc.strerror}") from None
    try:
        sections = parse_sections(text, str(meta_path))
        sec = next((s for s in sections if s.kind == "image"), None)
        if sec is None:
            raise FormatError(f"{meta_path}: missing [image] section")
        px = sec.get_float("pixel_pitch_x", unit="length", required=True)
        pz = sec.get_float("pixel_pitch_z", unit="length", required=True)
        z0 = sec.get_float("z_of_bottom_row", unit="length", required=True)
    except ConfigError as exc:
        raise FormatError(str(exc)) from None
    meta = {k: e.value for k, e in sec.entries.items()
            if k not in ("pixel_pitch_x", "pixel_pitch_z", "z_of_bottom_row")}
    try:
        return FringeImage(counts, px, pz, z0, meta)
    except DomainError as exc:
        raise FormatError(f"{meta_path}: {exc}") from None
