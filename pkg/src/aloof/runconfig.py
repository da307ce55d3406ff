"""Run configuration shared by the command-line subcommands.

A run file uses the common section format::

    [run]
    material = silicon
    models = markov, anglin
    seed = 1
    tol = 1e-4

    [geometry]
    plate_length = 1 cm
    dx = 9.4 um, 6.5 um
    z_min = 1 um
    z_max = 40 um
    z_points = 40

Command-line flags override file values.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .config import parse_list, read_sections
from .errors import ConfigError
from .physics import BeamParams, get_material

_SECTION_KEYS = {
    "run": {"material", "models", "seed", "tol", "abs_tol", "workers", "out"},
    "beam": {"voltage", "energy_spread", "energy_spread_sigma"},
    "geometry": {"plate_length", "dx", "surface_offset", "z_min", "z_max", "z_points"},
    "image": {"n_x", "n_z", "pitch_x", "pitch_z", "z_bottom", "total_counts", "contrast",
              "spacing", "phase", "envelope_width", "slab_height", "reference_band"},
    "wien": {"plate_length", "plate_gap", "dx_true", "noise", "n_points", "span"},
    "optics": {"beamline"},
}


@dataclass
class RunConfig:
    material: str = "silicon-n-doped"
    models: tuple = ("markov", "finite_temperature", "anglin", "machnikowski", "howie")
    seed: int = 0
    rel_tol: float = 1e-4
    abs_tol: float = 1e-10
    workers: int = 1
    out: str = "out"
    beam_voltage: float = 1000.0
    energy_spread: float = 0.377
    energy_spread_sigma: float = 0.040
    plate_length: float = 0.01
    separations: tuple = (9.4e-6,)
    surface_offset: float | None = None
    z_min: float = 1e-6
    z_max: float = 40e-6
    z_points: int = 40
    image: dict = field(default_factory=dict)
    wien: dict = field(default_factory=dict)
    beamline: str | None = None
    source: str | None = None

    def validate(self):
        if not self.models:
            raise ConfigError("model set is empty", self.source)
        if not self.separations:
            raise ConfigError("no path separation given", self.source)
        if any(dx < 0 for dx in self.separations):
            raise ConfigError("path separations must be >= 0", self.source)
        if not (0 < self.z_min < self.z_max) or self.z_points < 2:
            raise ConfigError("z grid needs 0 < z_min < z_max and z_points >= 2", self.source)
        if not self.rel_tol > 0:
            raise ConfigError("tolerance must be positive", self.source)
        if self.beamline is not None and not Path(self.beamline).is_file():
            raise ConfigError(f"beamline file {self.beamline!r} does not exist", self.source)
        get_material(self.material)
        self.beam()
        return self

    def beam(self):
        try:
            return BeamParams(self.beam_voltage, self.energy_spread)
        except ValueError as exc:
            raise ConfigError(str(exc), self.source) from None

    def resolved_surface_offset(self, synthetic=False):
        """z0 for model evaluation.

        Unless set explicitly: -3 um for silicon data (the surface sits 3 um
        below the image edge) and 0 for synthetic runs and other materials.
        """
        if self.surface_offset is not None:
            return self.surface_offset
        if synthetic:
            return 0.0
        return -3e-6 if get_material(self.material).name == "silicon-n-doped" else 0.0

    def z_grid(self):
        return np.linspace(self.z_min, self.z_max, self.z_points)


def load_run_config(path):
    """Read a run file; unknown sections or keys are errors with line numbers."""
    cfg = RunConfig(source=str(path))
    for sec in read_sections(path):
        if sec.kind not in _SECTION_KEYS:
            raise sec.error(f"unknown section [{sec.kind}]")
        sec.unknown_keys(_SECTION_KEYS[sec.kind])
        if sec.kind == "run":
            cfg.material = sec.get_str("material", cfg.material)
            if sec.has("models"):
                cfg.models = tuple(m.strip() for m in sec.get_str("models").split(",") if m.strip())
            cfg.seed = sec.get_int("seed", cfg.seed)
            cfg.rel_tol = sec.get_float("tol", cfg.rel_tol)
            cfg.abs_tol = sec.get_float("abs_tol", cfg.abs_tol)
            cfg.workers = sec.get_int("workers", cfg.workers)
            cfg.out = sec.get_str("out", cfg.out)
        elif sec.kind == "beam":
            cfg.beam_voltage = sec.get_float("voltage", cfg.beam_voltage, unit="voltage")
            cfg.energy_spread = sec.get_float("energy_spread", cfg.energy_spread, unit="energy_ev")
            cfg.energy_spread_sigma = sec.get_float("energy_spread_sigma", cfg.energy_spread_sigma,
                                                    unit="energy_ev")
        elif sec.kind == "geometry":
            cfg.plate_length = sec.get_float("plate_length", cfg.plate_length, unit="length")
            if sec.has("dx"):
                try:
                    cfg.separations = tuple(parse_list(sec.get_str("dx"), "length"))
                except ValueError as exc:
                    raise sec.error(f"dx: {exc}", "dx") from None
            cfg.surface_offset = sec.get_float("surface_offset", cfg.surface_offset, unit="length")
            cfg.z_min = sec.get_float("z_min", cfg.z_min, unit="length")
            cfg.z_max = sec.get_float("z_max", cfg.z_max, unit="length")
            cfg.z_points = sec.get_int("z_points", cfg.z_points)
        elif sec.kind == "image":
            units = {"pitch_x": "length", "pitch_z": "length", "z_bottom": "length",
                     "spacing": "length", "envelope_width": "length", "slab_height": "length",
                     "reference_band": "length"}
            for key in sec.entries:
                if key in ("n_x", "n_z"):
                    cfg.image[key] = sec.get_int(key)
                else:
                    cfg.image[key] = sec.get_float(key, unit=units.get(key, ""))
        elif sec.kind == "wien":
            units = {"plate_length": "length", "plate_gap": "length", "dx_true": "length"}
            for key in sec.entries:
                cfg.wien[key] = (sec.get_int(key) if key == "n_points"
                                 else sec.get_float(key, unit=units.get(key, "")))
        elif sec.kind == "optics":
            bl = Path(sec.get_str("beamline"))
            if not bl.is_absolute():
                bl = Path(path).parent / bl
            cfg.beamline = str(bl)
    return cfg


def apply_overrides(cfg, material=None, models=None, dx=None, out=None, seed=None, tol=None):
    from .config import parse_list as _pl
    changes = {}
    if material is not None:
        changes["material"] = material
    if models is not None:
        changes["models"] = tuple(m.strip() for m in models.split(",") if m.strip())
    if dx is not None:
        try:
            changes["separations"] = tuple(_pl(dx, "length"))
        except ValueError as exc:
            raise ConfigError(f"--dx: {exc}") from None
    if out is not None:
        changes["out"] = out
    if seed is not None:
        changes["seed"] = seed
    if tol is not None:
        changes["rel_tol"] = tol
    return replace(cfg, **changes)
