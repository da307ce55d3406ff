"""Visibility curves V(z) = exp(-Gamma) for the five decoherence expressions."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..csvio import write_csv
from ..errors import ConvergenceError, DomainError
from ..physics import CODATA
from . import markov as _markov
from .closed_form import (gamma_anglin, gamma_finite_temperature, gamma_howie,
                          gamma_machnikowski, machnikowski_material, machnikowski_zeta)

MODELS = ("markov", "finite_temperature", "anglin", "machnikowski", "howie")

MODEL_ALIASES = {
    "ft": "finite_temperature",
    "scheel_ft": "finite_temperature",
    "scheel_markov": "markov",
}


def resolve_model(tag):
    tag = tag.strip().lower().replace("-", "_")
    tag = MODEL_ALIASES.get(tag, tag)
    if tag not in MODELS:
        raise DomainError(f"unknown model {tag!r}; choose from {', '.join(MODELS)}")
    return tag


@dataclass
class VisibilityCurve:
    """Decoherence exponent and visibility on a z grid.

    ``z_values`` are grid heights (before the surface offset).  ``flags``
    holds "" for good points and "nonconverged" where the Markov cubature
    stopped early; such points keep the best estimate.
    """

    model: str
    z_values: np.ndarray
    gamma_values: np.ndarray
    visibility_values: np.ndarray
    quadrature_errors: np.ndarray
    flags: list = field(default_factory=list)
    provenance: dict = field(default_factory=dict)

    @property
    def converged(self):
        return not any(self.flags)

    def interpolate(self, z):
        """Linear interpolation of V at heights ``z``; raises outside the grid."""
        z = np.asarray(z, dtype=float)
        lo, hi = self.z_values[0], self.z_values[-1]
        tol = 1e-9 * max(abs(lo), abs(hi), 1e-12)
        if np.any(z < lo - tol) or np.any(z > hi + tol):
            raise DomainError(f"z range [{z.min()!r}, {z.max()!r}] outside curve "
                              f"[{lo!r}, {hi!r}]")
        return np.interp(z, self.z_values, self.visibility_values)


def _curve_provenance(model, inp, cfg, options, const=CODATA):
    beam = inp.beam
    geo = inp.geometry
    prov = {
        "model": model,
        **inp.material.provenance(),
        "beam_voltage_V": beam.acceleration_voltage,
        "beam_velocity_m_per_s": beam.velocity,
        "de_broglie_wavelength_m": beam.de_broglie_wavelength,
        "plate_length_m": geo.plate_length,
        "path_separation_m": geo.path_separation,
        "surface_offset_m": geo.surface_offset,
        "interaction_time_s": inp.interaction_time,
        "const_e": const.elementary_charge,
        "const_hbar": const.reduced_planck,
        "const_h": const.planck,
        "const_kB": const.boltzmann,
        "const_eps0": const.vacuum_permittivity,
        "const_c": const.light_speed,
        "const_me": const.electron_mass,
    }
    if model == "markov":
        prov.update({
            "rel_tol": cfg.relative_tolerance,
            "abs_tol": cfg.absolute_tolerance,
            "max_subdivisions": cfg.max_subdivisions,
            "min_phi_panels": cfg.min_phi_panels,
            "markov_use_gamma": options.use_gamma,
            "markov_fresnel": options.fresnel,
            "markov_full_drude": options.full_drude,
            "amplitude_note": "silicon markov/finite_temperature amplitudes depend on "
                              "unpublished Drude microparameters",
        })
    if model == "finite_temperature":
        prov["rp_derivative_s"] = 2.0 * const.vacuum_permittivity * inp.material.resistivity
        prov["bracket_length_m"] = inp.dx
    if model == "howie":
        prov["howie_alpha"] = 2.0
    if model == "machnikowski":
        prov["machnikowski_zeta"] = machnikowski_zeta(inp.material, const)
    return prov


def visibility_curve(model, inp, cfg=None, options=None, workers=1, z_grid=None):
    """Evaluate one model on ``inp.geometry.z_grid`` (or ``z_grid``).

    Markov points that fail to converge are flagged and keep their best
    estimate instead of being dropped.
    """
    model = resolve_model(model)
    cfg = cfg or _markov.DEFAULT_CONFIG
    options = options or _markov.MarkovOptions()
    z = np.asarray(inp.geometry.z_grid if z_grid is None else z_grid, dtype=float)
    if z.size == 0:
        raise DomainError("empty z grid")
    for zi in z:
        inp.geometry.effective_height(zi)

    if model == "markov":
        def point(zi):
            try:
                g, e = _markov.gamma_markov(inp, zi, cfg, options)
                return g, e, ""
            except ConvergenceError as exc:
                return exc.estimate, exc.error, "nonconverged"
    elif model == "finite_temperature":
        def point(zi):
            return gamma_finite_temperature(inp, zi), 0.0, ""
    elif model == "anglin":
        def point(zi):
            return gamma_anglin(inp, zi), 0.0, ""
    elif model == "machnikowski":
        mu = machnikowski_material(machnikowski_zeta(inp.material))

        def point(zi):
            return gamma_machnikowski(inp, zi, mu=mu), 0.0, ""
    else:
        def point(zi):
            return gamma_howie(inp, zi), 0.0, ""

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(point, z))
    else:
        results = [point(zi) for zi in z]

    gamma = np.array([r[0] for r in results], dtype=float)
    errors = np.array([r[1] for r in results], dtype=float)
    flags = [r[2] for r in results]
    return VisibilityCurve(
        model=model,
        z_values=z,
        gamma_values=gamma,
        visibility_values=np.exp(-gamma),
        quadrature_errors=errors,
        flags=flags,
        provenance=_curve_provenance(model, inp, cfg, options),
    )


def constant_curve(z_values, value=1.0, model="constant"):
    """A flat V(z) curve, handy for null tests of the fringe pipeline."""
    z = np.asarray(z_values, dtype=float)
    v = np.full_like(z, value)
    return VisibilityCurve(model, z, -np.log(v), v, np.zeros_like(z), [""] * len(z),
                           {"model": model})


def write_curve_csv(curve, path, extra=None):
    prov = dict(curve.provenance)
    if extra:
        prov.update(extra)
    rows = zip(curve.z_values, curve.gamma_values, curve.visibility_values,
               curve.quadrature_errors, curve.flags)
    return write_csv(path, prov, ["z_m", "gamma", "visibility", "error_estimate", "flag"], rows)


def zero_separation_ok(curve, abs_tol):
    """True when every Gamma is within ``abs_tol`` of zero."""
    return bool(np.all(np.abs(curve.gamma_values) <= abs_tol))
