"""Paraxial transfer-matrix model of the biprism interferometer.

A ray is (x, tan alpha).  Elements act through 2x2 matrices, except the
biprism, which deflects each partial beam by a fixed angle +-gamma:

    gamma = pi / (2 ln(r_g / r_BP)) * U_BP / U_beam

Written as a matrix this is diag(1, tan(alpha0 +- gamma) / tan(alpha0)),
which is singular for alpha0 = 0; ``trace`` applies the angle kick
directly, which agrees with the matrix wherever the matrix exists.

Quadrupole naming: ``QuadrupoleFocus`` uses the hyperbolic matrix and
``QuadrupoleDefocus`` the trigonometric one, following the labels of the
original beamline description.  In optics terms the trigonometric matrix is
the one that bends rays back toward the axis.

The Wien-filter part converts a scan of fringe contrast versus filter
voltage into the path separation at the filter.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .config import Section, parse_sections, read_sections
from .errors import ConfigError, DomainError, ExtractionError
from .fitting import least_squares_fit


@dataclass(frozen=True)
class RayState:
    x: float
    slope: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.slope)):
            raise DomainError("ray components must be finite")

    def as_vector(self):
        return np.array([self.x, self.slope])


@dataclass(frozen=True)
class Drift:
    d: float

    def __post_init__(self):
        if not self.d >= 0:
            raise DomainError("drift length must be >= 0")


@dataclass(frozen=True)
class Biprism:
    """Biprism wire at potential ``u_bp``; ``side`` is +1 or -1."""

    u_bp: float
    r_g: float
    r_bp: float
    side: int = 1
    log_base: float = math.e

    def __post_init__(self):
        if not self.r_g > self.r_bp > 0:
            raise DomainError("biprism needs r_g > r_BP > 0")
        if self.side not in (1, -1):
            raise DomainError("biprism side must be +1 or -1")

    def deflection(self, u_beam):
        """Deflection angle gamma [rad]."""
        return math.pi / (2.0 * math.log(self.r_g / self.r_bp, self.log_base)) * self.u_bp / u_beam


@dataclass(frozen=True)
class _Quadrupole:
    u_q: float
    g0: float
    length: float

    def __post_init__(self):
        if not self.u_q >= 0:
            raise DomainError("quadrupole voltage must be >= 0")
        if not (self.g0 > 0 and self.length > 0):
            raise DomainError("quadrupole needs g0 > 0 and l > 0")

    def strength(self, u_beam):
        """k = sqrt(U_q / (g0^2 U_beam)) [1/m]."""
        return math.sqrt(self.u_q / (self.g0**2 * u_beam))


class QuadrupoleFocus(_Quadrupole):
    """[[cosh kl, sinh kl / k], [k sinh kl, cosh kl]]."""


class QuadrupoleDefocus(_Quadrupole):
    """[[cos kl, sin kl / k], [-k sin kl, cos kl]]."""


OpticalElement = Union[Drift, Biprism, QuadrupoleFocus, QuadrupoleDefocus]


def element_matrix(element, u_beam, incoming_slope=0.0):
    """2x2 transfer matrix of ``element`` for beam voltage ``u_beam``.

    For a biprism the matrix depends on the incoming slope and does not
    exist when it is zero (DomainError); use ``trace`` in that case.
    """
    if isinstance(element, Drift):
        return np.array([[1.0, element.d], [0.0, 1.0]])
    if isinstance(element, Biprism):
        if incoming_slope == 0.0:
            raise DomainError("biprism matrix is singular for zero incoming slope")
        alpha0 = math.atan(incoming_slope)
        gamma = element.deflection(u_beam)
        return np.array([[1.0, 0.0],
                         [0.0, math.tan(alpha0 + element.side * gamma) / incoming_slope]])
    if isinstance(element, (QuadrupoleFocus, QuadrupoleDefocus)):
        k = element.strength(u_beam)
        kl = k * element.length
        if k == 0.0:
            return np.array([[1.0, element.length], [0.0, 1.0]])
        if isinstance(element, QuadrupoleFocus):
            return np.array([[math.cosh(kl), math.sinh(kl) / k],
                             [k * math.sinh(kl), math.cosh(kl)]])
        return np.array([[math.cos(kl), math.sin(kl) / k],
                         [-k * math.sin(kl), math.cos(kl)]])
    raise TypeError(f"not an optical element: {element!r}")


def biprism_kick(ray, element, u_beam, side=None):
    side = element.side if side is None else side
    gamma = element.deflection(u_beam)
    return RayState(ray.x, math.tan(math.atan(ray.slope) + side * gamma))


@dataclass(frozen=True)
class Beamline:
    """Ordered elements plus named markers.

    ``markers`` maps a name to an element-boundary index: 0 is the entrance,
    ``len(elements)`` the exit.
    """

    u_beam: float
    elements: tuple
    markers: dict = field(default_factory=dict)
    names: tuple = ()

    def __post_init__(self):
        if not self.u_beam > 0:
            raise DomainError("beam voltage must be positive")
        if not self.elements:
            raise DomainError("beamline has no elements")
        object.__setattr__(self, "elements", tuple(self.elements))
        for name, idx in self.markers.items():
            if not 0 <= idx <= len(self.elements):
                raise DomainError(f"marker {name!r} index {idx} out of range")
        if not self.names:
            object.__setattr__(self, "names", tuple(type(e).__name__.lower()
                                                    for e in self.elements))

    def positions(self):
        """Longitudinal position of every element boundary [m]."""
        s = [0.0]
        for el in self.elements:
            if isinstance(el, Drift):
                s.append(s[-1] + el.d)
            elif isinstance(el, (QuadrupoleFocus, QuadrupoleDefocus)):
                s.append(s[-1] + el.length)
            else:
                s.append(s[-1])
        return s

    def scaled_biprism(self, factor):
        """Copy with every biprism voltage multiplied by ``factor``."""
        from dataclasses import replace
        els = tuple(replace(e, u_bp=e.u_bp * factor) if isinstance(e, Biprism) else e
                    for e in self.elements)
        return Beamline(self.u_beam, els, dict(self.markers), self.names)


def trace(beamline, ray, side=None):
    """Propagate ``ray``; returns the RayState at every element boundary.

    ``side`` (+1/-1) overrides the side of every biprism, selecting one
    partial beam.
    """
    states = [ray]
    for el in beamline.elements:
        if isinstance(el, Biprism):
            ray = biprism_kick(ray, el, beamline.u_beam, side)
        else:
            if isinstance(el, QuadrupoleDefocus):
                kl = el.strength(beamline.u_beam) * el.length
                if kl > math.pi:
                    warnings.warn(f"quadrupole k*l = {kl:.3g} > pi: ray crosses the axis "
                                  "inside the element", RuntimeWarning, stacklevel=2)
            vec = element_matrix(el, beamline.u_beam) @ ray.as_vector()
            ray = RayState(float(vec[0]), float(vec[1]))
        states.append(ray)
    return states


def trace_pair(beamline, ray=RayState(0.0, 0.0)):
    """Trace both partial beams (biprism side +1 and -1)."""
    return trace(beamline, ray, side=1), trace(beamline, ray, side=-1)


def path_separation(beamline, marker, ray=RayState(0.0, 0.0)):
    """|x_plus - x_minus| at a named marker [m]."""
    if marker not in beamline.markers:
        raise DomainError(f"unknown marker {marker!r}; have {sorted(beamline.markers)}")
    idx = beamline.markers[marker]
    plus, minus = trace_pair(beamline, ray)
    return abs(plus[idx].x - minus[idx].x)


def transfer_matrix(beamline, start=0, stop=None):
    """Product of the matrices of a biprism-free stretch of the beamline."""
    stop = len(beamline.elements) if stop is None else stop
    m = np.eye(2)
    for el in beamline.elements[start:stop]:
        if isinstance(el, Biprism):
            raise DomainError("transfer_matrix is undefined across a biprism")
        m = element_matrix(el, beamline.u_beam) @ m
    return m


# -- beamline files -------------------------------------------------------------

_ELEMENT_KEYS = {
    "drift": {"length"},
    "biprism": {"voltage", "r_g", "r_bp", "side"},
    "quadrupole_focus": {"voltage", "g0", "length"},
    "quadrupole_defocus": {"voltage", "g0", "length"},
}


def _element_from_section(sec: Section, log_base):
    sec.unknown_keys(_ELEMENT_KEYS[sec.kind])
    try:
        if sec.kind == "drift":
            return Drift(sec.get_float("length", unit="length", required=True))
        if sec.kind == "biprism":
            side = sec.get_int("side", 1)
            return Biprism(sec.get_float("voltage", unit="voltage", required=True),
                           sec.get_float("r_g", unit="length", required=True),
                           sec.get_float("r_bp", unit="length", required=True),
                           side, log_base)
        cls = QuadrupoleFocus if sec.kind == "quadrupole_focus" else QuadrupoleDefocus
        return cls(sec.get_float("voltage", unit="voltage", required=True),
                   sec.get_float("g0", unit="length", required=True),
                   sec.get_float("length", unit="length", required=True))
    except DomainError as exc:
        raise sec.error(str(exc)) from None


def beamline_from_sections(sections, path=None):
    """Build a Beamline from parsed sections.

    ``[beamline]`` holds ``beam_voltage`` (and optionally ``log_base`` = e or
    10); element sections follow in beam order; ``[marker NAME]`` records the
    current boundary.
    """
    u_beam = None
    log_base = math.e
    elements, names, markers = [], [], {}
    for sec in sections:
        if sec.kind == "beamline":
            sec.unknown_keys({"beam_voltage", "log_base"})
            u_beam = sec.get_float("beam_voltage", unit="voltage", required=True)
            base = sec.get_str("log_base", "e")
            if base not in ("e", "10"):
                raise sec.error("log_base must be 'e' or '10'", "log_base")
            log_base = math.e if base == "e" else 10.0
        elif sec.kind == "marker":
            if not sec.name:
                raise sec.error("marker needs a name: [marker NAME]")
            if sec.name in markers:
                raise sec.error(f"duplicate marker {sec.name!r}")
            markers[sec.name] = len(elements)
        elif sec.kind in _ELEMENT_KEYS:
            elements.append(_element_from_section(sec, log_base))
            names.append(sec.name or sec.kind)
        else:
            raise sec.error(f"unknown section [{sec.kind}] in beamline file")
    if u_beam is None:
        raise ConfigError("missing [beamline] section with beam_voltage", path)
    if not elements:
        raise ConfigError("beamline has no elements", path)
    try:
        return Beamline(u_beam, tuple(elements), markers, tuple(names))
    except DomainError as exc:
        raise ConfigError(str(exc), path) from None


def load_beamline(path=None):
    """Read a beamline file; without a path, the bundled reference beamline."""
    if path is None:
        from importlib import resources
        text = resources.files("aloof").joinpath("data/reference_beamline.ini").read_text()
        return beamline_from_sections(parse_sections(text, "reference_beamline.ini"),
                                      "reference_beamline.ini")
    return beamline_from_sections(read_sections(path), str(path))


# -- Wien filter ------------------------------------------------------------------

@dataclass(frozen=True)
class WienFilter:
    plate_length: float
    plate_gap: float
    voltage: float = 0.0

    def __post_init__(self):
        if not (self.plate_length > 0 and self.plate_gap > 0):
            raise DomainError("Wien filter needs positive plate length and gap")


def wien_shift(wf, u_beam, dx, u_wf=None):
    """Longitudinal wave-packet shift L dx U_WF / (2 D U_beam) [m]."""
    u = wf.voltage if u_wf is None else u_wf
    return wf.plate_length * dx * np.asarray(u) / (2.0 * wf.plate_gap * u_beam)


def wien_contrast_model(dy, l_c):
    """Gaussian contrast exp(-pi/2 (dy/l_c)^2); equals exp(-pi/2) at dy = l_c."""
    if not l_c > 0:
        raise DomainError("coherence length must be positive")
    r = np.asarray(dy, dtype=float) / l_c
    out = np.exp(-0.5 * math.pi * r * r)
    return out if out.ndim else float(out)


def wien_critical_voltage(wf, u_beam, dx, l_c):
    """Filter voltage at which the shift equals the coherence length."""
    return 2.0 * wf.plate_gap * u_beam * l_c / (wf.plate_length * dx)


def wien_synthetic_scan(wf, u_beam, dx, l_c, noise=0.0, seed=0, n_points=41, span=3.0):
    """Contrast scan with multiplicative Gaussian noise of relative size ``noise``.

    Voltages cover +-``span`` times the critical voltage.
    """
    u_star = wien_critical_voltage(wf, u_beam, dx, l_c)
    u = np.linspace(-span * u_star, span * u_star, n_points)
    c = wien_contrast_model(wien_shift(wf, u_beam, dx, u), l_c)
    if noise:
        rng = np.random.default_rng(seed)
        c = c * (1.0 + noise * rng.standard_normal(n_points))
    return np.column_stack([u, c])


@dataclass(frozen=True)
class WienResult:
    dx: float
    uncertainty: float
    critical_voltage: float
    width: float
    width_sigma: float
    amplitude: float
    center: float

    @property
    def fractional_uncertainty(self):
        return self.uncertainty / self.dx


def _gauss(params, u):
    amp, center, width = params
    return amp * np.exp(-0.5 * ((u - center) / width) ** 2)


def wien_extract_separation(scan, wf, u_beam, l_c, l_c_sigma=0.0):
    """Path separation at the Wien filter from a contrast-versus-voltage scan.

    A Gaussian A exp(-(U - U_c)^2 / 2w^2) is fitted to the scan.  With
    contrast exp(-pi/2 (dy/l_c)^2) the shift reaches l_c at U* = w sqrt(pi),
    and dx = 2 D U_beam l_c / (L U*).  The uncertainty combines the fitted
    width error with ``l_c_sigma`` in quadrature.

    Raises
    ------
    ExtractionError
        Fewer than 5 points, or the scan does not resolve the decay.
    """
    scan = np.asarray(scan, dtype=float)
    if scan.ndim != 2 or scan.shape[1] != 2 or len(scan) < 5:
        raise ExtractionError("scan needs at least 5 (U_WF, contrast) points")
    u, c = scan[:, 0], scan[:, 1]
    peak = float(np.max(c))
    if not peak > 0 or float(np.min(c)) > 0.9 * peak:
        raise ExtractionError("scan too flat: contrast decay is not resolved")
    # moment-based start values
    w0 = max(float(np.sqrt(np.sum(c * (u - u[np.argmax(c)]) ** 2) / np.sum(c))),
             1e-3 * float(np.ptp(u)))
    fit = least_squares_fit(_gauss, u, c, np.array([peak, float(u[np.argmax(c)]), w0]))
    if not fit.converged:
        raise ExtractionError(f"Gaussian fit did not converge: {fit.message}")
    amp, center, width = fit.params
    width = abs(width)
    width_sigma = float(np.sqrt(fit.covariance[2, 2]))
    if not (np.isfinite(width_sigma) and width > 0) or width > 10.0 * float(np.ptp(u)):
        raise ExtractionError("fitted width is not constrained by the scan")
    u_star = width * math.sqrt(math.pi)
    dx = 2.0 * wf.plate_gap * u_beam * l_c / (wf.plate_length * u_star)
    rel = math.hypot(width_sigma / width, l_c_sigma / l_c)
    return WienResult(dx, dx * rel, u_star, width, width_sigma, float(amp), float(center))
