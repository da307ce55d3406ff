"""Physical constants, materials, beam kinematics and interaction geometry.

All quantities are SI unless a name says otherwise (``energy_spread`` is in
eV because it enters the coherence length as a ratio with the beam voltage).
Kinematics is nonrelativistic; at 1 keV the correction to the de Broglie
wavelength is about 5e-4 relative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from importlib import resources

import scipy.constants as _sc

from .config import Section, parse_sections, read_sections
from .errors import ConfigError, DomainError


@dataclass(frozen=True)
class PhysicalConstants:
    elementary_charge: float = _sc.e
    reduced_planck: float = _sc.hbar
    planck: float = _sc.h
    boltzmann: float = _sc.k
    vacuum_permittivity: float = _sc.epsilon_0
    light_speed: float = _sc.c
    electron_mass: float = _sc.m_e

    def __post_init__(self):
        for f in fields(self):
            if not getattr(self, f.name) > 0:
                raise DomainError(f"constant {f.name} must be positive")


CODATA = PhysicalConstants()


@dataclass(frozen=True)
class Material:
    """Surface material parameters consumed by the decoherence models.

    Parameters
    ----------
    name : str
    resistivity : float
        DC resistivity [Ohm m]. ``conductivity`` is derived from it.
    temperature : float
        [K]
    drude_damping : float
        Carrier collision rate [1/s].  Used by the full Drude permittivity
        and to cap the default Howie cut-off.
    background_permittivity : float
        Bound-charge permittivity (dimensionless).
    effective_mass_ratio, screening_permittivity, fermi_wavevector
        Machnikowski parameters; ``fermi_wavevector`` in [1/m].
    howie_cutoff : float, optional
        Dielectric-response cut-off [rad/s].  When omitted it defaults to the
        dielectric relaxation rate sigma/(eps0 eps_b), capped at the
        collision rate, since the ohmic response does not extend past it.
    """

    name: str
    resistivity: float
    temperature: float = 293.0
    drude_damping: float | None = None
    background_permittivity: float = 1.0
    effective_mass_ratio: float | None = None
    screening_permittivity: float | None = None
    fermi_wavevector: float | None = None
    howie_cutoff: float | None = None
    conductivity: float = field(init=False)

    def __post_init__(self):
        if not self.resistivity > 0:
            raise DomainError(f"{self.name}: resistivity must be positive")
        if not self.temperature > 0:
            raise DomainError(f"{self.name}: temperature must be positive")
        if self.background_permittivity < 1:
            raise DomainError(f"{self.name}: background permittivity must be >= 1")
        for attr in ("drude_damping", "fermi_wavevector", "howie_cutoff",
                     "effective_mass_ratio", "screening_permittivity"):
            value = getattr(self, attr)
            if value is not None and not value > 0:
                raise DomainError(f"{self.name}: {attr} must be positive")
        object.__setattr__(self, "conductivity", 1.0 / self.resistivity)

    @property
    def has_machnikowski_params(self):
        return None not in (self.effective_mass_ratio, self.screening_permittivity,
                            self.fermi_wavevector)

    def resolved_howie_cutoff(self, const=CODATA):
        if self.howie_cutoff is not None:
            return self.howie_cutoff
        relaxation = self.conductivity / (const.vacuum_permittivity * self.background_permittivity)
        if self.drude_damping is not None:
            return min(relaxation, self.drude_damping)
        return relaxation

    def with_temperature(self, temperature):
        return replace(self, temperature=temperature)

    def provenance(self):
        """Flat mapping of every resolved parameter, for CSV headers."""
        out = {
            "material": self.name,
            "resistivity_ohm_m": self.resistivity,
            "conductivity_S_per_m": self.conductivity,
            "temperature_K": self.temperature,
            "drude_damping_per_s": self.drude_damping,
            "background_permittivity": self.background_permittivity,
            "effective_mass_ratio": self.effective_mass_ratio,
            "screening_permittivity": self.screening_permittivity,
            "fermi_wavevector_per_m": self.fermi_wavevector,
            "howie_cutoff_rad_per_s": self.resolved_howie_cutoff(),
        }
        return out


def fermi_wavevector_from_density(n):
    """Free-electron k_F = (3 pi^2 n)^(1/3) for carrier density ``n`` [1/m^3]."""
    if not n > 0:
        raise DomainError("carrier density must be positive")
    return (3.0 * math.pi**2 * n) ** (1.0 / 3.0)


_MATERIAL_KEYS = {
    "resistivity", "temperature", "drude_damping", "background_permittivity",
    "effective_mass_ratio", "screening_permittivity", "fermi_wavevector",
    "carrier_density", "howie_cutoff",
}


def material_from_section(section: Section) -> Material:
    section.unknown_keys(_MATERIAL_KEYS)
    if not section.name:
        raise section.error("material section needs a name: [material <name>]")
    k_f = section.get_float("fermi_wavevector")
    density = section.get_float("carrier_density")
    if k_f is not None and density is not None:
        raise section.error("give either fermi_wavevector or carrier_density, not both",
                            "carrier_density")
    if density is not None:
        try:
            k_f = fermi_wavevector_from_density(density)
        except DomainError as exc:
            raise section.error(str(exc), "carrier_density") from None
    try:
        return Material(
            name=section.name,
            resistivity=section.get_float("resistivity", unit="resistivity", required=True),
            temperature=section.get_float("temperature", 293.0),
            drude_damping=section.get_float("drude_damping"),
            background_permittivity=section.get_float("background_permittivity", 1.0),
            effective_mass_ratio=section.get_float("effective_mass_ratio"),
            screening_permittivity=section.get_float("screening_permittivity"),
            fermi_wavevector=k_f,
            howie_cutoff=section.get_float("howie_cutoff"),
        )
    except DomainError as exc:
        raise section.error(str(exc)) from None


def parse_materials(text, path=None):
    out = {}
    for section in parse_sections(text, path):
        if section.kind != "material":
            continue
        mat = material_from_section(section)
        if mat.name in out:
            raise section.error(f"duplicate material {mat.name!r}")
        out[mat.name] = mat
    return out


def load_materials(path=None):
    """Read all ``[material ...]`` sections from ``path``.

    Without a path the bundled file (n-doped silicon and gold) is used.
    """
    if path is None:
        text = resources.files("aloof").joinpath("data/materials.ini").read_text()
        return parse_materials(text, "materials.ini")
    out = {}
    for section in read_sections(path):
        if section.kind == "material":
            mat = material_from_section(section)
            out[mat.name] = mat
    return out


def get_material(name_or_path):
    """Resolve a bundled material name, or the single material in a file."""
    bundled = load_materials()
    if name_or_path in bundled:
        return bundled[name_or_path]
    aliases = {"silicon": "silicon-n-doped", "si": "silicon-n-doped", "au": "gold"}
    if name_or_path.lower() in aliases:
        return bundled[aliases[name_or_path.lower()]]
    mats = load_materials(name_or_path)
    if len(mats) != 1:
        raise ConfigError(f"{name_or_path}: expected exactly one [material] section, found {len(mats)}")
    return next(iter(mats.values()))


# -- kinematics ---------------------------------------------------------------

def _check_voltage(u_beam):
    if not u_beam > 0:
        raise DomainError(f"beam voltage must be positive, got {u_beam!r}")


def beam_velocity(u_beam, const=CODATA):
    """v = sqrt(2 e U / m_e) [m/s]."""
    _check_voltage(u_beam)
    return math.sqrt(2.0 * const.elementary_charge * u_beam / const.electron_mass)


def de_broglie_wavelength(u_beam, const=CODATA):
    """lambda = h / sqrt(2 m_e e U) [m]."""
    _check_voltage(u_beam)
    return const.planck / math.sqrt(2.0 * const.electron_mass * const.elementary_charge * u_beam)


def coherence_length(u_beam, energy_spread_ev, const=CODATA):
    """Longitudinal coherence length 2 U lambda / (pi dE) [m].

    ``energy_spread_ev`` is the source energy width in eV, so U/dE is a
    plain ratio.
    """
    if not energy_spread_ev > 0:
        raise DomainError(f"energy spread must be positive, got {energy_spread_ev!r}")
    return 2.0 * u_beam * de_broglie_wavelength(u_beam, const) / (math.pi * energy_spread_ev)


@dataclass(frozen=True)
class BeamParams:
    acceleration_voltage: float
    energy_spread: float = 0.377

    def __post_init__(self):
        _check_voltage(self.acceleration_voltage)
        if not self.energy_spread > 0:
            raise DomainError("energy spread must be positive")

    @property
    def kinetic_energy(self):
        return CODATA.elementary_charge * self.acceleration_voltage

    @property
    def velocity(self):
        return beam_velocity(self.acceleration_voltage)

    @property
    def de_broglie_wavelength(self):
        return de_broglie_wavelength(self.acceleration_voltage)

    @property
    def coherence_length(self):
        return coherence_length(self.acceleration_voltage, self.energy_spread)


@dataclass(frozen=True)
class InteractionGeometry:
    """Plate length, path separation, surface offset and evaluation heights.

    ``surface_offset`` (z0) is subtracted from every grid height before a
    model is evaluated; -3 um puts the surface 3 um below the image edge.
    """

    plate_length: float
    path_separation: float
    surface_offset: float = 0.0
    z_grid: tuple = ()

    def __post_init__(self):
        if not self.plate_length > 0:
            raise DomainError("plate length must be positive")
        if not self.path_separation >= 0:
            raise DomainError("path separation must be non-negative")
        grid = tuple(float(z) for z in self.z_grid)
        object.__setattr__(self, "z_grid", grid)
        for a, b in zip(grid, grid[1:]):
            if not b > a:
                raise DomainError("z grid must be strictly increasing")
        for z in grid:
            if not z - self.surface_offset > 0:
                raise DomainError(f"effective height z - z0 must be positive (z={z!r})")

    def effective_height(self, z):
        h = z - self.surface_offset
        if not h > 0:
            raise DomainError(f"effective height z - z0 = {h!r} is not positive")
        return h
