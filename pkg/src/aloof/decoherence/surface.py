"""Dielectric response of the surface: permittivity, reflection, occupation.

The default permittivity is the ohmic (collision-dominated) limit
``eps_b + i sigma / (eps0 omega)``.  The full Drude form uses the plasma
frequency implied by the DC conductivity, ``omega_p^2 = sigma gamma_D /
eps0``, so both forms share the same static limit.
"""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError, DomainError
from ..physics import CODATA


def _positive(name, value):
    if np.any(np.asarray(value) <= 0):
        raise DomainError(f"{name} must be positive")


def drude_permittivity(material, omega, full_drude=False, const=CODATA):
    """Complex relative permittivity eps(omega) for omega > 0 [rad/s]."""
    _positive("angular frequency", omega)
    omega = np.asarray(omega, dtype=float)
    sig_eps0 = material.conductivity / const.vacuum_permittivity
    if full_drude:
        if material.drude_damping is None:
            raise ConfigError(f"{material.name}: full Drude model needs drude_damping")
        g = material.drude_damping
        eps = material.background_permittivity - sig_eps0 * g / (omega * (omega + 1j * g))
    else:
        eps = material.background_permittivity + 1j * sig_eps0 / omega
    return eps if eps.ndim else complex(eps)


def reflection_p_from_eps(eps):
    """Nonretarded p-polarized reflection (eps - 1)/(eps + 1)."""
    eps = np.asarray(eps, dtype=complex)
    with np.errstate(invalid="ignore", divide="ignore"):
        r = (eps - 1.0) / (eps + 1.0)
    r = np.where(np.isinf(eps), 1.0 + 0j, r)
    return r if r.ndim else complex(r)


def fresnel_coefficients(eps, k_par, omega, const=CODATA):
    """Retarded Fresnel (r_p, r_s) for an evanescent wave with k_par > omega/c."""
    q0 = np.asarray(omega, dtype=float) / const.light_speed
    k_par = np.asarray(k_par, dtype=float)
    kz0 = 1j * np.sqrt(k_par**2 - q0**2)
    kz1 = np.sqrt(np.asarray(eps, dtype=complex) * q0**2 - k_par**2)
    rp = (eps * kz0 - kz1) / (eps * kz0 + kz1)
    rs = (kz0 - kz1) / (kz0 + kz1)
    return rp, rs


def reflection_p(material, k_par, omega, full_drude=False, retarded=False, const=CODATA):
    """p-polarized reflection coefficient r_p(k_par, omega).

    The default is the electrostatic limit, which is independent of
    ``k_par``; retardation changes it by O(v^2/c^2) for the wavevectors an
    electron at velocity v excites.
    """
    _positive("k_par", k_par)
    eps = drude_permittivity(material, omega, full_drude, const)
    if retarded:
        return fresnel_coefficients(eps, k_par, omega, const)[0]
    return reflection_p_from_eps(eps)


def reflection_s(material, k_par, omega, full_drude=False, retarded=False, const=CODATA):
    """s-polarized reflection; zero in the electrostatic limit."""
    _positive("k_par", k_par)
    eps = drude_permittivity(material, omega, full_drude, const)
    if retarded:
        return fresnel_coefficients(eps, k_par, omega, const)[1]
    return np.zeros_like(np.asarray(eps)) if np.ndim(eps) else 0j


def thermal_occupation(omega, temperature, const=CODATA):
    """Bose-Einstein occupation 1/(exp(hbar omega / kT) - 1)."""
    _positive("angular frequency", omega)
    _positive("temperature", temperature)
    x = const.reduced_planck * np.asarray(omega, dtype=float) / (const.boltzmann * temperature)
    n = 1.0 / np.expm1(x)
    return n if n.ndim else float(n)


def thermal_factor(omega, temperature, const=CODATA):
    """Symmetrized thermal factor 2 n(omega) + 1 = coth(hbar omega / 2kT)."""
    _positive("angular frequency", omega)
    _positive("temperature", temperature)
    x = const.reduced_planck * np.asarray(omega, dtype=float) / (2.0 * const.boltzmann * temperature)
    out = 1.0 / np.tanh(x)
    return out if out.ndim else float(out)


def static_rp_derivative(material, const=CODATA):
    """d Im r_p / d omega at omega -> 0 for the ohmic model: 2 eps0 rho [s]."""
    return 2.0 * const.vacuum_permittivity * material.resistivity
