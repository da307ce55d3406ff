"""Closed-form and one-dimensional decoherence expressions.

Every function takes a ``DecoherenceInput`` and a grid height ``z``; the
surface offset is subtracted before evaluation.  All return the exponent
Gamma >= 0 with visibility exp(-Gamma).
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import ConfigError, DomainError
from ..physics import CODATA
from ..quadrature import QuadratureConfig, integrate_adaptive_1d
from ..special import exp_integral_e1
from .surface import static_rp_derivative

#: Howie's screening parameter.
HOWIE_ALPHA = 2.0

_FN_CFG = QuadratureConfig(relative_tolerance=1e-12, absolute_tolerance=1e-15,
                           max_subdivisions=2000)


def gamma_finite_temperature(inp, z, rp_derivative=None, bracket_length=None, const=CODATA):
    """High-temperature Drude expansion of the decoherence functional.

    Gamma = t q^2 k_B T r_p'(0) / (2 pi eps0 hbar^2) [1/(2z) - 1/sqrt((2z)^2 + d^2)]

    Here d is the path separation.  Inserting coth(x) ~ 1/x and
    Im r_p ~ r_p'(0) eta into the Markov integrand leaves
    Int dk (1 - cos(k dx sin phi)) exp(-2kz) over k and phi, which evaluates
    to exactly this bracket with d = dx.  For z >> dx it reduces to the
    Anglin-Zurek expression.  ``bracket_length`` replaces d (for example by
    the plate length) for sensitivity studies.

    ``rp_derivative`` defaults to the ohmic value 2 eps0 rho; it sets only
    the amplitude.
    """
    h = inp.geometry.effective_height(z)
    mat = inp.material
    rp1 = static_rp_derivative(mat, const) if rp_derivative is None else rp_derivative
    d = inp.dx if bracket_length is None else bracket_length
    pref = (inp.interaction_time * const.elementary_charge**2 * const.boltzmann * mat.temperature
            * rp1 / (2.0 * math.pi * const.vacuum_permittivity * const.reduced_planck**2))
    two_h = 2.0 * h
    # 1/a - 1/sqrt(a^2 + d^2) = d^2 / (a sqrt(a^2 + d^2) (sqrt(a^2 + d^2) + a)), no cancellation
    root = math.sqrt(two_h * two_h + d * d)
    bracket = d * d / (two_h * root * (root + two_h))
    return pref * bracket


def gamma_anglin(inp, z, const=CODATA):
    """Anglin-Zurek: pi e^2 k_B T rho L dx^2 / (4 h^2 v z^3)."""
    h = inp.geometry.effective_height(z)
    mat = inp.material
    return (math.pi * const.elementary_charge**2 * const.boltzmann * mat.temperature
            * mat.resistivity * inp.geometry.plate_length * inp.dx**2
            / (4.0 * const.planck**2 * inp.beam.velocity * h**3))


def machnikowski_geometric(xi, cfg=_FN_CFG):
    """gamma(xi) = 1/2 Int_{-inf}^{inf} ln(1 + xi^2/4 u^2/(1+u^2)) / (1+u^2) du.

    The integrand is even in u, so the half line is integrated.
    """
    a = 0.25 * xi * xi
    if a == 0.0:
        return 0.0

    def f(u):
        u2 = u * u
        return np.log1p(a * u2 / (1.0 + u2)) / (1.0 + u2)

    return integrate_adaptive_1d(f, 0.0, math.inf, cfg, vectorized=True).value


def _material_integrand(u, zeta):
    # u^-3 [1 + zeta/(4 pi u^2) B(u)]^-2 rewritten as u / (u^2 + zeta B/(4 pi))^2,
    # with B(u) = 1 + (1 - u^2)/(2u) ln((1+u)/(1-u)) = 1 + (1 - u^2) atanh(u)/u.
    bracket = 1.0 + (1.0 - u * u) * np.arctanh(u) / u
    c = zeta * bracket / (4.0 * math.pi)
    return u / (u * u + c) ** 2


def machnikowski_material(zeta, cfg=_FN_CFG):
    """mu(zeta) = zeta^2/4 Int_0^1 u^-3 [1 + zeta/(4 pi u^2) B(u)]^-2 du, zeta > 0."""
    if not zeta > 0:
        raise DomainError(f"material function needs zeta > 0, got {zeta!r}")
    res = integrate_adaptive_1d(lambda u: _material_integrand(u, zeta), 0.0, 1.0, cfg,
                                vectorized=True)
    return 0.25 * zeta * zeta * res.value


def machnikowski_zeta(material, const=CODATA):
    """Material-function argument m_eff e^2 / (2 pi eps0 eps_i hbar^2 k_F)."""
    if not material.has_machnikowski_params:
        raise ConfigError(f"{material.name}: Machnikowski model needs effective_mass_ratio, "
                          "screening_permittivity and fermi_wavevector")
    m_eff = material.effective_mass_ratio * const.electron_mass
    return (m_eff * const.elementary_charge**2
            / (2.0 * math.pi * const.vacuum_permittivity * material.screening_permittivity
               * const.reduced_planck**2 * material.fermi_wavevector))


def gamma_machnikowski(inp, z, const=CODATA, mu=None):
    """Gamma = L / lambda with

    1/lambda = k_B T / (2 pi^2 hbar v) gamma(dx/z) mu(zeta).

    ``mu`` may be passed in to reuse the material function across a grid.
    """
    h = inp.geometry.effective_height(z)
    mat = inp.material
    if mu is None:
        mu = machnikowski_material(machnikowski_zeta(mat, const))
    inv_lambda = (const.boltzmann * mat.temperature
                  / (2.0 * math.pi**2 * const.reduced_planck * inp.beam.velocity)
                  * machnikowski_geometric(inp.dx / h) * mu)
    return inp.geometry.plate_length * inv_lambda


def howie_prefactor(inp, const=CODATA):
    mat = inp.material
    omega_m = mat.resolved_howie_cutoff(const)
    return (const.elementary_charge**2 * inp.geometry.plate_length * omega_m**2
            / (4.0 * math.pi**2 * const.reduced_planck * mat.conductivity * inp.beam.velocity**2))


def gamma_howie(inp, z, const=CODATA):
    """P = e^2 L omega_m^2 / (4 pi^2 hbar sigma v^2) E1(2 alpha z / dx), alpha = 2."""
    h = inp.geometry.effective_height(z)
    if inp.dx == 0.0:
        return 0.0
    return howie_prefactor(inp, const) * exp_integral_e1(2.0 * HOWIE_ALPHA * h / inp.dx)
