"""Markov approximation of the macroscopic-QED decoherence functional.

Gamma = t q^2/(eps0 hbar) Int Int k dk dphi/(2 pi)^2 [1 - cos(k dx sin phi)]
        (2 n(eta) + 1) exp(-2 k z g(phi)) / (2 k g(phi)) Im{r_p - beta^2 (...)}

with eta = k v |cos phi| and g(phi) = sqrt(1 - beta^2 cos^2 phi).  The
integrand depends on phi only through |cos phi|, cos^2 phi and
cos(k dx sin phi), so the angular integral runs over [0, pi/2] with a factor
4.  The k_par axis is truncated where exp(-2 k z g) falls below 1e-16.

The hot loop (a 15x15 Gauss-Kronrod tensor rule over many rectangles) comes
from the compiled ``_markov_kernel`` when it is importable and from the numpy
twin ``_markov_py`` otherwise; ``set_backend`` switches explicitly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ConvergenceError
from ..physics import CODATA
from ..quadrature import QuadratureConfig, adaptive_rectangles, panel_grid
from . import _markov_py

try:
    from . import _markov_kernel as _compiled
except ImportError:  # extension not built
    _compiled = None

_BACKENDS = {"python": _markov_py.markov_rule}
if _compiled is not None:
    _BACKENDS["compiled"] = _compiled.markov_rule

_active = "compiled" if _compiled is not None else "python"

#: Envelope cut-off for the k_par truncation.
ENVELOPE_CUTOFF = 1e-16

DEFAULT_CONFIG = QuadratureConfig(relative_tolerance=1e-4, absolute_tolerance=1e-10,
                                  max_subdivisions=400_000, min_phi_panels=64)


def available_backends():
    return sorted(_BACKENDS)


def get_backend():
    return _active


def set_backend(name):
    """Select "compiled" or "python"; returns the previous backend name."""
    global _active
    if name not in _BACKENDS:
        raise ValueError(f"unknown or unavailable backend {name!r}; have {available_backends()}")
    previous, _active = _active, name
    return previous


@dataclass(frozen=True)
class MarkovOptions:
    """Model switches.

    use_gamma
        Keep the factor sqrt(1 - beta^2 cos^2 phi) in the exponent; False sets
        it to 1.  Either way the change is below 2e-3 at 1 keV.
    fresnel
        Use retarded Fresnel r_p and r_s instead of the electrostatic r_p
        (r_s = 0).
    full_drude
        Drude permittivity with finite collision rate instead of the ohmic
        limit.
    """

    use_gamma: bool = True
    fresnel: bool = False
    full_drude: bool = False


@dataclass(frozen=True)
class MarkovParams:
    """Flat parameter block handed to the rule implementations."""

    dx: float
    z: float
    v: float
    theta: float          # hbar / (2 k_B T)
    sig_eps0: float       # sigma / eps0
    eps_b: float
    drude_damping: float  # 0 selects the ohmic limit
    beta2: float
    inv_c: float
    prefactor: float
    use_gamma: bool
    fresnel: bool


def markov_params(inp, h, options=MarkovOptions(), const=CODATA):
    mat = inp.material
    v = inp.beam.velocity
    damping = 0.0
    if options.full_drude:
        if mat.drude_damping is None:
            from ..errors import ConfigError
            raise ConfigError(f"{mat.name}: full Drude model needs drude_damping")
        damping = mat.drude_damping
    q2 = const.elementary_charge**2
    # 4 (quarter-range symmetry) * t q^2 / (eps0 hbar) / (2 pi)^2 / 2
    prefactor = inp.interaction_time * q2 / (2.0 * math.pi**2 * const.vacuum_permittivity
                                             * const.reduced_planck)
    return MarkovParams(
        dx=inp.dx,
        z=h,
        v=v,
        theta=const.reduced_planck / (2.0 * const.boltzmann * mat.temperature),
        sig_eps0=mat.conductivity / const.vacuum_permittivity,
        eps_b=mat.background_permittivity,
        drude_damping=damping,
        beta2=(v / const.light_speed) ** 2,
        inv_c=1.0 / const.light_speed,
        prefactor=prefactor,
        use_gamma=options.use_gamma,
        fresnel=options.fresnel,
    )


def k_cutoff(p):
    gmin = math.sqrt(1.0 - p.beta2) if p.use_gamma else 1.0
    return math.log(1.0 / ENVELOPE_CUTOFF) / (2.0 * p.z * gmin)


def integrate_markov(p, cfg=DEFAULT_CONFIG, backend=None):
    """Cubature of the Markov integrand for a parameter block.

    Returns a ``QuadratureResult`` in units of Gamma.
    """
    rule = _BACKENDS[backend or _active]
    k_max = k_cutoff(p)
    # about one initial panel per oscillation period of cos(k dx)
    n_k = max(4, math.ceil(k_max * p.dx / (2.0 * math.pi)))
    rects = np.ascontiguousarray(panel_grid(0.0, k_max, n_k, 0.0, 0.5 * math.pi,
                                            cfg.min_phi_panels))
    return adaptive_rectangles(lambda r: rule(np.ascontiguousarray(r), p), rects, cfg)


def gamma_markov(inp, z, cfg=None, options=MarkovOptions(), backend=None):
    """Markov decoherence exponent at grid height ``z``.

    The surface offset of ``inp.geometry`` is subtracted first.

    Returns
    -------
    (gamma, error_estimate)

    Raises
    ------
    ConvergenceError
        Carries the best estimate and its error.
    DomainError
        If z - z0 <= 0.
    """
    h = inp.geometry.effective_height(z)
    p = markov_params(inp, h, options)
    cfg = cfg or DEFAULT_CONFIG
    try:
        res = integrate_markov(p, cfg, backend)
    except ConvergenceError as exc:
        raise ConvergenceError(f"Markov integral at z={z!r}: {exc}",
                               estimate=exc.estimate, error=exc.error) from None
    return res.value, res.error_estimate
