"""The five decoherence expressions and visibility curves.

``markov`` is the numerically integrated Markov approximation; the others
(finite temperature, Anglin-Zurek, Machnikowski, Howie) are closed forms or
one-dimensional integrals.
"""

from .closed_form import (HOWIE_ALPHA, gamma_anglin, gamma_finite_temperature, gamma_howie,
                          gamma_machnikowski, machnikowski_geometric, machnikowski_material,
                          machnikowski_zeta)
from .curves import MODELS, VisibilityCurve, resolve_model, visibility_curve, write_curve_csv
from .inputs import DecoherenceInput
from .markov import MarkovOptions, gamma_markov
from .surface import (drude_permittivity, reflection_p, reflection_s, static_rp_derivative,
                      thermal_factor, thermal_occupation)

__all__ = [
    "DecoherenceInput", "MODELS", "MarkovOptions", "VisibilityCurve", "HOWIE_ALPHA",
    "drude_permittivity", "reflection_p", "reflection_s", "thermal_occupation",
    "thermal_factor", "static_rp_derivative",
    "gamma_markov", "gamma_finite_temperature", "gamma_anglin", "gamma_machnikowski",
    "gamma_howie", "machnikowski_geometric", "machnikowski_material", "machnikowski_zeta",
    "resolve_model", "visibility_curve", "write_curve_csv",
]
