"""Coulomb-induced decoherence of electrons near conducting surfaces.

Subpackages
-----------
physics
    Constants, materials, beam kinematics and coherence length.
quadrature, special
    Adaptive Gauss-Kronrod integration, E1 and sinc.
decoherence
    The five decoherence expressions and visibility curves.
optics
    Transfer-matrix beamline and the Wien-filter separation method.
fringes
    Synthetic interferograms and the contrast-profile analysis chain.
"""

__version__ = "0.1.0"
