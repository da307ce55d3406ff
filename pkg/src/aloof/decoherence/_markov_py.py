"""Pure-numpy Markov integrand and tensor Gauss-Kronrod rule.

Mirror of ``_markov_kernel.pyx``; used when the extension is not built and
as the reference in backend-equivalence tests.
"""

import numpy as np

from ..quadrature import GK15_NODES, GK15_WG, GK15_WK


def markov_integrand(k, phi, p):
    """Integrand of the Markov decoherence functional over (k_par, phi).

    The k_par measure and the 1/(2 k_par) factor are already combined, so the
    returned value is dimensionless.  ``p`` is a ``MarkovParams``.
    """
    s = np.sin(phi)
    c = np.cos(phi)
    eta = k * p.v * np.abs(c)
    if p.use_gamma:
        gam = np.sqrt(1.0 - p.beta2 * c * c)
    else:
        gam = np.ones_like(c)
    # permittivity at omega = eta
    if p.drude_damping > 0.0:
        eps = p.eps_b - p.sig_eps0 * p.drude_damping / (eta * (eta + 1j * p.drude_damping))
    else:
        eps = p.eps_b + 1j * p.sig_eps0 / eta
    if p.fresnel:
        q0 = eta * p.inv_c
        kz0 = 1j * np.sqrt(k * k - q0 * q0)
        kz1 = np.sqrt(eps * q0 * q0 - k * k)
        rp = (eps * kz0 - kz1) / (eps * kz0 + kz1)
        rs = (kz0 - kz1) / (kz0 + kz1)
        im_r = rp.imag * (1.0 - p.beta2 * c * c) + p.beta2 * s * s * rs.imag
    else:
        a = eps.real + 1.0
        b = eps.imag
        im_r = 2.0 * b / (a * a + b * b) * (1.0 - p.beta2 * c * c)
    thermal = 1.0 / np.tanh(p.theta * eta)
    return (1.0 - np.cos(k * p.dx * s)) * thermal * im_r * np.exp(-2.0 * k * p.z * gam) / gam


def markov_rule(rects, p):
    """15x15 Kronrod tensor rule over rectangles (k0, k1, phi0, phi1).

    Returns (value, err_k, err_phi) scaled by ``p.prefactor``.
    """
    rects = np.asarray(rects, dtype=float)
    ck = 0.5 * (rects[:, 0] + rects[:, 1])
    hk = 0.5 * (rects[:, 1] - rects[:, 0])
    cp = 0.5 * (rects[:, 2] + rects[:, 3])
    hp = 0.5 * (rects[:, 3] - rects[:, 2])
    K = (ck[:, None] + hk[:, None] * GK15_NODES)[:, :, None]
    P = (cp[:, None] + hp[:, None] * GK15_NODES)[:, None, :]
    F = markov_integrand(K, P, p)
    scale = p.prefactor * hk * hp
    inner_k = F @ GK15_WK
    inner_g = F @ GK15_WG
    val = scale * (inner_k @ GK15_WK)
    err_k = scale * np.abs(inner_k @ (GK15_WK - GK15_WG))
    err_p = scale * np.abs((inner_k - inner_g) @ GK15_WK)
    return val, err_k, err_p
