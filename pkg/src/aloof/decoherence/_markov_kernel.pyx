# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Markov integrand and 15x15 Gauss-Kronrod tensor rule.

Same arithmetic as ``_markov_py``.  The rectangle loop runs without the GIL
so several curve points can be integrated from threads.
"""

import numpy as np

from libc.math cimport cos, sin, exp, tanh, sqrt, fabs

cdef extern from "complex.h" nogil:
    double complex csqrt(double complex)
    double creal(double complex)
    double cimag(double complex)

from ..quadrature import GK15_NODES, GK15_WG, GK15_WK


cdef struct Params:
    double dx
    double z
    double v
    double theta
    double sig_eps0
    double eps_b
    double drude_damping
    double beta2
    double inv_c
    double prefactor
    int use_gamma
    int fresnel


cdef inline double integrand(double k, double s, double c, Params* p) noexcept nogil:
    cdef double eta = k * p.v * fabs(c)
    cdef double gam = 1.0
    cdef double complex eps, kz0, kz1, rp, rs, one_j = 1j
    cdef double a, b, im_r, q0
    if p.use_gamma:
        gam = sqrt(1.0 - p.beta2 * c * c)
    if p.drude_damping > 0.0:
        eps = p.eps_b - p.sig_eps0 * p.drude_damping / (eta * (eta + one_j * p.drude_damping))
    else:
        eps = p.eps_b + one_j * (p.sig_eps0 / eta)
    if p.fresnel:
        q0 = eta * p.inv_c
        kz0 = one_j * sqrt(k * k - q0 * q0)
        kz1 = csqrt(eps * q0 * q0 - k * k)
        rp = (eps * kz0 - kz1) / (eps * kz0 + kz1)
        rs = (kz0 - kz1) / (kz0 + kz1)
        im_r = cimag(rp) * (1.0 - p.beta2 * c * c) + p.beta2 * s * s * cimag(rs)
    else:
        a = creal(eps) + 1.0
        b = cimag(eps)
        im_r = 2.0 * b / (a * a + b * b) * (1.0 - p.beta2 * c * c)
    return (1.0 - cos(k * p.dx * s)) / tanh(p.theta * eta) * im_r * exp(-2.0 * k * p.z * gam) / gam


def markov_rule(double[:, ::1] rects, p):
    """Evaluate the tensor rule on every rectangle; see ``_markov_py.markov_rule``."""
    cdef Params prm
    prm.dx = p.dx
    prm.z = p.z
    prm.v = p.v
    prm.theta = p.theta
    prm.sig_eps0 = p.sig_eps0
    prm.eps_b = p.eps_b
    prm.drude_damping = p.drude_damping
    prm.beta2 = p.beta2
    prm.inv_c = p.inv_c
    prm.prefactor = p.prefactor
    prm.use_gamma = 1 if p.use_gamma else 0
    prm.fresnel = 1 if p.fresnel else 0

    cdef double[::1] nodes = np.ascontiguousarray(GK15_NODES, dtype=np.float64)
    cdef double[::1] wk = np.ascontiguousarray(GK15_WK, dtype=np.float64)
    cdef double[::1] wg = np.ascontiguousarray(GK15_WG, dtype=np.float64)
    cdef Py_ssize_t n = rects.shape[0]
    out_val = np.empty(n)
    out_ek = np.empty(n)
    out_ep = np.empty(n)
    cdef double[::1] val = out_val
    cdef double[::1] ek = out_ek
    cdef double[::1] ep = out_ep
    cdef Py_ssize_t r, i, j
    cdef double ck, hk, cp, hp, k, f, scale, kk, kg, tot, ex, ey
    cdef double sphi[15]
    cdef double cphi[15]
    cdef double inner_k[15]
    cdef double inner_g[15]
    with nogil:
        for r in range(n):
            ck = 0.5 * (rects[r, 0] + rects[r, 1])
            hk = 0.5 * (rects[r, 1] - rects[r, 0])
            cp = 0.5 * (rects[r, 2] + rects[r, 3])
            hp = 0.5 * (rects[r, 3] - rects[r, 2])
            for j in range(15):
                sphi[j] = sin(cp + hp * nodes[j])
                cphi[j] = cos(cp + hp * nodes[j])
            for i in range(15):
                k = ck + hk * nodes[i]
                kk = 0.0
                kg = 0.0
                for j in range(15):
                    f = integrand(k, sphi[j], cphi[j], &prm)
                    kk += wk[j] * f
                    kg += wg[j] * f
                inner_k[i] = kk
                inner_g[i] = kg
            tot = 0.0
            ex = 0.0
            ey = 0.0
            for i in range(15):
                tot += wk[i] * inner_k[i]
                ex += (wk[i] - wg[i]) * inner_k[i]
                ey += wk[i] * (inner_k[i] - inner_g[i])
            scale = prm.prefactor * hk * hp
            val[r] = scale * tot
            ek[r] = fabs(scale * ex)
            ep[r] = fabs(scale * ey)
    return out_val, out_ek, out_ep
