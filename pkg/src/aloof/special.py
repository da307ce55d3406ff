"""Exponential integral E1 and the unnormalized sinc."""

from __future__ import annotations

import math

import numpy as np

from .errors import ConvergenceError, DomainError

EULER_GAMMA = 0.57721566490153286061

#: E1 uses the power series below this argument and the continued fraction above.
E1_SWITCH = 1.0

_EPS = np.finfo(float).eps
_MAX_TERMS = 500
_MAX_CF_TERMS = 20000


def e1_series(x):
    """E1(x) = -gamma - ln x - sum_{k>=1} (-x)^k / (k k!).

    Accurate for small and moderate x; loses digits to cancellation for
    x >~ 10.
    """
    term = 1.0
    acc = 0.0
    for k in range(1, _MAX_TERMS):
        term *= -x / k
        contrib = term / k
        acc += contrib
        if abs(contrib) < _EPS * abs(acc):
            return -EULER_GAMMA - math.log(x) - acc
    raise ConvergenceError(f"E1 series did not converge at x={x!r}")


def e1_continued_fraction(x):
    """E1(x) = e^-x / (x + 1 - 1/(x + 3 - 4/(x + 5 - ...))), modified Lentz.

    Converges for x > 0, but needs many terms below x ~ 0.1.
    """
    tiny = 1e-300
    b = x + 1.0
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_CF_TERMS):
        an = -float(i * i)
        b += 2.0
        d = 1.0 / (an * d + b)
        c = b + an / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h * math.exp(-x)
    raise ConvergenceError(f"E1 continued fraction did not converge at x={x!r}")


def exp_integral_e1(x):
    """Exponential integral E1(x) = int_x^inf e^-t / t dt for x > 0.

    Scalar or array input.  Relative accuracy is a few ulp.
    """
    if np.ndim(x) == 0:
        x = float(x)
        if not x > 0:
            raise DomainError(f"E1 requires a positive argument, got {x!r}")
        if x > 745.0:
            return 0.0
        return e1_series(x) if x <= E1_SWITCH else e1_continued_fraction(x)
    arr = np.asarray(x, dtype=float)
    return np.vectorize(exp_integral_e1, otypes=[float])(arr)


def sinc(x):
    """sin(x)/x with sinc(0) = 1 (unnormalized; no factor pi)."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-4
    safe = np.where(small, 1.0, x)
    x2 = x * x
    out = np.where(small, 1.0 - x2 / 6.0 + x2 * x2 / 120.0, np.sin(safe) / safe)
    return out if out.ndim else float(out)
