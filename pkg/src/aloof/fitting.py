"""Damped (Levenberg-Marquardt) least squares with covariance estimates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

#: Jacobian columns below this fraction of the largest mark unidentifiable parameters.
IDENTIFIABILITY_RTOL = 1e-8


@dataclass
class FitResult:
    params: np.ndarray
    covariance: np.ndarray
    chi2: float
    dof: int
    converged: bool
    message: str
    nfev: int

    @property
    def sigmas(self):
        return np.sqrt(np.abs(np.diag(self.covariance)))

    @property
    def reduced_chi2(self):
        return self.chi2 / self.dof if self.dof > 0 else float("nan")


def least_squares_fit(model, x, y, p0, weights=None, max_nfev=2000, scale_covariance=True,
                      xtol=2.3e-16, ftol=2.3e-16, gtol=2.3e-16, jacobian=None):
    """Minimize sum(w (y - model(p, x))^2) with MINPACK's Levenberg-Marquardt.

    ``weights`` are inverse variances.  The covariance is (J^T W J)^-1,
    scaled by the reduced chi^2 when ``scale_covariance`` is set.
    Singular normal matrices yield an infinite covariance rather than an
    exception so callers can flag unidentifiable parameters.
    ``jacobian(p, x)`` returns d model / d p (shape n x len(p)); without it
    MINPACK differences numerically, which limits the attainable accuracy
    to about the square root of machine precision.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    sw = np.ones_like(y) if weights is None else np.sqrt(np.asarray(weights, dtype=float))

    def resid(p):
        return sw * (y - model(p, x))

    jac = "2-point"
    if jacobian is not None:
        def jac(p):
            return -sw[:, None] * jacobian(p, x)

    p0 = np.asarray(p0, dtype=float)
    try:
        res = least_squares(resid, p0, jac=jac, method="lm", xtol=xtol, ftol=ftol, gtol=gtol,
                            max_nfev=max_nfev * (len(p0) + 1))
    except ValueError as exc:
        n = len(p0)
        return FitResult(p0, np.full((n, n), np.inf), float("inf"), len(y) - n, False,
                         str(exc), 0)
    J = res.jac
    chi2 = float(np.dot(res.fun, res.fun))
    dof = len(y) - len(p0)
    n = len(p0)
    cov = np.full((n, n), np.inf)
    # columns far below the largest carry no information about their parameter
    # (for example a fringe period when the contrast is zero); they are left
    # at infinite variance and dropped from the inversion
    d = np.linalg.norm(J, axis=0)
    live = d > IDENTIFIABILITY_RTOL * d.max() if d.max() > 0 else np.zeros(n, bool)
    if live.any():
        try:
            # equilibrate columns so the condition test ignores parameter units
            js = J[:, live] / d[live]
            jtj = js.T @ js
            if np.linalg.cond(jtj) > 1e14:
                raise np.linalg.LinAlgError("ill-conditioned")
            cov[np.ix_(live, live)] = np.linalg.inv(jtj) / np.outer(d[live], d[live])
        except np.linalg.LinAlgError:
            pass
    if scale_covariance and dof > 0:
        with np.errstate(invalid="ignore"):
            cov = np.where(np.isinf(cov), cov, cov * (chi2 / dof))
    # status 0 means the evaluation budget ran out
    converged = bool(res.status > 0 and np.all(np.isfinite(res.x)))
    return FitResult(res.x, cov, chi2, dof, converged, res.message, int(res.nfev))
