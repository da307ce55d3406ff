import numpy as np
import pytest

from aloof.fitting import least_squares_fit


def line(p, x):
    return p[0] + p[1] * x


def gauss(p, x):
    return p[0] * np.exp(-0.5 * ((x - p[1]) / p[2]) ** 2)


def test_linear_fit_matches_closed_form():
    rng = np.random.default_rng(0)
    x = np.linspace(0, 10, 50)
    y = 1.5 + 0.3 * x + 0.1 * rng.standard_normal(50)
    fit = least_squares_fit(line, x, y, [0.0, 0.0])
    coef, res, *_ = np.polyfit(x, y, 1, full=True)
    # the finite-difference Jacobian limits agreement to ~1e-9
    assert fit.params == pytest.approx(coef[::-1], rel=1e-8)
    assert fit.chi2 == pytest.approx(res[0], rel=1e-8)
    _, cov = np.polyfit(x, y, 1, cov="unscaled")
    assert np.allclose(fit.covariance[::-1, ::-1], cov * fit.chi2 / fit.dof, rtol=1e-8)
    assert fit.converged and fit.dof == 48


def test_one_percent_noise_within_three_sigma():
    truth = np.array([2.0, 0.3, 1.1])
    x = np.linspace(-4, 4, 81)
    y0 = gauss(truth, x)
    rng = np.random.default_rng(9)
    hits = np.zeros(3)
    n = 200
    for _ in range(n):
        y = y0 + 0.01 * rng.standard_normal(x.size)
        fit = least_squares_fit(gauss, x, y, [1.5, 0.0, 1.5])
        hits += np.abs(fit.params - truth) <= 3 * fit.sigmas
    assert np.all(hits / n >= 0.97)


def test_weights_are_inverse_variances():
    x = np.arange(6.0)
    y = np.array([1.0, 1.0, 1.0, 3.0, 3.0, 3.0])
    w = np.array([1, 1, 1, 1e-12, 1e-12, 1e-12])
    fit = least_squares_fit(lambda p, x: np.full_like(x, p[0]), x, y, [2.0], weights=w)
    assert fit.params[0] == pytest.approx(1.0, abs=1e-9)


def test_unidentifiable_parameter_has_infinite_variance():
    # the second parameter never enters the model
    fit = least_squares_fit(lambda p, x: p[0] * x, np.arange(1.0, 6.0), np.arange(1.0, 6.0) * 2,
                            [1.0, 3.0])
    assert fit.params[0] == pytest.approx(2.0)
    assert np.isinf(fit.covariance[1, 1])
    assert np.isfinite(fit.covariance[0, 0])


def test_analytic_jacobian_used():
    calls = []

    def jac(p, x):
        calls.append(1)
        return np.column_stack([np.ones_like(x), x])

    x = np.linspace(0, 1, 10)
    fit = least_squares_fit(line, x, 2 + 3 * x, [0.0, 0.0], jacobian=jac)
    assert calls
    assert fit.params == pytest.approx([2.0, 3.0], rel=1e-12)
    assert fit.reduced_chi2 == pytest.approx(0.0, abs=1e-20)


def test_failure_modes():
    fit = least_squares_fit(line, np.arange(3.0), np.arange(3.0), [0.0, 0.0, 0.0, 0.0])
    assert not fit.converged
    assert np.all(np.isinf(fit.covariance))
    nan = least_squares_fit(lambda p, x: p[0] * x, [1.0, 2.0], [1.0, 2.0], [1.0], max_nfev=1)
    assert nan.dof == 1
