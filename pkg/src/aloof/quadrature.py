"""Adaptive Gauss-Kronrod quadrature in one and two dimensions.

1D uses the 10/21-point Gauss-Kronrod pair with QUADPACK's error scaling and
global bisection of the worst interval.  2D uses a 7/15-point tensor rule on
rectangles; each rectangle carries separate error estimates along x and y so
that splits happen along the axis that needs them.

Infinite limits are mapped onto finite ones:

* ``[a, inf)``:  x = a + t / (1 - t),      t in [0, 1)
* ``(-inf, b]``: x = b - t / (1 - t)
* ``(-inf, inf)``: x = t / (1 - t^2),      t in (-1, 1)

The rules never sample endpoints, so integrable endpoint singularities and
the mapped infinity are never evaluated.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DomainError, EvaluationError

# Kronrod abscissae/weights from QUADPACK (qk21, qk15); positive half, 0 last.
_XGK21 = np.array([
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.0,
])
_WGK21 = np.array([
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077208292238778, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
])
_WG10 = np.array([
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
])

_XGK15 = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0,
])
_WGK15 = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
])
_WG7 = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
])


def _full_rule(xgk, wgk, wg_half, gauss_at_even_tail):
    """Expand a half rule to full node/weight arrays on [-1, 1].

    Returns nodes, Kronrod weights, and Gauss weights (zero at Kronrod-only
    nodes).
    """
    nodes = np.concatenate([-xgk[:-1], [0.0], xgk[:-1][::-1]])
    wk = np.concatenate([wgk[:-1], [wgk[-1]], wgk[:-1][::-1]])
    n_half = len(xgk) - 1
    wg_half_full = np.zeros(len(xgk))
    # Gauss nodes are the odd-indexed Kronrod abscissae (1, 3, 5, ...).
    wg_half_full[1::2] = wg_half[: len(wg_half_full[1::2])]
    if gauss_at_even_tail:
        wg_half_full[-1] = wg_half[-1]
    wg = np.concatenate([wg_half_full[:-1], [wg_half_full[-1]], wg_half_full[:-1][::-1]])
    assert len(nodes) == 2 * n_half + 1
    return nodes, wk, wg


# G10 has no center node; G7 does.
GK21_NODES, GK21_WK, GK21_WG = _full_rule(_XGK21, _WGK21, _WG10, gauss_at_even_tail=False)
GK15_NODES, GK15_WK, GK15_WG = _full_rule(_XGK15, _WGK15, _WG7, gauss_at_even_tail=True)


@dataclass(frozen=True)
class QuadratureConfig:
    """Tolerances and limits for the adaptive integrators.

    ``min_phi_panels`` is the minimum number of initial panels along the
    second (angular) axis of 2D integrals; oscillatory integrands need a
    starting mesh at least as fine as the oscillation.
    """

    relative_tolerance: float = 1e-8
    absolute_tolerance: float = 1e-12
    max_subdivisions: int = 5000
    min_phi_panels: int = 64

    def __post_init__(self):
        if not (self.relative_tolerance > 0 and self.absolute_tolerance > 0):
            raise DomainError("quadrature tolerances must be positive")
        if self.max_subdivisions < 1 or self.min_phi_panels < 1:
            raise DomainError("subdivision counts must be >= 1")

    def target(self, value):
        return max(self.absolute_tolerance, self.relative_tolerance * abs(value))


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error_estimate: float
    evaluations: int


# -- 1D -----------------------------------------------------------------------

def _map_interval(f, a, b):
    """Return (g, lo, hi) with a finite interval for possibly infinite limits."""
    if math.isinf(a) and math.isinf(b):
        if a > 0 or b < 0:
            raise DomainError("invalid infinite interval")
        def g(t):
            d = 1.0 - t * t
            return f(t / d) * (1.0 + t * t) / (d * d)
        return g, -1.0, 1.0
    if math.isinf(b):
        def g(t):
            d = 1.0 - t
            return f(a + t / d) / (d * d)
        return g, 0.0, 1.0
    if math.isinf(a):
        def g(t):
            d = 1.0 - t
            return f(b - t / d) / (d * d)
        return g, 0.0, 1.0
    return f, a, b


def _as_vector_fn(f, vectorized):
    if vectorized:
        def fv(x):
            return np.asarray(f(x), dtype=float)
    else:
        def fv(x):
            return np.array([f(float(xi)) for xi in x], dtype=float)
    return fv


def _gk21(fv, lo, hi):
    center = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    y = fv(center + half * GK21_NODES)
    if not np.all(np.isfinite(y)):
        bad = float((center + half * GK21_NODES)[~np.isfinite(y)][0])
        raise EvaluationError(f"integrand is not finite at x = {bad!r}")
    resk = float(np.dot(GK21_WK, y)) * half
    resg = float(np.dot(GK21_WG, y)) * half
    reskh = resk / (2.0 * half) if half else 0.0
    resasc = float(np.dot(GK21_WK, np.abs(y - reskh))) * abs(half)
    resabs = float(np.dot(GK21_WK, np.abs(y))) * abs(half)
    err = abs(resk - resg)
    # QUADPACK scaling: trusts the Kronrod result when the G/K gap is small
    # compared with the integrand's variation.
    if resasc != 0.0 and err != 0.0:
        err = resasc * min(1.0, (200.0 * err / resasc) ** 1.5)
    eps = np.finfo(float).eps
    if resabs > np.finfo(float).tiny / (50.0 * eps):
        err = max(50.0 * eps * resabs, err)
    return resk, float(err)


def integrate_adaptive_1d(f, a, b, cfg=None, vectorized=False, initial_panels=1):
    """Integrate ``f`` over ``[a, b]``; either limit may be infinite.

    Parameters
    ----------
    f : callable
        ``f(x) -> float``; with ``vectorized=True`` it receives and returns
        numpy arrays.
    a, b : float
        Limits with ``a < b``.
    cfg : QuadratureConfig, optional
    initial_panels : int
        Number of equal panels the (mapped) interval starts with.

    Returns
    -------
    QuadratureResult

    Raises
    ------
    ConvergenceError
        If ``cfg.max_subdivisions`` intervals did not reach the tolerance;
        carries the best estimate.
    EvaluationError
        If ``f`` returns NaN or inf at a node.
    """
    cfg = cfg or QuadratureConfig()
    if not a < b:
        raise DomainError(f"integration limits must satisfy a < b (got {a!r}, {b!r})")
    fv = _as_vector_fn(f, vectorized)
    g, lo, hi = _map_interval(fv, a, b)

    edges = np.linspace(lo, hi, initial_panels + 1)
    heap = []
    evaluations = 0
    total = 0.0
    total_err = 0.0
    for k in range(initial_panels):
        val, err = _gk21(g, edges[k], edges[k + 1])
        evaluations += 21
        heapq.heappush(heap, (-err, k, edges[k], edges[k + 1], val))
        total += val
        total_err += err
    counter = initial_panels

    while total_err > cfg.target(total):
        if len(heap) >= cfg.max_subdivisions:
            raise ConvergenceError(
                f"adaptive quadrature did not converge in {cfg.max_subdivisions} intervals",
                estimate=_resum(heap), error=total_err)
        neg_err, _, x0, x1, val = heapq.heappop(heap)
        mid = 0.5 * (x0 + x1)
        if not (x0 < mid < x1):
            raise ConvergenceError("interval too small to subdivide further",
                                   estimate=total, error=total_err)
        v1, e1 = _gk21(g, x0, mid)
        v2, e2 = _gk21(g, mid, x1)
        evaluations += 42
        heapq.heappush(heap, (-e1, counter, x0, mid, v1))
        heapq.heappush(heap, (-e2, counter + 1, mid, x1, v2))
        counter += 2
        # re-summing keeps the total independent of floating-point drift
        total = _resum(heap)
        total_err = math.fsum(-item[0] for item in heap)

    return QuadratureResult(_resum(heap), total_err, evaluations)


def _resum(heap):
    # order by left edge so the sum is independent of heap layout
    return math.fsum(item[4] for item in sorted(heap, key=lambda it: it[2]))


# -- 2D -----------------------------------------------------------------------

def tensor_gk15(f, rects):
    """Apply the 15x15 Kronrod tensor rule to many rectangles at once.

    ``rects`` has shape (n, 4): (x0, x1, y0, y1).  ``f(X, Y)`` must accept
    broadcastable arrays.  Returns (value, err_x, err_y), each of shape (n,).
    """
    rects = np.asarray(rects, dtype=float)
    cx = 0.5 * (rects[:, 0] + rects[:, 1])
    hx = 0.5 * (rects[:, 1] - rects[:, 0])
    cy = 0.5 * (rects[:, 2] + rects[:, 3])
    hy = 0.5 * (rects[:, 3] - rects[:, 2])
    X = (cx[:, None] + hx[:, None] * GK15_NODES)[:, :, None]
    Y = (cy[:, None] + hy[:, None] * GK15_NODES)[:, None, :]
    F = np.broadcast_to(np.asarray(f(X, Y), dtype=float), (len(rects), 15, 15))
    if not np.all(np.isfinite(F)):
        raise EvaluationError("2D integrand is not finite at a node")
    area = hx * hy
    inner_k = F @ GK15_WK          # (n, 15): Kronrod along y
    inner_g = F @ GK15_WG          # Gauss along y
    val = area * (inner_k @ GK15_WK)
    err_x = area * np.abs(inner_k @ (GK15_WK - GK15_WG))
    err_y = area * np.abs((inner_k - inner_g) @ GK15_WK)
    return val, err_x, err_y


def adaptive_rectangles(rule, rects, cfg, evals_per_rect=225):
    """Globally adaptive cubature driver.

    ``rule(rects) -> (value, err_x, err_y)`` evaluates a batch of
    rectangles.  Each pass splits the largest-error rectangles, in halves
    along their worse axis, until the summed error meets the tolerance.
    Rectangles stay in a fixed order so the final sum is reproducible.
    """
    rects = np.asarray(rects, dtype=float)
    val, ex, ey = rule(rects)
    evaluations = len(rects) * evals_per_rect
    while True:
        err = ex + ey
        total = float(np.sum(val))
        total_err = float(np.sum(err))
        target = cfg.target(total)
        if total_err <= target:
            return QuadratureResult(total, total_err, evaluations)
        if len(rects) >= cfg.max_subdivisions:
            raise ConvergenceError(
                f"2D cubature did not converge within {cfg.max_subdivisions} rectangles",
                estimate=total, error=total_err)
        order = np.argsort(-err, kind="stable")
        cumulative = np.cumsum(err[order])
        # smallest prefix whose removal would bring the total under target/2
        n_split = int(np.searchsorted(cumulative, total_err - 0.5 * target)) + 1
        n_split = min(n_split, len(order), cfg.max_subdivisions - len(rects))
        n_split = max(n_split, 1)
        chosen = np.sort(order[:n_split])
        parents = rects[chosen]
        along_x = ex[chosen] >= ey[chosen]
        left = parents.copy()
        right = parents.copy()
        mid_x = 0.5 * (parents[:, 0] + parents[:, 1])
        mid_y = 0.5 * (parents[:, 2] + parents[:, 3])
        left[along_x, 1] = mid_x[along_x]
        right[along_x, 0] = mid_x[along_x]
        left[~along_x, 3] = mid_y[~along_x]
        right[~along_x, 2] = mid_y[~along_x]
        if np.any(left[:, 1] <= left[:, 0]) or np.any(left[:, 3] <= left[:, 2]):
            raise ConvergenceError("rectangle too small to subdivide further",
                                   estimate=total, error=total_err)
        children = np.concatenate([left, right])
        cval, cex, cey = rule(children)
        evaluations += len(children) * evals_per_rect
        keep = np.ones(len(rects), dtype=bool)
        keep[chosen] = False
        rects = np.concatenate([rects[keep], children])
        val = np.concatenate([val[keep], cval])
        ex = np.concatenate([ex[keep], cex])
        ey = np.concatenate([ey[keep], cey])


def _axis_map(a, b):
    """Return (lo, hi, x_of_t, jacobian_of_t) for a possibly infinite axis."""
    if math.isinf(a) and math.isinf(b):
        return -1.0, 1.0, (lambda t: t / (1 - t * t)), (lambda t: (1 + t * t) / (1 - t * t) ** 2)
    if math.isinf(b):
        return 0.0, 1.0, (lambda t: a + t / (1 - t)), (lambda t: 1.0 / (1 - t) ** 2)
    if math.isinf(a):
        return 0.0, 1.0, (lambda t: b - t / (1 - t)), (lambda t: 1.0 / (1 - t) ** 2)
    return a, b, (lambda t: t), (lambda t: np.ones_like(t))


def integrate_adaptive_2d(f, x_range, y_range, cfg=None, initial_panels=(1, None)):
    """Integrate ``f(x, y)`` over a rectangle; either x limit may be infinite.

    ``f`` must be vectorized (numpy broadcasting).  The y axis starts with
    ``cfg.min_phi_panels`` panels unless ``initial_panels[1]`` says
    otherwise.
    """
    cfg = cfg or QuadratureConfig()
    (ax, bx), (ay, by) = x_range, y_range
    if not (ax < bx and ay < by):
        raise DomainError("2D integration ranges must be increasing")
    if math.isinf(ay) or math.isinf(by):
        raise DomainError("only the x axis may be semi-infinite")
    lo, hi, xmap, jac = _axis_map(ax, bx)

    def g(T, Y):
        return f(xmap(T), Y) * jac(T)

    nx = initial_panels[0]
    ny = initial_panels[1] if initial_panels[1] is not None else cfg.min_phi_panels
    rects = panel_grid(lo, hi, nx, ay, by, ny)
    return adaptive_rectangles(lambda r: tensor_gk15(g, r), rects, cfg)


def panel_grid(x0, x1, nx, y0, y1, ny):
    xe = np.linspace(x0, x1, nx + 1)
    ye = np.linspace(y0, y1, ny + 1)
    xa, ya = np.meshgrid(xe[:-1], ye[:-1], indexing="ij")
    xb, yb = np.meshgrid(xe[1:], ye[1:], indexing="ij")
    return np.stack([xa.ravel(), xb.ravel(), ya.ravel(), yb.ravel()], axis=1)
