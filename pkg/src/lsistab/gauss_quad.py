"""Numerical integration against the standard Gaussian measure.

Two engines are provided behind :func:`integrate_gauss`:

* probabilists' Gauss-Hermite rules, normalized so the weights sum to one,
  for smooth integrands;
* an adaptive composite Gauss-Legendre scheme on ``[-R, R]`` for integrands
  with kinks such as ``|f - 1|``.

The weight ``exp(-pi y^2) dy`` is reduced to ``d gamma`` through the
substitution ``y = x / sqrt(2 pi)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy import optimize, special

from .errors import EvaluationError, InvalidArgumentError, ToleranceNotMet

SQRT_2PI = math.sqrt(2.0 * math.pi)
DEFAULT_NODES = 200
DEFAULT_RADIUS = 12.0
DEFAULT_TOL = 1e-10
UNDERFLOW = 1e-300

_GL_LOW = np.polynomial.legendre.leggauss(10)
_GL_HIGH = np.polynomial.legendre.leggauss(20)


@dataclass(frozen=True)
class Estimate:
    """A numerical value together with an absolute error estimate."""

    value: float
    error: float = 0.0

    def __float__(self):
        return float(self.value)


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Quadrature configuration for integrals against ``d gamma``.

    For ``kind == "gauss-hermite"`` the rule is the node/weight table. For
    ``kind == "adaptive-composite"`` the table is empty and integration is
    carried out adaptively on ``[-radius, radius]`` to ``target_tol``.
    """

    nodes: np.ndarray
    weights: np.ndarray
    kind: str = "gauss-hermite"
    target_tol: float = DEFAULT_TOL
    radius: float = DEFAULT_RADIUS
    _coarse: "QuadratureRule | None" = field(default=None, repr=False, compare=False)

    @property
    def size(self):
        return len(self.nodes)


def _hermite_table(k):
    x, w = special.roots_hermitenorm(k)
    w = w / SQRT_2PI
    keep = w > 0.0
    x, w = x[keep], w[keep]
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@lru_cache(maxsize=32)
def hermite_rule(k: int, target_tol: float = DEFAULT_TOL) -> QuadratureRule:
    """Probabilists' Gauss-Hermite rule with ``k`` nodes, weights summing to 1.

    Nodes whose weight underflows to zero (``k`` beyond a few hundred) are
    dropped; they contribute nothing in double precision.
    """
    if not isinstance(k, (int, np.integer)) or k < 1:
        raise InvalidArgumentError(f"number of nodes must be a positive integer, got {k!r}")
    x, w = _hermite_table(int(k))
    coarse = hermite_rule(int(k) // 2, target_tol) if k >= 4 else None
    return QuadratureRule(x, w, "gauss-hermite", target_tol, DEFAULT_RADIUS, coarse)


@lru_cache(maxsize=32)
def adaptive_rule(target_tol: float = DEFAULT_TOL, radius: float = DEFAULT_RADIUS) -> QuadratureRule:
    if target_tol <= 0 or radius <= 0:
        raise InvalidArgumentError("target_tol and radius must be positive")
    empty = np.empty(0)
    empty.setflags(write=False)
    return QuadratureRule(empty, empty, "adaptive-composite", target_tol, radius)


def default_rule() -> QuadratureRule:
    return hermite_rule(DEFAULT_NODES)


def _check_finite(values, nodes):
    bad = ~np.isfinite(values)
    if bad.any():
        i = int(np.flatnonzero(bad.ravel())[0])
        raise EvaluationError(np.ravel(nodes)[i], np.ravel(values)[i])


def _gh_sum(g, rule):
    vals = np.asarray(g(rule.nodes), dtype=float)
    vals = np.broadcast_to(vals, rule.nodes.shape)
    _check_finite(vals, rule.nodes)
    return float(np.dot(rule.weights, vals))


def gaussian_pdf(x):
    return np.exp(-0.5 * np.square(x)) / SQRT_2PI


def integrate_gauss(
    g: Callable[[np.ndarray], np.ndarray],
    rule: QuadratureRule | None = None,
    breakpoints: Sequence[float] = (),
) -> Estimate:
    """Approximate ``int g d gamma``.

    Parameters
    ----------
    g : callable
        Vectorized integrand.
    rule : QuadratureRule, optional
        Defaults to the 200-node Gauss-Hermite rule.
    breakpoints : sequence of float
        Known kink locations, used only by the adaptive engine.

    Returns
    -------
    Estimate
        For Gauss-Hermite the error is the difference against the rule with
        half as many nodes.
    """
    rule = default_rule() if rule is None else rule
    if rule.kind == "adaptive-composite":
        R = rule.radius
        return integrate_interval(
            lambda x: np.asarray(g(x), dtype=float) * gaussian_pdf(x),
            -R, R, tol=rule.target_tol, breakpoints=breakpoints,
        )
    value = _gh_sum(g, rule)
    error = abs(value - _gh_sum(g, rule._coarse)) if rule._coarse is not None else 0.0
    return Estimate(value, error)


def integrate_pi_weight(
    g: Callable[[np.ndarray], np.ndarray],
    rule: QuadratureRule | None = None,
    breakpoints: Sequence[float] = (),
) -> Estimate:
    """Approximate ``int g(y) exp(-pi y^2) dy`` via ``y = x / sqrt(2 pi)``."""
    bps = [b * SQRT_2PI for b in breakpoints]
    return integrate_gauss(lambda x: g(np.asarray(x) / SQRT_2PI), rule, bps)


def integrate_interval(
    h: Callable[[np.ndarray], np.ndarray],
    lo: float,
    hi: float,
    tol: float = DEFAULT_TOL,
    breakpoints: Sequence[float] = (),
    init_panels: int = 48,
    max_panels: int = 200_000,
    noise: float = 0.0,
) -> Estimate:
    """Adaptive composite Gauss-Legendre integration of ``h`` over ``[lo, hi]``.

    Each panel is integrated with 10- and 20-point rules; the difference is
    the panel error. Panels whose error exceeds their share of ``tol`` are
    bisected until the budget ``max_panels`` is spent. ``noise`` is the
    absolute accuracy to which ``h`` itself can be evaluated; panels whose
    error is below ``noise`` times their width are not refined further.
    """
    if not hi > lo:
        raise InvalidArgumentError(f"empty interval [{lo}, {hi}]")
    length = hi - lo
    cuts = sorted({lo, hi, *(float(b) for b in breakpoints if lo < b < hi)})
    a_list, b_list = [], []
    for s, e in zip(cuts[:-1], cuts[1:]):
        m = max(1, int(round(init_panels * (e - s) / length)))
        t = np.linspace(s, e, m + 1)
        a_list.append(t[:-1])
        b_list.append(t[1:])
    a = np.concatenate(a_list)
    b = np.concatenate(b_list)

    xl, wl = _GL_LOW
    xh, wh = _GL_HIGH
    nodes = np.concatenate([xl, xh])
    total = 0.0
    err_total = 0.0
    used = 0
    eps = np.finfo(float).eps
    while a.size:
        used += a.size
        mid = 0.5 * (a + b)
        half = 0.5 * (b - a)
        x = mid[:, None] + half[:, None] * nodes[None, :]
        v = np.asarray(h(x), dtype=float)
        v = np.broadcast_to(v, x.shape)
        _check_finite(v, x)
        q_low = half * (v[:, :10] @ wl)
        q_high = half * (v[:, 10:] @ wh)
        res_abs = half * (np.abs(v[:, 10:]) @ wh)
        err = np.abs(q_high - q_low)
        share = np.maximum(tol / length, noise) * (b - a)
        done = (err <= share) | (err <= 50 * eps * res_abs) | (half <= 4 * eps * np.maximum(1.0, np.abs(mid)))
        total += float(q_high[done].sum())
        err_total += float(err[done].sum())
        if used + 2 * int((~done).sum()) > max_panels and not done.all():
            rest = ~done
            raise ToleranceNotMet(
                f"adaptive quadrature exceeded {max_panels} panels",
                estimate=total + float(q_high[rest].sum()),
                error=err_total + float(err[rest].sum()),
            )
        a, mid_r, b = a[~done], mid[~done], b[~done]
        a, b = np.concatenate([a, mid_r]), np.concatenate([mid_r, b])
    return Estimate(total, err_total)


def sign_change_roots(h: Callable[[np.ndarray], np.ndarray], lo: float, hi: float, n: int = 4001,
                      atol: float = 1e-12):
    """Locate the sign changes of ``h`` on a grid and polish them with Brent's method.

    Values within ``atol`` of zero are treated as noise and ignored, so an
    integrand that vanishes identically up to rounding yields no roots.
    """
    xs = np.linspace(lo, hi, n)
    v = np.asarray(h(xs), dtype=float)
    v = np.where(np.abs(v) <= atol, 0.0, v)
    nz = np.flatnonzero(v)
    roots = []
    for i, j in zip(nz[:-1], nz[1:]):
        if v[i] * v[j] >= 0:
            continue
        if j > i + 1:
            roots.append(0.5 * (xs[i + 1] + xs[j - 1]))
            continue
        try:
            roots.append(optimize.brentq(lambda t: float(h(np.array([t]))[0]), xs[i], xs[j], xtol=1e-14))
        except ValueError:
            roots.append(0.5 * (xs[i] + xs[j]))
    return roots


def gamma_abs_moment(p: float, n: int = 1) -> float:
    """Absolute moment ``int |x|^p d gamma_n`` of the standard Gaussian on R^n."""
    if p < 0 or n < 1:
        raise InvalidArgumentError(f"need p >= 0 and n >= 1, got p={p}, n={n}")
    return math.exp(0.5 * p * math.log(2.0) + math.lgamma(0.5 * (n + p)) - math.lgamma(0.5 * n))
