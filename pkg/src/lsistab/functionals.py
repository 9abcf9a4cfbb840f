"""Scalar functionals of densities relative to the Gaussian measure.

Entropy ``H(f) = int f log f d gamma``, Fisher information
``I(f) = int f'^2 / f d gamma`` and the log-Sobolev deficit
``delta(f) = I(f) / 2 - H(f)``, together with their counterparts for the
amplitude ``u`` (``f(x) = u(x / sqrt(2 pi))^2``) under the weight
``exp(-pi y^2) dy``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .densities import Density1D, UDensity1D
from .errors import DivergentIntegralError, InvalidArgumentError, PreconditionViolation, ToleranceNotMet
from .gauss_quad import (
    DEFAULT_RADIUS,
    SQRT_2PI,
    UNDERFLOW,
    Estimate,
    adaptive_rule,
    hermite_rule,
    integrate_gauss,
    integrate_pi_weight,
    sign_change_roots,
)


@dataclass(frozen=True)
class DeficitEstimate(Estimate):
    """Deficit value with its two components.

    For the amplitude deficit ``fisher`` holds ``(2/pi) int u'^2 e^{-pi y^2} dy``
    and ``entropy`` holds ``int u^2 log u^2 e^{-pi y^2} dy`` so that
    ``value = fisher / 2 - entropy`` in both cases.
    """

    entropy: Estimate = Estimate(0.0)
    fisher: Estimate = Estimate(0.0)


@dataclass(frozen=True)
class Sobolev11Estimate(Estimate):
    """``W^{1,1}`` distance to the constant 1, split into its L1 and gradient parts."""

    l1: Estimate = Estimate(0.0)
    grad: Estimate = Estimate(0.0)


def xlogx(v):
    v = np.asarray(v, dtype=float)
    safe = np.where(v > UNDERFLOW, v, 1.0)
    return np.where(v > UNDERFLOW, v * np.log(safe), 0.0)


def _ratio_sq(d, v):
    """``d^2 / v`` with the convention 0 where ``v`` underflows."""
    safe = np.where(v > UNDERFLOW, v, 1.0)
    return np.where(v > UNDERFLOW, d * d / safe, 0.0)


def _require_normalized(f):
    if not f.is_normalized:
        mass = f.mass().value if isinstance(f, Density1D) else f.norm2().value
        raise PreconditionViolation("density must be normalized", mass)


def _require_centered(f):
    if not f.is_centered:
        raise PreconditionViolation("density must be centered", f.mean().value)


def entropy(f: Density1D) -> Estimate:
    _require_normalized(f)
    return f.cached("entropy", lambda: f.expect(lambda x: xlogx(f(x))))


def fisher_info(f: Density1D) -> Estimate:
    _require_normalized(f)
    return f.cached("fisher", lambda: f.expect(lambda x: _ratio_sq(f.derivative(x), f(x))))


def deficit(f: Density1D) -> DeficitEstimate:
    """Log-Sobolev deficit ``I(f)/2 - H(f)``, nonnegative up to quadrature error."""
    H = entropy(f)
    I = fisher_info(f)
    return DeficitEstimate(0.5 * I.value - H.value, 0.5 * I.error + H.error, H, I)


def to_u(f: Density1D) -> UDensity1D:
    """Amplitude ``u(y) = sqrt(f(sqrt(2 pi) y))``."""
    _require_normalized(f)

    def func(y):
        return np.sqrt(np.maximum(f(SQRT_2PI * y), 0.0))

    def deriv(y):
        x = SQRT_2PI * y
        v = f(x)
        safe = np.where(v > UNDERFLOW, v, 1.0)
        return np.where(v > UNDERFLOW, SQRT_2PI * f.derivative(x) / (2 * np.sqrt(safe)), 0.0)

    return UDensity1D(func, deriv, source=f, breakpoints=[b / SQRT_2PI for b in f.breakpoints])


def to_f(u: UDensity1D) -> Density1D:
    """Inverse of :func:`to_u`: ``f(x) = u(x / sqrt(2 pi))^2``."""
    _require_normalized(u)

    def func(x):
        return u(x / SQRT_2PI) ** 2

    def deriv(x):
        y = x / SQRT_2PI
        return 2 * u(y) * u.derivative(y) / SQRT_2PI

    return Density1D(func, deriv, "custom", {"from": "amplitude"},
                     breakpoints=[b * SQRT_2PI for b in u.breakpoints])


def deficit_star(u: UDensity1D) -> DeficitEstimate:
    """Amplitude deficit ``(1/pi) int u'^2 w - int u^2 log u^2 w`` with ``w = e^{-pi y^2}``."""
    _require_normalized(u)

    def compute():
        H = u.expect(lambda y: xlogx(u(y) ** 2))
        G = u.expect(lambda y: u.derivative(y) ** 2)
        I = Estimate(2 * G.value / math.pi, 2 * G.error / math.pi)
        return DeficitEstimate(0.5 * I.value - H.value, 0.5 * I.error + H.error, H, I)

    return u.cached("deficit_star", compute)


def _kinks(funcs, lo, hi, extra=()):
    pts = set(extra)
    for h in funcs:
        pts.update(sign_change_roots(h, lo, hi))
    return sorted(pts)


def sobolev11_dist(f: Density1D) -> Sobolev11Estimate:
    """``int |f - 1| d gamma + int |f'| d gamma``, integrated adaptively."""
    _require_normalized(f)

    def compute():
        R = DEFAULT_RADIUS
        rule = adaptive_rule()
        bps = _kinks([lambda x: f(x) - 1.0, f.derivative], -R, R, f.breakpoints)
        l1 = integrate_gauss(lambda x: np.abs(f(x) - 1.0), rule, bps)
        grad = integrate_gauss(lambda x: np.abs(f.derivative(x)), rule, bps)
        return Sobolev11Estimate(l1.value + grad.value, l1.error + grad.error, l1, grad)

    return f.cached("w11", compute)


def sobolev11_dist_u(u: UDensity1D) -> Sobolev11Estimate:
    """``int |u - 1| w + int |u'| w`` with ``w = e^{-pi y^2}``."""
    _require_normalized(u)

    def compute():
        R = DEFAULT_RADIUS / SQRT_2PI
        rule = adaptive_rule()
        bps = _kinks([lambda y: u(y) - 1.0, u.derivative], -R, R, u.breakpoints)
        l1 = integrate_pi_weight(lambda y: np.abs(u(y) - 1.0), rule, bps)
        grad = integrate_pi_weight(lambda y: np.abs(u.derivative(y)), rule, bps)
        return Sobolev11Estimate(l1.value + grad.value, l1.error + grad.error, l1, grad)

    return u.cached("w11", compute)


def second_moment(f: Density1D) -> Estimate:
    """``m_2(f d gamma)``; raises :class:`ToleranceNotMet` when quadrature does not settle."""
    _require_normalized(f)
    m2 = f.second_moment()
    if not m2.error <= 1e-6 * (1.0 + abs(m2.value)):
        raise ToleranceNotMet("second moment quadrature did not converge; the moment may be infinite",
                              estimate=m2.value, error=m2.error)
    return m2


def second_moment_u(u: UDensity1D) -> Estimate:
    """``int y^2 u^2 e^{-pi y^2} dy``."""
    _require_normalized(u)
    return u.second_moment()


def _scaled_hermite(k, lam, extra=0.0):
    """Nodes and weights for ``int g(z) e^{extra z^2} d gamma(z)`` centred on width ``lam``."""
    rule = hermite_rule(k)
    z = rule.nodes
    x = lam * z
    logw = np.log(rule.weights) + math.log(lam) + 0.5 * z * z - 0.5 * x * x + extra * x * x
    return x, np.exp(logw)


def _exp_moment_tensor(f, eps, k, m2):
    # rotate to s = (x - y)/sqrt2, t = (x + y)/sqrt2; d gamma x d gamma is invariant and
    # the weight becomes e^{2 eps s^2}. Each direction is rescaled to the width a Gaussian
    # with second moment m2 would have, which makes Gaussian-like integrands nearly polynomial.
    lam_t = math.sqrt(m2)
    prec_s = 1.0 / m2 - 4.0 * eps
    lam_s = 1.0 / math.sqrt(prec_s) if prec_s > 0 else 2.0 * lam_t
    s, ws = _scaled_hermite(k, lam_s, 2.0 * eps)
    t, wt = _scaled_hermite(k, lam_t)
    S, T = np.meshgrid(s, t, indexing="ij")
    W = np.outer(ws, wt)
    # nodes whose weight underflows carry no mass; skipping them avoids inf * 0
    live = W > UNDERFLOW
    S, T, W = S[live], T[live], W[live]
    with np.errstate(over="ignore", invalid="ignore"):
        vals = f((T + S) / math.sqrt(2.0)) * f((T - S) / math.sqrt(2.0))
        return float(W @ vals)


def exp_moment(f: Density1D, eps: float, nodes: int = 200, max_nodes: int = 800,
               rtol: float = 1e-11) -> Estimate:
    """``int int f(x) f(y) exp(eps |x - y|^2) d gamma(x) d gamma(y)``.

    Evaluated with a tensor Gauss-Hermite rule in the rotated variables
    ``(x - y)/sqrt 2`` and ``(x + y)/sqrt 2``, doubling the node count until
    successive values agree to ``rtol``. Growth by more than 10% under
    doubling is reported as divergence.

    Raises
    ------
    DivergentIntegralError
        If the integral appears infinite.
    """
    if not eps > 0 or not math.isfinite(eps):
        raise InvalidArgumentError(f"eps must be a positive real, got {eps!r}")
    _require_normalized(f)

    def compute():
        m2 = f.second_moment().value
        if not m2 > 0 or not math.isfinite(m2):
            raise DivergentIntegralError("second moment is not finite and positive", estimate=m2)
        k = nodes
        prev = _exp_moment_tensor(f, eps, k, m2)
        while True:
            k *= 2
            cur = _exp_moment_tensor(f, eps, k, m2)
            if not math.isfinite(prev) or not math.isfinite(cur) or cur > 1.1 * prev:
                raise DivergentIntegralError(
                    f"exponential moment diverges for eps={eps}", estimate=cur, error=math.inf)
            err = abs(cur - prev)
            if err <= rtol * abs(cur) or 2 * k > max_nodes:
                return Estimate(cur, err)
            prev = cur

    return f.cached(("exp_moment", float(eps), nodes, max_nodes), compute)


def exp_moment_gaussian_bound(a: float, eps: float, n: int = 1) -> float:
    """Upper bound ``((2a+1)/(2 pi))^n (pi / (a - 2 eps + 1/2))^n`` for ``f_a``.

    Obtained from ``e^{eps |x-y|^2} <= e^{2 eps (|x|^2 + |y|^2)}``; infinite
    when ``a - 2 eps + 1/2 <= 0``.
    """
    denom = a - 2 * eps + 0.5
    if denom <= 0:
        return math.inf
    return ((2 * a + 1) / (2 * math.pi) * (math.pi / denom)) ** n


def exp_moment_threshold(eps: float, n: int = 1) -> float:
    """Limit of :func:`exp_moment_gaussian_bound` as ``a -> 0``."""
    return exp_moment_gaussian_bound(0.0, eps, n)
