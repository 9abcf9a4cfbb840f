"""Checkers for log-Sobolev stability inequalities.

Each checker returns a :class:`StabilityReport` that orients the inequality
as ``lhs <= rhs``. Where the inequality involves an unspecified constant,
``rhs = constant * core``; without a supplied constant the empirical ratio
``lhs / core`` is recorded as the constant.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .densities import (
    Density1D,
    UDensity1D,
    make_gaussian_family,
    make_mixture,
    make_tilt,
    normalize_center,
)
from .errors import DivergentIntegralError, InvalidArgumentError, PreconditionViolation
from .functionals import (
    _require_centered,
    _require_normalized,
    deficit,
    deficit_star,
    exp_moment,
    exp_moment_gaussian_bound,
    exp_moment_threshold,
    second_moment,
    second_moment_u,
    sobolev11_dist,
    sobolev11_dist_u,
    xlogx,
)
from .gauss_quad import UNDERFLOW, Estimate, gamma_abs_moment, hermite_rule
from .transport1d import transport_gap, wasserstein1

DEFAULT_SLACK = 1e-9


@dataclass(frozen=True)
class StabilityReport:
    """Outcome of one inequality check, oriented as ``lhs <= rhs``.

    ``verdict`` is ``"vacuous"`` when both sides are within ``slack`` of
    zero, ``"holds"`` when ``lhs <= rhs + slack`` and ``"fails"`` otherwise.
    """

    inequality_id: str
    lhs: float
    rhs: float
    ratio: float
    slack: float
    verdict: str
    components: dict = field(default_factory=dict)
    constant: float | None = None
    constant_kind: str = "none"

    @property
    def ok(self):
        return self.verdict in ("holds", "vacuous")


def _verdict(lhs, rhs, slack):
    if abs(rhs) <= slack and abs(lhs) <= slack:
        return "vacuous"
    return "holds" if lhs <= rhs + slack else "fails"


def _ratio(lhs, core, slack):
    if core > slack:
        return lhs / core
    return 0.0 if abs(lhs) <= slack else math.inf


def _explicit(inequality_id, lhs, rhs, slack, components):
    """Report for an inequality whose constants are all explicit."""
    ratio = _ratio(lhs, rhs, slack)
    return StabilityReport(inequality_id, lhs, rhs, ratio, slack, _verdict(lhs, rhs, slack),
                           components, None, "none")


def _existential(inequality_id, lhs, core, slack, components, constant=None, kind=None):
    """Report for ``lhs <= C * core`` with ``C`` existential.

    Without a supplied ``constant`` the empirical ratio is recorded; a zero
    core with a nonzero ``lhs`` admits no finite constant and fails.
    """
    ratio = _ratio(lhs, core, slack)
    if constant is None:
        constant = ratio if math.isfinite(ratio) else 0.0
        kind = kind or "empirical"
    else:
        kind = kind or "supplied"
    rhs = constant * core
    return StabilityReport(inequality_id, lhs, rhs, ratio, slack, _verdict(lhs, rhs, slack),
                           components, float(constant), kind)


def _pos(x):
    return max(float(x), 0.0)


def _m2_within(m2, alpha, what):
    if m2.value > alpha:
        raise PreconditionViolation(f"{what} must not exceed alpha={alpha:g}", m2.value)


def check_thm1_density(f: Density1D, alpha: float, constant: float | None = None,
                       slack: float = DEFAULT_SLACK) -> StabilityReport:
    """``||f - 1||_{W^{1,1}(d gamma)} <= a_alpha (delta^{1/4} + delta^{3/4})`` under ``m_2 <= alpha``."""
    _require_normalized(f)
    _require_centered(f)
    m2 = second_moment(f)
    _m2_within(m2, alpha, "second moment m2(f d gamma)")
    w = sobolev11_dist(f)
    d = deficit(f)
    dp = _pos(d.value)
    core = dp ** 0.25 + dp ** 0.75
    comps = {"w11": w.value, "w11_l1": w.l1.value, "w11_grad": w.grad.value, "delta": d.value,
             "entropy": d.entropy.value, "fisher": d.fisher.value, "m2": m2.value, "core": core}
    return _existential("thm1", w.value, core, slack + w.error + d.error, comps, constant)


def check_thm1_u(u: UDensity1D, alpha: float, constant: float | None = None,
                 slack: float = DEFAULT_SLACK) -> StabilityReport:
    """``||u - 1||_{W^{1,1}(e^{-pi y^2} dy)} <= abar_alpha (delta_*^{1/4} + delta_*)``."""
    _require_normalized(u)
    _require_centered(u)
    m2 = second_moment_u(u)
    _m2_within(m2, alpha, "second moment int y^2 u^2 e^{-pi y^2} dy")
    w = sobolev11_dist_u(u)
    d = deficit_star(u)
    dp = _pos(d.value)
    core = dp ** 0.25 + dp
    comps = {"w11": w.value, "w11_l1": w.l1.value, "w11_grad": w.grad.value, "delta_star": d.value,
             "m2_u": m2.value, "core": core}
    return _existential("thm1-u", w.value, core, slack + w.error + d.error, comps, constant)


def gradient_star_bound(u: UDensity1D, slack: float = DEFAULT_SLACK) -> StabilityReport:
    """``(1/pi) int u'^2 w <= |pi int y^2 w - pi int y^2 u^2 w| + sqrt(2) delta_*^{1/2} + delta_*``."""
    _require_normalized(u)
    _require_centered(u)
    grad = u.expect(lambda y: u.derivative(y) ** 2)
    lhs = grad.value / math.pi
    ref = u.expect(lambda y: y * y)
    m2 = u.second_moment()
    d = deficit_star(u)
    dp = _pos(d.value)
    moment_term = abs(math.pi * ref.value - math.pi * m2.value)
    root_term = math.sqrt(2.0) * math.sqrt(dp)
    rhs = moment_term + root_term + dp
    err = grad.error / math.pi + math.pi * (ref.error + m2.error) + d.error
    comps = {"gradient": lhs, "moment_term": moment_term, "root_term": root_term,
             "delta_star": d.value}
    return _explicit("gradient-star", lhs, rhs, slack + err, comps)


def entropy_moment_bound(f: Density1D, alpha: float | None = None,
                         slack: float = DEFAULT_SLACK) -> StabilityReport:
    """``(2H + m_2(gamma) - m_2(f d gamma))^2 / 4 <= delta(f)`` in dimension one.

    Also records the consequence ``2H <= 2 delta^{1/2} + alpha + m_2(gamma)``
    with ``alpha`` defaulting to ``m_2(f d gamma)``.
    """
    _require_normalized(f)
    d = deficit(f)
    m2 = second_moment(f)
    H = d.entropy.value
    lhs = 0.25 * (2 * H + 1.0 - m2.value) ** 2
    alpha = m2.value if alpha is None else alpha
    ent_rhs = 2 * math.sqrt(_pos(d.value)) + alpha + 1.0
    comps = {"delta": d.value, "entropy": H, "m2": m2.value, "entropy_bound_lhs": 2 * H,
             "entropy_bound_rhs": ent_rhs, "entropy_bound_gap": ent_rhs - 2 * H}
    err = abs(2 * H + 1.0 - m2.value) * (2 * d.entropy.error + m2.error) + d.error
    return _explicit("entropy-moment", lhs, d.value, slack + err, comps)


def hwi_type_bound(f: Density1D, slack: float = DEFAULT_SLACK) -> StabilityReport:
    """``W_1 <= a max{(H delta)^{1/4}, (H delta)^{1/2}}``; ``a`` is recorded empirically."""
    _require_normalized(f)
    _require_centered(f)
    w1 = wasserstein1(f)
    d = deficit(f)
    hd = _pos(d.entropy.value) * _pos(d.value)
    q4, q2 = hd ** 0.25, hd ** 0.5
    core = max(q4, q2)
    comps = {"w1": w1.value, "entropy": d.entropy.value, "delta": d.value,
             "hd_quarter": q4, "hd_half": q2}
    return _existential("hwi", w1.value, core, slack + w1.error + d.error, comps)


def prior_w1_bound(f: Density1D, slack: float = DEFAULT_SLACK) -> StabilityReport:
    """``C min{W_1, W_1^4} <= delta``, oriented as ``min{W_1, W_1^4} <= delta / C``.

    ``ratio`` is ``min / delta``; the empirical ``C = delta / min`` is in
    ``components["C"]``.
    """
    _require_normalized(f)
    _require_centered(f)
    m2 = second_moment(f)
    w1 = wasserstein1(f)
    d = deficit(f)
    mn = min(w1.value, w1.value ** 4)
    C = d.value / mn if mn > slack else 0.0
    comps = {"w1": w1.value, "w1_pow4": w1.value ** 4, "min": mn, "delta": d.value,
             "m2": m2.value, "C": C}
    return _existential("prior-w1", mn, _pos(d.value), slack + w1.error + d.error, comps)


def check_w1_stability(f: Density1D, eps: float, alpha: float,
                       constant: float | None = None, slack: float = DEFAULT_SLACK) -> StabilityReport:
    """``W_1 <= a_{alpha,eps} delta^{1/2}`` under the exponential moment bound ``<= alpha``."""
    _require_normalized(f)
    _require_centered(f)
    try:
        em = exp_moment(f, eps)
    except DivergentIntegralError as exc:
        raise PreconditionViolation(f"exponential moment must be finite for eps={eps:g}") from exc
    if em.value > alpha:
        raise PreconditionViolation(f"exponential moment must not exceed alpha={alpha:g}", em.value)
    w1 = wasserstein1(f)
    d = deficit(f)
    core = math.sqrt(_pos(d.value))
    comps = {"w1": w1.value, "delta": d.value, "sqrt_delta": core, "exp_moment": em.value,
             "exp_moment_error": em.error}
    return _existential("w1-stability", w1.value, core, slack + w1.error + d.error, comps, constant)


def sharp_constant_lower_bound(n: int = 1) -> float:
    """``|n m_1(gamma) - m_3(gamma)| / sqrt(n)``; equals ``sqrt(2/pi)`` for ``n = 1``."""
    if n < 1:
        raise InvalidArgumentError(f"dimension must be >= 1, got {n}")
    return abs(n * gamma_abs_moment(1, n) - gamma_abs_moment(3, n)) / math.sqrt(n)


@dataclass(frozen=True)
class SweepRow:
    a: float
    delta: float
    w1: float
    w11: float
    ratio_sqrt: float
    ratio_thm1: float
    exp_moment_bound: float
    admissible: bool
    delta_error: float = 0.0
    w1_error: float = 0.0
    w11_error: float = 0.0


@dataclass(frozen=True)
class SweepResult:
    """Sharpness sweep over the Gaussian family ``f_a``.

    ``extrapolated_limit`` is the limit of ``delta^{1/2} / W_1`` as
    ``a -> 0`` obtained by fitting ``L + c_1 a + c_2 a^2`` through the three
    smallest grid points; ``uncertainty`` is its distance to the linear fit
    through the two smallest.
    """

    rows: tuple
    eps: float
    alpha: float
    alpha_threshold: float
    extrapolated_limit: float
    uncertainty: float
    target: float
    w1_over_a_limit: float
    delta_over_a2_limit: float


def richardson_limit(a, values):
    """Value at ``a = 0`` of the polynomial through the (up to) three smallest ``a``.

    Returns ``(limit, uncertainty)``.
    """
    order = np.argsort(a)
    a = np.asarray(a, dtype=float)[order]
    v = np.asarray(values, dtype=float)[order]
    m = min(3, a.size)
    if m == 0:
        raise InvalidArgumentError("need at least one point to extrapolate")
    quad = np.linalg.solve(np.vander(a[:m], m, increasing=True), v[:m])[0]
    if m == 1:
        return float(quad), math.inf
    lin = np.linalg.solve(np.vander(a[:m - 1], m - 1, increasing=True), v[:m - 1])[0]
    return float(quad), float(abs(quad - lin))


def sharpness_sweep(a_grid: Sequence[float], eps: float = 0.1, alpha: float = 2.0) -> SweepResult:
    """Evaluate ``delta^{1/2}(f_a) / W_1(f_a d gamma, gamma)`` as ``a -> 0``.

    A row is flagged admissible when the explicit bound
    ``((2a+1)/(2 pi)) (pi / (a - 2 eps + 1/2))`` on the exponential moment is
    below ``alpha``.
    """
    grid = sorted(float(a) for a in a_grid)
    if not grid:
        raise InvalidArgumentError("a_grid must not be empty")
    if any(not 0 < a < 0.25 for a in grid):
        raise InvalidArgumentError(f"a_grid must lie in (0, 0.25), got {list(a_grid)!r}")
    if not 0 < eps < 0.25:
        raise InvalidArgumentError(f"eps must lie in (0, 0.25), got {eps}")
    rows = []
    for a in grid:
        f = make_gaussian_family(a)
        d = deficit(f)
        w1 = wasserstein1(f)
        w11 = sobolev11_dist(f)
        bound = exp_moment_gaussian_bound(a, eps)
        rows.append(SweepRow(
            a=a, delta=d.value, w1=w1.value, w11=w11.value,
            ratio_sqrt=math.sqrt(_pos(d.value)) / w1.value,
            ratio_thm1=w11.value / (_pos(d.value) ** 0.25 + _pos(d.value) ** 0.75),
            exp_moment_bound=bound, admissible=bool(bound < alpha),
            delta_error=d.error, w1_error=w1.error, w11_error=w11.error,
        ))
    a_arr = [r.a for r in rows]
    limit, unc = richardson_limit(a_arr, [r.ratio_sqrt for r in rows])
    w1a, _ = richardson_limit(a_arr, [r.w1 / r.a for r in rows])
    da2, _ = richardson_limit(a_arr, [r.delta / r.a ** 2 for r in rows])
    return SweepResult(tuple(rows), eps, alpha, exp_moment_threshold(eps), limit, unc,
                       1.0 / sharp_constant_lower_bound(1), w1a, da2)


def _tensor_grid(nodes, weights, n):
    grids = np.meshgrid(*([nodes] * n), indexing="ij")
    X = np.stack(grids, axis=-1).reshape(-1, n)
    W = np.ones(len(X))
    for g in np.meshgrid(*([weights] * n), indexing="ij"):
        W = W * g.ravel()
    return X, W


def product_deficit(factors: Sequence[Density1D]) -> Estimate:
    """Deficit of ``prod_k f_k`` computed directly by tensor Gauss-Hermite quadrature.

    The rule has about 250000 points, which resolves the deficit to
    roughly 1e-10 for up to three factors; ``error`` is the change against
    the rule with half as many nodes per axis.
    """
    n = len(factors)

    def evaluate(k):
        rule = hermite_rule(k)
        X, W = _tensor_grid(rule.nodes, rule.weights, n)
        vals = np.stack([f(X[:, i]) for i, f in enumerate(factors)], axis=1)
        ders = np.stack([f.derivative(X[:, i]) for i, f in enumerate(factors)], axis=1)
        F = vals.prod(axis=1)
        grad2 = np.zeros(len(X))
        for i in range(n):
            others = np.prod(np.delete(vals, i, axis=1), axis=1)
            grad2 += (ders[:, i] * others) ** 2
        safe = np.where(F > UNDERFLOW, F, 1.0)
        fisher = np.where(F > UNDERFLOW, grad2 / safe, 0.0)
        return float(W @ (0.5 * fisher - xlogx(F)))

    k = max(8, int(250_000 ** (1.0 / n)))
    hi = evaluate(k)
    return Estimate(hi, abs(hi - evaluate(k // 2)))


def _product_l1(factors, panels):
    """``int |prod f_k - 1| d gamma_n`` by a tensor composite Gauss-Legendre rule."""
    n = len(factors)
    R = 10.0
    x, w = np.polynomial.legendre.leggauss(8)
    edges = np.linspace(-R, R, panels + 1)
    mid, half = 0.5 * (edges[:-1] + edges[1:]), 0.5 * np.diff(edges)
    nodes = (mid[:, None] + half[:, None] * x).ravel()
    weights = (half[:, None] * w).ravel() * np.exp(-0.5 * nodes ** 2) / math.sqrt(2 * math.pi)
    vals = [f(nodes) for f in factors]
    if n == 1:
        return float(weights @ np.abs(vals[0] - 1.0))
    if n == 2:
        return float(weights @ np.abs(np.outer(vals[0], vals[1]) - 1.0) @ weights)
    X, W = _tensor_grid(np.arange(len(nodes)), weights, n)
    idx = X.astype(int)
    P = np.ones(len(idx))
    for i in range(n):
        P = P * vals[i][idx[:, i]]
    return float(W @ np.abs(P - 1.0))


def check_tensorization(factors: Sequence[Density1D], alpha: float, constant: float | None = None,
                        slack: float = DEFAULT_SLACK) -> StabilityReport:
    """``||f - 1||_{W^{1,1}(d gamma_n)} <= a_alpha n^{3/4} (delta^{1/4} + delta^{3/4})`` for products.

    The gradient part of the left side is the coordinatewise sum
    ``sum_k int |f_k'| d gamma``; the L1 part is a tensor quadrature. When
    ``constant`` is omitted, ``a_alpha`` is the largest one-dimensional
    empirical constant among the factors. The deficit of the product is
    also computed directly and compared with ``sum_k delta(f_k)``.
    """
    factors = list(factors)
    if not factors:
        raise InvalidArgumentError("need at least one factor")
    n = len(factors)
    per = []
    for k, f in enumerate(factors):
        try:
            per.append(check_thm1_density(f, alpha, slack=slack))
        except PreconditionViolation as exc:
            raise PreconditionViolation(f"factor {k}: {exc.condition}", exc.value) from exc
    deltas = [deficit(f) for f in factors]
    d_sum = sum(d.value for d in deltas)
    d_prod = product_deficit(factors)
    additivity_gap = abs(d_prod.value - d_sum)
    grad = sum(sobolev11_dist(f).grad.value for f in factors)
    budget_panels = 160 if n <= 2 else max(10, int(2e6 ** (1.0 / n) / 8))
    l1 = _product_l1(factors, budget_panels)
    l1_err = abs(l1 - _product_l1(factors, budget_panels // 2))
    lhs = grad + l1
    dp = _pos(d_sum)
    core = n ** 0.75 * (dp ** 0.25 + dp ** 0.75)
    kind = None
    if constant is None:
        constant = max(r.ratio for r in per)
        kind = "factor-max"
    comps = {"n": float(n), "delta_sum": d_sum, "delta_product": d_prod.value,
             "additivity_gap": additivity_gap, "w11_l1": l1, "w11_grad": grad,
             "factor_constants_max": max(r.ratio for r in per)}
    report = _existential("tensorization", lhs, core, slack + l1_err + sum(d.error for d in deltas),
                          comps, constant, kind)
    if additivity_gap > n * 1e-8 + d_prod.error:
        report = StabilityReport(report.inequality_id, report.lhs, report.rhs, report.ratio, report.slack,
                                 "fails", comps, report.constant, report.constant_kind)
    return report


def family_suite() -> dict:
    """Named test densities: Gaussian family members with ``a`` in [0.001, 2],
    recentred tilts with ``b`` in [-2, 2] and two-member Gaussian-family mixtures.

    Every member is normalized and centered with second moment at most 2.
    """
    g = make_gaussian_family
    suite = {}
    for a in (0.001, 0.01, 0.1, 0.5, 1.0, 2.0):
        suite[f"gaussian(a={a:g})"] = g(a)
    for b in (-2.0, -1.0, -0.5, 0.5, 1.0, 2.0):
        suite[f"recentred_tilt(b={b:g})"] = normalize_center(make_tilt(b))
    for (a1, a2), w in (((0.5, 0.05), 0.5), ((1.0, 0.05), 0.3), ((2.0, 0.01), 0.2), ((0.1, 0.001), 0.6)):
        suite[f"mixture({w:g} f_{a1:g} + {1 - w:g} f_{a2:g})"] = make_mixture([g(a1), g(a2)], [w, 1 - w])
    return suite


def run_transport_gap(f: Density1D, slack: float = DEFAULT_SLACK) -> StabilityReport:
    """``transport_gap`` as a report: ``lower <= middle <= delta``."""
    gap = transport_gap(f, slack=slack)
    comps = {"delta": gap.delta.value, "middle": gap.middle.value, "lower": gap.lower.value,
             "gap_upper": gap.gap_upper, "gap_lower": gap.gap_lower}
    verdict_upper = _verdict(gap.middle.value, gap.delta.value, gap.slack)
    verdict_lower = _verdict(gap.lower.value, gap.middle.value, gap.slack)
    verdict = "fails" if "fails" in (verdict_upper, verdict_lower) else verdict_upper
    ratio = _ratio(gap.middle.value, gap.delta.value, gap.slack)
    return StabilityReport("transport-gap", gap.middle.value, gap.delta.value, ratio, gap.slack,
                           verdict, comps)
