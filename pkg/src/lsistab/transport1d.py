"""One-dimensional optimal transport to and from the Gaussian measure.

CDFs of ``f d gamma`` come from a panel table: Gauss-Legendre integrals of
``f phi`` on a fine grid over ``[-R, R]``, accumulated from both ends so
that lower and upper tail probabilities both keep full relative precision.
Quantiles are solved inside a bracketing panel by safeguarded Newton steps.

In one dimension the monotone (Brenier) map pushing ``f d gamma`` to
``gamma`` is ``T = Q_gamma o F``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import special

from .densities import Density1D
from .errors import DegenerateTransportError, InvalidArgumentError, ToleranceNotMet
from .functionals import _require_normalized, deficit
from .gauss_quad import (
    DEFAULT_RADIUS,
    UNDERFLOW,
    Estimate,
    gaussian_pdf,
    integrate_interval,
    sign_change_roots,
)

PANEL_WIDTH = 1.0 / 16.0
# absolute accuracy of quantile and CDF evaluations
QUANTILE_NOISE = 1e-14
_GL = np.polynomial.legendre.leggauss(16)


class CDFTable:
    """Panel-wise CDF and survival function of ``f d gamma`` on ``[-R, R]``."""

    def __init__(self, f: Density1D, radius: float = DEFAULT_RADIUS, width: float = PANEL_WIDTH):
        self.f = f
        self.radius = radius
        m = int(math.ceil(2 * radius / width))
        edges = np.linspace(-radius, radius, m + 1)
        extra = [b for b in f.breakpoints if -radius < b < radius]
        self.edges = np.unique(np.concatenate([edges, extra]))
        a, b = self.edges[:-1], self.edges[1:]
        panel = self._integrate(a, b)
        self.lower = np.concatenate([[0.0], np.cumsum(panel)])
        self.upper = np.concatenate([np.cumsum(panel[::-1])[::-1], [0.0]])
        self.total = float(self.lower[-1])

    def weight(self, x):
        return np.asarray(self.f(x), dtype=float) * gaussian_pdf(x)

    def _integrate(self, a, b):
        x, w = _GL
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        pts = mid[..., None] + half[..., None] * x
        return half * (self.weight(pts) @ w)

    def _panel(self, x):
        k = np.searchsorted(self.edges, x, side="right") - 1
        return np.clip(k, 0, len(self.edges) - 2)

    def cdf_sf(self, x):
        """Return ``(F(x), 1 - F(x))`` for array ``x``, each accurate in its own tail."""
        x = np.asarray(x, dtype=float)
        xc = np.clip(x, -self.radius, self.radius)
        k = self._panel(xc)
        left = self._integrate(self.edges[k], xc)
        right = self._integrate(xc, self.edges[k + 1])
        F = self.lower[k] + left
        S = self.upper[k + 1] + right
        F = np.where(x <= -self.radius, 0.0, np.where(x >= self.radius, 1.0, F))
        S = np.where(x <= -self.radius, 1.0, np.where(x >= self.radius, 0.0, S))
        return np.clip(F, 0.0, 1.0), np.clip(S, 0.0, 1.0)

    def _solve(self, target, upper_tail):
        """Solve ``F(x) = target`` (or ``S(x) = target`` for the upper tail)."""
        target = np.asarray(target, dtype=float)
        if upper_tail:
            # upper[k] is decreasing; find panel with upper[k] >= target > upper[k+1]
            k = np.searchsorted(-self.upper, -target, side="right") - 1
        else:
            k = np.searchsorted(self.lower, target, side="left") - 1
        k = np.clip(k, 0, len(self.edges) - 2)
        lo, hi = self.edges[k].copy(), self.edges[k + 1].copy()
        base = self.upper[k + 1] if upper_tail else self.lower[k]
        panel_mass = self.lower[k + 1] - self.lower[k]
        frac = np.where(panel_mass > 0, (target - base) / np.where(panel_mass > 0, panel_mass, 1.0), 0.5)
        frac = np.clip(frac, 0.0, 1.0)
        x = hi - frac * (hi - lo) if upper_tail else lo + frac * (hi - lo)
        done = np.zeros(x.shape, dtype=bool)
        for _ in range(60):
            if upper_tail:
                g = base + self._integrate(x, self.edges[k + 1]) - target
                slope = -self.weight(x)
            else:
                g = base + self._integrate(self.edges[k], x) - target
                slope = self.weight(x)
            # g increases with x on the lower tail and decreases on the upper
            pos = (g < 0) if upper_tail else (g > 0)
            hi = np.where(pos, x, hi)
            lo = np.where(pos, lo, x)
            with np.errstate(divide="ignore", invalid="ignore"):
                nxt = x - g / slope
            bad = ~np.isfinite(nxt) | (nxt <= lo) | (nxt >= hi)
            nxt = np.where(bad, 0.5 * (lo + hi), nxt)
            scale = np.maximum(1.0, np.abs(x))
            done |= (g == 0) | (np.abs(nxt - x) <= 4e-16 * scale) | (hi - lo <= 4e-16 * scale)
            x = np.where(done, x, nxt)
            if done.all():
                break
        return x

    def quantile_probit(self, s):
        """Quantile at level ``Phi(s)``, accurate far into both tails."""
        s = np.asarray(s, dtype=float)
        out = np.empty_like(s)
        low = s <= 0
        if low.any():
            out[low] = self._solve(special.ndtr(s[low]), upper_tail=False)
        if (~low).any():
            out[~low] = self._solve(special.ndtr(-s[~low]), upper_tail=True)
        return out

    def probit(self, x):
        """``Q_gamma(F(x))`` computed from whichever tail is smaller."""
        F, S = self.cdf_sf(x)
        with np.errstate(divide="ignore"):
            return np.where(F <= 0.5, special.ndtri(F), -special.ndtri(S))


def cdf_table(f: Density1D) -> CDFTable:
    def build():
        table = CDFTable(f)
        mass = f.mass().value
        if abs(table.total - mass) > 1e-10 * max(1.0, mass):
            raise ToleranceNotMet(
                f"mass outside [-{table.radius}, {table.radius}] is not negligible",
                estimate=table.total, error=abs(table.total - mass))
        return table

    return f.cached("cdf_table", build)


def _gamma_or(f):
    return None if f is None or (isinstance(f, str) and f == "gamma") else f


def cdf(f: Density1D | None, x):
    """``F(x) = int_{-inf}^x f d gamma``; ``f=None`` stands for gamma itself."""
    f = _gamma_or(f)
    if f is None:
        return special.ndtr(x)
    _require_normalized(f)
    F, _ = cdf_table(f).cdf_sf(x)
    return F if np.ndim(x) else float(F)


def quantile(f: Density1D | None, t):
    """Inverse of :func:`cdf` for ``t`` in ``(0, 1)``.

    The CDF table ignores mass outside ``[-12, 12]`` (at most 1e-10, checked
    when the table is built), so levels closer to 0 or 1 than that mass are
    resolved only to the corresponding relative accuracy.
    """
    t_arr = np.asarray(t, dtype=float)
    if np.any(~(t_arr > 0)) or np.any(~(t_arr < 1)):
        raise InvalidArgumentError(f"quantile level must lie in (0, 1), got {t!r}")
    s = special.ndtri(t_arr)
    out = _quantile_probit(_gamma_or(f), s)
    return out if np.ndim(t) else float(out)


def _quantile_probit(f, s):
    s = np.asarray(s, dtype=float)
    if f is None:
        return s.copy()
    _require_normalized(f)
    return cdf_table(f).quantile_probit(s)


def _probit(f, x):
    if f is None:
        return np.asarray(x, dtype=float)
    return cdf_table(f).probit(x)


@dataclass(frozen=True, eq=False)
class TransportPlan1D:
    """Quantile coupling of ``source`` with ``target`` (``None`` means gamma)."""

    source: Density1D
    target: Density1D | None
    quantile_grid: np.ndarray
    source_quantiles: np.ndarray
    target_quantiles: np.ndarray
    map_eval: Callable[[np.ndarray], np.ndarray]

    def __call__(self, x):
        return self.map_eval(x)

    def pushforward_residual(self, probes=None):
        """``max |F_target(T(x)) - F_source(x)|`` over probe points."""
        x = _default_probes(self.source) if probes is None else np.asarray(probes, dtype=float)
        Ft = cdf(self.target, self.map_eval(x))
        return float(np.max(np.abs(Ft - cdf(self.source, x))))

    def monge_ampere_residual(self, probes=None, h=1e-5):
        """Relative residual of ``T'(x) g(T(x)) phi(T(x)) = f(x) phi(x)``.

        ``g`` is the target density (1 for gamma) and ``T'`` is taken by
        central differences.
        """
        x = _default_probes(self.source) if probes is None else np.asarray(probes, dtype=float)
        dT = (self.map_eval(x + h) - self.map_eval(x - h)) / (2 * h)
        Tx = self.map_eval(x)
        g = 1.0 if self.target is None else self.target(Tx)
        lhs = dT * g * gaussian_pdf(Tx)
        rhs = self.source(x) * gaussian_pdf(x)
        return float(np.max(np.abs(lhs - rhs) / np.abs(rhs)))


def _default_probes(f, n=64):
    t = (np.arange(n) + 0.5) / n
    return _quantile_probit(f, special.ndtri(0.001 + 0.998 * t))


def chebyshev_levels(n=4096):
    j = np.arange(n)
    return 0.5 * (1.0 - np.cos(np.pi * (j + 0.5) / n))


def brenier_map(f: Density1D, target: Density1D | None = None, grid_size: int = 4096) -> TransportPlan1D:
    """Monotone map pushing ``f d gamma`` onto ``target`` (default: gamma).

    Raises
    ------
    DegenerateTransportError
        If ``f`` vanishes somewhere strictly inside its support.
    """
    _require_normalized(f)
    target = _gamma_or(target)
    if target is not None:
        _require_normalized(target)
    table = cdf_table(f)
    xs = np.linspace(-table.radius, table.radius, 4801)
    F, S = table.cdf_sf(xs)
    interior = (F > 1e-12) & (S > 1e-12)
    if np.any(interior & (np.asarray(f(xs)) <= 0)):
        i = int(np.flatnonzero(interior & (np.asarray(f(xs)) <= 0))[0])
        raise DegenerateTransportError(f"density vanishes inside its support at x={xs[i]:.6g}")

    def T(x):
        return _quantile_probit(target, table.probit(x))

    t = chebyshev_levels(grid_size)
    s = special.ndtri(t)
    return TransportPlan1D(f, target, t, _quantile_probit(f, s), _quantile_probit(target, s), T)


def wasserstein_p(mu: Density1D | None, nu: Density1D | None, p: float = 1.0, tol: float = 1e-12) -> Estimate:
    """``W_p`` between ``mu d gamma`` and ``nu d gamma`` (``None`` is gamma).

    Computed as the quantile integral ``int_0^1 |Q_mu - Q_nu|^p dt`` in the
    probit variable ``t = Phi(s)``, which removes the endpoint singularities.
    """
    if not p >= 1:
        raise InvalidArgumentError(f"W_p needs p >= 1, got {p}")
    mu, nu = _gamma_or(mu), _gamma_or(nu)
    if mu is None and nu is None:
        return Estimate(0.0, 0.0)
    R = DEFAULT_RADIUS

    def diff(s):
        shape = np.shape(s)
        flat = np.ravel(s)
        return (_quantile_probit(mu, flat) - _quantile_probit(nu, flat)).reshape(shape)

    bps = sign_change_roots(diff, -R + 1e-9, R - 1e-9, n=801)
    est = integrate_interval(lambda s: np.abs(diff(s)) ** p * gaussian_pdf(s), -R, R, tol=tol,
                             breakpoints=bps, noise=QUANTILE_NOISE)
    v = max(est.value, 0.0)
    val = v ** (1.0 / p)
    err = est.error / (p * v ** (1 - 1.0 / p)) if v > 0 else est.error ** (1.0 / p)
    return Estimate(val, err)


def wasserstein1_cdf(mu: Density1D | None, nu: Density1D | None, tol: float = 1e-12) -> Estimate:
    """``W_1`` as ``int |F_mu - F_nu| dx``, independent of the quantile route."""
    mu, nu = _gamma_or(mu), _gamma_or(nu)
    R = DEFAULT_RADIUS

    def diff(x):
        shape = np.shape(x)
        flat = np.ravel(x)
        return (np.atleast_1d(cdf(mu, flat)) - np.atleast_1d(cdf(nu, flat))).reshape(shape)

    bps = sign_change_roots(diff, -R, R, n=801)
    return integrate_interval(lambda x: np.abs(diff(x)), -R, R, tol=tol, breakpoints=bps, noise=QUANTILE_NOISE)


def wasserstein1(f: Density1D) -> Estimate:
    """``W_1(f d gamma, gamma)``, cached on ``f``."""
    return f.cached("w1", lambda: wasserstein_p(f, None, 1.0))


@dataclass(frozen=True)
class TransportGap:
    """Terms of ``delta >= middle >= lower`` for the Brenier map ``T``.

    ``middle = 1/2 int |T - x + (log f)'|^2 f d gamma`` and
    ``lower = 1/2 (int |T - x + (log f)'| f d gamma)^2``.
    """

    delta: Estimate
    middle: Estimate
    lower: Estimate
    slack: float

    @property
    def gap_upper(self):
        return self.delta.value - self.middle.value

    @property
    def gap_lower(self):
        return self.middle.value - self.lower.value

    @property
    def holds(self):
        return self.gap_upper >= -self.slack and self.gap_lower >= -self.slack


def transport_gap(f: Density1D, tol: float = 1e-12, slack: float = 1e-9) -> TransportGap:
    """Evaluate the transport form of the deficit bound for ``f``."""
    plan = brenier_map(f)
    table = cdf_table(f)
    R = table.radius

    def residual(x):
        v = f(x)
        safe = np.where(v > UNDERFLOW, v, 1.0)
        score = np.where(v > UNDERFLOW, f.derivative(x) / safe, 0.0)
        T = plan(x)
        return np.where(np.isfinite(T), T - x + score, 0.0)

    def weighted(g):
        return lambda x: np.where(table.weight(x) > UNDERFLOW, g(x) * table.weight(x), 0.0)

    bps = sorted(set(sign_change_roots(residual, -R, R, n=801)) | set(f.breakpoints))
    m = integrate_interval(weighted(lambda x: residual(x) ** 2), -R, R, tol=tol, breakpoints=bps,
                           noise=QUANTILE_NOISE)
    l1 = integrate_interval(weighted(lambda x: np.abs(residual(x))), -R, R, tol=tol, breakpoints=bps,
                            noise=QUANTILE_NOISE)
    middle = Estimate(0.5 * m.value, 0.5 * m.error)
    lower = Estimate(0.5 * l1.value ** 2, l1.value * l1.error)
    d = deficit(f)
    return TransportGap(Estimate(d.value, d.error), middle, lower,
                        slack + d.error + middle.error + lower.error)
