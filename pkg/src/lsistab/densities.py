"""Densities with respect to the standard Gaussian measure.

A :class:`Density1D` is a nonnegative function ``f`` on the real line,
interpreted as the density of the measure ``f d gamma``. Every density
carries its derivative explicitly. Closed-form families attach exact
moments and functionals as ``metadata``; these are used as test oracles
and never consulted by the quadrature code.
"""
from __future__ import annotations

import math
import threading
from typing import Callable, Sequence

import numpy as np

from .errors import (
    DerivativeInconsistentError,
    InvalidArgumentError,
    InvalidDensityError,
    PreconditionViolation,
)
from .gauss_quad import (
    DEFAULT_RADIUS,
    Estimate,
    adaptive_rule,
    default_rule,
    integrate_gauss,
    integrate_pi_weight,
)

NORMALIZATION_TOL = 1e-9

ArrayFn = Callable[[np.ndarray], np.ndarray]


class _LazyCache:
    """Compute-once cache, safe for concurrent readers."""

    def __init__(self):
        self._values = {}
        self._lock = threading.RLock()

    def get(self, key, compute):
        try:
            return self._values[key]
        except KeyError:
            pass
        with self._lock:
            if key not in self._values:
                self._values[key] = compute()
            return self._values[key]


class Density1D:
    """Density ``f`` of a measure ``f d gamma`` on the real line.

    Parameters
    ----------
    func, deriv : callable
        Vectorized evaluations of ``f`` and ``f'``.
    family : str
        One of ``"gaussian_family"``, ``"tilt"``, ``"mixture"``,
        ``"recentred"`` or ``"custom"``.
    params : dict
        Family parameters, reported verbatim.
    metadata : dict
        Closed-form values (``mass``, ``mean``, ``second_moment``,
        ``entropy``, ``fisher``, ``deficit``) when known.
    breakpoints : sequence of float
        Points where ``f'`` may be discontinuous. Densities with breakpoints
        are integrated with the adaptive engine.
    """

    def __init__(self, func: ArrayFn, deriv: ArrayFn, family="custom", params=None,
                 metadata=None, breakpoints: Sequence[float] = (), source=None):
        self._func = func
        self._deriv = deriv
        self.family = family
        self.params = dict(params or {})
        self.metadata = dict(metadata or {})
        self.breakpoints = tuple(sorted(float(b) for b in breakpoints))
        self.source = source
        self._cache = _LazyCache()

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.params.items())
        return f"Density1D({self.family}{', ' + args if args else ''})"

    def __call__(self, x):
        return self._func(np.asarray(x, dtype=float))

    def derivative(self, x):
        return self._deriv(np.asarray(x, dtype=float))

    @property
    def rule(self):
        return adaptive_rule() if self.breakpoints else default_rule()

    def expect(self, g: ArrayFn) -> Estimate:
        """``int g d gamma`` with the rule suited to this density."""
        return integrate_gauss(g, self.rule, self.breakpoints)

    def cached(self, key, compute):
        return self._cache.get(key, compute)

    def mass(self) -> Estimate:
        return self.cached("mass", lambda: self.expect(self))

    def mean(self) -> Estimate:
        return self.cached("mean", lambda: self.expect(lambda x: x * self(x)))

    def second_moment(self) -> Estimate:
        return self.cached("m2", lambda: self.expect(lambda x: x * x * self(x)))

    @property
    def is_normalized(self):
        return abs(self.mass().value - 1.0) <= NORMALIZATION_TOL

    @property
    def is_centered(self):
        return abs(self.mean().value) <= NORMALIZATION_TOL


class UDensity1D:
    """Amplitude ``u`` with respect to the weight ``exp(-pi y^2) dy``."""

    def __init__(self, func: ArrayFn, deriv: ArrayFn, source: Density1D | None = None,
                 breakpoints: Sequence[float] = ()):
        self._func = func
        self._deriv = deriv
        self.source = source
        self.breakpoints = tuple(sorted(float(b) for b in breakpoints))
        self._cache = _LazyCache()

    @property
    def provenance(self):
        return "direct" if self.source is None else "converted-from-Density1D"

    def __repr__(self):
        return f"UDensity1D({self.provenance}, source={self.source!r})"

    def __call__(self, y):
        return self._func(np.asarray(y, dtype=float))

    def derivative(self, y):
        return self._deriv(np.asarray(y, dtype=float))

    @property
    def rule(self):
        return adaptive_rule() if self.breakpoints else default_rule()

    def expect(self, g: ArrayFn) -> Estimate:
        """``int g(y) exp(-pi y^2) dy``."""
        return integrate_pi_weight(g, self.rule, self.breakpoints)

    def cached(self, key, compute):
        return self._cache.get(key, compute)

    def norm2(self) -> Estimate:
        return self.cached("norm2", lambda: self.expect(lambda y: self(y) ** 2))

    def mean(self) -> Estimate:
        return self.cached("mean", lambda: self.expect(lambda y: y * self(y) ** 2))

    def second_moment(self) -> Estimate:
        return self.cached("m2", lambda: self.expect(lambda y: y * y * self(y) ** 2))

    @property
    def is_normalized(self):
        return abs(self.norm2().value - 1.0) <= NORMALIZATION_TOL

    @property
    def is_centered(self):
        return abs(self.mean().value) <= NORMALIZATION_TOL


class ProductDensity:
    """Product ``f(x_1, ..., x_n) = prod_k f_k(x_k)`` of one-dimensional densities."""

    def __init__(self, factors: Sequence[Density1D]):
        self.factors = tuple(factors)

    @property
    def n(self):
        return len(self.factors)

    def __call__(self, X):
        X = np.asarray(X, dtype=float)
        out = np.ones(X.shape[:-1])
        for k, f in enumerate(self.factors):
            out = out * f(X[..., k])
        return out

    def partial(self, k, X):
        X = np.asarray(X, dtype=float)
        out = self.factors[k].derivative(X[..., k])
        for i, f in enumerate(self.factors):
            if i != k:
                out = out * f(X[..., i])
        return out


def make_gaussian_family(a: float) -> Density1D:
    """``f_a(x) = sqrt(2a + 1) exp(-a x^2)``, the measure N(0, 1/(2a+1))."""
    a = float(a)
    if not math.isfinite(a) or 2 * a + 1 <= 0:
        raise InvalidArgumentError(f"gaussian family needs a > -1/2 (2a+1 > 0), got a={a}")
    c = math.sqrt(2 * a + 1)

    def func(x):
        return c * np.exp(-a * x * x)

    def deriv(x):
        return -2 * a * x * func(x)

    s2 = 1 / (2 * a + 1)
    meta = {
        "mass": 1.0,
        "mean": 0.0,
        "second_moment": s2,
        "entropy": 0.5 * (s2 - 1 - math.log(s2)),
        "fisher": 4 * a * a * s2,
        "deficit": a - 0.5 * math.log1p(2 * a),
    }
    return Density1D(func, deriv, "gaussian_family", {"a": a}, meta)


def make_tilt(b: float) -> Density1D:
    """``f_b(x) = exp(b x - b^2 / 2)``, the measure N(b, 1)."""
    b = float(b)
    if not math.isfinite(b):
        raise InvalidArgumentError(f"tilt parameter must be finite, got b={b}")

    def func(x):
        return np.exp(b * x - 0.5 * b * b)

    def deriv(x):
        return b * func(x)

    meta = {"mass": 1.0, "mean": b, "second_moment": 1 + b * b,
            "entropy": 0.5 * b * b, "fisher": b * b, "deficit": 0.0}
    return Density1D(func, deriv, "tilt", {"b": b}, meta)


def make_mixture(components: Sequence[Density1D], weights: Sequence[float]) -> Density1D:
    """Convex combination ``sum_i w_i f_i / sum_i w_i``."""
    components = list(components)
    w = np.asarray(weights, dtype=float)
    if not components or len(components) != w.size:
        raise InvalidArgumentError("mixture needs one weight per component and at least one component")
    if np.any(w < 0) or not np.isfinite(w).all() or w.sum() <= 0:
        raise InvalidArgumentError(f"mixture weights must be nonnegative with positive sum, got {weights!r}")
    w = w / w.sum()

    def func(x):
        return sum(wi * f(x) for wi, f in zip(w, components))

    def deriv(x):
        return sum(wi * f.derivative(x) for wi, f in zip(w, components))

    meta = {}
    for key in ("mass", "mean", "second_moment"):
        if all(key in f.metadata for f in components):
            meta[key] = float(sum(wi * f.metadata[key] for wi, f in zip(w, components)))
    params = {"components": [dict(family=f.family, **f.params) for f in components],
              "weights": [float(x) for x in w]}
    bps = sorted({b for f in components for b in f.breakpoints})
    return Density1D(func, deriv, "mixture", params, meta, bps)


def make_custom(func: ArrayFn, deriv: ArrayFn, breakpoints: Sequence[float] = (),
                check_points: int = 16, seed: int = 0, params=None) -> Density1D:
    """Wrap user-supplied ``f`` and ``f'`` after sanity checks.

    ``f`` is evaluated on a grid over ``[-R, R]`` for negativity, and ``f'``
    is compared to central differences at ``check_points`` random points
    (relative tolerance 1e-5).

    Raises
    ------
    InvalidDensityError
        If ``f`` takes a negative or non-finite value.
    DerivativeInconsistentError
        If ``f'`` disagrees with the finite-difference derivative.
    """
    rng = np.random.default_rng(seed)
    grid = np.concatenate([np.linspace(-DEFAULT_RADIUS, DEFAULT_RADIUS, 4001),
                           rng.uniform(-DEFAULT_RADIUS, DEFAULT_RADIUS, 64)])
    vals = np.broadcast_to(np.asarray(func(grid), dtype=float), grid.shape)
    if not np.isfinite(vals).all():
        raise InvalidDensityError("density takes non-finite values on [-R, R]")
    if np.any(vals < 0):
        i = int(np.argmin(vals))
        raise InvalidDensityError(f"density is negative at x={grid[i]:.6g} (f={vals[i]:.6g})")

    pts = rng.uniform(-4.0, 4.0, check_points)
    bps = np.asarray(sorted(breakpoints), dtype=float)
    if bps.size:
        near = np.min(np.abs(pts[:, None] - bps[None, :]), axis=1) < 1e-3
        pts[near] += 2e-3
    h = 1e-5 * np.maximum(1.0, np.abs(pts))
    fd = (np.asarray(func(pts + h), dtype=float) - np.asarray(func(pts - h), dtype=float)) / (2 * h)
    d = np.broadcast_to(np.asarray(deriv(pts), dtype=float), pts.shape)
    f0 = np.broadcast_to(np.asarray(func(pts), dtype=float), pts.shape)
    scale = np.maximum(np.maximum(np.abs(d), np.abs(f0)), 1e-12)
    bad = np.abs(fd - d) > 1e-5 * scale
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise DerivativeInconsistentError(
            f"derivative mismatch at x={pts[i]:.6g}: supplied {d[i]:.10g}, finite difference {fd[i]:.10g}")
    return Density1D(func, deriv, "custom", params, {}, breakpoints)


def normalize_center(f: Density1D) -> Density1D:
    """Rescale to unit mass, then translate the measure ``f d gamma`` to mean zero.

    The translation by ``-c`` acts on densities as
    ``f(x) -> f(x + c) exp(-c x - c^2 / 2)``, which preserves mass exactly.
    """
    mass = f.mass().value
    if not math.isfinite(mass) or mass <= 0:
        raise InvalidDensityError(f"cannot normalize a density with mass {mass!r}")
    c = f.mean().value / mass

    def func(x):
        return f(x + c) * np.exp(-c * x - 0.5 * c * c) / mass

    def deriv(x):
        return (f.derivative(x + c) - c * f(x + c)) * np.exp(-c * x - 0.5 * c * c) / mass

    meta = {"mass": 1.0, "mean": 0.0}
    if "second_moment" in f.metadata and "mass" in f.metadata:
        meta["second_moment"] = f.metadata["second_moment"] / f.metadata["mass"] - c * c
    return Density1D(func, deriv, "recentred", {"shift": c, "scale": 1 / mass}, meta,
                     [b - c for b in f.breakpoints], source=f)


def product_density(factors: Sequence[Density1D]) -> ProductDensity:
    factors = list(factors)
    if not factors:
        raise InvalidArgumentError("product density needs at least one factor")
    for k, f in enumerate(factors):
        if not f.is_normalized:
            raise PreconditionViolation(f"factor {k} must be normalized", f.mass().value)
        if not f.is_centered:
            raise PreconditionViolation(f"factor {k} must be centered", f.mean().value)
    return ProductDensity(factors)


def piecewise_density(pieces) -> Density1D:
    """Density from a JSON-style piecewise description.

    ``pieces`` is a list of mappings with keys ``from``, ``to`` (``null`` for
    an infinite end), ``poly`` (ascending polynomial coefficients) and
    optional ``quad`` (ascending coefficients of a quadratic exponent), so a
    piece is ``P(x) exp(q(x))`` on ``[from, to)``. Pieces must tile the line
    and join continuously.
    """
    if not pieces:
        raise InvalidArgumentError("piecewise density needs at least one piece")
    parsed = []
    for p in pieces:
        lo = -math.inf if p.get("from") is None else float(p["from"])
        hi = math.inf if p.get("to") is None else float(p["to"])
        poly = np.polynomial.Polynomial(np.asarray(p.get("poly", [1.0]), dtype=float))
        quad = np.polynomial.Polynomial(np.asarray(p.get("quad", [0.0]), dtype=float))
        if quad.degree() > 2:
            raise InvalidArgumentError("exponent of a piece must be at most quadratic")
        parsed.append((lo, hi, poly, quad))
    parsed.sort(key=lambda t: t[0])
    if parsed[0][0] != -math.inf or parsed[-1][1] != math.inf:
        raise InvalidArgumentError("pieces must cover the whole real line")
    for (_, hi, p0, q0), (lo, _, p1, q1) in zip(parsed[:-1], parsed[1:]):
        if hi != lo:
            raise InvalidArgumentError(f"pieces leave a gap or overlap at {hi} / {lo}")
        left = p0(hi) * math.exp(q0(hi))
        right = p1(lo) * math.exp(q1(lo))
        if abs(left - right) > 1e-9 * max(1.0, abs(left)):
            raise InvalidDensityError(f"density jumps at x={lo}: {left} vs {right}")
    edges = [t[1] for t in parsed[:-1]]

    def _eval(x, derivative):
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(edges, x, side="right")
        out = np.zeros_like(x)
        for i, (_, _, poly, quad) in enumerate(parsed):
            m = idx == i
            if m.any():
                xm = x[m]
                e = np.exp(quad(xm))
                out[m] = (poly.deriv()(xm) + poly(xm) * quad.deriv()(xm)) * e if derivative else poly(xm) * e
        return out

    return make_custom(lambda x: _eval(x, False), lambda x: _eval(x, True), breakpoints=edges,
                       params={"pieces": list(pieces)})
