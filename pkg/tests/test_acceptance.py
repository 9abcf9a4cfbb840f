"""Acceptance criteria, one test per criterion at its stated tolerance.

A summary line per criterion is printed at the end of the pytest run.
"""
import itertools
import math
import subprocess
import sys
import time

import numpy as np
import pytest

from lsistab import gauss_quad
from lsistab.densities import make_gaussian_family, make_tilt, normalize_center
from lsistab.functionals import deficit, deficit_star, exp_moment, to_u
from lsistab.stability import (
    check_tensorization,
    check_thm1_density,
    check_thm1_u,
    check_w1_stability,
    entropy_moment_bound,
    family_suite,
    gradient_star_bound,
    product_deficit,
    richardson_limit,
    run_transport_gap,
    sharp_constant_lower_bound,
    sharpness_sweep,
)
from lsistab.transport1d import wasserstein1, wasserstein1_cdf, wasserstein_p

SQRT_2_OVER_PI = math.sqrt(2 / math.pi)


def closed_deficit(a):
    return a - 0.5 * math.log(2 * a + 1)


@pytest.fixture(scope="module")
def suite():
    return family_suite()


@pytest.mark.criterion(1, "closed-form deficit of f_a within 1e-8, under 1 s")
def test_closed_form_deficit():
    gauss_quad.hermite_rule.cache_clear()
    start = time.perf_counter()
    values = {a: deficit(make_gaussian_family(a)).value for a in (0.01, 0.1, 0.5, 1.0, 2.0)}
    elapsed = time.perf_counter() - start
    worst = max(abs(v - closed_deficit(a)) for a, v in values.items())
    print(f"max |delta - closed form| = {worst:.2e}, time {elapsed:.3f} s")
    assert worst <= 1e-8
    assert elapsed < 1.0


@pytest.mark.criterion(2, "tilts have zero deficit; recentred tilts are identically 1")
def test_equality_cases():
    for b in (-2.0, -1.0, 0.0, 1.0, 2.0):
        d = deficit(make_tilt(b)).value
        g = normalize_center(make_tilt(b))
        dev = np.max(np.abs(g(np.linspace(-6, 6, 1201)) - 1.0))
        print(f"b={b:+g}: delta={d:.2e}, max |g - 1| = {dev:.2e}")
        assert d <= 1e-8
        assert dev <= 1e-10


@pytest.mark.criterion(3, "amplitude deficit equals density deficit within 1e-8 on the suite")
def test_change_of_variables(suite):
    worst = max(abs(deficit_star(to_u(f)).value - deficit(f).value) for f in suite.values())
    print(f"max |delta* - delta| = {worst:.2e}")
    assert worst <= 1e-8


@pytest.mark.criterion(4, "W^{1,1} stability checks hold on the suite at slack 1e-7")
def test_w11_stability_direction(suite):
    for name, f in suite.items():
        r = check_thm1_density(f, alpha=2.0, slack=1e-7)
        ru = check_thm1_u(to_u(f), alpha=2.0 / (2 * math.pi), slack=1e-7)
        print(f"{name}: density {r.verdict} ({r.ratio:.4f}), amplitude {ru.verdict} ({ru.ratio:.4f})")
        assert r.ok and ru.ok, name


@pytest.mark.criterion(5, "transport-gap chain, entropy-moment and gradient bounds hold; saturation at tilts")
def test_proof_chain(suite):
    for name, f in suite.items():
        reports = [run_transport_gap(f), entropy_moment_bound(f), gradient_star_bound(to_u(f))]
        print(name, [r.verdict for r in reports])
        assert all(r.ok for r in reports), name
    for b in (-2.0, -1.0, 0.0, 1.0, 2.0):
        r = entropy_moment_bound(make_tilt(b))
        assert abs(r.lhs) <= 1e-8 and abs(r.rhs) <= 1e-8, b


@pytest.mark.criterion(6, "quantile and CDF routes to W_1 agree; Gaussian W_1 and W_2 closed forms")
def test_w1_engine(suite):
    worst = max(abs(wasserstein1(f).value - wasserstein1_cdf(f, None).value) for f in suite.values())
    f = make_gaussian_family(0.5)
    w1 = wasserstein1(f).value
    w2 = wasserstein_p(f, None, 2).value
    w1_exact = (1 - 1 / math.sqrt(2)) * SQRT_2_OVER_PI
    print(f"route gap {worst:.2e}; W1 = {w1:.10f} (closed form {w1_exact:.10f}); W2 = {w2:.10f}")
    assert worst <= 1e-6
    assert w1 == pytest.approx(w1_exact, abs=1e-5)
    assert w1 == pytest.approx(0.2336950, abs=1e-5)
    assert w2 == pytest.approx(0.2928932, abs=1e-5)


@pytest.mark.criterion(7, "sharpness sweep limit 1.25331 within 1e-3, admissibility flags, under 10 s")
def test_sharpness_sweep():
    eps, alpha = 0.1, 2.0
    start = time.perf_counter()
    res = sharpness_sweep([0.05, 0.02, 0.01, 0.005, 0.002], eps=eps, alpha=alpha)
    elapsed = time.perf_counter() - start
    print(f"limit {res.extrapolated_limit:.6f} +- {res.uncertainty:.1e}, time {elapsed:.2f} s")
    assert res.extrapolated_limit == pytest.approx(1.25331, abs=1e-3)
    assert elapsed < 10.0
    for row in res.rows:
        bound = (2 * row.a + 1) / (2 * math.pi) * (math.pi / (row.a - 2 * eps + 0.5))
        assert row.admissible == (bound < alpha)


@pytest.mark.criterion(8, "sharp constant sqrt(2/pi); empirical W_1 constants approach it from below")
def test_lower_bound_constant():
    c = sharp_constant_lower_bound(1)
    assert c == pytest.approx(0.7978846, abs=1e-7)
    eps = 0.1
    grid = (0.001, 0.0005, 0.0002, 0.0001)
    ratios = []
    for a in grid:
        r = check_w1_stability(make_gaussian_family(a), eps, alpha=2.0)
        ratios.append(r.ratio)
        print(f"a={a:g}: W1 / sqrt(delta) = {r.ratio:.7f}")
        assert r.ratio >= c - 1e-3
    limit, _ = richardson_limit(grid, ratios)
    print(f"extrapolated constant {limit:.7f}")
    assert limit >= c - 1e-3


@pytest.mark.criterion(9, "deficit additivity within 2e-8 and the n^{3/4} product bound for pairs")
def test_tensorization():
    family = {a: make_gaussian_family(a) for a in (0.1, 0.5, 1.0)}
    for a1, a2 in itertools.combinations_with_replacement(sorted(family), 2):
        fs = [family[a1], family[a2]]
        gap = abs(product_deficit(fs).value - deficit(fs[0]).value - deficit(fs[1]).value)
        r = check_tensorization(fs, alpha=1.0)
        print(f"({a1:g}, {a2:g}): additivity gap {gap:.1e}, verdict {r.verdict}")
        assert gap <= 2e-8
        assert r.verdict == "holds"


@pytest.mark.criterion(10, "exponential moment of f_a below the explicit bound; closed form within 1e-7")
def test_exp_moment_bound():
    for a, eps in itertools.product((0.05, 0.1, 0.5), (0.05, 0.1, 0.2)):
        denom = a - 2 * eps + 0.5
        if denom <= 0:
            continue
        value = exp_moment(make_gaussian_family(a), eps).value
        bound = (2 * a + 1) / (2 * math.pi) * (math.pi / denom)
        exact = 1 / math.sqrt(1 - 4 * eps / (2 * a + 1))
        print(f"a={a:g} eps={eps:g}: {value:.10f} <= {bound:.10f}")
        assert value <= bound + 1e-7
        assert value == pytest.approx(exact, abs=1e-7)


@pytest.mark.criterion(11, "report-all output is byte-identical across runs")
def test_determinism():
    cmd = [sys.executable, "-m", "lsistab", "report-all"]
    first = subprocess.run(cmd, capture_output=True, check=True).stdout
    second = subprocess.run(cmd, capture_output=True, check=True).stdout
    assert first and first == second
