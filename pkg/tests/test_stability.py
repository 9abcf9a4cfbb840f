import math

import numpy as np
import pytest

from lsistab.densities import make_gaussian_family, make_mixture, make_tilt, normalize_center
from lsistab.errors import InvalidArgumentError, PreconditionViolation
from lsistab.functionals import exp_moment_gaussian_bound, to_u
from lsistab.stability import (
    StabilityReport,
    _verdict,
    check_tensorization,
    check_thm1_density,
    check_thm1_u,
    check_w1_stability,
    entropy_moment_bound,
    family_suite,
    gradient_star_bound,
    hwi_type_bound,
    prior_w1_bound,
    product_deficit,
    richardson_limit,
    run_transport_gap,
    sharp_constant_lower_bound,
    sharpness_sweep,
)

# 30-digit mpmath values (delta, (2H + 1 - m2)^2 / 4) for the symmetric
# tilt mixtures (f_b + f_{-b}) / 2
SYMMETRIC_TILT = {
    0.5: (0.0119282653889237188, 0.0124147466922434819),
    1.0: (0.1120310657434951971, 0.1134550015355195527),
}


def test_verdict_semantics():
    assert _verdict(0.0, 0.0, 1e-9) == "vacuous"
    assert _verdict(1.0, 1.0 - 1e-10, 1e-9) == "holds"
    assert _verdict(1.0, 0.5, 1e-9) == "fails"


def test_suite_members_satisfy_hypotheses():
    suite = family_suite()
    assert len(suite) == 16
    for name, f in suite.items():
        assert f.is_normalized and f.is_centered, name
        assert f.second_moment().value <= 2.0, name


def test_thm1_gaussian():
    r = check_thm1_density(make_gaussian_family(0.5), alpha=1.0)
    assert isinstance(r, StabilityReport) and r.verdict == "holds"
    assert r.constant_kind == "empirical"
    assert r.components["w11"] == pytest.approx(0.8963177335, abs=1e-9)
    assert r.ratio == pytest.approx(r.lhs / r.components["core"])


def test_thm1_with_small_constant_fails():
    r = check_thm1_density(make_gaussian_family(0.5), alpha=1.0, constant=0.5)
    assert r.verdict == "fails" and r.constant_kind == "supplied"


def test_thm1_preconditions():
    with pytest.raises(PreconditionViolation, match="alpha"):
        check_thm1_density(make_gaussian_family(-0.2), alpha=1.0)
    with pytest.raises(PreconditionViolation, match="centered"):
        check_thm1_density(make_tilt(1.0), alpha=5.0)


def test_thm1_vacuous_at_gamma():
    assert check_thm1_density(normalize_center(make_tilt(2.0)), alpha=1.0).verdict == "vacuous"


def test_amplitude_checks():
    u = to_u(make_gaussian_family(0.5))
    assert check_thm1_u(u, alpha=1.0).ok
    r = gradient_star_bound(u)
    assert r.verdict == "holds"
    # (1/pi) int u'^2 w equals I(f) / 2
    assert r.lhs == pytest.approx(0.25, abs=1e-12)


def test_entropy_moment_saturates_at_tilts():
    for b in (-2.0, -1.0, 0.0, 1.0, 2.0):
        r = entropy_moment_bound(make_tilt(b))
        assert abs(r.lhs) <= 1e-8 and abs(r.rhs) <= 1e-8
        assert r.verdict == "vacuous"


@pytest.mark.parametrize("b", sorted(SYMMETRIC_TILT))
def test_entropy_moment_reports_counterexample(b):
    f = make_mixture([make_tilt(b), make_tilt(-b)], [0.5, 0.5])
    delta, lhs = SYMMETRIC_TILT[b]
    r = entropy_moment_bound(f)
    assert r.rhs == pytest.approx(delta, abs=1e-11)
    assert r.lhs == pytest.approx(lhs, abs=1e-11)
    assert r.verdict == "fails"


def test_entropy_moment_fails_for_wide_gaussian():
    r = entropy_moment_bound(make_gaussian_family(-0.2))
    assert r.verdict == "fails"


def test_hwi_and_prior_w1():
    f = make_gaussian_family(0.5)
    r = hwi_type_bound(f)
    assert r.ok and r.ratio == pytest.approx(0.670, abs=1e-3)
    r = prior_w1_bound(f)
    assert r.ok
    assert r.components["C"] == pytest.approx(0.15342640972 / r.components["min"])


def test_w1_stability():
    f = make_gaussian_family(0.5)
    alpha = exp_moment_gaussian_bound(0.5, 0.1)
    r = check_w1_stability(f, 0.1, alpha)
    assert r.ok
    assert r.ratio == pytest.approx((1 - 1 / math.sqrt(2)) * math.sqrt(2 / math.pi) / math.sqrt(0.15342640972),
                                    rel=1e-10)
    with pytest.raises(PreconditionViolation, match="exponential moment"):
        check_w1_stability(f, 0.1, 1.0)
    with pytest.raises(PreconditionViolation, match="finite"):
        check_w1_stability(make_gaussian_family(-0.2), 0.2, 10.0)


def test_sharp_constant():
    assert sharp_constant_lower_bound(1) == pytest.approx(math.sqrt(2 / math.pi), abs=1e-15)
    assert sharp_constant_lower_bound(3) >= 0
    with pytest.raises(InvalidArgumentError):
        sharp_constant_lower_bound(0)


def test_richardson_exact_on_quadratics():
    a = np.array([0.4, 0.1, 0.2, 0.3])
    limit, _ = richardson_limit(a, 2.0 - 3 * a + 5 * a * a)
    assert limit == pytest.approx(2.0, abs=1e-12)


def test_sweep_validation():
    with pytest.raises(InvalidArgumentError):
        sharpness_sweep([0.3])
    with pytest.raises(InvalidArgumentError):
        sharpness_sweep([0.1], eps=0.3)
    with pytest.raises(InvalidArgumentError):
        sharpness_sweep([])


def test_sweep_rows_sorted_with_limits():
    res = sharpness_sweep([0.01, 0.002, 0.005], eps=0.1)
    assert [r.a for r in res.rows] == [0.002, 0.005, 0.01]
    # W_1(f_a) ~ a sqrt(2/pi) and delta(f_a) ~ a^2 as a -> 0
    assert res.w1_over_a_limit == pytest.approx(math.sqrt(2 / math.pi), abs=1e-3)
    assert res.delta_over_a2_limit == pytest.approx(1.0, abs=1e-3)


def test_product_deficit_additive():
    fs = [make_gaussian_family(0.1), make_gaussian_family(0.5), make_gaussian_family(1.0)]
    want = sum(a - 0.5 * math.log1p(2 * a) for a in (0.1, 0.5, 1.0))
    assert product_deficit(fs).value == pytest.approx(want, abs=1e-10)


def test_tensorization():
    fs = [make_gaussian_family(0.1), make_gaussian_family(0.5)]
    r = check_tensorization(fs, alpha=1.0)
    assert r.verdict == "holds" and r.constant_kind == "factor-max"
    assert r.components["additivity_gap"] < 2e-8
    assert check_tensorization(fs, alpha=1.0, constant=0.1).verdict == "fails"
    with pytest.raises(PreconditionViolation, match="factor 0"):
        check_tensorization([make_gaussian_family(-0.2)], alpha=1.0)


def test_transport_gap_report():
    r = run_transport_gap(make_gaussian_family(0.5))
    assert r.verdict == "holds"
    assert r.components["lower"] <= r.components["middle"] <= r.components["delta"]
