import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special

from lsistab.densities import (
    make_custom,
    make_gaussian_family,
    make_mixture,
    make_tilt,
    normalize_center,
    piecewise_density,
    product_density,
)
from lsistab.errors import (
    DerivativeInconsistentError,
    InvalidArgumentError,
    InvalidDensityError,
    PreconditionViolation,
)


@settings(max_examples=25, deadline=None)
@given(st.floats(min_value=-0.45, max_value=5.0))
def test_gaussian_family_moments(a):
    f = make_gaussian_family(a)
    assert f.mass().value == pytest.approx(1.0, abs=1e-10)
    assert f.second_moment().value == pytest.approx(f.metadata["second_moment"], rel=1e-9)
    assert f.is_normalized and f.is_centered


@pytest.mark.parametrize("a", [-0.5, -0.7, math.inf, math.nan])
def test_gaussian_family_rejects_bad_parameter(a):
    with pytest.raises(InvalidArgumentError, match="a > -1/2"):
        make_gaussian_family(a)


def test_tilt_moments():
    f = make_tilt(1.5)
    assert f.mass().value == pytest.approx(1.0, abs=1e-12)
    assert f.mean().value == pytest.approx(1.5, abs=1e-12)
    assert f.second_moment().value == pytest.approx(1 + 1.5 ** 2, abs=1e-11)
    assert not f.is_centered


@pytest.mark.parametrize("b", [-2.0, -0.5, 1.0, 2.0])
def test_recentred_tilt_is_one(b):
    g = normalize_center(make_tilt(b))
    x = np.linspace(-6, 6, 601)
    np.testing.assert_allclose(g(x), 1.0, atol=1e-10)
    np.testing.assert_allclose(g.derivative(x), 0.0, atol=1e-10)


def test_normalize_center_of_unnormalized_mixture():
    f = make_mixture([make_tilt(1.0), make_gaussian_family(0.3)], [0.7, 0.3])
    scaled = make_custom(lambda x: 3.0 * f(x), lambda x: 3.0 * f.derivative(x))
    g = normalize_center(scaled)
    assert g.is_normalized and g.is_centered
    assert g.params["shift"] == pytest.approx(0.7, abs=1e-10)


def test_mixture_weights_are_normalized():
    f = make_mixture([make_gaussian_family(0.5), make_gaussian_family(0.05)], [1.0, 1.0])
    assert f.params["weights"] == [0.5, 0.5]
    assert f.metadata["second_moment"] == pytest.approx(0.5 * 0.5 + 0.5 / 1.1)
    with pytest.raises(InvalidArgumentError):
        make_mixture([make_tilt(0.0)], [-1.0])


def test_custom_density_checks():
    with pytest.raises(InvalidDensityError):
        make_custom(lambda x: np.sin(x), lambda x: np.cos(x))
    with pytest.raises(DerivativeInconsistentError):
        make_custom(lambda x: np.exp(-x * x), lambda x: np.zeros_like(x))
    f = make_custom(lambda x: x * x, lambda x: 2 * x)
    assert f.mass().value == pytest.approx(1.0, abs=1e-12)


def laplace_pieces():
    # f = c exp(-|x|), normalized against d gamma
    c = 1 / (2 * math.exp(0.5) * special.ndtr(-1.0))
    return [{"from": None, "to": 0.0, "poly": [c], "quad": [0.0, 1.0]},
            {"from": 0.0, "to": None, "poly": [c], "quad": [0.0, -1.0]}]


def test_piecewise_density():
    f = piecewise_density(laplace_pieces())
    assert tuple(f.breakpoints) == (0.0,)
    assert f.mass().value == pytest.approx(1.0, abs=1e-12)
    assert f.mean().value == pytest.approx(0.0, abs=1e-12)
    assert f.derivative(np.array([-1.0, 1.0])) == pytest.approx(-np.array([-1.0, 1.0]) * f(np.array([1.0, 1.0])))


def test_piecewise_density_rejects_bad_tilings():
    p = laplace_pieces()
    with pytest.raises(InvalidArgumentError, match="gap"):
        piecewise_density([p[0], dict(p[1], **{"from": 0.5})])
    with pytest.raises(InvalidDensityError, match="jumps"):
        piecewise_density([p[0], dict(p[1], poly=[2 * p[1]["poly"][0]])])
    with pytest.raises(InvalidArgumentError, match="cover"):
        piecewise_density([p[0]])
    with pytest.raises(InvalidArgumentError, match="quadratic"):
        piecewise_density([{"from": None, "to": None, "poly": [1.0], "quad": [0, 0, 0, 1.0]}])


def test_product_density():
    fs = [make_gaussian_family(0.1), make_gaussian_family(1.0)]
    p = product_density(fs)
    X = np.array([[0.3, -0.7], [1.0, 2.0]])
    assert p.n == 2
    np.testing.assert_allclose(p(X), fs[0](X[:, 0]) * fs[1](X[:, 1]))
    np.testing.assert_allclose(p.partial(1, X), fs[0](X[:, 0]) * fs[1].derivative(X[:, 1]))
    with pytest.raises(PreconditionViolation, match="centered"):
        product_density([make_tilt(1.0)])


def test_cache_is_per_density():
    f = make_gaussian_family(0.5)
    calls = []
    assert f.cached("k", lambda: calls.append(1) or 7) == 7
    assert f.cached("k", lambda: calls.append(1) or 8) == 7
    assert calls == [1]
