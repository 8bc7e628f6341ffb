import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from vesubdiff.harness import EXAMPLE_EXPONENTS, g_tilde_closed_form
from vesubdiff.kernel import (ExponentModel, assemble_source, beta_kernel, constant_exponent,
                              digamma_fn, eval_g_tilde, example1_exponent, example2_exponent,
                              gamma_fn)

pos = st.floats(min_value=1e-3, max_value=3.0, allow_nan=False)


@given(pos)
def test_gamma_matches_mpmath(x):
    ref = float(mpmath.gamma(x))
    assert abs(gamma_fn(x) - ref) <= 1e-13 * abs(ref)


@given(pos)
def test_digamma_matches_mpmath(x):
    ref = float(mpmath.digamma(x))
    assert abs(digamma_fn(x) - ref) <= 1e-12 * max(1.0, abs(ref))


def test_special_values():
    assert gamma_fn(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-14)
    assert gamma_fn(1.0) == pytest.approx(1.0, rel=1e-14)
    assert digamma_fn(1.0) == pytest.approx(-0.5772156649015329, rel=1e-13)
    assert isinstance(gamma_fn(0.3), float)
    v = gamma_fn(np.array([0.5, 1.5]))
    assert v.shape == (2,)


@pytest.mark.parametrize("fn", [gamma_fn, digamma_fn])
@pytest.mark.parametrize("bad", [0.0, -1.0, np.nan])
def test_nonpositive_arguments_rejected(fn, bad):
    with pytest.raises(ValueError):
        fn(bad)


def test_beta_kernel():
    t = np.array([0.1, 0.5, 2.0])
    np.testing.assert_allclose(beta_kernel(1.0, t), 1.0, rtol=1e-14)
    np.testing.assert_allclose(beta_kernel(2.0, t), t, rtol=1e-14)
    assert beta_kernel(0.5, 1.0) == pytest.approx(1.0 / math.sqrt(math.pi), rel=1e-14)
    with pytest.raises(ValueError):
        beta_kernel(0.5, 0.0)


def test_exponent_models():
    m2 = example2_exponent(0.8, 0.1)
    assert m2.alpha0 == 0.8
    assert m2.alphaT == pytest.approx(0.1, abs=1e-15)
    m1 = example1_exponent(0.3)
    assert m1.alpha0 == 0.3
    assert m1.alphaT == pytest.approx(0.3 + math.sin(1.0) / 5)
    m1.validate()
    m2.validate()
    assert constant_exponent(0.4).is_constant
    assert not m1.is_constant


def test_exponent_validation():
    with pytest.raises(ValueError):
        example1_exponent(0.9).validate()  # 0.9 + sin(1)/5 > 1
    wrong = ExponentModel(alpha=lambda t: 0.5 + 0.1 * np.asarray(t),
                          alpha_prime=lambda t: 0.0 * np.asarray(t) + 0.3)
    with pytest.raises(ValueError, match="inconsistent"):
        wrong.validate()


def _g_adaptive(model, t):
    a, ap = model.alpha, model.alpha_prime

    def integrand(z):
        az = float(a(z))
        return (t ** (-az) / math.gamma(1 - az) * float(ap(z))
                * (float(mpmath.digamma(1 - az)) - math.log(t)))

    return quad(integrand, 0.0, t, epsabs=1e-14, epsrel=1e-13, limit=200)[0]


@pytest.mark.parametrize("example,a0,aT", EXAMPLE_EXPONENTS)
def test_g_tilde_against_adaptive_quadrature(example, a0, aT):
    model = example1_exponent(a0) if example == 1 else example2_exponent(a0, aT)
    for t in (1e-6, 1e-3, 0.05, 0.37, 1.0):
        assert abs(eval_g_tilde(model, t) - _g_adaptive(model, t)) <= 1e-10


@pytest.mark.parametrize("example,a0,aT", EXAMPLE_EXPONENTS)
def test_g_tilde_against_closed_form(example, a0, aT):
    model = example1_exponent(a0) if example == 1 else example2_exponent(a0, aT)
    t = np.logspace(-10, 0, 21)
    got = eval_g_tilde(model, t)
    ref = np.array([g_tilde_closed_form(example, a0, aT, tk) for tk in t])
    np.testing.assert_allclose(got, ref, atol=1e-12, rtol=1e-12)


def test_g_tilde_constant_exponent_is_exactly_zero():
    t = np.logspace(-12, 0, 50)
    assert np.all(eval_g_tilde(constant_exponent(0.6), t) == 0.0)


def test_g_tilde_shapes_and_domain():
    m = example1_exponent(0.5)
    assert isinstance(eval_g_tilde(m, 0.5), float)
    assert eval_g_tilde(m, np.ones((3, 2))).shape == (3, 2)
    chunked = eval_g_tilde(m, np.linspace(0.01, 1, 101), chunk=7)
    np.testing.assert_allclose(chunked, eval_g_tilde(m, np.linspace(0.01, 1, 101)), rtol=1e-14, atol=1e-16)
    with pytest.raises(ValueError):
        eval_g_tilde(m, 0.0)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.2, 0.7), st.floats(1e-6, 1.0))
def test_g_tilde_small_order_converged(a0, t):
    m = example1_exponent(a0)
    assert abs(eval_g_tilde(m, t, order=32) - eval_g_tilde(m, t, order=64)) <= 1e-12


def test_assemble_source():
    m = example1_exponent(0.5)
    x = np.linspace(0.1, 0.9, 5)
    got = assemble_source(m, lambda x, t: np.ones_like(x), lambda x: np.sin(np.pi * x), x, 0.25)
    np.testing.assert_allclose(got, 1.0 + eval_g_tilde(m, 0.25) * np.sin(np.pi * x))
