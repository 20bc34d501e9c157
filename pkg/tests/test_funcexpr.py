import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fourierlab.errors import DomainError
from fourierlab.funcexpr import (Bump, Conj, DomainTag, Measure, Modulate, PowerWeight, Product,
                                 Scale, Shift, dumps, inner_product, l2_norm, loads,
                                 random_funcexpr, random_plane)
from fourierlab.quadrature import QuadConfig

FINE = QuadConfig(rel_tol=1e-13, abs_tol=1e-18)


def test_bump_integral_matches_reference():
    # [DERIVED] scipy.integrate.quad of exp(-1/(1-x^2)) over (-1, 1)
    assert abs(inner_product(Bump(0, 1), Bump(0, 1), Measure.LEBESGUE_LINE, FINE)
               - 0.1330861208449943) < 1e-13


def test_haar_norm_matches_reference():
    # [DERIVED] scipy.integrate.quad of bump(t)^2 / t
    assert abs(l2_norm(Bump(1.5, 0.5), cfg=FINE) ** 2 - 0.04494554765741706) < 1e-14


def test_bump_vanishes_outside_support():
    b = Bump(2.0, 0.5)
    t = np.array([1.0, 1.5, 2.5, 3.0])
    assert np.all(b.derivs(t, 3) == 0)


@given(st.integers(0, 2**32 - 1), st.sampled_from([DomainTag.LINE, DomainTag.HALF_LINE]))
def test_serialization_round_trip(seed, domain):
    f = random_funcexpr(np.random.default_rng(seed), domain)
    g = loads(dumps(f))
    assert g == f
    assert dumps(g) == dumps(f)


@given(st.integers(0, 2**32 - 1))
def test_derivatives_match_finite_differences(seed):
    rng = np.random.default_rng(seed)
    g = random_funcexpr(rng, DomainTag.HALF_LINE, 2)
    f = Product((Modulate(0.7, g), PowerWeight(1.5, Shift(0.05, g))))
    lo, hi = f.support()[0]
    t = np.linspace(lo, hi, 9)[1:-1]
    h = 1e-5
    d = f.derivs(t, 1)
    fd = (f.derivs(t + h)[0] - f.derivs(t - h)[0]) / (2 * h)
    assert np.allclose(d[1], fd, rtol=1e-5, atol=1e-7)


def test_scale_conj_and_sum():
    b = Bump(1.0, 0.5)
    t = np.array([0.8, 1.1])
    assert np.allclose(Conj(Scale(2j, b))(t), -2j * b(t))
    assert np.allclose((b + b)(t), 2 * b(t))


def test_negative_power_needs_positive_support():
    with pytest.raises(DomainError):
        PowerWeight(-0.5, Bump(0.0, 1.0)).derivs(np.array([0.5]))


def test_haar_measure_rejects_line_support():
    with pytest.raises(DomainError):
        inner_product(Bump(0.0, 1.0), Bump(0.0, 1.0), Measure.HAAR_HALFLINE)


@given(st.integers(0, 2**32 - 1))
def test_plane_function_conjugate(seed):
    f = random_plane(np.random.default_rng(seed))
    x, y = np.array([0.3, -1.2]), np.array([1.1, 0.4])
    assert np.allclose(f.conj()(x, y), np.conj(f(x, y)))


@given(st.integers(0, 2**32 - 1))
def test_inner_product_is_hermitian(seed):
    rng = np.random.default_rng(seed)
    f, g = (random_funcexpr(rng, DomainTag.HALF_LINE, 2) for _ in range(2))
    fg = inner_product(f, g)
    gf = inner_product(g, f)
    assert abs(fg - np.conj(gf)) <= 1e-12 * max(1.0, abs(fg))
    assert abs(fg) <= l2_norm(f) * l2_norm(g) * (1 + 1e-9) + 1e-15
