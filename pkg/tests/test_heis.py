import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fourierlab.errors import DomainError
from fourierlab.funcexpr import (Bump, DomainTag, Measure, PlaneFunc, Scale, l2_norm,
                                 random_funcexpr, random_plane)
from fourierlab.heis import (HeisElement, HrElem, Lambda0CoeffTerm, SchCoeffTerm, a_norm_heis,
                             conj_heis, conj_term, d_flat_heis, derivation_residuals_heis,
                             dtheta, heis_coeff_eval, heis_l2_inner, key_estimate_heis,
                             sch_apply, sch_coeff_eval, sch_coeff_eval_via_rep, zero_coeff_eval)
from fourierlab.quadrature import Certified, QuadConfig

FINE = QuadConfig(rel_tol=1e-13, abs_tol=1e-18)
MID = QuadConfig(rel_tol=1e-8, b_cutoff_policy=Certified(1e-8))
TIGHT = QuadConfig(rel_tol=1e-9, abs_tol=1e-16, b_cutoff_policy=Certified(1e-9))

points = st.builds(HeisElement, st.floats(-3, 3), st.floats(-3, 3), st.floats(0, 1))
seeds = st.integers(0, 2**32 - 1)
orders = st.sampled_from([-3, -2, -1, 1, 2, 3])


def _line_norm(f):
    return l2_norm(f, Measure.LEBESGUE_LINE, FINE)


@given(points, points, points)
def test_group_law_is_associative(x, y, z):
    l, r = (x * y) * z, x * (y * z)
    assert np.allclose([l.p, l.q, l.theta], [r.p, r.q, r.theta], atol=1e-11)


@given(points)
def test_inverse(x):
    e = x * x.inverse()
    assert np.allclose([e.p, e.q, e.theta], 0, atol=1e-12)


@given(points, points, orders)
def test_schroedinger_is_a_homomorphism(x, y, n):
    xi = Bump(0.3, 1.0)
    t = np.linspace(-8, 8, 41)
    lhs = sch_apply(n, x, sch_apply(n, y, xi))(t)
    rhs = sch_apply(n, x * y, xi)(t)
    assert np.allclose(lhs, rhs, atol=1e-12)


def test_index_zero_is_rejected():
    with pytest.raises(DomainError):
        SchCoeffTerm(0, Bump(0, 1), Bump(0, 1))
    with pytest.raises(DomainError):
        sch_apply(0, HeisElement.identity(), Bump(0, 1))


@given(seeds, points, orders)
def test_two_evaluation_paths_agree(seed, g, n):
    rng = np.random.default_rng(seed)
    t = SchCoeffTerm(n, random_funcexpr(rng, DomainTag.LINE, 2),
                     random_funcexpr(rng, DomainTag.LINE, 2), 0.5 + 1j)
    assert abs(sch_coeff_eval(t, g) - sch_coeff_eval_via_rep(t, g)) < 1e-11


@given(seeds, points)
def test_conjugation(seed, g):
    rng = np.random.default_rng(seed)
    t = SchCoeffTerm(2, random_funcexpr(rng, DomainTag.LINE, 1),
                     random_funcexpr(rng, DomainTag.LINE, 1), 1j)
    assert abs(heis_coeff_eval(conj_term(t), g) - np.conj(heis_coeff_eval(t, g))) < 1e-12
    z = Lambda0CoeffTerm(random_plane(rng), random_plane(rng))
    assert abs(zero_coeff_eval(conj_term(z), g) - np.conj(zero_coeff_eval(z, g))) < 1e-12


def test_lambda0_coefficient_ignores_theta():
    rng = np.random.default_rng(7)
    z = Lambda0CoeffTerm(random_plane(rng), random_plane(rng))
    a = zero_coeff_eval(z, HeisElement(0.2, -0.4, 0.0))
    b = zero_coeff_eval(z, HeisElement(0.2, -0.4, 0.37))
    assert abs(a - b) < 1e-14


def test_dtheta_scales_by_order_and_drops_lambda0():
    t = SchCoeffTerm(-3, Bump(0, 1), Bump(0.5, 1), 2.0)
    z = Lambda0CoeffTerm(random_plane(np.random.default_rng(1)),
                         random_plane(np.random.default_rng(2)))
    d = dtheta(HrElem((t,), (z,)))
    assert d.zero_terms == ()
    assert d.sch_terms[0].weight == -6.0


@pytest.mark.parametrize("n", [1, -2, 3])
def test_square_integrability(n):
    # [PAPER] ||xi *n eta||^2 = ||xi||^2 ||eta||^2 / |n|
    xi, eta = Bump(0.4, 1.0) + Scale(0.3j, Bump(-1.0, 0.6)), Bump(-0.2, 0.8)
    expect = _line_norm(xi) ** 2 * _line_norm(eta) ** 2 / abs(n)
    t = SchCoeffTerm(n, xi, eta)
    got = heis_l2_inner(t, t, MID, scale=expect).value
    assert abs(got - expect) < 1e-7 * expect


def test_different_orders_are_orthogonal():
    xi, eta = Bump(0.4, 1.0), Bump(-0.2, 0.8)
    scale = _line_norm(xi) ** 2 * _line_norm(eta) ** 2
    v = heis_l2_inner(SchCoeffTerm(1, xi, eta), SchCoeffTerm(2, xi, eta), MID, scale=scale)
    assert abs(v.value) < 1e-10


@pytest.mark.parametrize("n", [1, 2, -1])
def test_derivation_value_carries_sign_of_n(n):
    xi, eta = Bump(0.4, 1.0), Bump(-0.2, 0.8)
    v = SchCoeffTerm(n, xi, eta)
    nn = _line_norm(xi) ** 2 * _line_norm(eta) ** 2
    got = d_flat_heis(v, conj_term(v), TIGHT, scale=nn).value
    assert abs(got - math.copysign(nn, n)) < 1e-7 * nn


def test_lambda0_terms_do_not_change_the_derivation():
    rng = np.random.default_rng(3)
    v = SchCoeffTerm(1, Bump(0.4, 1.0), Bump(-0.2, 0.8))
    z1, z2 = (Lambda0CoeffTerm(random_plane(rng), random_plane(rng)) for _ in range(2))
    a = d_flat_heis(HrElem((v,), (z1,)), HrElem((conj_term(v),), (z2,)), TIGHT).value
    b = d_flat_heis(v, conj_term(v), TIGHT).value
    assert abs(a - b) < 1e-10


def test_a_norm_exactness_flag():
    t = SchCoeffTerm(1, Bump(0.4, 1.0), Bump(-0.2, 0.8), 2.0)
    val, exact = a_norm_heis(t)
    assert exact
    assert val == pytest.approx(2.0 * _line_norm(t.xi) * _line_norm(t.eta), rel=1e-10)
    z = Lambda0CoeffTerm(random_plane(np.random.default_rng(1)),
                         random_plane(np.random.default_rng(2)))
    assert not a_norm_heis(HrElem((t,), (z,)))[1]


def test_key_estimate_and_leibniz():
    cfg = QuadConfig(rel_tol=1e-7, b_cutoff_policy=Certified(1e-7))
    v = HrElem((SchCoeffTerm(1, Bump(0.4, 1.0), Bump(-0.2, 0.8)),
                SchCoeffTerm(-2, Bump(1.0, 0.7), Bump(0.5, 0.9), 0.5j)))
    w = conj_heis(v)
    r = key_estimate_heis(v, w, cfg)
    assert r["margin"] >= -1e-6 * r["bound"]
    assert r["antisym"] < 1e-8 * r["bound"]
    f = SchCoeffTerm(1, Bump(0.0, 0.8), Bump(0.3, 0.8))
    g = SchCoeffTerm(1, Bump(0.5, 0.8), Bump(0.7, 0.8), 1j)
    h = SchCoeffTerm(-2, Bump(-0.5, 0.9), Bump(-0.2, 0.9))
    res = derivation_residuals_heis(f, g, h, cfg)
    assert abs(res["values"][0]) > 1e-8
    assert res["leibniz"] < 1e-9 * abs(res["values"][0])
