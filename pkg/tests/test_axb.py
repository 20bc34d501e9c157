import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fourierlab.axb import (AlgebraElem, AxbElement, CoeffSum, CoeffTerm, Rep, a_norm,
                            coeff_eval, coeff_eval_fourier, coeff_eval_via_rep, conj_term, d_flat,
                            derivation_residuals, evaluate_algebra, key_estimate, l2g_inner, madb,
                            madb_algebra, rep_apply)
from fourierlab.errors import DomainError
from fourierlab.funcexpr import (Bump, DomainTag, Measure, PowerWeight, Scale, inner_product,
                                 l2_norm, random_funcexpr)
from fourierlab.quadrature import Certified, QuadConfig

FINE = QuadConfig(rel_tol=1e-13, abs_tol=1e-18)
TIGHT = QuadConfig(rel_tol=1e-9, abs_tol=1e-16, b_cutoff_policy=Certified(1e-9))

elements = st.builds(AxbElement, st.floats(-5, 5), st.floats(0.2, 5))
seeds = st.integers(0, 2**32 - 1)


def _term(seed, rep=Rep.PLUS):
    rng = np.random.default_rng(seed)
    return CoeffTerm(rep, random_funcexpr(rng, DomainTag.HALF_LINE, 2),
                     random_funcexpr(rng, DomainTag.HALF_LINE, 2), complex(1 + 0.5j))


@given(elements, elements, elements)
def test_group_law_is_associative(x, y, z):
    l, r = (x * y) * z, x * (y * z)
    assert math.isclose(l.b, r.b, rel_tol=1e-12, abs_tol=1e-11)
    assert math.isclose(l.a, r.a, rel_tol=1e-12)


@given(elements)
def test_inverse(x):
    e = x * x.inverse()
    assert abs(e.b) < 1e-12 and abs(e.a - 1) < 1e-12


def test_element_needs_positive_a():
    with pytest.raises((ValueError, DomainError)):
        AxbElement(0.0, -1.0)


@given(elements, elements, st.sampled_from(list(Rep)))
def test_representation_is_a_homomorphism(x, y, rep):
    xi = Bump(1.5, 0.5)
    t = np.linspace(0.2, 6, 23)
    lhs = rep_apply(rep, x, rep_apply(rep, y, xi))(t)
    rhs = rep_apply(rep, x * y, xi)(t)
    assert np.allclose(lhs, rhs, atol=1e-12)


def test_coefficient_matches_reference_values():
    # [DERIVED] scipy quad of exp(-+2 pi i b t) xi(a t) conj(eta(t)) / t
    xi, eta, g = Bump(2, 1), Bump(1.5, 0.7), AxbElement(0.3, 1.2)
    plus = coeff_eval(CoeffTerm(Rep.PLUS, xi, eta), g)
    minus = coeff_eval(CoeffTerm(Rep.MINUS, xi, eta), g)
    assert abs(plus - (-0.05335738662930645 - 0.015529066034513985j)) < 1e-14
    assert abs(minus - (-0.05335738662930645 + 0.015529066034513985j)) < 1e-14


@given(seeds, elements, st.sampled_from(list(Rep)))
def test_three_evaluation_paths_agree(seed, g, rep):
    t = _term(seed, rep)
    direct = coeff_eval(t, g)
    assert abs(coeff_eval_via_rep(t, g) - direct) < 1e-11
    assert abs(coeff_eval_fourier(t, g) - direct) < 1e-11


@given(seeds, elements)
def test_conjugate_term(seed, g):
    t = _term(seed, Rep.MINUS)
    assert abs(coeff_eval(conj_term(t), g) - np.conj(coeff_eval(t, g))) < 1e-12


@pytest.mark.parametrize("rep", list(Rep))
def test_madb_matches_finite_difference(rep):
    t = CoeffTerm(rep, Bump(2.0, 0.8), Bump(1.8, 0.6), 0.5 - 1j)
    g, h = AxbElement(0.4, 1.1), 1e-4
    vals = [coeff_eval(t, AxbElement(g.b + k * h, g.a), FINE) for k in (-2, -1, 1, 2)]
    d_b = (vals[0] - 8 * vals[1] + 8 * vals[2] - vals[3]) / (12 * h)
    assert abs(coeff_eval(madb(t), g, FINE) - (-g.a * d_b / (2j * math.pi))) < 1e-8


def test_madb_of_product_matches_finite_difference():
    t1 = CoeffTerm(Rep.PLUS, Bump(2.0, 0.8), Bump(1.8, 0.6))
    t2 = CoeffTerm(Rep.MINUS, Bump(1.5, 0.5), Bump(1.2, 0.5), 2j)
    prod = AlgebraElem(((1.0 + 0j, (t1, t2)),))
    g, h = AxbElement(-0.7, 1.05), 1e-4
    vals = [evaluate_algebra(prod, AxbElement(g.b + k * h, g.a), FINE) for k in (-2, -1, 1, 2)]
    d_b = (vals[0] - 8 * vals[1] + 8 * vals[2] - vals[3]) / (12 * h)
    got = evaluate_algebra(madb_algebra(prod), g, FINE)
    assert abs(got - (-g.a * d_b / (2j * math.pi))) < 1e-8


def test_orthogonality_for_one_quadruple():
    # [PAPER] <xi1 * eta1, xi2 * eta2> = <K^-1/2 xi1, K^-1/2 xi2> <eta2, eta1>
    xi1, eta1 = Bump(2.0, 1.0), Bump(1.5, 0.6)
    xi2, eta2 = Scale(1j, Bump(2.3, 0.9)), Bump(1.4, 0.5)
    k = inner_product(PowerWeight(-0.5, xi1), PowerWeight(-0.5, xi2), cfg=FINE)
    expect = k * inner_product(eta2, eta1, cfg=FINE)
    cfg = QuadConfig(rel_tol=1e-10, b_cutoff_policy=Certified(1e-10))
    for rep in Rep:
        got = l2g_inner(CoeffTerm(rep, xi1, eta1), CoeffTerm(rep, xi2, eta2), cfg,
                        scale=abs(expect)).value
        assert abs(got - expect) < 1e-8 * abs(expect)
    cross = l2g_inner(CoeffTerm(Rep.PLUS, xi1, eta1), CoeffTerm(Rep.MINUS, xi2, eta2), cfg,
                      scale=abs(expect)).value
    assert abs(cross) < 1e-8 * abs(expect)


def test_key_estimate_is_tight_on_rank_one_pair():
    # [PAPER] D(xi *+ xi, conj) = ||xi||^4 = ||f||_A ||conj f||_A
    xi = Bump(1.7, 0.8) + Scale(0.5j, Bump(2.4, 0.5))
    f = CoeffTerm(Rep.PLUS, xi, xi)
    r = key_estimate(f, conj_term(f), TIGHT)
    n4 = l2_norm(xi, cfg=FINE) ** 4
    assert abs(r["d_flat"] - n4) < 1e-7 * n4
    assert abs(r["margin"]) < 1e-7 * n4
    assert r["antisym"] < 1e-7 * n4


def test_minus_pair_gives_negative_value():
    xi = Bump(1.7, 0.8)
    f = CoeffTerm(Rep.MINUS, xi, xi)
    v = d_flat(f, conj_term(f), TIGHT).value
    assert abs(v + l2_norm(xi, cfg=FINE) ** 4) < 1e-7 * abs(v)


@given(seeds)
def test_a_norm_of_rank_one_and_cancellation(seed):
    t = _term(seed)
    expect = abs(t.weight) * l2_norm(t.xi, cfg=FINE) * l2_norm(t.eta, cfg=FINE)
    assert a_norm(t) == pytest.approx(expect, rel=1e-10)
    neg = CoeffTerm(t.rep, t.xi, t.eta, -t.weight)
    assert a_norm(CoeffSum((t, neg))) < 1e-8 * expect


def test_derivation_residuals_report_key_margin_only_for_sums():
    cfg = QuadConfig(rel_tol=1e-7, b_cutoff_policy=Certified(1e-7))
    f = CoeffTerm(Rep.PLUS, Bump(1.0, 0.4), Bump(1.0, 0.4))
    g = CoeffTerm(Rep.PLUS, Bump(1.0, 0.4), Bump(1.0, 0.4), 1j)
    h = CoeffTerm(Rep.MINUS, Bump(2.0, 0.8), Bump(2.0, 0.8))
    r = derivation_residuals(f, g, h, cfg)
    assert r["leibniz"] < 1e-10 and r["antisym"] < 1e-10
    assert r["key_margin"] >= -1e-9
    prod = AlgebraElem(((1.0 + 0j, (f, g)),))
    assert "key_margin" not in derivation_residuals(prod, g, h, cfg)


def test_leibniz_holds_on_a_non_trivial_triple():
    cfg = QuadConfig(rel_tol=1e-7, b_cutoff_policy=Certified(1e-7))
    f = CoeffTerm(Rep.PLUS, Bump(1.0, 0.4), Bump(1.0, 0.4))
    g = CoeffTerm(Rep.PLUS, Bump(1.2, 0.5), Bump(1.2, 0.5), 1j)
    h = CoeffTerm(Rep.MINUS, Bump(2.2, 0.9), Bump(2.2, 0.9))
    r = derivation_residuals(f, g, h, cfg)
    assert abs(r["values"][0]) > 1e-6
    assert r["leibniz"] < 1e-9 * abs(r["values"][0])
    sym = derivation_residuals(f, g, h, cfg, product_rule="symbolic")
    assert abs(sym["values"][0] - r["values"][0]) < 1e-9 * abs(r["values"][0])


def test_zero_vector_gives_exact_zeros():
    zero = Scale(0.0, Bump(1.5, 0.5))
    t = CoeffTerm(Rep.PLUS, zero, Bump(1.5, 0.5))
    u = CoeffTerm(Rep.MINUS, Bump(1.5, 0.5), Bump(1.5, 0.5))
    g = AxbElement(0.1, 1.0)
    assert coeff_eval(t, g) == 0 and coeff_eval_fourier(t, g) == 0
    assert a_norm(t) == 0.0
    assert l2g_inner(t, u).value == 0 and d_flat(u, t).value == 0
    r = derivation_residuals(t, u, u)
    assert r["leibniz"] == 0.0 and r["key_margin"] == 0.0
