import numpy as np
import pytest
from hypothesis import given, strategies as st

from fourierlab.axb import AxbElement
from fourierlab.decomp import (L2GSample, ftw_identity_check, heis_translate,
                               heis_translation_formula_check, lambda_conv_identity_check,
                               w_isometry_check)
from fourierlab.funcexpr import Bump, Scale, random_plane
from fourierlab.heis import HeisElement
from fourierlab.quadrature import Certified, QuadConfig

POINTS = [AxbElement(b, a) for b, a in [(0.0, 1.0), (0.7, 0.6), (-1.3, 2.1), (2.5, 1.4)]]
heis_points = st.builds(HeisElement, st.floats(-3, 3), st.floats(-3, 3), st.floats(0, 1))


@pytest.mark.parametrize("mirrored", [False, True])
def test_fourier_transform_of_w(mirrored):
    r = ftw_identity_check(Bump(1.5, 0.7) + Scale(0.4j, Bump(2.6, 0.5)), Bump(2.0, 1.2),
                           POINTS, mirrored)
    assert r["residual"] < 1e-10
    assert max(abs(v) for v in r["rhs"]) > 1e-3


def test_w_isometry():
    r = w_isometry_check(L2GSample.separable(Bump(0.5, 1.0), Bump(1.5, 0.8)))
    assert r["norm"] > 0
    assert r["residual"] < 1e-8


def test_lambda_convolution():
    cfg = QuadConfig(rel_tol=1e-9, abs_tol=1e-16, b_cutoff_policy=Certified(1e-9))
    r = lambda_conv_identity_check(Bump(2.0, 1.0), Bump(1.5, 0.6), Bump(2.2, 0.9),
                                   Bump(1.4, 0.5), POINTS[:2], cfg)
    assert r["residual"] < 1e-8
    assert r["cross"] < 1e-8


@given(heis_points, heis_points, st.integers(-3, 3), st.integers(0, 2**32 - 1))
def test_heisenberg_translation_formula(g, g2, n, seed):
    f = random_plane(np.random.default_rng(seed))
    assert heis_translation_formula_check(f, n, g, g2) < 1e-10


def test_translation_by_identity_is_evaluation():
    f = random_plane(np.random.default_rng(5))
    g2 = HeisElement(0.3, -0.2, 0.25)
    expect = f(np.array([0.3]), np.array([-0.2]))[0] * np.exp(2j * np.pi * 2 * 0.25)
    assert abs(heis_translate(f, 2, HeisElement.identity(), g2) - expect) < 1e-14
