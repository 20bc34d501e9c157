import numpy as np
import pytest
from hypothesis import given, strategies as st

from fourierlab.errors import DomainError
from fourierlab.su2 import (SU2Element, SU2Irrep, TrigPoly, TrigTerm, a_norm_su2, conj_intertwiner,
                            conj_trig, d_flat_su2, f_pi, f_pi_norm_ratio, haar_integrate_su2,
                            partial_phi, s_phi, schur_pairing, su2_l2_inner, trig_eval,
                            wigner_d, wigner_d_batch)

seeds = st.integers(0, 2**32 - 1)
blocks = st.integers(0, 4)


def _vec(rng, n):
    return rng.normal(size=n + 1) + 1j * rng.normal(size=n + 1)


def _poly(rng, n_max=4, k=3):
    return TrigPoly(tuple(TrigTerm.make(n, _vec(rng, n), _vec(rng, n), complex(rng.normal()))
                          for n in rng.integers(0, n_max + 1, size=k)))


@given(seeds, blocks)
def test_representation_is_unitary_homomorphism(seed, n):
    rng = np.random.default_rng(seed)
    g, h = SU2Element.random(rng), SU2Element.random(rng)
    dg, dh = wigner_d(n, g), wigner_d(n, h)
    assert np.allclose(wigner_d(n, g * h), dg @ dh, atol=1e-12)
    assert np.allclose(dg @ dg.conj().T, np.eye(n + 1), atol=1e-12)


@given(seeds, blocks)
def test_conjugate_representation_is_intertwined(seed, n):
    g = SU2Element.random(np.random.default_rng(seed))
    j = conj_intertwiner(n)
    assert np.allclose(np.conj(wigner_d(n, g)), j @ wigner_d(n, g) @ np.linalg.inv(j), atol=1e-12)


@given(seeds)
def test_euler_angles_round_trip(seed):
    g = SU2Element.random(np.random.default_rng(seed))
    assert np.allclose(SU2Element.from_euler(*g.euler()).matrix(), g.matrix(), atol=1e-12)


def test_non_unit_quaternion_rejected():
    with pytest.raises((ValueError, DomainError)):
        SU2Element(1.0, 1.0, 0.0, 0.0)


def test_weight_operator():
    for n in range(5):
        d = wigner_d(n, s_phi(0.3))
        assert np.allclose(d, np.diag(np.exp(0.3j * (n - 2 * np.arange(n + 1)) / 2)), atol=1e-14)
        # [DERIVED] operator norm of diag(i (n - 2k) / 2) over dim n + 1
        assert abs(f_pi_norm_ratio(n) - n / (2 * n + 2)) < 1e-12
    assert SU2Irrep(3).dim == 4


def test_haar_integrals_of_constants_and_squares():
    assert abs(haar_integrate_su2(lambda u: np.ones(u.shape[0]), 0).value - 1) < 1e-14
    for n in range(5):
        res = haar_integrate_su2(lambda u: np.abs(wigner_d_batch(n, u)[:, 0, n]) ** 2, n)
        assert abs(res.value - 1 / (n + 1)) < 1e-13


@given(seeds, blocks, blocks)
def test_schur_orthogonality(seed, n1, n2):
    rng = np.random.default_rng(seed)
    x1, y1, x2, y2 = _vec(rng, n1), _vec(rng, n1), _vec(rng, n2), _vec(rng, n2)
    f = TrigPoly((TrigTerm.make(n1, x1, y1),))
    g = TrigPoly((TrigTerm.make(n2, x2, y2),))
    assert abs(su2_l2_inner(f, g).value - schur_pairing(n1, x1, y1, n2, x2, y2)) < 1e-10


@given(seeds)
def test_partial_phi_matches_finite_difference(seed):
    rng = np.random.default_rng(seed)
    f = _poly(rng)
    g = SU2Element.random(rng)
    h = 1e-6
    fd = (f(g * s_phi(h)) - f(g * s_phi(-h))) / (2 * h)
    assert abs(fd - partial_phi(f)(g)) < 1e-6 * max(1.0, abs(fd))


@given(seeds)
def test_conjugate_polynomial(seed):
    rng = np.random.default_rng(seed)
    f = _poly(rng)
    u = np.stack([SU2Element.random(rng).matrix() for _ in range(5)])
    assert np.allclose(trig_eval(conj_trig(f), u), np.conj(trig_eval(f, u)), atol=1e-12)


def test_derivation_value_on_highest_weight():
    # [PAPER] D(f, conj f) = i/3 for the highest weight vector of the n = 2 block
    top = np.array([1.0, 0, 0])
    f = TrigPoly((TrigTerm.make(2, top, top),))
    assert abs(d_flat_su2(f, conj_trig(f)).value - 1j / 3) < 1e-12


@given(seeds)
def test_key_estimate_and_antisymmetry(seed):
    rng = np.random.default_rng(seed)
    f, g = _poly(rng), _poly(rng)
    g = g + conj_trig(f)
    d_fg, d_gf = d_flat_su2(f, g).value, d_flat_su2(g, f).value
    assert abs(d_fg) <= 0.5 * a_norm_su2(f) * a_norm_su2(g) * (1 + 1e-12)
    assert abs(d_fg + d_gf) < 1e-10 * max(1.0, abs(d_fg))


def test_a_norm_of_rank_one():
    rng = np.random.default_rng(0)
    x, y = _vec(rng, 3), _vec(rng, 3)
    f = TrigPoly((TrigTerm.make(3, x, y, 2.0),))
    assert a_norm_su2(f) == pytest.approx(2 * np.linalg.norm(x) * np.linalg.norm(y), rel=1e-12)


def test_f_pi_shape():
    assert np.allclose(f_pi(2), np.diag([1j, 0, -1j]))
