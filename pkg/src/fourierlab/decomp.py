"""Identities behind the l1-decompositions of A(G) for ax+b and the Heisenberg group.

ax+b: L^2(G) for left Haar measure is identified with L^2(R x R+*) for the
product measure db da/a, and W F(b, a) = F(b, |b| a).  Fourier transform in
the first variable sends W(eta (x) xi) to a plus coefficient when eta lives on
the positive half-line and to a minus coefficient when it lives on the
negative half-line.  Translating a plus coefficient by lambda(x) and pairing
with another plus coefficient factors through a minus coefficient of the
conjugated eta vectors.

Heisenberg: an explicit formula for left translates of f (x) chi_n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .axb import AxbElement, CoeffTerm, Rep, coeff_eval, l2g_inner, rep_apply
from .funcexpr import Conj, FuncExpr, Measure, PlaneFunc, PowerWeight, inner_product
from .heis import HeisElement
from .quadrature import QuadConfig, fourier_transform, integrate_interval

__all__ = [
    "L2GSample", "w_transform", "l2_norm_sq", "w_isometry_check", "ftw_lhs",
    "ftw_identity_check", "lambda_conv_sides", "lambda_conv_identity_check",
    "heis_translate", "heis_translation_rhs", "heis_translation_formula_check",
]

_FINE = QuadConfig(rel_tol=1e-12, abs_tol=1e-16)


@dataclass(frozen=True)
class L2GSample:
    """Function on R x R+* with compact support data.

    ``F(b, a)`` must broadcast over arrays.  ``b_support`` bounds the support
    in b; ``a_support`` bounds it in a for every b.
    """

    F: Callable
    b_support: tuple
    a_support: tuple
    label: str = ""

    @classmethod
    def separable(cls, phi: FuncExpr, psi: FuncExpr) -> "L2GSample":
        """F(b, a) = phi(b) psi(a)."""
        bs, as_ = phi.support(), psi.support()

        def F(b, a):
            b, a = np.broadcast_arrays(np.asarray(b, dtype=float), np.asarray(a, dtype=float))
            return phi.derivs(b)[0] * psi.derivs(a)[0]

        return cls(F,
                   (bs[0][0], bs[-1][1]), (as_[0][0], as_[-1][1]), "separable")

    def scaled(self, c: complex) -> "L2GSample":
        F = self.F
        return L2GSample(lambda b, a: c * F(b, a), self.b_support, self.a_support, self.label)


def w_transform(sample: L2GSample) -> Callable:
    """(b, a) -> F(b, |b| a)."""
    return lambda b, a: sample.F(b, np.abs(b) * a)


def _nested(f2: Callable, b_iv, a_iv_of_b: Callable, cfg: QuadConfig,
            log_scale: bool = True) -> float:
    """Integral of f2 for the measure db da/a.

    The inner integral runs in u = log a, or in a itself with weight 1/a when
    ``log_scale`` is False.
    """

    def outer(b):
        out = np.empty(b.size)
        for i, bi in enumerate(b):
            lo, hi = a_iv_of_b(bi)
            if not lo < hi:
                out[i] = 0.0
                continue
            if log_scale:
                out[i] = integrate_interval(lambda u: f2(bi, np.exp(u)),
                                            (math.log(lo), math.log(hi)), cfg).value.real
            else:
                out[i] = integrate_interval(lambda a: f2(bi, a) / a, (lo, hi), cfg).value.real
        return out

    return integrate_interval(outer, b_iv, cfg).value.real


def l2_norm_sq(sample: L2GSample, cfg: Optional[QuadConfig] = None) -> float:
    """||F||^2 for the measure db da/a."""
    cfg = cfg or _FINE
    return _nested(lambda b, a: np.abs(sample.F(b, a)) ** 2, sample.b_support,
                   lambda b: sample.a_support, cfg)


def w_isometry_check(sample: L2GSample, cfg: Optional[QuadConfig] = None) -> dict:
    """Relative defect | ||WF|| - ||F|| | / ||F||, both by nested quadrature.

    The support of WF in a is a_support / |b|; b = 0 is never a node of the
    Gauss rule, so the a-interval stays finite.  The two norms use different
    inner variables (log a for F, a for WF) so they share no nodes.
    """
    cfg = cfg or _FINE
    norm_f = math.sqrt(l2_norm_sq(sample, cfg))
    WF = w_transform(sample)
    alo, ahi = sample.a_support
    norm_wf = math.sqrt(max(_nested(lambda b, a: np.abs(WF(b, a)) ** 2, sample.b_support,
                                    lambda b: (alo / abs(b), ahi / abs(b)), cfg,
                                    log_scale=False), 0.0))
    residual = 0.0 if norm_f == 0 else abs(norm_wf - norm_f) / norm_f
    return {"norm": norm_f, "norm_w": norm_wf, "residual": residual}


def ftw_lhs(eta: FuncExpr, xi: FuncExpr, g: AxbElement, mirrored: bool = False,
            cfg: Optional[QuadConfig] = None) -> complex:
    """Fourier transform in b of W(eta (x) xi), evaluated at (b, a) = g.

    Computes int eta_s(s) xi(|s| a) exp(-2 pi i b s) ds where eta_s is eta
    itself, or its mirror s -> eta(-s) when ``mirrored``.
    """
    cfg = cfg or _FINE
    sign = -1.0 if mirrored else 1.0
    sup = eta.support()
    if not sup:
        return 0j
    lo, hi = sup[0][0], sup[-1][1]
    iv = (-hi, -lo) if mirrored else (lo, hi)

    def h(s):
        return eta.derivs(sign * s)[0] * xi.derivs(np.abs(s) * g.a)[0]

    return complex(fourier_transform(h, [iv], g.b, cfg))


def ftw_rhs(eta: FuncExpr, xi: FuncExpr, g: AxbElement, mirrored: bool = False) -> complex:
    """xi *_{pi+} conj(K eta), or xi *_{pi-} conj(K eta) in the mirrored case."""
    rep = Rep.MINUS if mirrored else Rep.PLUS
    return coeff_eval(CoeffTerm(rep, xi, Conj(PowerWeight(1.0, eta))), g)


def ftw_identity_check(eta: FuncExpr, xi: FuncExpr, points: Sequence[AxbElement],
                       mirrored: bool = False, cfg: Optional[QuadConfig] = None) -> dict:
    lhs = [ftw_lhs(eta, xi, g, mirrored, cfg) for g in points]
    rhs = [ftw_rhs(eta, xi, g, mirrored) for g in points]
    res = [abs(l - r) for l, r in zip(lhs, rhs)]
    return {"lhs": lhs, "rhs": rhs, "residual": max(res, default=0.0)}


def _kinv_inner(xi: FuncExpr, xi2: FuncExpr) -> complex:
    return inner_product(PowerWeight(-0.5, xi), PowerWeight(-0.5, xi2),
                         Measure.HAAR_HALFLINE, _FINE)


def lambda_conv_sides(xi, eta, xi2, eta2, x: AxbElement, rep2: Rep = Rep.PLUS,
                      cfg: Optional[QuadConfig] = None):
    """Both sides of <lambda(x)(xi *+ eta), xi2 *rep2 eta2>_{L2(G)}.

    lambda(x)(xi *+ eta) = xi *+ (pi+(x) eta), so the left side is an L^2(G)
    inner product of two coefficient functions.  The right side is
    <K^-1/2 xi, K^-1/2 xi2> (conj eta *- conj eta2)(x) for rep2 = PLUS and 0
    otherwise.  Returns (lhs IntegralResult, rhs).
    """
    moved = CoeffTerm(Rep.PLUS, xi, rep_apply(Rep.PLUS, x, eta))
    lhs = l2g_inner(moved, CoeffTerm(rep2, xi2, eta2), cfg)
    if rep2 is Rep.MINUS:
        return lhs, 0j
    rhs = _kinv_inner(xi, xi2) * coeff_eval(CoeffTerm(Rep.MINUS, Conj(eta), Conj(eta2)), x)
    return lhs, complex(rhs)


def lambda_conv_identity_check(xi, eta, xi2, eta2, points: Sequence[AxbElement],
                               cfg: Optional[QuadConfig] = None) -> dict:
    """Max residual over points for the same-sign and cross-sign pairings."""
    same, cross, tail = [], [], 0.0
    for x in points:
        lhs, rhs = lambda_conv_sides(xi, eta, xi2, eta2, x, Rep.PLUS, cfg)
        same.append(abs(lhs.value - rhs))
        tail = max(tail, lhs.tail_bound)
        lhs_c, _ = lambda_conv_sides(xi, eta, xi2, eta2, x, Rep.MINUS, cfg)
        cross.append(abs(lhs_c.value))
        tail = max(tail, lhs_c.tail_bound)
    return {"residual": max(same, default=0.0), "cross": max(cross, default=0.0),
            "tail_bound": tail}


def heis_translate(f: PlaneFunc, n: int, g: HeisElement, g2: HeisElement) -> complex:
    """(lambda(g)(f (x) chi_n))(g2) = (f (x) chi_n)(g^-1 g2)."""
    h = g.inverse() * g2
    return complex(f(np.array([h.p]), np.array([h.q]))[0] * np.exp(2j * np.pi * n * h.theta))


def heis_translation_rhs(f: PlaneFunc, n: int, g: HeisElement, g2: HeisElement) -> complex:
    """exp(-2 pi i n theta) exp(pi i n (-x y' + x' y)) f(x' - x, y' - y) exp(2 pi i n theta')."""
    x, y, t = g.p, g.q, g.theta
    x2, y2, t2 = g2.p, g2.q, g2.theta
    phase = np.exp(-2j * np.pi * n * t) * np.exp(1j * np.pi * n * (-x * y2 + x2 * y)) \
        * np.exp(2j * np.pi * n * t2)
    return complex(phase * f(np.array([x2 - x]), np.array([y2 - y]))[0])


def heis_translation_formula_check(f: PlaneFunc, n: int, g: HeisElement,
                                   g2: HeisElement) -> float:
    return abs(heis_translate(f, n, g, g2) - heis_translation_rhs(f, n, g, g2))
