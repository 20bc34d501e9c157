"""Identity checks run by the command line tool.

Each suite draws a seeded corpus, evaluates both sides of one identity or
estimate per item and returns ``Record`` objects.  A record passes when
``residual <= tolerance``; truncation certificates are reported alongside
and, where a suite demands it, checked by a separate record.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional

import numpy as np

from . import axb, decomp, heis, su2
from .corpus import CorpusSpec, digest, gen_corpus
from .funcexpr import Measure, PowerWeight, inner_product, l2_norm
from .quadrature import Certified, QuadConfig

__all__ = ["Record", "Suite", "SUITES", "RunContext", "run_suite"]

_NORM_CFG = QuadConfig(rel_tol=1e-13, abs_tol=1e-18)
_ORTHO_CFG = QuadConfig(rel_tol=1e-10, abs_tol=1e-16, b_cutoff_policy=Certified(1e-9))
_TIGHT_CFG = QuadConfig(rel_tol=1e-9, abs_tol=1e-16, b_cutoff_policy=Certified(1e-9))
_MID_CFG = QuadConfig(rel_tol=1e-8, b_cutoff_policy=Certified(1e-8))
_FAST_CFG = QuadConfig(rel_tol=1e-7, b_cutoff_policy=Certified(1e-7))


@dataclass
class Record:
    id: str
    inputs_digest: str
    lhs: object
    rhs: object
    residual: float
    tolerance: float
    tail_bound: float = 0.0
    wall_time_ms: float = 0.0

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.residual) and self.residual <= self.tolerance)


@dataclass
class RunContext:
    seed: int
    quad: Optional[QuadConfig] = None  # overrides every suite's own default
    corpus_size: Optional[int] = None
    max_n_heis: int = 3
    max_n_su2: int = 4


@dataclass(frozen=True)
class Suite:
    id: str
    title: str
    statement: str
    source: str
    tolerance: float
    default_size: int
    kind: Optional[str]
    run: Callable
    quad: QuadConfig = field(default_factory=lambda: _FAST_CFG)

    def corpus_spec(self, ctx: RunContext) -> Optional[CorpusSpec]:
        if self.kind is None:
            return None
        size = self.default_size if ctx.corpus_size is None else ctx.corpus_size
        params = (("n_max", ctx.max_n_su2),) if self.kind.startswith("su2.") else ()
        return CorpusSpec(self.kind, size, params)


class _Emitter:
    """Collects records, timing each one from the previous emission.

    ``override`` replaces every per-record tolerance; ``tol_scale``
    multiplies whichever tolerance applies.
    """

    def __init__(self, suite: Suite, tol: float, override: Optional[float] = None,
                 tol_scale: float = 1.0):
        self.suite, self.tol, self.override, self.tol_scale = suite, tol, override, tol_scale
        self.out = []
        self._t = time.perf_counter()

    def __call__(self, index, label, item, lhs, rhs, residual, tail=0.0, tol=None):
        now = time.perf_counter()
        if self.override is not None:
            tol = self.override
        elif tol is None:
            tol = self.tol
        self.out.append(Record(f"{self.suite.id}[{index}].{label}", digest(item), lhs, rhs,
                               float(residual), float(tol * self.tol_scale),
                               float(tail), (now - self._t) * 1e3))
        self._t = now


def _rel(a, b, scale) -> float:
    return abs(a - b) / scale if scale > 0 else abs(a - b)


def _hnorm(f) -> float:
    return l2_norm(f, Measure.HAAR_HALFLINE, _NORM_CFG)


def _lnorm(f) -> float:
    return l2_norm(f, Measure.LEBESGUE_LINE, _NORM_CFG)


# --- ax+b --------------------------------------------------------------------

def _axb_orthogonality(items, emit, cfg, ctx):
    for i, q in enumerate(items):
        kx1 = _hnorm(PowerWeight(-0.5, q["xi1"]))
        kx2 = _hnorm(PowerWeight(-0.5, q["xi2"]))
        scale = kx1 * kx2 * _hnorm(q["eta1"]) * _hnorm(q["eta2"])
        same = decomp._kinv_inner(q["xi1"], q["xi2"]) * \
            inner_product(q["eta2"], q["eta1"], Measure.HAAR_HALFLINE, _NORM_CFG)
        tails = []
        for label, r1, r2 in (("plus", axb.Rep.PLUS, axb.Rep.PLUS),
                              ("minus", axb.Rep.MINUS, axb.Rep.MINUS),
                              ("cross", axb.Rep.PLUS, axb.Rep.MINUS)):
            res = axb.l2g_inner(axb.CoeffTerm(r1, q["xi1"], q["eta1"]),
                                axb.CoeffTerm(r2, q["xi2"], q["eta2"]), cfg, scale=scale)
            tails.append(res.tail_bound)
            if r1 is r2:
                emit(i, label, q, res.value, same, _rel(res.value, same, scale), res.tail_bound)
            else:
                emit(i, label, q, res.value, 0j, abs(res.value), res.tail_bound)
        emit(i, "tail_certificate", q, max(tails), scale, max(tails) / scale if scale else 0.0,
             tol=1e-8)


def _axb_madb_fd(items, emit, cfg, ctx):
    h = 1e-4
    for i, it in enumerate(items):
        term, g = it["term"], it["point"]
        lhs = axb.coeff_eval(axb.madb(term), g, _NORM_CFG)
        vals = [axb.coeff_eval(term, axb.AxbElement(g.b + k * h, g.a), _NORM_CFG)
                for k in (-2, -1, 1, 2)]
        d_b = (vals[0] - 8 * vals[1] + 8 * vals[2] - vals[3]) / (12 * h)
        rhs = -g.a * d_b / (2j * math.pi)
        emit(i, "fd", it, lhs, rhs, _rel(lhs, rhs, max(1.0, abs(rhs))))


def _axb_key_estimate(items, emit, cfg, ctx):
    for i, it in enumerate(items):
        r = axb.key_estimate(it["f"], it["g"], cfg)
        bound = r["bound"]
        emit(i, "margin", it, abs(r["d_flat"]), bound,
             max(0.0, -r["margin"]) / bound if bound else 0.0, r["tail_bound"])
        emit(i, "antisym", it, r["d_flat"], -r["d_flat_swapped"], r["antisym"], r["tail_bound"])


def _axb_nonvanishing(items, emit, cfg, ctx):
    for i, it in enumerate(items):
        xi = it["xi"]
        f = axb.CoeffTerm(axb.Rep.PLUS, xi, xi)
        n4 = _hnorm(xi) ** 4
        res = axb.d_flat(f, axb.conj_term(f), cfg, scale=n4)
        emit(i, "tight", it, res.value, n4, _rel(res.value, n4, n4), res.tail_bound)


def _axb_factor_norm(x) -> float:
    out = 0.0
    for c, factors in axb.as_algebra(x).monomials:
        out += abs(c) * math.prod(axb.a_norm(t) for t in factors)
    return out


def _axb_leibniz(items, emit, cfg, ctx):
    for i, it in enumerate(items):
        f, g, h = it["f"], it["g"], it["h"]
        scale = _axb_factor_norm(f) * _axb_factor_norm(g) * _axb_factor_norm(h)
        r = axb.derivation_residuals(f, g, h, cfg, scale=scale)
        v = r["values"]
        emit(i, "product" if it["has_product"] else "single", it, v[0], v[1] + v[2],
             r["leibniz"] / scale, r["tail_bound"])


# --- Heisenberg ----------------------------------------------------------------

def _heis_orders(ctx):
    return [s * n for n in range(1, ctx.max_n_heis + 1) for s in (1, -1)]


def _heis_square_integrable(items, emit, cfg, ctx):
    for i, it in enumerate(items):
        nn = _lnorm(it["xi"]) ** 2 * _lnorm(it["eta"]) ** 2
        for n in _heis_orders(ctx):
            t = heis.SchCoeffTerm(n, it["xi"], it["eta"])
            expect = nn / abs(n)
            res = heis.heis_l2_inner(t, t, cfg, scale=expect)
            emit(i, f"n{n:+d}", it, res.value.real, expect, _rel(res.value.real, expect, expect),
                 res.tail_bound)


def _heis_cross_orthogonality(items, emit, cfg, ctx):
    orders = _heis_orders(ctx)
    for i, it in enumerate(items):
        n = orders[i % len(orders)]
        m = orders[(i + 1 + i // len(orders)) % len(orders)]
        if m == n:
            m = -n
        scale = math.prod(_lnorm(it[k]) for k in ("xi", "eta", "xi2", "eta2"))
        u = heis.SchCoeffTerm(n, it["xi"], it["eta"])
        same = heis.heis_l2_inner(u, heis.SchCoeffTerm(n, it["xi2"], it["eta2"]), cfg,
                                  scale=scale)
        expect = (inner_product(it["xi"], it["xi2"], Measure.LEBESGUE_LINE, _NORM_CFG)
                  * inner_product(it["eta2"], it["eta"], Measure.LEBESGUE_LINE, _NORM_CFG)
                  / abs(n))
        emit(i, f"same_n{n:+d}", it, same.value, expect, _rel(same.value, expect, scale),
             same.tail_bound, tol=1e-6)
        cross = heis.heis_l2_inner(u, heis.SchCoeffTerm(m, it["xi2"], it["eta2"]), cfg,
                                   scale=scale)
        emit(i, f"n{n:+d}_m{m:+d}", it, cross.value, 0j, abs(cross.value), cross.tail_bound)


def _heis_nonvanishing(items, emit, cfg, ctx):
    orders = _heis_orders(ctx)
    for i, it in enumerate(items):
        n = orders[i % len(orders)]
        v = heis.SchCoeffTerm(n, it["xi"], it["eta"])
        nn = _lnorm(it["xi"]) ** 2 * _lnorm(it["eta"]) ** 2
        res = heis.d_flat_heis(v, heis.conj_term(v), cfg, scale=nn)
        # the value carries sign(n); the check is on the modulus
        emit(i, f"n{n:+d}", it, res.value, math.copysign(nn, n),
             abs(abs(res.value) - nn) / nn, res.tail_bound)


def _heis_lambda0_zero(items, emit, cfg, ctx):
    for i, it in enumerate(items):
        v = heis.HrElem((it["v"],), (it["v0"],))
        w = heis.HrElem((it["w"],), (it["w0"],))
        res = heis.heis_haar_integral([heis._d_flat_component(v, w),
                                       heis._d_flat_component(it["v"], it["w"])], cfg)
        a, b = (complex(z) for z in res.value)
        emit(i, "added", it, a, b, abs(a - b), res.tail_bound)


def _heis_key_estimate(items, emit, cfg, ctx):
    for i, it in enumerate(items):
        r = heis.key_estimate_heis(it["v"], it["w"], cfg)
        bound = r["bound"]
        emit(i, "margin", it, abs(r["d_flat"]), bound,
             max(0.0, -r["margin"]) / bound if bound else 0.0, r["tail_bound"])
        emit(i, "antisym", it, r["d_flat"], -r["d_flat_swapped"], r["antisym"], r["tail_bound"])


def _heis_leibniz(items, emit, cfg, ctx):
    for i, it in enumerate(items):
        f, g, h = it["f"], it["g"], it["h"]
        scale = math.prod(heis.a_norm_heis(x)[0] for x in (f, g, h))
        r = heis.derivation_residuals_heis(f, g, h, cfg)
        v = r["values"]
        emit(i, "leibniz", it, complex(v[0]), complex(v[1] + v[2]),
             r["leibniz"] / scale if scale else r["leibniz"], r["tail_bound"])


# --- SU(2) ---------------------------------------------------------------------

def _su2_schur(items, emit, cfg, ctx):
    for i, it in enumerate(items):
        f = su2.TrigPoly((su2.TrigTerm.make(it["n1"], it["xi1"], it["eta1"]),))
        g = su2.TrigPoly((su2.TrigTerm.make(it["n2"], it["xi2"], it["eta2"]),))
        res = su2.su2_l2_inner(f, g)
        expect = su2.schur_pairing(it["n1"], it["xi1"], it["eta1"],
                                   it["n2"], it["xi2"], it["eta2"])
        emit(i, f"n{it['n1']}_m{it['n2']}", it, res.value, expect, abs(res.value - expect))


def _su2_f_pi_bound(items, emit, cfg, ctx):
    for n in range(ctx.max_n_su2 + 1):
        lhs = su2.f_pi_norm_ratio(n)
        rhs = n / (2 * n + 2)
        emit(n, f"n{n}", {"n": n}, lhs, rhs, abs(lhs - rhs))


def _su2_key_estimate(items, emit, cfg, ctx):
    for i, it in enumerate(items):
        f, g = it["f"], it["g"]
        d_fg = su2.d_flat_su2(f, g).value
        d_gf = su2.d_flat_su2(g, f).value
        bound = 0.5 * su2.a_norm_su2(f) * su2.a_norm_su2(g)
        emit(i, "margin", it, abs(d_fg), bound, max(0.0, abs(d_fg) - bound) / bound if bound else 0.0)
        emit(i, "antisym", it, d_fg, -d_gf, abs(d_fg + d_gf), tol=1e-8)


def _su2_nonvanishing(items, emit, cfg, ctx):
    top = np.array([1.0, 0.0, 0.0])  # highest weight vector of the n = 2 block
    f = su2.TrigPoly((su2.TrigTerm.make(2, top, top),))
    val = su2.d_flat_su2(f, su2.conj_trig(f)).value
    emit(0, "n2_top", {"n": 2, "xi": top, "eta": top}, val, 1j / 3, abs(val - 1j / 3))


# --- decompositions ------------------------------------------------------------

def _decomp_ftw(items, emit, cfg, ctx):
    for i, it in enumerate(items):
        for mirrored in (False, True):
            r = decomp.ftw_identity_check(it["eta"], it["xi"], it["points"], mirrored)
            k = int(np.argmax([abs(a - b) for a, b in zip(r["lhs"], r["rhs"])]))
            emit(i, "mirrored" if mirrored else "direct", it, r["lhs"][k], r["rhs"][k],
                 r["residual"])


def _decomp_lambda_conv(items, emit, cfg, ctx):
    for i, it in enumerate(items):
        args = (it["xi"], it["eta"], it["xi2"], it["eta2"])
        r = decomp.lambda_conv_identity_check(*args, it["points"], cfg)
        emit(i, "same", it, r["residual"], 0.0, r["residual"], r["tail_bound"])
        emit(i, "cross", it, r["cross"], 0.0, r["cross"], r["tail_bound"])
        # at the identity the convolution reduces to the orthogonality relation
        lhs, rhs = decomp.lambda_conv_sides(*args, axb.AxbElement.identity(), axb.Rep.PLUS, cfg)
        ortho = decomp._kinv_inner(it["xi"], it["xi2"]) * \
            inner_product(it["eta2"], it["eta"], Measure.HAAR_HALFLINE, _NORM_CFG)
        emit(i, "identity", it, lhs.value, ortho, abs(lhs.value - ortho), lhs.tail_bound)


def _decomp_w_isometry(items, emit, cfg, ctx):
    for i, it in enumerate(items):
        r = decomp.w_isometry_check(decomp.L2GSample.separable(it["phi"], it["psi"]))
        emit(i, "norm", it, r["norm_w"], r["norm"], r["residual"])


def _decomp_heis_translation(items, emit, cfg, ctx):
    for i, it in enumerate(items):
        lhs = decomp.heis_translate(it["f"], it["n"], it["g"], it["g2"])
        rhs = decomp.heis_translation_rhs(it["f"], it["n"], it["g"], it["g2"])
        emit(i, "formula", it, lhs, rhs, abs(lhs - rhs))


_SUITES = [
    Suite("axb.orthogonality", "ax+b orthogonality relations",
          "<xi1 * eta1, xi2 * eta2> = <K^-1/2 xi1, K^-1/2 xi2> <eta2, eta1> for equal signs "
          "and 0 across signs, with b-tail certificates below 1e-8 of the norm product.",
          "explicit orthogonality relations for the ax+b group", 1e-6, 20, "axb.quadruple",
          _axb_orthogonality, _ORTHO_CFG),
    Suite("axb.madb_fd", "M_a d_b on coefficients",
          "M_a d_b (xi *+- eta) = +-(K xi) *+- eta, checked against a central difference in b.",
          "derivative of a coefficient function", 1e-6, 50, "axb.fd", _axb_madb_fd),
    Suite("axb.key_estimate", "ax+b key estimate and cyclicity",
          "|D(f, g)| <= ||f||_A ||g||_A and D(f, g) = -D(g, f) on finite sums of coefficients.",
          "the key estimate for D on the ax+b group", 1e-6, 200, "axb.pair",
          _axb_key_estimate),
    Suite("axb.nonvanishing", "ax+b derivation is non-zero",
          "D(xi *+ xi, conj(xi *+ xi)) = ||xi||^4, so the bound of the key estimate is attained.",
          "non-zero cyclic derivation on A(ax+b)", 1e-6, 10, "axb.vector", _axb_nonvanishing,
          _TIGHT_CFG),
    Suite("axb.leibniz", "ax+b Leibniz rule",
          "D(fg, h) = D(f, gh) + D(g, hf), residual relative to the product of A-norms.",
          "cyclic derivation property on A(ax+b)", 1e-6, 50, "axb.triple", _axb_leibniz),
    Suite("heis.square_integrable", "Schroedinger coefficients are square integrable",
          "||xi *n eta||^2 = ||xi||^2 ||eta||^2 / |n| for n = +-1 .. +-max_n.",
          "square integrability of the Schroedinger representations", 1e-6, 20, "heis.pair",
          _heis_square_integrable, _MID_CFG),
    Suite("heis.cross_orthogonality", "Heisenberg orthogonality relations",
          "<xi *n eta, xi2 *m eta2> = 0 for n != m, and equals <xi, xi2> <eta2, eta> / |n| "
          "for n = m.",
          "explicit orthogonality relations for the reduced Heisenberg group", 1e-8, 20,
          "heis.pair", _heis_cross_orthogonality, _MID_CFG),
    Suite("heis.nonvanishing", "Heisenberg derivation is non-zero",
          "|D(xi *n eta, conj(xi *n eta))| = ||xi||^2 ||eta||^2; the value carries sign(n).",
          "non-zero cyclic derivation on A(H_r)", 1e-6, 18, "heis.pair", _heis_nonvanishing,
          _TIGHT_CFG),
    Suite("heis.lambda0_zero", "lambda_0 terms do not contribute",
          "Adding lambda_0 coefficients to both arguments leaves D unchanged.",
          "the theta-derivative kills the lambda_0 part", 1e-10, 10, "heis.lambda0",
          _heis_lambda0_zero, _TIGHT_CFG),
    Suite("heis.key_estimate", "Heisenberg key estimate and cyclicity",
          "|D(v, w)| <= ||v||_A ||w||_A and D(v, w) = -D(w, v).",
          "the key estimate for D on the reduced Heisenberg group", 1e-6, 100,
          "heis.key_pair", _heis_key_estimate),
    Suite("heis.leibniz", "Heisenberg Leibniz rule",
          "D(fg, h) = D(f, gh) + D(g, hf), residual relative to the product of A-norms.",
          "cyclic derivation property on A(H_r)", 1e-6, 20, "heis.triple", _heis_leibniz),
    Suite("su2.schur", "Schur orthogonality on SU(2)",
          "Integral of <D xi1, eta1> conj<D xi2, eta2> = delta <xi1, xi2> <eta2, eta1> / (n+1).",
          "Schur orthogonality for SU(2)", 1e-8, 25, "su2.vectors", _su2_schur),
    Suite("su2.f_pi_bound", "Norm of the weight operator",
          "||F_n|| / dim = n / (2n + 2) for F_n = d/dphi pi_n(s(phi)) at 0.",
          "operator bound behind the SU(2) derivation", 1e-12, 0, None, _su2_f_pi_bound),
    Suite("su2.key_estimate", "SU(2) key estimate and cyclicity",
          "|D(f, g)| <= 1/2 ||f||_A ||g||_A on trigonometric polynomials, and D is antisymmetric.",
          "bounded derivation on A(SU(2))", 1e-10, 200, "su2.pair", _su2_key_estimate),
    Suite("su2.nonvanishing", "SU(2) derivation is non-zero",
          "D(f, conj f) = i/3 for the highest weight vector of the n = 2 block.",
          "non-zero derivation on A(SU(2))", 1e-8, 0, None, _su2_nonvanishing),
    Suite("decomp.ftw", "Fourier transform of W",
          "The b-Fourier transform of W(eta x xi) is xi *+ conj(K eta), and xi *- conj(K eta) "
          "for the mirrored eta.",
          "l1-decomposition of A(ax+b)", 1e-5, 3, "decomp.input", _decomp_ftw),
    Suite("decomp.lambda_conv", "Translated coefficients",
          "<lambda(x)(xi *+ eta), xi2 *+ eta2> = <K^-1/2 xi, K^-1/2 xi2> (conj eta *- conj eta2)(x) "
          "and 0 against minus coefficients.",
          "l1-decomposition of A(ax+b)", 1e-5, 3, "decomp.input", _decomp_lambda_conv,
          _TIGHT_CFG),
    Suite("decomp.w_isometry", "W is an isometry",
          "||W F|| = ||F|| on L^2(R x R+*, db da/a).",
          "l1-decomposition of A(ax+b)", 1e-8, 5, "decomp.w_sample", _decomp_w_isometry),
    Suite("decomp.heis_translation", "Heisenberg translation formula",
          "lambda(g)(f x chi_n) at g2 equals the explicit phase times f(x2 - x, y2 - y).",
          "l1-decomposition of A(H_r)", 1e-10, 20, "heis.point", _decomp_heis_translation),
]

SUITES: Dict[str, Suite] = {s.id: s for s in _SUITES}


def run_suite(suite: Suite, ctx: RunContext, tolerance: Optional[float] = None,
              tol_scale: float = 1.0) -> dict:
    """Run one suite; returns {"records": [...], "corpus_digest": str or None}."""
    spec = suite.corpus_spec(ctx)
    items = gen_corpus(ctx.seed, spec) if spec is not None else []
    emit = _Emitter(suite, suite.tolerance, tolerance, tol_scale)
    suite.run(items, emit, ctx.quad or suite.quad, ctx)
    return {"records": emit.out, "corpus_digest": digest(items) if spec is not None else None}
