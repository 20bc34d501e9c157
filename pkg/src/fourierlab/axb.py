"""Coefficient functions and the derivation D_flat on the ax+b group.

Group law (b, a)(b', a') = (b + a b', a a') with left Haar measure
a^-2 da db.  The two infinite-dimensional irreducible representations act
on H = L^2((0, inf), dt/t) by

    pi_plus(b, a) xi(t)  = exp(-2 pi i b t) xi(a t)
    pi_minus(b, a) xi(t) = exp(+2 pi i b t) xi(a t)

and the coefficient function of (xi, eta) is <pi(b, a) xi, eta>_H.

Haar integrals of products of coefficient functions are evaluated with an
FFT sampler: for fixed a, b -> (xi * eta)(b, a) is the Fourier transform of
g_a(t) = xi(a t) conj(eta(t)) / t, a smooth compactly supported function.
Sampling g_a on a uniform t-grid and taking one FFT gives the coefficient
function on a uniform b-grid; the product of several coefficient
functions is band limited in b, so a trapezoid sum in b below the Nyquist
step is exact up to truncation at |b| > B.  The truncation is bounded by
repeated integration by parts (see ``coefficient_derivative_constants``).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Optional, Sequence, Union

import numpy as np
import scipy.fft

from .funcexpr import (Conj, Dilate, FuncExpr, Measure, Modulate, PowerWeight,
                       inner_product, max_frequency)
from .bandlimited import (alias_model, choose_cell_cutoffs, choose_cell_margins,
                          product_envelope, tail_model)
from .quadrature import (Certified, IntegralResult, QuadConfig, fourier_transform,
                         integrate_axb_haar, integrate_interval)

__all__ = [
    "AxbElement", "Rep", "CoeffTerm", "CoeffSum", "AlgebraElem", "rep_apply",
    "coeff_eval", "coeff_eval_via_rep", "coeff_eval_fourier", "conj_term",
    "madb", "madb_algebra", "l2g_inner", "d_flat", "a_norm",
    "derivation_residuals", "key_estimate", "haar_integral",
    "coefficient_derivative_constants", "term_a_support", "evaluate_algebra",
]

TAIL_ORDER = 8


@dataclass(frozen=True)
class AxbElement:
    b: float
    a: float

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError("a must be positive")

    def __mul__(self, other: "AxbElement") -> "AxbElement":
        return AxbElement(self.b + self.a * other.b, self.a * other.a)

    def inverse(self) -> "AxbElement":
        return AxbElement(-self.b / self.a, 1.0 / self.a)

    @staticmethod
    def identity() -> "AxbElement":
        return AxbElement(0.0, 1.0)


class Rep(enum.Enum):
    PLUS = 1
    MINUS = -1

    @property
    def sign(self) -> int:
        return self.value

    def flip(self) -> "Rep":
        return Rep.MINUS if self is Rep.PLUS else Rep.PLUS


@dataclass(frozen=True)
class CoeffTerm:
    """weight * (xi *_rep eta)."""

    rep: Rep
    xi: FuncExpr
    eta: FuncExpr
    weight: complex = 1.0 + 0j


@dataclass(frozen=True)
class CoeffSum:
    terms: tuple

    def __iter__(self):
        return iter(self.terms)


@dataclass(frozen=True)
class AlgebraElem:
    """Finite sum of products of coefficient functions.

    ``monomials`` is a tuple of ``(coefficient, factors)`` pairs, where
    ``factors`` is a tuple of ``CoeffTerm``.
    """

    monomials: tuple

    def __mul__(self, other):
        other = as_algebra(other)
        return AlgebraElem(tuple((c1 * c2, f1 + f2)
                                 for c1, f1 in self.monomials
                                 for c2, f2 in other.monomials))

    def __add__(self, other):
        return AlgebraElem(self.monomials + as_algebra(other).monomials)

    def scale(self, c) -> "AlgebraElem":
        return AlgebraElem(tuple((c * m, f) for m, f in self.monomials))


Element = Union[CoeffTerm, CoeffSum, AlgebraElem]


def as_algebra(x: Element) -> AlgebraElem:
    """Wrap an element as a sum of products.  Sums stay unexpanded factors."""
    if isinstance(x, AlgebraElem):
        return x
    if isinstance(x, (CoeffTerm, CoeffSum)):
        return AlgebraElem(((1.0 + 0j, (x,)),))
    raise TypeError(f"not an ax+b algebra element: {type(x).__name__}")


def _terms(factor) -> tuple:
    if isinstance(factor, MadbOf):
        return tuple(t for _, fs in factor.elem.monomials for f in fs for t in _terms(f))
    return (factor,) if isinstance(factor, CoeffTerm) else tuple(factor.terms)


@dataclass(frozen=True)
class MadbOf:
    """M_a d_b of a sum of products, taken numerically on its b-samples.

    Used as a factor inside Haar integrals when the product rule must not be
    applied symbolically.  The samples of a product are band limited in b,
    so the derivative is computed spectrally on the uniform b-grid.
    """

    elem: AlgebraElem


def _conj(f: FuncExpr) -> FuncExpr:
    return f.f if isinstance(f, Conj) else Conj(f)


def conj_term(term: CoeffTerm) -> CoeffTerm:
    """Complex conjugate: conj(xi *_{pi+} eta) = conj(xi) *_{pi-} conj(eta)."""
    return CoeffTerm(term.rep.flip(), _conj(term.xi), _conj(term.eta),
                     complex(np.conj(term.weight)))


def conj_factor(factor):
    if isinstance(factor, CoeffTerm):
        return conj_term(factor)
    return CoeffSum(tuple(conj_term(t) for t in factor.terms))


def conj_algebra(x: Element) -> AlgebraElem:
    return AlgebraElem(tuple((complex(np.conj(c)), tuple(conj_factor(t) for t in f))
                             for c, f in as_algebra(x).monomials))


def rep_apply(rep: Rep, g: AxbElement, xi: FuncExpr) -> FuncExpr:
    """pi(g) xi as an expression: t -> exp(-+ 2 pi i b t) xi(a t)."""
    return Modulate(-rep.sign * g.b, Dilate(g.a, xi))


def _hull(intervals):
    return (intervals[0][0], intervals[-1][1]) if intervals else None


def term_a_support(term: CoeffTerm):
    """Interval of a on which (xi * eta)(., a) can be non-zero, or None."""
    sx, se = _hull(term.xi.support()), _hull(term.eta.support())
    if sx is None or se is None or term.weight == 0:
        return None
    if se[0] <= 0 or sx[0] <= 0:
        raise ValueError("ax+b vectors must be supported in (0, inf)")
    return (sx[0] / se[1], sx[1] / se[0])


def _t_interval(term: CoeffTerm, a: float):
    sx, se = _hull(term.xi.support()), _hull(term.eta.support())
    if sx is None or se is None:
        return None
    lo = max(se[0], sx[0] / a)
    hi = min(se[1], sx[1] / a)
    return (lo, hi) if lo < hi else None


def coeff_eval(term: CoeffTerm, g: AxbElement, cfg: Optional[QuadConfig] = None) -> complex:
    """Direct quadrature of the defining integral in t."""
    cfg = cfg or QuadConfig(rel_tol=1e-13, abs_tol=1e-16)
    iv = _t_interval(term, g.a)
    if iv is None:
        return 0j
    s = term.rep.sign
    xi, eta, a, b = term.xi, term.eta, g.a, g.b

    def integrand(t):
        return np.exp(-2j * np.pi * s * b * t) * xi.derivs(a * t)[0] \
            * np.conj(eta.derivs(t)[0]) / t

    omega = abs(b) + a * max_frequency(xi) + max_frequency(eta)
    return complex(term.weight * integrate_interval(integrand, iv, cfg, omega=omega).value)


def coeff_eval_via_rep(term: CoeffTerm, g: AxbElement, cfg=None) -> complex:
    """<pi(g) xi, eta>_H with pi(g) xi built as an expression."""
    cfg = cfg or QuadConfig(rel_tol=1e-13, abs_tol=1e-16)
    moved = rep_apply(term.rep, g, term.xi)
    return complex(term.weight * inner_product(moved, term.eta, Measure.HAAR_HALFLINE, cfg))


def coeff_eval_fourier(term: CoeffTerm, g: AxbElement, cfg=None) -> complex:
    """Classical Fourier transform of t -> xi(a t) conj(eta(t)) / t at +-b."""
    cfg = cfg or QuadConfig(rel_tol=1e-13, abs_tol=1e-16)
    iv = _t_interval(term, g.a)
    if iv is None:
        return 0j
    xi, eta, a = term.xi, term.eta, g.a

    def h(t):
        return xi.derivs(a * t)[0] * np.conj(eta.derivs(t)[0]) / t

    return complex(term.weight * fourier_transform(h, [iv], term.rep.sign * g.b, cfg))


def evaluate_algebra(x: Element, g: AxbElement, cfg=None) -> complex:
    total = 0j
    for c, factors in as_algebra(x).monomials:
        prod = c
        for factor in factors:
            prod *= sum(coeff_eval(t, g, cfg) for t in _terms(factor))
        total += prod
    return complex(total)


def madb(term: CoeffTerm) -> CoeffTerm:
    """M_a d_b applied to a coefficient function.

    M_a d_b f = -(1/(2 pi i)) a df/db sends xi *_{pi+} eta to (K xi) *_{pi+} eta
    and xi *_{pi-} eta to -(K xi) *_{pi-} eta, with K xi(t) = t xi(t).
    """
    return CoeffTerm(term.rep, PowerWeight(1.0, term.xi), term.eta,
                     term.rep.sign * term.weight)


def madb_factor(factor):
    if isinstance(factor, CoeffTerm):
        return madb(factor)
    return CoeffSum(tuple(madb(t) for t in factor.terms))


def madb_algebra(x: Element) -> AlgebraElem:
    """Product rule: M_a d_b is a derivation of pointwise multiplication."""
    out = []
    for c, factors in as_algebra(x).monomials:
        for i, t in enumerate(factors):
            out.append((c, factors[:i] + (madb_factor(t),) + factors[i + 1:]))
    return AlgebraElem(tuple(out))


# --- tail constants ----------------------------------------------------------

@lru_cache(maxsize=4096)
def coefficient_derivative_profile(xi: FuncExpr, eta: FuncExpr, order: int = TAIL_ORDER,
                                   n_t: int = 257, n_a: int = 48):
    """Per-slice decay constants of the coefficient function of (xi, eta).

    Returns ``(a_nodes, E)`` with E[k, i] = ||d^k/dt^k g_a||_1 / (2 pi)^k at
    a = a_nodes[i], where g_a(t) = xi(a t) conj(eta(t)) / t.  Integration by
    parts gives |(xi * eta)(b, a)| <= E[k] / |b|^k, and E[0] bounds the
    slice uniformly in b.  L1 norms use the trapezoid rule on a uniform grid
    over the t-interval where both factors can be non-zero at that a.
    """
    term = CoeffTerm(Rep.PLUS, xi, eta)
    asupp = term_a_support(term)
    if asupp is None:
        return np.array([1.0, 2.0]), np.zeros((order + 1, 2))
    a = np.geomspace(asupp[0], asupp[1], n_a)
    sx, se = _hull(xi.support()), _hull(eta.support())
    lo = np.maximum(se[0], sx[0] / a)
    hi = np.maximum(np.minimum(se[1], sx[1] / a), lo)
    t = lo + np.linspace(0.0, 1.0, n_t)[:, None] * (hi - lo)
    dt = (hi - lo) / (n_t - 1)
    x = xi.derivs(t * a, order)
    for j in range(1, order + 1):
        x[j] *= a ** j
    w = PowerWeight(-1.0, _conj(eta)).derivs(t, order)
    g = np.zeros_like(x)
    for n in range(order + 1):
        for j in range(n + 1):
            g[n] += math.comb(n, j) * x[j] * w[n - j]
    l1 = np.sum(np.abs(g), axis=1) * dt
    scale = (2 * np.pi) ** -np.arange(order + 1)
    return a, l1 * scale[:, None]


def coefficient_derivative_constants(xi: FuncExpr, eta: FuncExpr,
                                     order: int = TAIL_ORDER) -> tuple:
    """C_k = max over a of ||d^k g_a||_1 / (2 pi)^k, k = 0..order."""
    _, prof = coefficient_derivative_profile(xi, eta, order)
    return tuple(float(v) for v in prof.max(axis=1))


def _profile_on_cells(term: CoeffTerm, edges: np.ndarray) -> np.ndarray:
    """Largest profile value seen on each cell [edges[i], edges[i+1]]."""
    nodes, prof = coefficient_derivative_profile(term.xi, term.eta)
    out = np.zeros((prof.shape[0], edges.size - 1))
    lo = np.clip(np.searchsorted(nodes, edges[:-1]) - 1, 0, nodes.size - 1)
    hi = np.clip(np.searchsorted(nodes, edges[1:]), 0, nodes.size - 1)
    inside = (edges[1:] > nodes[0]) & (edges[:-1] < nodes[-1])
    for i in np.flatnonzero(inside):
        out[:, i] = prof[:, lo[i]:hi[i] + 1].max(axis=1)
    return out * abs(term.weight)


@lru_cache(maxsize=4096)
def _haar_norm(f: FuncExpr) -> float:
    cfg = QuadConfig(rel_tol=1e-12, abs_tol=1e-18)
    return math.sqrt(max(inner_product(f, f, Measure.HAAR_HALFLINE, cfg).real, 0.0))


def _l2g_norm(factor) -> float:
    """Triangle bound from ||xi * eta||_{L2(G)} = |w| ||eta|| ||K^{-1/2} xi||."""
    if isinstance(factor, MadbOf):
        return sum(abs(c) * _l2g_norm(fs[i]) * float(np.prod([_sup_norm(f) for f in fs[:i] + fs[i + 1:]]))
                   for c, fs in madb_algebra(factor.elem).monomials for i in range(len(fs)))
    return sum(abs(t.weight) * _haar_norm(t.eta) * _haar_norm(PowerWeight(-0.5, t.xi))
               for t in _terms(factor))


def _sup_norm(factor) -> float:
    if isinstance(factor, MadbOf):
        return sum(abs(c) * float(np.prod([_sup_norm(f) for f in fs]))
                   for c, fs in madb_algebra(factor.elem).monomials)
    return sum(abs(t.weight) * _haar_norm(t.xi) * _haar_norm(t.eta) for t in _terms(factor))


def _magnitude(c, factors) -> float:
    """Upper bound on |integral| of a monomial (Cauchy-Schwarz and sup norms)."""
    if len(factors) == 1:
        return abs(c) * _l2g_norm(factors[0])
    out = abs(c) * _l2g_norm(factors[0]) * _l2g_norm(factors[1])
    for t in factors[2:]:
        out *= _sup_norm(t)
    return out


# --- FFT sampler -----------------------------------------------------------

class _Sampler:
    """Samples coefficient functions on b = step * k, |k| <= K.

    ``periods`` gives the b-period of the t-trapezoid sum for each a-cell
    delimited by ``edges``; nodes in cells with equal period share one FFT.
    """

    def __init__(self, step: float, kmax: int, periods, edges, kcuts=None):
        self.step = step
        self.kmax = kmax
        self.edges = np.asarray(edges, dtype=float)
        n_cells = self.edges.size - 1
        self.periods = np.broadcast_to(np.asarray(periods, dtype=float), (n_cells,))
        self.kcuts = np.full(n_cells, kmax) if kcuts is None else np.asarray(kcuts, dtype=int)
        self._plans = {}

    def _cells_of(self, a: np.ndarray) -> np.ndarray:
        return np.clip(np.searchsorted(self.edges, a) - 1, 0, self.periods.size - 1)

    def _fft_len(self, period: float) -> int:
        # quarter-octave buckets keep the number of distinct FFT sizes small
        n = period / self.step
        return int(math.ceil(2.0 ** (math.ceil(4.0 * math.log2(max(n, 16.0))) / 4.0)))

    def _plan(self, term: CoeffTerm, n: int):
        key = (term.eta, n)
        if key not in self._plans:
            tlo, thi = _hull(term.eta.support())
            while True:
                h = 1.0 / (n * self.step)
                j = int(math.floor((thi - tlo) / h)) + 2
                if j <= n:
                    break
                n = j
            n = scipy.fft.next_fast_len(n)
            h = 1.0 / (n * self.step)
            j = int(math.floor((thi - tlo) / h)) + 2
            t = tlo + h * np.arange(j)
            weta = np.conj(term.eta.derivs(t)[0]) / t
            self._plans[key] = (n, h, t, weta, tlo)
        return self._plans[key]

    def sample(self, term: CoeffTerm, a: np.ndarray) -> np.ndarray:
        out = np.zeros((2 * self.kmax + 1, a.size), dtype=complex)
        asupp = term_a_support(term)
        if asupp is None:
            return out
        live = np.flatnonzero((a > asupp[0]) & (a < asupp[1]))
        if live.size == 0:
            return out
        cells = self._cells_of(a[live])
        sizes = np.array([self._fft_len(p) for p in self.periods[cells]])
        kcs = self.kcuts[cells]
        s = term.rep.sign
        for size in np.unique(sizes):
            sel = sizes == size
            cols = live[sel]
            kmax = int(kcs[sel].max())
            k = np.arange(-kmax, kmax + 1)
            n, h, t, weta, _ = self._plan(term, int(size))
            # only t with a t inside supp(xi) contributes
            sx = _hull(term.xi.support())
            j0 = max(int(np.searchsorted(t, sx[0] / a[cols].max())) - 1, 0)
            j1 = min(int(np.searchsorted(t, sx[1] / a[cols].min())) + 1, t.size)
            if j1 <= j0:
                continue
            g = term.xi.derivs(np.outer(t[j0:j1], a[cols]))[0] * weta[j0:j1, None]
            spec = scipy.fft.fft(g, n=n, axis=0)
            phase = np.exp(-2j * np.pi * s * (k * self.step) * t[j0])
            vals = (term.weight * h) * phase[:, None] * spec[(s * k) % n, :]
            for kc in np.unique(kcs[sel]):
                inner = kcs[sel] == kc
                rows = slice(self.kmax - kc, self.kmax + kc + 1)
                out[rows, cols[inner]] = vals[kmax - kc:kmax + kc + 1, inner]
        return out


def _freq_range(factor):
    if isinstance(factor, MadbOf):
        ranges = [[_freq_range(f) for f in fs] for _, fs in factor.elem.monomials]
        return (min(sum(r[0] for r in rs) for rs in ranges),
                max(sum(r[1] for r in rs) for rs in ranges))
    lo, hi = math.inf, -math.inf
    for term in _terms(factor):
        tlo, thi = _hull(term.eta.support())
        if term.rep is Rep.PLUS:
            tlo, thi = -thi, -tlo
        lo, hi = min(lo, tlo), max(hi, thi)
    return lo, hi


def _factor_a_support(factor):
    lo, hi = math.inf, 0.0
    for t in _terms(factor):
        s = term_a_support(t)
        if s is not None:
            lo, hi = min(lo, s[0]), max(hi, s[1])
    return (lo, hi) if lo < hi else None


def _prepare(components):
    """Drop monomials that vanish identically and attach their a-supports."""
    out = []
    for comp in components:
        kept = []
        for c, factors in comp:
            if c == 0:
                continue
            lo, hi = 0.0, math.inf
            empty = False
            for t in factors:
                s = _factor_a_support(t)
                if s is None:
                    empty = True
                    break
                lo, hi = max(lo, s[0]), min(hi, s[1])
            if empty or lo >= hi:
                continue
            kept.append((c, factors, (lo, hi)))
        out.append(kept)
    return out


def _envelopes(prepared, alo, ahi, n_cells=256):
    """Per-cell envelopes of every factor on a geometric a-grid.

    Returns the cell weights (integral of a^-2 over each cell), for each
    component a list of (|c|, [E_j]) with E_j of shape (order+1, n_cells),
    and the cell edges.
    """
    edges = np.geomspace(alo, ahi, n_cells + 1)
    weights = 1.0 / edges[:-1] - 1.0 / edges[1:]
    cache = {}

    def env(factor):
        if factor not in cache:
            if isinstance(factor, MadbOf):
                cache[factor] = sum(c_abs * product_envelope([env(f) for f in fs])
                                    for c_abs, fs in ((abs(c), fs) for c, fs in
                                                      madb_algebra(factor.elem).monomials))
            else:
                cache[factor] = sum(_profile_on_cells(t, edges) for t in _terms(factor))
        return cache[factor]

    comps = [[(abs(c), [env(f) for f in factors]) for c, factors, _ in comp]
             for comp in prepared]
    return weights, comps, edges


def _spectral_madb(values, step, band, a):
    """-(a / (2 pi i)) d/db of samples on b = step * k, |k| <= K.

    ``band`` is the interval holding the Fourier support in b; its length
    must be below 1/step so every DFT bin has one alias inside it.
    """
    n = values.shape[0]
    spec = scipy.fft.fft(np.fft.ifftshift(values, axes=0), axis=0)
    nu = np.fft.fftfreq(n, d=step)
    centre = 0.5 * (band[0] + band[1])
    nu = nu + np.round((centre - nu) * step) / step
    deriv = scipy.fft.ifft(spec * (2j * np.pi * nu)[:, None], axis=0)
    return np.fft.fftshift(deriv, axes=0) * (-a / (2j * np.pi))[None, :]


def haar_integral(components: Sequence[Sequence], cfg: Optional[QuadConfig] = None,
                  scale: Optional[float] = None) -> IntegralResult:
    """Integrate sums of products of coefficient functions over the group.

    ``components`` is a list of monomial lists; each monomial is
    ``(coefficient, factors)`` with factors ``CoeffTerm`` or ``CoeffSum``.
    The result value is an array with one entry per component, and the
    tail bound is the largest over components.
    """
    cfg = cfg or QuadConfig()
    prepared = _prepare(components)
    live = [m for comp in prepared for m in comp]
    if not live:
        return IntegralResult(np.zeros(len(components), dtype=complex), 0.0, 0.0, 0, None)
    width = 0.0
    for _, factors, _ in live:
        ranges = [_freq_range(t) for t in factors]
        lo = sum(r[0] for r in ranges)
        hi = sum(r[1] for r in ranges)
        width = max(width, abs(lo), abs(hi))
        # the FFT grid has period 1/step in t and must hold each support
        width = max(width, max(r[1] - r[0] for r in ranges))
    alo = min(m[2][0] for m in live)
    ahi = max(m[2][1] for m in live)
    weights, envs, edges = _envelopes(prepared, alo, ahi)
    tail = tail_model(weights, envs)

    if scale is None:
        scale = max(sum(_magnitude(c, f) for c, f, _ in comp) for comp in prepared)
    alias = alias_model(weights, envs)
    alias_target = max(cfg.abs_tol, cfg.rel_tol * scale)
    # per-cell cutoffs need a certified policy; spectral derivatives need
    # samples out to the global cutoff
    trim_cells = isinstance(cfg.b_cutoff_policy, Certified) and not any(
        isinstance(f, MadbOf) for _, fs, _ in live for f in fs)
    state = {}

    def F(b, a):
        step = b[1] - b[0]
        kmax = (b.size - 1) // 2
        sampler = state.get("sampler")
        if sampler is None or sampler.step != step or sampler.kmax != kmax:
            cutoff = kmax * step
            cuts = np.full(weights.shape, cutoff)
            if trim_cells:
                target = cfg.b_cutoff_policy.target_tail * (
                    scale if cfg.b_cutoff_policy.relative else 1.0)
                target = max(target, float(np.sum(tail.cells(cutoff))))
                cuts = np.minimum(choose_cell_cutoffs(tail, cutoff, target), cutoff)
            kcuts = np.clip(np.floor(cuts / step + 1e-9).astype(int), 1, kmax)
            cuts = kcuts * step
            state["tail"] = float(np.sum(tail.cells(np.maximum(cuts, step))))
            margins = choose_cell_margins(alias, cuts, alias_target)
            state["alias"] = alias(margins, cuts)
            sampler = state["sampler"] = _Sampler(step, kmax, cuts + margins, edges, kcuts)
        term_cache = {}
        factor_cache = {}

        def sampled(factor):
            if isinstance(factor, MadbOf) and factor not in factor_cache:
                acc = 0
                for c, fs in factor.elem.monomials:
                    prod = c * sampled(fs[0])
                    for f in fs[1:]:
                        prod = prod * sampled(f)
                    acc = acc + prod
                factor_cache[factor] = _spectral_madb(acc, step, _freq_range(factor), a)
            if factor not in factor_cache:
                acc = 0
                for t in _terms(factor):
                    if t not in term_cache:
                        term_cache[t] = sampler.sample(t, a)
                    acc = acc + term_cache[t]
                factor_cache[factor] = acc
            return factor_cache[factor]

        out = np.zeros((b.size, a.size, len(prepared)), dtype=complex)
        for i, comp in enumerate(prepared):
            for c, factors, _ in comp:
                prod = c * sampled(factors[0])
                for t in factors[1:]:
                    prod = prod * sampled(t)
                out[:, :, i] += prod
        return out

    res = integrate_axb_haar(F, (alo, ahi), cfg, bandwidth=width, tail=tail, scale=scale)
    res.error_estimate += state.get("alias", 0.0)
    if trim_cells:
        res.tail_bound = state["tail"]
    return res


def _monomials(x: Element):
    return [(c, f) for c, f in as_algebra(x).monomials]


def _product_monomials(x: Element, y: Element):
    return [(c1 * c2, f1 + f2) for c1, f1 in _monomials(x) for c2, f2 in _monomials(y)]


def l2g_inner(u: Element, w: Element, cfg: Optional[QuadConfig] = None,
              scale: Optional[float] = None) -> IntegralResult:
    """<u, w>_{L2(G)} = integral of u conj(w) against left Haar measure."""
    res = haar_integral([_product_monomials(u, conj_algebra(w))], cfg, scale)
    res.value = complex(res.value[0])
    return res


def d_flat(f: Element, g: Element, cfg: Optional[QuadConfig] = None,
           scale: Optional[float] = None) -> IntegralResult:
    """D_flat(f, g) = integral of (M_a d_b f) g against left Haar measure."""
    res = haar_integral([_product_monomials(madb_algebra(f), g)], cfg, scale)
    res.value = complex(res.value[0])
    return res


def _trace_norm_block(terms: Sequence[CoeffTerm], cfg) -> float:
    if not terms:
        return 0.0
    xs = [t.xi for t in terms]
    ys = [t.eta for t in terms]
    w = np.diag([t.weight for t in terms])

    def factor(vs):
        n = len(vs)
        gram = np.empty((n, n), dtype=complex)
        for i in range(n):
            for j in range(i, n):
                gram[i, j] = inner_product(vs[j], vs[i], Measure.HAAR_HALFLINE, cfg)
                gram[j, i] = np.conj(gram[i, j])
        lam, vec = np.linalg.eigh(gram)
        keep = lam > 1e-12 * max(np.trace(gram).real, 1e-300)
        return np.sqrt(lam[keep])[:, None] * vec[:, keep].conj().T

    rx, ry = factor(xs), factor(ys)
    if rx.size == 0 or ry.size == 0:
        return 0.0
    return float(np.sum(np.linalg.svd(rx @ w @ ry.conj().T, compute_uv=False)))


def a_norm(u: Union[CoeffTerm, CoeffSum], cfg: Optional[QuadConfig] = None) -> float:
    """Fourier algebra norm of a finite sum of coefficient functions.

    Each sign contributes the trace norm of sum_i w_i |xi_i><eta_i| on H,
    computed from Gram matrices and a small SVD; the two signs add.
    """
    cfg = cfg or QuadConfig(rel_tol=1e-12, abs_tol=1e-18)
    terms = [u] if isinstance(u, CoeffTerm) else list(u.terms)
    return sum(_trace_norm_block([t for t in terms if t.rep is rep], cfg) for rep in Rep)


def key_estimate(f: Element, g: Element, cfg: Optional[QuadConfig] = None) -> dict:
    """Check |D_flat(f, g)| <= ||f||_A ||g||_A and antisymmetry on one pair.

    ``margin`` is ||f||_A ||g||_A - |D_flat(f, g)|, non-negative when the
    bound holds; ``antisym`` is |D_flat(f, g) + D_flat(g, f)|.
    """
    nf, ng = a_norm(f), a_norm(g)
    comps = [_product_monomials(madb_algebra(f), g), _product_monomials(madb_algebra(g), f)]
    res = haar_integral(comps, cfg, scale=nf * ng)
    d_fg, d_gf = (complex(v) for v in res.value)
    return {"d_flat": d_fg, "d_flat_swapped": d_gf, "bound": nf * ng,
            "margin": nf * ng - abs(d_fg), "antisym": abs(d_fg + d_gf),
            "tail_bound": res.tail_bound, "error_estimate": res.error_estimate}


def derivation_residuals(f: Element, g: Element, h: Element,
                         cfg: Optional[QuadConfig] = None,
                         scale: Optional[float] = None,
                         product_rule: str = "spectral") -> dict:
    """Leibniz and antisymmetry defects of D_flat on one triple.

    leibniz = |D(fg, h) - D(f, gh) - D(g, hf)| and
    antisym = |D(f, g) + D(g, f)|, all from one vector-valued integral.
    ``key_margin`` = ||f||_A ||g||_A - |D(f, g)| is added when f and g are
    plain sums of coefficient terms.
    With ``product_rule="spectral"`` the derivative of the product fg is
    taken numerically from its samples, so the Leibniz defect does not hold
    by construction; ``"symbolic"`` expands it with the product rule.
    """
    fg = as_algebra(f) * as_algebra(g)
    gh = as_algebra(g) * as_algebra(h)
    hf = as_algebra(h) * as_algebra(f)
    if product_rule == "spectral":
        d_fg = AlgebraElem(((1.0 + 0j, (MadbOf(fg),)),))
    elif product_rule == "symbolic":
        d_fg = madb_algebra(fg)
    else:
        raise ValueError(f"unknown product_rule {product_rule!r}")
    comps = [
        _product_monomials(d_fg, h),
        _product_monomials(madb_algebra(f), gh),
        _product_monomials(madb_algebra(g), hf),
        _product_monomials(madb_algebra(f), g),
        _product_monomials(madb_algebra(g), f),
    ]
    res = haar_integral(comps, cfg, scale)
    v = res.value
    out = {"leibniz": float(abs(v[0] - v[1] - v[2])),
           "antisym": float(abs(v[3] + v[4])),
           "values": [complex(z) for z in v],
           "tail_bound": res.tail_bound,
           "error_estimate": res.error_estimate}
    if isinstance(f, (CoeffTerm, CoeffSum)) and isinstance(g, (CoeffTerm, CoeffSum)):
        out["key_margin"] = float(a_norm(f) * a_norm(g) - abs(v[3]))
    return out
