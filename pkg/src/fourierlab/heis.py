"""Coefficient functions and D_flat on the reduced Heisenberg group.

Elements are (p, q, theta) with theta in R/Z and product

    (p, q, theta)(p', q', theta') = (p + p', q + q', theta + theta' + (p q' - q p')/2).

Haar measure is dp dq dtheta.  For n != 0 the Schroedinger representation
on L^2(R) is

    sigma_n(p, q, theta) xi(x) = exp(2 pi i n q (p/2 - x)) exp(2 pi i n theta) xi(x - p),

and lambda_0 is the translation representation of R^2 on L^2(R^2) (it
ignores theta).  Substituting x = y + p/2 in <sigma_n(g) xi, eta> gives

    (xi * eta)(p, q, theta) = exp(2 pi i n theta) F[h_p](n q),
    h_p(y) = xi(y - p/2) conj(eta(y + p/2)),

with F the Fourier transform F[h](nu) = int h(y) exp(-2 pi i nu y) dy.

Haar integrals reuse the scheme of the ax+b module with q in the role of b:
each sigma_n factor is sampled in q by one FFT of h_p per p-node, the
theta-integral is the periodic trapezoid rule with 8 n_max + 1 nodes
(applied to the character exp(2 pi i N theta) carried by each monomial),
and p is integrated adaptively.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence, Union

import numpy as np
import scipy.fft

from .errors import DomainError
from .bandlimited import alias_model, choose_margin, tail_model
from .funcexpr import (Conj, FuncExpr, Measure, Modulate, PlaneFunc, Scale, Shift,
                       inner_product, max_frequency)
from .quadrature import (IntegralResult, QuadConfig, gauss_legendre, integrate_interval,
                         resolve_cutoff, _adaptive)

__all__ = [
    "HeisElement", "SchCoeffTerm", "Lambda0CoeffTerm", "HrElem", "sch_apply", "sch_coeff_eval",
    "sch_coeff_eval_via_rep", "zero_coeff_eval", "heis_coeff_eval", "heis_l2_inner",
    "dtheta", "d_flat_heis", "a_norm_heis", "key_estimate_heis",
    "conj_heis", "heis_haar_integral", "HeisAlgebra", "as_heis_algebra", "conj_algebra",
    "derivation_residuals_heis",
]

TAIL_ORDER = 8


@dataclass(frozen=True)
class HeisElement:
    p: float
    q: float
    theta: float

    def __mul__(self, other: "HeisElement") -> "HeisElement":
        return HeisElement(self.p + other.p, self.q + other.q,
                           self.theta + other.theta + 0.5 * (self.p * other.q - self.q * other.p))

    def inverse(self) -> "HeisElement":
        return HeisElement(-self.p, -self.q, -self.theta)

    @staticmethod
    def identity() -> "HeisElement":
        return HeisElement(0.0, 0.0, 0.0)


@dataclass(frozen=True)
class SchCoeffTerm:
    """weight * (xi *_{sigma_n} eta), n != 0."""

    n: int
    xi: FuncExpr
    eta: FuncExpr
    weight: complex = 1.0 + 0j

    def __post_init__(self):
        if self.n == 0 or int(self.n) != self.n:
            raise DomainError("Schroedinger index must be a non-zero integer")


@dataclass(frozen=True)
class Lambda0CoeffTerm:
    """weight * (xi *_{lambda_0} eta) for xi, eta in L^2(R^2)."""

    xi: PlaneFunc
    eta: PlaneFunc
    weight: complex = 1.0 + 0j


@dataclass(frozen=True)
class HrElem:
    sch_terms: tuple = ()
    zero_terms: tuple = ()

    @property
    def terms(self) -> tuple:
        return tuple(self.sch_terms) + tuple(self.zero_terms)


Term = Union[SchCoeffTerm, Lambda0CoeffTerm]
Element = Union[SchCoeffTerm, Lambda0CoeffTerm, HrElem]


def _as_terms(x: Element) -> tuple:
    if isinstance(x, HrElem):
        return x.terms
    if isinstance(x, (SchCoeffTerm, Lambda0CoeffTerm)):
        return (x,)
    raise TypeError(f"not a Heisenberg element: {type(x).__name__}")


def _conj(f):
    return f.f if isinstance(f, Conj) else Conj(f)


def conj_term(t: Term) -> Term:
    """conj(xi *_{sigma_n} eta) = conj(xi) *_{sigma_-n} conj(eta); lambda_0 likewise."""
    w = complex(np.conj(t.weight))
    if isinstance(t, SchCoeffTerm):
        return SchCoeffTerm(-t.n, _conj(t.xi), _conj(t.eta), w)
    return Lambda0CoeffTerm(t.xi.conj(), t.eta.conj(), w)


def conj_heis(x: Element) -> HrElem:
    terms = [conj_term(t) for t in _as_terms(x)]
    return HrElem(tuple(t for t in terms if isinstance(t, SchCoeffTerm)),
                  tuple(t for t in terms if isinstance(t, Lambda0CoeffTerm)))


def sch_apply(n: int, g: HeisElement, xi: FuncExpr) -> FuncExpr:
    """sigma_n(g) xi as an expression."""
    if n == 0:
        raise DomainError("sigma_0 is not a Schroedinger representation")
    phase = complex(np.exp(2j * np.pi * n * (g.theta + 0.5 * g.q * g.p)))
    return Scale(phase, Modulate(-n * g.q, Shift(g.p, xi)))


def _hull(intervals):
    return (intervals[0][0], intervals[-1][1]) if intervals else None


def _y_interval(term: SchCoeffTerm, p: float):
    sx, se = _hull(term.xi.support()), _hull(term.eta.support())
    if sx is None or se is None:
        return None
    lo = max(sx[0] + 0.5 * p, se[0] - 0.5 * p)
    hi = min(sx[1] + 0.5 * p, se[1] - 0.5 * p)
    return (lo, hi) if lo < hi else None


_FINE = QuadConfig(rel_tol=1e-13, abs_tol=1e-17)


def sch_coeff_eval(term: SchCoeffTerm, g: HeisElement, cfg: Optional[QuadConfig] = None) -> complex:
    """exp(2 pi i n theta) F[xi(. - p/2) conj(eta(. + p/2))](n q) by quadrature."""
    cfg = cfg or _FINE
    iv = _y_interval(term, g.p)
    if iv is None:
        return 0j
    n, xi, eta = term.n, term.xi, term.eta
    nu = n * g.q

    def integrand(y):
        return np.exp(-2j * np.pi * nu * y) * xi.derivs(y - 0.5 * g.p)[0] \
            * np.conj(eta.derivs(y + 0.5 * g.p)[0])

    omega = abs(nu) + max_frequency(xi) + max_frequency(eta)
    val = integrate_interval(integrand, iv, cfg, omega=omega).value
    return complex(term.weight * np.exp(2j * np.pi * n * g.theta) * val)


def sch_coeff_eval_via_rep(term: SchCoeffTerm, g: HeisElement, cfg=None) -> complex:
    """<sigma_n(g) xi, eta>_{L^2(R)} with sigma_n(g) xi built as an expression."""
    cfg = cfg or _FINE
    moved = sch_apply(term.n, g, term.xi)
    return complex(term.weight * inner_product(moved, term.eta, Measure.LEBESGUE_LINE, cfg))


def _correlation(f: FuncExpr, g: FuncExpr, shifts: np.ndarray, n_nodes: int = 24) -> np.ndarray:
    """c(s) = int f(x - s) conj(g(x)) dx for an array of shifts, by composite GL."""
    supp = _hull(g.support())
    if supp is None or not f.support():
        return np.zeros(shifts.shape, dtype=complex)
    x, w = gauss_legendre(n_nodes)
    panels = max(8, int(math.ceil(8 * (supp[1] - supp[0]))))
    edges = np.linspace(supp[0], supp[1], panels + 1)
    half = 0.5 * np.diff(edges)
    nodes = (0.5 * (edges[:-1] + edges[1:])[:, None] + half[:, None] * x).ravel()
    weights = (half[:, None] * w).ravel()
    gv = np.conj(g.derivs(nodes)[0]) * weights
    out = np.empty(shifts.size, dtype=complex)
    flat = shifts.ravel()
    for s in range(0, flat.size, 512):
        chunk = flat[s:s + 512]
        out[s:s + 512] = f.derivs(nodes[None, :] - chunk[:, None])[0] @ gv
    return out.reshape(shifts.shape)


def zero_coeff_eval(term: Lambda0CoeffTerm, g: HeisElement) -> complex:
    """<lambda(p, q) xi, eta>_{L^2(R^2)}; theta is ignored."""
    p, q = np.array([g.p]), np.array([g.q])
    total = 0j
    for w1, fx, fy in term.xi.terms:
        for w2, gx, gy in term.eta.terms:
            total += w1 * np.conj(w2) * _correlation(fx, gx, p)[0] * _correlation(fy, gy, q)[0]
    return complex(term.weight * total)


def heis_coeff_eval(x: Element, g: HeisElement) -> complex:
    total = 0j
    for t in _as_terms(x):
        total += sch_coeff_eval(t, g) if isinstance(t, SchCoeffTerm) else zero_coeff_eval(t, g)
    return complex(total)


def dtheta(x: Element) -> HrElem:
    """(1/(2 pi i)) d/dtheta: multiplies the sigma_n part by n, kills lambda_0."""
    return HrElem(tuple(SchCoeffTerm(t.n, t.xi, t.eta, t.n * t.weight)
                        for t in _as_terms(x) if isinstance(t, SchCoeffTerm)), ())


# --- supports and envelopes ---------------------------------------------------

def _p_support(t: Term):
    if isinstance(t, SchCoeffTerm):
        sx, se = _hull(t.xi.support()), _hull(t.eta.support())
    else:
        sx, se = _hull(t.xi.support_x()), _hull(t.eta.support_x())
    if sx is None or se is None or t.weight == 0:
        return None
    return (se[0] - sx[1], se[1] - sx[0])


def _q_support_zero(t: Lambda0CoeffTerm):
    sx, se = _hull(t.xi.support_y()), _hull(t.eta.support_y())
    return (se[0] - sx[1], se[1] - sx[0])


def _y_hull(t: SchCoeffTerm):
    """y-interval holding the support of h_p for every p."""
    sx, se = _hull(t.xi.support()), _hull(t.eta.support())
    p0, p1 = _p_support(t)
    lo = max(sx[0] + 0.5 * p0, se[0] - 0.5 * p1)
    hi = min(sx[1] + 0.5 * p1, se[1] - 0.5 * p0)
    return lo, hi


def _freq_range(t: SchCoeffTerm):
    lo, hi = _y_hull(t)
    a, b = -t.n * lo, -t.n * hi
    return min(a, b), max(a, b)


@lru_cache(maxsize=4096)
def sch_derivative_profile(n: int, xi: FuncExpr, eta: FuncExpr, order: int = TAIL_ORDER,
                           n_y: int = 801, n_p: int = 64):
    """E[k, i] = ||d^k h_p / dy^k||_1 / (2 pi |n|)^k at p = p_nodes[i].

    Then |(xi *_{sigma_n} eta)(p, q, .)| <= E[k] / |q|^k.
    """
    t = SchCoeffTerm(n, xi, eta)
    p0, p1 = _p_support(t)
    ylo, yhi = _y_hull(t)
    y = np.linspace(ylo, yhi, n_y)
    dy = y[1] - y[0]
    p = np.linspace(p0, p1, n_p)
    a = xi.derivs(y[:, None] - 0.5 * p[None, :], order)
    b = np.conj(eta.derivs(y[:, None] + 0.5 * p[None, :], order))
    h = np.zeros_like(a)
    for k in range(order + 1):
        for j in range(k + 1):
            h[k] += math.comb(k, j) * a[j] * b[k - j]
    l1 = np.sum(np.abs(h), axis=1) * dy
    scale = (2 * np.pi * abs(n)) ** -np.arange(order + 1)
    return p, l1 * scale[:, None]


@lru_cache(maxsize=4096)
def _zero_sup(t: Lambda0CoeffTerm) -> float:
    total = 0.0
    for w1, fx, fy in t.xi.terms:
        for w2, gx, gy in t.eta.terms:
            total += abs(w1 * w2) * math.prod(
                math.sqrt(max(inner_product(f, f, Measure.LEBESGUE_LINE).real, 0.0))
                for f in (fx, fy, gx, gy))
    return abs(t.weight) * total


def _cells_envelope(t: Term, edges: np.ndarray) -> np.ndarray:
    out = np.zeros((TAIL_ORDER + 1, edges.size - 1))
    supp = _p_support(t)
    inside = (edges[1:] > supp[0]) & (edges[:-1] < supp[1])
    if isinstance(t, Lambda0CoeffTerm):
        qs = _q_support_zero(t)
        qmax = max(abs(qs[0]), abs(qs[1]))
        out[:, inside] = (_zero_sup(t) * qmax ** np.arange(TAIL_ORDER + 1))[:, None]
        return out
    nodes, prof = sch_derivative_profile(t.n, t.xi, t.eta)
    lo = np.clip(np.searchsorted(nodes, edges[:-1]) - 1, 0, nodes.size - 1)
    hi = np.clip(np.searchsorted(nodes, edges[1:]), 0, nodes.size - 1)
    for i in np.flatnonzero(inside):
        out[:, i] = prof[:, lo[i]:hi[i] + 1].max(axis=1)
    return out * abs(t.weight)


@lru_cache(maxsize=4096)
def _l2_line(f: FuncExpr) -> float:
    return math.sqrt(max(inner_product(f, f, Measure.LEBESGUE_LINE, _FINE).real, 0.0))


def _l2_norm_bound(t: Term) -> float:
    if isinstance(t, SchCoeffTerm):
        return abs(t.weight) * _l2_line(t.xi) * _l2_line(t.eta) / math.sqrt(abs(t.n))
    ps, qs = _p_support(t), _q_support_zero(t)
    return _zero_sup(t) * math.sqrt((ps[1] - ps[0]) * (qs[1] - qs[0]))


def _sup_bound(t: Term) -> float:
    if isinstance(t, SchCoeffTerm):
        return abs(t.weight) * _l2_line(t.xi) * _l2_line(t.eta)
    return _zero_sup(t)


def _magnitude(c, factors) -> float:
    out = abs(c)
    for i, t in enumerate(factors):
        out *= _l2_norm_bound(t) if i < 2 else _sup_bound(t)
    return out


# --- sampler -----------------------------------------------------------------

class _Sampler:
    def __init__(self, step: float, kmax: int, period: float):
        self.step = step
        self.kmax = kmax
        self.n_fft = scipy.fft.next_fast_len(int(math.ceil(period / step)))
        self._zero_q = {}

    def sample_sch(self, t: SchCoeffTerm, p: np.ndarray) -> np.ndarray:
        out = np.zeros((p.size, 2 * self.kmax + 1), dtype=complex)
        p0, p1 = _p_support(t)
        live = np.flatnonzero((p > p0) & (p < p1))
        if live.size == 0:
            return out
        n_fft = self.n_fft
        h = 1.0 / (abs(t.n) * n_fft * self.step)
        ylo, yhi = _y_hull(t)
        j = int(math.floor((yhi - ylo) / h)) + 2
        if j > n_fft:
            raise AssertionError("q-step too coarse for the support of h_p")
        y = ylo + h * np.arange(j)
        pl = p[live]
        g = t.xi.derivs(y[:, None] - 0.5 * pl[None, :])[0] \
            * np.conj(t.eta.derivs(y[:, None] + 0.5 * pl[None, :])[0])
        spec = scipy.fft.fft(g, n=n_fft, axis=0)
        k = np.arange(-self.kmax, self.kmax + 1)
        sgn = 1 if t.n > 0 else -1
        nu = t.n * k * self.step
        phase = np.exp(-2j * np.pi * nu * ylo)
        out[live] = ((t.weight * h) * phase[:, None] * spec[(sgn * k) % n_fft, :]).T
        return out

    def sample_zero(self, t: Lambda0CoeffTerm, p: np.ndarray) -> np.ndarray:
        q = self.step * np.arange(-self.kmax, self.kmax + 1)
        out = np.zeros((p.size, q.size), dtype=complex)
        for w1, fx, fy in t.xi.terms:
            for w2, gx, gy in t.eta.terms:
                key = (t, fy, gy)
                if key not in self._zero_q:
                    self._zero_q[key] = _correlation(fy, gy, q)
                out += (w1 * np.conj(w2)) * _correlation(fx, gx, p)[:, None] \
                    * self._zero_q[key][None, :]
        return t.weight * out


def _prepare(components):
    out = []
    for comp in components:
        kept = []
        for c, factors in comp:
            if c == 0:
                continue
            lo, hi = -math.inf, math.inf
            for t in factors:
                s = _p_support(t)
                if s is None:
                    lo, hi = 1.0, 0.0
                    break
                lo, hi = max(lo, s[0]), min(hi, s[1])
            if lo < hi:
                kept.append((c, factors, (lo, hi)))
        out.append(kept)
    return out


def heis_haar_integral(components: Sequence[Sequence], cfg: Optional[QuadConfig] = None,
                       scale: Optional[float] = None, n_cells: int = 256) -> IntegralResult:
    """Integrate sums of products of coefficient functions over the group.

    ``components`` is a list of monomial lists with monomials
    ``(coefficient, (term, term, ...))``.  Values come back as an array with
    one entry per component.
    """
    cfg = cfg or QuadConfig()
    prepared = _prepare(components)
    live = [m for comp in prepared for m in comp]
    if not live:
        return IntegralResult(np.zeros(len(components), dtype=complex), 0.0, 0.0, 0, None)

    n_max = max((abs(t.n) for _, fs, _ in live for t in fs if isinstance(t, SchCoeffTerm)), default=0)
    n_theta = 8 * n_max + 1
    theta = np.arange(n_theta) / n_theta

    def theta_weight(factors):
        order = sum(t.n for t in factors if isinstance(t, SchCoeffTerm))
        return complex(np.mean(np.exp(2j * np.pi * order * theta)))

    width = 0.0
    q_step = math.inf
    q_reach = 0.0
    for _, factors, _ in live:
        ranges = [_freq_range(t) for t in factors if isinstance(t, SchCoeffTerm)]
        if ranges:
            width = max(width, abs(sum(r[0] for r in ranges)), abs(sum(r[1] for r in ranges)),
                        max(r[1] - r[0] for r in ranges))
        for t in factors:
            if isinstance(t, Lambda0CoeffTerm):
                qs = _q_support_zero(t)
                # lambda_0 factors are smooth and compactly supported in q;
                # resolve their narrowest feature with many nodes
                feat = min(r[1] - r[0] for _, _, fy in t.xi.terms for r in fy.support())
                q_step = min(q_step, feat / 96.0)
                q_reach = max(q_reach, abs(qs[0]), abs(qs[1]))
    step = min(0.95 / width if width > 0 else math.inf, q_step)

    plo = min(m[2][0] for m in live)
    phi = max(m[2][1] for m in live)
    edges = np.linspace(plo, phi, n_cells + 1)
    weights = np.diff(edges)
    env_cache = {}

    def env(t):
        if t not in env_cache:
            env_cache[t] = _cells_envelope(t, edges)
        return env_cache[t]

    envs = [[(abs(c * theta_weight(fs)), [env(t) for t in fs],
              [isinstance(t, SchCoeffTerm) for t in fs])
             for c, fs, _ in comp] for comp in prepared]
    tail = tail_model(weights, envs)
    alias = alias_model(weights, envs)
    if scale is None:
        scale = max(sum(_magnitude(c, fs) for c, fs, _ in comp) for comp in prepared)

    cutoff = resolve_cutoff(cfg.b_cutoff_policy, tail, scale, step if math.isfinite(step) else 0)
    cutoff = max(cutoff, q_reach)
    if not math.isfinite(step):
        step = cutoff / 64.0
    kmax = int(math.ceil(cutoff / step))
    cutoff = kmax * step
    tail_bound = float(tail(cutoff)) if width > 0 else 0.0
    alias_target = max(cfg.abs_tol, cfg.rel_tol * scale)
    margin = choose_margin(alias, cutoff, alias_target)
    alias_bound = alias(margin, cutoff)
    sampler = _Sampler(step, kmax, cutoff + margin)
    tw = [[theta_weight(fs) for _, fs, _ in comp] for comp in prepared]

    def inner(p):
        cache = {}

        def sampled(t):
            if t not in cache:
                cache[t] = sampler.sample_sch(t, p) if isinstance(t, SchCoeffTerm) \
                    else sampler.sample_zero(t, p)
            return cache[t]

        out = np.zeros((p.size, len(prepared)), dtype=complex)
        for i, comp in enumerate(prepared):
            for (c, fs, _), w in zip(comp, tw[i]):
                prod = (c * w) * sampled(fs[0])
                for t in fs[1:]:
                    prod = prod * sampled(t)
                out[:, i] += step * prod.sum(axis=1)
        return out

    chunked = _chunked(inner, 32)
    value, err, panels, _ = _adaptive(chunked, plo, phi, cfg, 0.0, scale)
    return IntegralResult(value, err + alias_bound, tail_bound, panels, cutoff)


def _chunked(f, size):
    def g(x):
        return np.concatenate([f(x[s:s + size]) for s in range(0, x.size, size)], axis=0)
    return g


@dataclass(frozen=True)
class HeisAlgebra:
    """Finite sum of products: monomials ((c, (factor, ...)), ...).

    Factors are coefficient terms or HrElem sums; sums are expanded only
    when an integral is assembled.
    """

    monomials: tuple = ()

    def __add__(self, other):
        return HeisAlgebra(self.monomials + as_heis_algebra(other).monomials)

    def __mul__(self, other):
        if isinstance(other, (int, float, complex)):
            return HeisAlgebra(tuple((c * other, fs) for c, fs in self.monomials))
        o = as_heis_algebra(other)
        return HeisAlgebra(tuple((c1 * c2, f1 + f2) for c1, f1 in self.monomials
                                 for c2, f2 in o.monomials))

    __rmul__ = __mul__


Operand = Union[Element, HeisAlgebra]


def as_heis_algebra(x: Operand) -> HeisAlgebra:
    if isinstance(x, HeisAlgebra):
        return x
    _as_terms(x)
    return HeisAlgebra(((1.0 + 0j, (x,)),))


def _expand(x: Operand) -> list:
    """Monomials with every factor a single coefficient term."""
    out = []
    for c, factors in as_heis_algebra(x).monomials:
        partial = [(c, ())]
        for f in factors:
            partial = [(pc * t.weight, pf + (_unit(t),)) for pc, pf in partial
                       for t in _as_terms(f)]
        out.extend(m for m in partial if m[0] != 0)
    return out


def _unit(t: Term) -> Term:
    if isinstance(t, SchCoeffTerm):
        return SchCoeffTerm(t.n, t.xi, t.eta)
    return Lambda0CoeffTerm(t.xi, t.eta)


def _order(terms) -> int:
    return sum(t.n for t in terms if isinstance(t, SchCoeffTerm))


def conj_algebra(x: Operand) -> HeisAlgebra:
    return HeisAlgebra(tuple((complex(np.conj(c)), tuple(conj_term(t) for t in fs))
                             for c, fs in _expand(x)))


def _scale_of(monos) -> float:
    return sum(_magnitude(c, fs) for c, fs in monos)


def heis_l2_inner(u: Operand, w: Operand, cfg: Optional[QuadConfig] = None,
                  scale: Optional[float] = None) -> IntegralResult:
    """<u, w>_{L^2} = integral of u conj(w) over the group."""
    comp = [(c1 * c2, f1 + f2) for c1, f1 in _expand(u) for c2, f2 in _expand(conj_algebra(w))]
    res = heis_haar_integral([comp], cfg, scale)
    res.value = complex(res.value[0])
    return res


def _d_flat_component(f: Operand, g: Operand) -> list:
    # d_theta multiplies a product of sigma terms by its total order
    return [(c1 * c2 * _order(f1), f1 + f2) for c1, f1 in _expand(f) if _order(f1) != 0
            for c2, f2 in _expand(g)]


def d_flat_heis(f: Operand, g: Operand, cfg: Optional[QuadConfig] = None,
                scale: Optional[float] = None) -> IntegralResult:
    """D_flat(f, g) = integral of (d_theta f) g, d_theta = (1/(2 pi i)) d/dtheta.

    The lambda_0 part of ``f`` is differentiated to zero; the lambda_0 part of
    ``g`` still enters the integral.
    """
    res = heis_haar_integral([_d_flat_component(f, g)], cfg, scale)
    res.value = complex(res.value[0])
    return res


def derivation_residuals_heis(f: Operand, g: Operand, h: Operand,
                              cfg: Optional[QuadConfig] = None) -> dict:
    """Leibniz and antisymmetry residuals of D_flat on a triple.

    leibniz = |D(fg, h) - D(f, gh) - D(g, hf)|, antisym = |D(f, g) + D(g, f)|.
    All five integrals share one quadrature pass.
    """
    F, G, H = (as_heis_algebra(x) for x in (f, g, h))
    comps = [_d_flat_component(F * G, H), _d_flat_component(F, G * H),
             _d_flat_component(G, H * F), _d_flat_component(F, G), _d_flat_component(G, F)]
    res = heis_haar_integral(comps, cfg)
    v = res.value
    return {"leibniz": abs(v[0] - v[1] - v[2]), "antisym": abs(v[3] + v[4]),
            "values": v, "tail_bound": res.tail_bound, "error_estimate": res.error_estimate}


def _trace_norm(xs, ys, weights) -> float:
    def factor(vs):
        n = len(vs)
        gram = np.empty((n, n), dtype=complex)
        for i in range(n):
            for j in range(i, n):
                gram[i, j] = inner_product(vs[j], vs[i], Measure.LEBESGUE_LINE, _FINE)
                gram[j, i] = np.conj(gram[i, j])
        lam, vec = np.linalg.eigh(gram)
        keep = lam > 1e-12 * max(np.trace(gram).real, 1e-300)
        return np.sqrt(lam[keep])[:, None] * vec[:, keep].conj().T

    rx, ry = factor(xs), factor(ys)
    if rx.size == 0 or ry.size == 0:
        return 0.0
    return float(np.sum(np.linalg.svd(rx @ np.diag(weights) @ ry.conj().T, compute_uv=False)))


def a_norm_heis(u: Element) -> tuple:
    """(norm, exact) for the Fourier algebra norm of u.

    The sigma_n blocks contribute trace norms of sum w |xi><eta| on L^2(R),
    which is exact.  lambda_0 terms are bounded by |w| ||xi|| ||eta||, so
    ``exact`` is False whenever they are present.
    """
    terms = _as_terms(u)
    total = 0.0
    for n in sorted({t.n for t in terms if isinstance(t, SchCoeffTerm)}):
        block = [t for t in terms if isinstance(t, SchCoeffTerm) and t.n == n]
        total += _trace_norm([t.xi for t in block], [t.eta for t in block],
                             [t.weight for t in block])
    zeros = [t for t in terms if isinstance(t, Lambda0CoeffTerm)]
    for t in zeros:
        nx = math.sqrt(max(inner_product(t.xi, t.xi, Measure.LEBESGUE_PLANE).real, 0.0))
        ne = math.sqrt(max(inner_product(t.eta, t.eta, Measure.LEBESGUE_PLANE).real, 0.0))
        total += abs(t.weight) * nx * ne
    return total, not zeros


def key_estimate_heis(v: Element, w: Element, cfg: Optional[QuadConfig] = None) -> dict:
    """Margin ||v||_A ||w||_A - |D_flat(v, w)| and antisymmetry defect.

    D_flat(v, w) and D_flat(w, v) share one quadrature pass.
    """
    nv, _ = a_norm_heis(v)
    nw, _ = a_norm_heis(w)
    res = heis_haar_integral([_d_flat_component(v, w), _d_flat_component(w, v)], cfg,
                             scale=nv * nw)
    d_vw, d_wv = (complex(z) for z in res.value)
    return {"d_flat": d_vw, "d_flat_swapped": d_wv, "bound": nv * nw,
            "margin": nv * nw - abs(d_vw), "antisym": abs(d_vw + d_wv),
            "tail_bound": res.tail_bound, "error_estimate": res.error_estimate}
