"""Adaptive Gauss-Legendre quadrature and the Haar integrators built on it.

Design notes
------------
* One-dimensional integrals use panel bisection driven by the difference
  between an order-p and an order-p/2 Gauss-Legendre rule on the same panel.
  All pending panels are evaluated in a single vectorized call, and panels
  are summed left to right with a compensated sum, so results do not depend
  on scheduling.
* Integrands may be vector valued: the callable returns shape ``(n,)`` or
  ``(n, m)`` for ``n`` nodes.  Tolerances are checked on the largest
  component.
* Coefficient functions of the ax+b group are band limited in the
  translation variable b.  When the caller states the bandwidth, the
  b-integral is a uniform trapezoid sum with step below the Nyquist
  spacing, which is exact for band-limited integrands apart from the
  truncation |b| > B.  The truncation is bounded by a caller-supplied tail
  model and reported separately, never folded into the error estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable, Optional, Union

import numpy as np

from .errors import NumericalError, ToleranceError

__all__ = [
    "Fixed", "Certified", "QuadConfig", "IntegralResult", "gauss_legendre",
    "compensated_sum", "integrate_interval", "integrate_axb_haar",
    "integrate_heis_haar", "fourier_transform", "fourier_tail_bound",
    "resolve_cutoff",
]


@dataclass(frozen=True)
class Fixed:
    """Truncate the unbounded direction at |b| <= cutoff."""

    cutoff: float

    def __post_init__(self):
        if not self.cutoff > 0:
            raise ValueError("cutoff must be positive")


@dataclass(frozen=True)
class Certified:
    """Grow the cutoff until the tail bound is below ``target_tail``.

    With ``relative`` the target is multiplied by the magnitude scale of the
    integral.  The cutoff never drops below ``floor`` and never exceeds
    ``ceiling``; hitting the ceiling leaves a larger tail, which is still
    reported.
    """

    target_tail: float = 1e-3
    relative: bool = True
    floor: float = 20.0
    ceiling: float = 4000.0

    def __post_init__(self):
        if not self.target_tail > 0 or not self.floor > 0 or self.ceiling < self.floor:
            raise ValueError("invalid certified cutoff policy")


CutoffPolicy = Union[Fixed, Certified]


@dataclass(frozen=True)
class QuadConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-14
    base_order: int = 16
    max_panels: int = 4000
    osc_panels_per_period: int = 4
    b_cutoff_policy: CutoffPolicy = field(default_factory=Certified)

    def __post_init__(self):
        if not (0 < self.rel_tol < 1) or self.abs_tol < 0:
            raise ValueError("tolerances must satisfy 0 < rel_tol < 1, abs_tol >= 0")
        if self.base_order < 4 or self.base_order % 2:
            raise ValueError("base_order must be an even integer >= 4")
        if self.max_panels < 1:
            raise ValueError("max_panels must be positive")
        if self.osc_panels_per_period < 4:
            raise ValueError("osc_panels_per_period must be at least 4")

    def scaled(self, factor: float) -> "QuadConfig":
        return replace(self, rel_tol=min(self.rel_tol * factor, 0.5),
                       abs_tol=self.abs_tol * factor)


@dataclass
class IntegralResult:
    value: complex
    error_estimate: float
    tail_bound: float = 0.0
    panels_used: int = 0
    cutoff: Optional[float] = None

    def total_error(self) -> float:
        return float(self.error_estimate + self.tail_bound)


@lru_cache(maxsize=None)
def gauss_legendre(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def _neumaier(values):
    s = values[0].copy()
    c = np.zeros_like(s)
    for v in values[1:]:
        t = s + v
        c += np.where(np.abs(s) >= np.abs(v), (s - t) + v, (v - t) + s)
        s = t
    return s + c


def compensated_sum(values):
    """Neumaier summation over the leading axis (works for complex arrays)."""
    values = np.asarray(values)
    if values.shape[0] == 0:
        return np.zeros(values.shape[1:], dtype=values.dtype)
    if np.iscomplexobj(values):
        return _neumaier(values.real) + 1j * _neumaier(values.imag)
    return _neumaier(values)


def _as_2d(vals, n):
    vals = np.asarray(vals)
    if vals.shape[0] != n:
        raise ValueError(f"integrand returned leading dimension {vals.shape[0]}, expected {n}")
    return vals.reshape(n, -1), vals.ndim == 1


def _adaptive(f, lo, hi, cfg: QuadConfig, omega=0.0, scale=None):
    """Returns (value array (m,), error, panels, scalar).

    ``scalar`` tells whether ``f`` returned 1-D output.  Raises
    ``ToleranceError`` when the panel budget runs out.
    """
    p = cfg.base_order
    xh, wh = gauss_legendre(p)
    xl, wl = gauss_legendre(p // 2)
    xs = np.concatenate([xh, xl])
    length = hi - lo
    n0 = 1
    if omega > 0:
        n0 = int(math.ceil(length * abs(omega) * cfg.osc_panels_per_period))
    n0 = max(1, min(n0, cfg.max_panels))
    edges = np.linspace(lo, hi, n0 + 1)
    pending = list(zip(edges[:-1], edges[1:]))
    done = []  # (left, value, err, abs_value)
    while pending:
        left = np.array([a for a, _ in pending])
        right = np.array([b for _, b in pending])
        half = 0.5 * (right - left)
        mid = 0.5 * (right + left)
        nodes = (mid[:, None] + half[:, None] * xs[None, :]).ravel()
        vals, scalar = _as_2d(f(nodes), nodes.size)
        if not np.all(np.isfinite(vals)):
            raise NumericalError("non-finite integrand value")
        vals = vals.reshape(len(pending), xs.size, -1)
        qh = np.einsum("k,pkm->pm", wh, vals[:, :p]) * half[:, None]
        ql = np.einsum("k,pkm->pm", wl, vals[:, p:]) * half[:, None]
        qa = np.einsum("k,pkm->pm", wh, np.abs(vals[:, :p])) * half[:, None]
        err = np.max(np.abs(qh - ql), axis=1)
        l1 = np.max(np.sum(qa, axis=0) + sum((d[3] for d in done), 0.0))
        ref = max(l1, scale or 0.0)
        tol = max(cfg.abs_tol, cfg.rel_tol * ref)
        ok = err <= tol * (2 * half) / length
        nxt = []
        for i in range(len(pending)):
            if ok[i]:
                done.append((left[i], qh[i], err[i], qa[i]))
            else:
                nxt.append((left[i], mid[i]))
                nxt.append((mid[i], right[i]))
        if len(done) + len(nxt) > cfg.max_panels:
            done_all = done + [(left[i], qh[i], err[i], qa[i]) for i in range(len(pending))
                               if not ok[i]]
            done_all.sort(key=lambda d: d[0])
            best = compensated_sum(np.array([d[1] for d in done_all]))
            est = float(sum(d[2] for d in done_all))
            raise ToleranceError(
                f"panel budget {cfg.max_panels} exhausted on [{lo}, {hi}]",
                best=best, error_estimate=est)
        pending = nxt
    done.sort(key=lambda d: d[0])
    value = compensated_sum(np.array([d[1] for d in done]))
    err = float(sum(d[2] for d in done))
    return value, err, len(done), scalar


def _squeeze(value, like_scalar):
    return complex(value[0]) if like_scalar else np.asarray(value)


def integrate_interval(f: Callable, interval, cfg: Optional[QuadConfig] = None, *,
                       omega: float = 0.0, scale: Optional[float] = None) -> IntegralResult:
    """Integrate ``f`` over a finite interval.

    ``omega`` is the largest oscillation frequency (cycles per unit length);
    when positive, the initial mesh has at least ``osc_panels_per_period``
    panels per period.  ``scale`` is a magnitude used for the relative
    tolerance in place of the integral of |f| when it is larger.
    """
    cfg = cfg or QuadConfig()
    lo, hi = float(interval[0]), float(interval[1])
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ValueError("interval must be finite")
    if hi == lo:
        return IntegralResult(0j, 0.0, 0.0, 0)
    sign = 1.0
    if hi < lo:
        lo, hi, sign = hi, lo, -1.0
    value, err, panels, scalar = _adaptive(f, lo, hi, cfg, omega, scale)
    return IntegralResult(_squeeze(sign * value, scalar), err, 0.0, panels)


def fourier_transform(f: Callable, intervals, nu: float, cfg=None) -> complex:
    """Integral of f(x) exp(-2 pi i nu x) dx over a union of intervals."""
    total = 0j
    for iv in intervals:
        total += integrate_interval(
            lambda x: f(x) * np.exp(-2j * np.pi * nu * x), iv, cfg, omega=abs(nu)).value
    return complex(total)


def resolve_cutoff(policy: CutoffPolicy, tail: Optional[Callable], scale: float,
                   step: float = 0.0) -> float:
    """Smallest cutoff allowed by ``policy`` whose tail is below target.

    ``tail(B)`` must be non-increasing.  Cutoffs are searched on a
    geometric grid; ``step`` rounds the result up to a multiple of the
    sampling step so the rule sees a whole number of nodes.
    """
    if isinstance(policy, Fixed):
        return policy.cutoff
    target = policy.target_tail * (scale if policy.relative else 1.0)
    b = policy.floor
    if tail is not None and target > 0:
        while b < policy.ceiling and tail(b) > target:
            b *= 1.25
        b = min(b, policy.ceiling)
    if step > 0:
        b = step * math.ceil(b / step)
    return b


def _nyquist_grid(cutoff, bandwidth):
    step = 0.95 / bandwidth if bandwidth > 0 else cutoff
    k = max(1, int(math.floor(cutoff / step)))
    return step, k


def integrate_axb_haar(F: Callable, a_support, cfg: Optional[QuadConfig] = None, *,
                       bandwidth: Optional[float] = None,
                       tail: Optional[Callable] = None,
                       b_support=None, scale: Optional[float] = None,
                       chunk: int = 96) -> IntegralResult:
    """Integrate F(b, a) against a^-2 da db over R x a_support.

    ``F(b, a)`` receives a 1-D array of b values and a 1-D array of a values
    and returns shape ``(len(b), len(a))`` or ``(len(b), len(a), m)``.

    The b-direction is handled in one of three ways:

    * ``bandwidth`` given: F(., a) is taken to have Fourier support in
      [-bandwidth, bandwidth] and a uniform trapezoid sum on
      b = k * step, |k| <= K is used.  ``tail(B)`` must bound the integral
      of |F| over |b| > B.
    * ``b_support`` given: F vanishes outside it and a composite
      Gauss-Legendre rule is refined until stable.
    * otherwise ``tail`` must be provided and the same composite rule runs
      on [-B, B].
    """
    cfg = cfg or QuadConfig()
    alo, ahi = float(a_support[0]), float(a_support[1])
    if not 0 < alo < ahi:
        raise ValueError("a_support must be an interval inside (0, inf)")
    if bandwidth is None and b_support is None and tail is None:
        raise ValueError("need one of bandwidth, b_support or tail to control |b| -> inf")

    tail_bound = 0.0
    ref = scale or 0.0
    if bandwidth is not None:
        step0 = 0.95 / bandwidth if bandwidth > 0 else 1.0
        cutoff = resolve_cutoff(cfg.b_cutoff_policy, tail, ref, step0)
        step, k = _nyquist_grid(cutoff, bandwidth)
        b = step * np.arange(-k, k + 1)
        eff = k * step
        tail_bound = float(tail(eff)) if tail is not None else math.inf

        def inner(u):
            a = np.exp(u)
            out = []
            for s in range(0, a.size, chunk):
                aa = a[s:s + chunk]
                vals = np.asarray(F(b, aa))
                out.append(step * np.sum(vals, axis=0) * (aa ** -1).reshape(
                    (-1,) + (1,) * (vals.ndim - 2)))
            return np.concatenate(out, axis=0)
    else:
        if b_support is not None:
            blo, bhi = float(b_support[0]), float(b_support[1])
            cutoff = max(abs(blo), abs(bhi))
        else:
            cutoff = resolve_cutoff(cfg.b_cutoff_policy, tail, ref)
            blo, bhi = -cutoff, cutoff
            tail_bound = float(tail(cutoff))

        def inner(u):
            a = np.exp(u)
            vals = _refined_inner(F, (blo, bhi), a, cfg, chunk)
            return vals * (a ** -1).reshape((-1,) + (1,) * (vals.ndim - 1))

    # a = exp(u): a^-2 da = a^-1 du, and features scale with a
    value, err, panels, scalar = _adaptive(inner, math.log(alo), math.log(ahi), cfg, 0.0, scale)
    return IntegralResult(_squeeze(value, scalar), err, tail_bound, panels, cutoff)


def _refined_inner(F, interval, outer, cfg, chunk, inner_order=None):
    """Composite GL along the inner variable, doubled until stable.

    ``F(inner_nodes, outer_nodes)`` returns shape (n_inner, n_outer[, m]);
    the result has shape (n_outer[, m]).
    """
    lo, hi = interval
    p = inner_order or cfg.base_order
    x, w = gauss_legendre(p)

    def rule(npan):
        edges = np.linspace(lo, hi, npan + 1)
        half = 0.5 * np.diff(edges)
        nodes = (0.5 * (edges[:-1] + edges[1:])[:, None] + half[:, None] * x).ravel()
        weights = (half[:, None] * w).ravel()
        acc = []
        for s in range(0, outer.size, chunk):
            vals = np.asarray(F(nodes, outer[s:s + chunk]))
            acc.append(np.tensordot(weights, vals, axes=(0, 0)))
        return np.concatenate(acc, axis=0)

    npan = max(4, int(math.ceil(hi - lo)))
    prev = rule(npan)
    while True:
        npan *= 2
        cur = rule(npan)
        diff = np.max(np.abs(cur - prev))
        if diff <= max(cfg.abs_tol, cfg.rel_tol * np.max(np.abs(cur))) or npan > cfg.max_panels:
            if npan > cfg.max_panels:
                raise ToleranceError("inner rule did not stabilise", best=cur, error_estimate=diff)
            return cur
        prev = cur


def integrate_heis_haar(F: Callable, p_interval, cfg: Optional[QuadConfig] = None, *,
                        q_interval=None, q_bandwidth: Optional[float] = None,
                        q_tail: Optional[Callable] = None, q_step: Optional[float] = None,
                        theta_degree: int = 0, scale: Optional[float] = None,
                        chunk: int = 48) -> IntegralResult:
    """Integrate F(p, q, theta) dp dq dtheta over p_interval x R x [0, 1).

    ``F(p, q, theta)`` gets three 1-D arrays and returns shape
    ``(len(p), len(q), len(theta))`` or with a trailing component axis.

    theta uses the periodic trapezoid rule with 8 * theta_degree + 1 nodes,
    exact for trigonometric polynomials of that degree.  q uses a uniform
    trapezoid sum when ``q_bandwidth`` is given (step ``q_step`` if it is
    smaller), and a refined composite Gauss-Legendre rule on ``q_interval``
    otherwise.  p is adaptive.
    """
    cfg = cfg or QuadConfig()
    plo, phi = float(p_interval[0]), float(p_interval[1])
    n_theta = 8 * int(theta_degree) + 1
    theta = np.arange(n_theta) / n_theta
    tail_bound = 0.0
    cutoff = None
    ref = scale or 0.0

    if q_bandwidth is not None:
        step = 0.95 / q_bandwidth if q_bandwidth > 0 else math.inf
        if q_step is not None:
            step = min(step, q_step)
        cutoff = resolve_cutoff(cfg.b_cutoff_policy, q_tail, ref, step)
        if q_interval is not None:
            cutoff = max(cutoff, abs(q_interval[0]), abs(q_interval[1]))
        k = int(math.ceil(cutoff / step))
        q = step * np.arange(-k, k + 1)
        tail_bound = float(q_tail(k * step)) if q_tail is not None else 0.0

        def inner(p):
            out = []
            for s in range(0, p.size, chunk):
                vals = np.asarray(F(p[s:s + chunk], q, theta))
                out.append(step * np.sum(vals, axis=(1, 2)) / n_theta)
            return np.concatenate(out, axis=0)
    else:
        if q_interval is None:
            raise ValueError("need q_interval or q_bandwidth")

        def inner(p):
            def G(qq, pp):
                vals = np.asarray(F(pp, qq, theta))
                vals = np.sum(vals, axis=2) / n_theta
                return np.moveaxis(vals, 1, 0)
            return _refined_inner(G, tuple(q_interval), p, cfg, chunk)

    value, err, panels, scalar = _adaptive(inner, plo, phi, cfg, 0.0, scale)
    return IntegralResult(_squeeze(value, scalar), err, tail_bound, panels, cutoff)


def fourier_tail_bound(xi, eta, cutoff: float, order: int = 2) -> float:
    """Bound on the integral of |(xi *_{pi+} eta)(b, a)| over |b| > cutoff.

    With g_a(t) = xi(a t) conj(eta(t)) / t, integration by parts gives
    |F g_a(b)| <= ||g_a^(k)||_1 / (2 pi |b|)^k, so the b-tail of each slice
    is at most 2 C / ((k - 1) cutoff^(k-1)) with C = max_a ||g_a^(k)||_1 /
    (2 pi)^k.  The default order 2 gives a bound that halves when the
    cutoff doubles.  The maximum over a is taken on a grid.
    """
    from .axb import coefficient_derivative_constants

    consts = coefficient_derivative_constants(xi, eta, order)
    c = consts[order]
    return 2.0 * c / ((order - 1) * cutoff ** (order - 1))
