"""Pointwise-evaluable expression trees for test vectors on the line.

Every node can return its value together with all derivatives up to a
requested order (``derivs``).  Leaves are smooth bumps and polynomials
restricted to an interval; the remaining nodes are closed under the
operations the group modules need (dilation, modulation, power weights,
products).  Supports are tracked exactly as finite unions of intervals.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import DomainError

__all__ = [
    "FuncExpr", "Bump", "Poly", "Sum", "Product", "Scale", "Shift", "Dilate",
    "PowerWeight", "Modulate", "Conj", "Deriv", "PlaneFunc", "Measure",
    "DomainTag", "evaluate", "support", "domain_tag", "inner_product",
    "max_frequency", "to_dict", "from_dict", "dumps", "loads",
    "random_funcexpr", "random_plane", "l2_norm",
]


class Measure(enum.Enum):
    HAAR_HALFLINE = "haar_halfline"      # dt/t on (0, inf)
    LEBESGUE_LINE = "lebesgue_line"      # dt on R
    LEBESGUE_PLANE = "lebesgue_plane"    # dx dy on R^2


class DomainTag(enum.Enum):
    HALF_LINE = "halfline"
    LINE = "line"
    PLANE = "plane"


Intervals = list  # list[tuple[float, float]], sorted and disjoint


def _merge(intervals):
    out = []
    for lo, hi in sorted(intervals):
        if hi <= lo:
            continue
        if out and lo <= out[-1][1]:
            out[-1] = (out[-1][0], max(out[-1][1], hi))
        else:
            out.append((lo, hi))
    return out


def _intersect(a, b):
    out = []
    i = j = 0
    while i < len(a) and j < len(b):
        lo = max(a[i][0], b[j][0])
        hi = min(a[i][1], b[j][1])
        if lo < hi:
            out.append((lo, hi))
        if a[i][1] < b[j][1]:
            i += 1
        else:
            j += 1
    return out


def _leibniz(a, b):
    """Derivative stack of a product from the stacks of its factors."""
    k = a.shape[0] - 1
    out = np.zeros(np.broadcast_shapes(a.shape, b.shape), dtype=complex)
    for n in range(k + 1):
        for j in range(n + 1):
            out[n] += math.comb(n, j) * a[j] * b[n - j]
    return out


@lru_cache(maxsize=None)
def _bump_polys(k):
    """Polynomials P_j with d^j/dx^j exp(-1/(1-x^2)) = P_j(x) exp(-1/s) / s^(2j)."""
    polys = [np.array([1.0])]
    x = np.array([0.0, 1.0])
    s = np.array([1.0, 0.0, -1.0])
    s2 = npoly.polymul(s, s)
    for j in range(k):
        p = polys[-1]
        term1 = npoly.polymul(npoly.polyder(p), s2)
        coef = npoly.polysub(npoly.polymul(4.0 * j * x, s), 2.0 * x)
        term2 = npoly.polymul(coef, p)
        polys.append(npoly.polyadd(term1, term2))
    return tuple(polys)


class FuncExpr:
    """Base class.  Subclasses are frozen dataclasses and hence hashable."""

    def derivs(self, t, k=0):
        """Array of shape ``(k+1,) + shape(t)`` holding f, f', ..., f^(k)."""
        raise NotImplementedError

    def support(self) -> Intervals:
        raise NotImplementedError

    def __call__(self, t):
        return evaluate(self, t)

    def __add__(self, other):
        if not isinstance(other, FuncExpr):
            return NotImplemented
        return Sum((self, other))

    def __mul__(self, other):
        if isinstance(other, FuncExpr):
            return Product((self, other))
        if isinstance(other, (int, float, complex, np.number)):
            return Scale(complex(other), self)
        return NotImplemented

    __rmul__ = __mul__

    def __neg__(self):
        return Scale(-1.0 + 0j, self)


@dataclass(frozen=True)
class Bump(FuncExpr):
    """exp(-1/(1 - x^2)) with x = (t - center)/radius, zero for |x| >= 1."""

    center: float
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("bump radius must be positive")

    def derivs(self, t, k=0):
        t = np.asarray(t, dtype=float)
        out = np.zeros((k + 1,) + t.shape, dtype=complex)
        x = (t - self.center) / self.radius
        m = np.abs(x) < 1.0
        if not m.any():
            return out
        xm = x[m]
        s = 1.0 - xm * xm
        base = -1.0 / s
        logs = np.log(s)
        polys = _bump_polys(k)
        for j in range(k + 1):
            val = npoly.polyval(xm, polys[j]) * np.exp(base - 2 * j * logs)
            out[j][m] = val * self.radius ** (-j)
        return out

    def support(self):
        return [(self.center - self.radius, self.center + self.radius)]


@dataclass(frozen=True)
class Poly(FuncExpr):
    """Polynomial with ascending coefficients, cut off to a closed interval."""

    coefficients: tuple
    interval: tuple

    def derivs(self, t, k=0):
        t = np.asarray(t, dtype=float)
        lo, hi = self.interval
        m = (t >= lo) & (t <= hi)
        c = np.asarray(self.coefficients, dtype=complex)
        out = np.zeros((k + 1,) + t.shape, dtype=complex)
        for j in range(k + 1):
            out[j][m] = npoly.polyval(t[m], c) if c.size else 0.0
            c = npoly.polyder(c) if c.size > 1 else np.zeros(1, dtype=complex)
        return out

    def support(self):
        if not any(self.coefficients):
            return []
        return [tuple(float(v) for v in self.interval)]


@dataclass(frozen=True)
class Sum(FuncExpr):
    terms: tuple

    def derivs(self, t, k=0):
        t = np.asarray(t, dtype=float)
        out = np.zeros((k + 1,) + t.shape, dtype=complex)
        for f in self.terms:
            out += f.derivs(t, k)
        return out

    def support(self):
        return _merge([iv for f in self.terms for iv in f.support()])


@dataclass(frozen=True)
class Product(FuncExpr):
    factors: tuple

    def derivs(self, t, k=0):
        t = np.asarray(t, dtype=float)
        if not self.support():
            return np.zeros((k + 1,) + t.shape, dtype=complex)
        out = self.factors[0].derivs(t, k)
        for f in self.factors[1:]:
            out = _leibniz(out, f.derivs(t, k))
        return out

    def support(self):
        out = self.factors[0].support()
        for f in self.factors[1:]:
            out = _intersect(out, f.support())
        return out


@dataclass(frozen=True)
class Scale(FuncExpr):
    c: complex
    f: FuncExpr

    def derivs(self, t, k=0):
        return self.c * self.f.derivs(t, k)

    def support(self):
        return [] if self.c == 0 else self.f.support()


@dataclass(frozen=True)
class Shift(FuncExpr):
    """t -> f(t - s)."""

    s: float
    f: FuncExpr

    def derivs(self, t, k=0):
        return self.f.derivs(np.asarray(t, dtype=float) - self.s, k)

    def support(self):
        return [(lo + self.s, hi + self.s) for lo, hi in self.f.support()]


@dataclass(frozen=True)
class Dilate(FuncExpr):
    """t -> f(a t) with a > 0."""

    a: float
    f: FuncExpr

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError("dilation factor must be positive")

    def derivs(self, t, k=0):
        out = self.f.derivs(self.a * np.asarray(t, dtype=float), k)
        for j in range(1, k + 1):
            out[j] *= self.a ** j
        return out

    def support(self):
        return [(lo / self.a, hi / self.a) for lo, hi in self.f.support()]


def _is_nonneg_int(alpha):
    return float(alpha).is_integer() and alpha >= 0


@dataclass(frozen=True)
class PowerWeight(FuncExpr):
    """t -> t^alpha f(t).

    Non-integer or negative exponents need the operand supported in
    (0, inf); otherwise evaluation raises ``DomainError``.
    """

    alpha: float
    f: FuncExpr

    def derivs(self, t, k=0):
        t = np.asarray(t, dtype=float)
        alpha = self.alpha
        integral = _is_nonneg_int(alpha)
        if not integral:
            supp = self.f.support()
            if supp and supp[0][0] <= 0:
                raise DomainError(
                    f"t^{alpha} applied to a function whose support reaches {supp[0][0]}")
        w = np.zeros((k + 1,) + t.shape, dtype=complex)
        pos = t > 0 if not integral else np.ones(t.shape, dtype=bool)
        tp = t[pos]
        for j in range(k + 1):
            ff = 1.0
            for i in range(j):
                ff *= alpha - i
            if ff == 0.0:
                continue
            w[j][pos] = ff * tp ** (alpha - j)
        return _leibniz(w, self.f.derivs(t, k))

    def support(self):
        return self.f.support()


@dataclass(frozen=True)
class Modulate(FuncExpr):
    """t -> exp(2 pi i omega t) f(t)."""

    omega: float
    f: FuncExpr

    def derivs(self, t, k=0):
        t = np.asarray(t, dtype=float)
        e = np.exp(2j * np.pi * self.omega * t)
        c = 2j * np.pi * self.omega
        m = np.stack([c ** j * e for j in range(k + 1)])
        return _leibniz(m, self.f.derivs(t, k))

    def support(self):
        return self.f.support()


@dataclass(frozen=True)
class Conj(FuncExpr):
    f: FuncExpr

    def derivs(self, t, k=0):
        return np.conj(self.f.derivs(t, k))

    def support(self):
        return self.f.support()


@dataclass(frozen=True)
class Deriv(FuncExpr):
    f: FuncExpr

    def derivs(self, t, k=0):
        return self.f.derivs(t, k + 1)[1:]

    def support(self):
        return self.f.support()


@dataclass(frozen=True)
class PlaneFunc:
    """Finite sum of weighted tensor products w * fx(x) * fy(y) on R^2."""

    terms: tuple  # tuple of (weight, fx, fy)

    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        out = np.zeros(np.broadcast_shapes(x.shape, y.shape), dtype=complex)
        for w, fx, fy in self.terms:
            out += w * fx.derivs(x)[0] * fy.derivs(y)[0]
        return out

    def conj(self):
        return PlaneFunc(tuple((np.conj(w), Conj(fx), Conj(fy)) for w, fx, fy in self.terms))

    def support_x(self):
        return _merge([iv for _, fx, _ in self.terms for iv in fx.support()])

    def support_y(self):
        return _merge([iv for _, _, fy in self.terms for iv in fy.support()])


def evaluate(f, t):
    """Value of ``f`` at ``t`` (scalar in, complex scalar out)."""
    arr = np.asarray(t, dtype=float)
    val = f.derivs(arr, 0)[0]
    return complex(val) if arr.ndim == 0 else val


def support(f) -> Intervals:
    return f.support()


def domain_tag(f) -> DomainTag:
    if isinstance(f, PlaneFunc):
        return DomainTag.PLANE
    supp = f.support()
    if supp and supp[0][0] > 0:
        return DomainTag.HALF_LINE
    return DomainTag.LINE


def max_frequency(f) -> float:
    """Upper bound on the modulation frequency present in ``f``."""
    if isinstance(f, Modulate):
        return abs(f.omega) + max_frequency(f.f)
    if isinstance(f, Dilate):
        return f.a * max_frequency(f.f)
    if isinstance(f, (Scale, Shift, Conj, PowerWeight, Deriv)):
        return max_frequency(f.f)
    if isinstance(f, Sum):
        return max((max_frequency(g) for g in f.terms), default=0.0)
    if isinstance(f, Product):
        return sum(max_frequency(g) for g in f.factors)
    return 0.0


def inner_product(f, g, measure=Measure.HAAR_HALFLINE, cfg=None) -> complex:
    """<f, g> = integral of f * conj(g) for the chosen measure.

    Raises ``ToleranceError`` if the adaptive quadrature cannot reach
    the tolerance of ``cfg``.
    """
    from .quadrature import QuadConfig, integrate_interval

    cfg = cfg or QuadConfig()
    measure = Measure(measure)
    if measure is Measure.LEBESGUE_PLANE:
        total = 0j
        for w1, fx, fy in f.terms:
            for w2, gx, gy in g.terms:
                total += (w1 * np.conj(w2)
                          * inner_product(fx, gx, Measure.LEBESGUE_LINE, cfg)
                          * inner_product(fy, gy, Measure.LEBESGUE_LINE, cfg))
        return complex(total)
    supp = _intersect(f.support(), g.support())
    if not supp:
        return 0j
    haar = measure is Measure.HAAR_HALFLINE
    if haar and supp[0][0] <= 0:
        raise DomainError("Haar measure on the half-line needs support in (0, inf)")
    omega = max_frequency(f) + max_frequency(g)

    def integrand(t):
        v = f.derivs(t)[0] * np.conj(g.derivs(t)[0])
        return v / t if haar else v

    return complex(sum(integrate_interval(integrand, iv, cfg, omega=omega).value
                       for iv in supp))


def l2_norm(f, measure=Measure.HAAR_HALFLINE, cfg=None) -> float:
    return math.sqrt(max(inner_product(f, f, measure, cfg).real, 0.0))


# --- serialization -------------------------------------------------------

def _enc(z):
    z = complex(z)
    return [z.real, z.imag]


def _dec(v):
    return complex(v[0], v[1]) if isinstance(v, (list, tuple)) else complex(v)


def to_dict(f) -> dict:
    if isinstance(f, Bump):
        return {"node": "Bump", "center": f.center, "radius": f.radius}
    if isinstance(f, Poly):
        return {"node": "Poly", "coefficients": [_enc(c) for c in f.coefficients],
                "interval": list(f.interval)}
    if isinstance(f, Sum):
        return {"node": "Sum", "terms": [to_dict(g) for g in f.terms]}
    if isinstance(f, Product):
        return {"node": "Product", "factors": [to_dict(g) for g in f.factors]}
    if isinstance(f, Scale):
        return {"node": "Scale", "c": _enc(f.c), "f": to_dict(f.f)}
    if isinstance(f, (Shift, Dilate, PowerWeight, Modulate)):
        key = {"Shift": "s", "Dilate": "a", "PowerWeight": "alpha", "Modulate": "omega"}
        name = type(f).__name__
        return {"node": name, key[name]: getattr(f, key[name]), "f": to_dict(f.f)}
    if isinstance(f, (Conj, Deriv)):
        return {"node": type(f).__name__, "f": to_dict(f.f)}
    if isinstance(f, PlaneFunc):
        return {"node": "PlaneFunc",
                "terms": [{"w": _enc(w), "x": to_dict(fx), "y": to_dict(fy)}
                          for w, fx, fy in f.terms]}
    raise TypeError(f"cannot serialize {type(f).__name__}")


def from_dict(d: dict):
    node = d["node"]
    if node == "Bump":
        return Bump(float(d["center"]), float(d["radius"]))
    if node == "Poly":
        return Poly(tuple(_dec(c) for c in d["coefficients"]),
                    tuple(float(v) for v in d["interval"]))
    if node == "Sum":
        return Sum(tuple(from_dict(g) for g in d["terms"]))
    if node == "Product":
        return Product(tuple(from_dict(g) for g in d["factors"]))
    if node == "Scale":
        return Scale(_dec(d["c"]), from_dict(d["f"]))
    if node == "Shift":
        return Shift(float(d["s"]), from_dict(d["f"]))
    if node == "Dilate":
        return Dilate(float(d["a"]), from_dict(d["f"]))
    if node == "PowerWeight":
        return PowerWeight(float(d["alpha"]), from_dict(d["f"]))
    if node == "Modulate":
        return Modulate(float(d["omega"]), from_dict(d["f"]))
    if node == "Conj":
        return Conj(from_dict(d["f"]))
    if node == "Deriv":
        return Deriv(from_dict(d["f"]))
    if node == "PlaneFunc":
        return PlaneFunc(tuple((_dec(t["w"]), from_dict(t["x"]), from_dict(t["y"]))
                               for t in d["terms"]))
    raise ValueError(f"unknown node type {node!r}")


def dumps(f) -> str:
    return json.dumps(to_dict(f), sort_keys=True, separators=(",", ":"))


def loads(s: str):
    return from_dict(json.loads(s))


# --- random test vectors ---------------------------------------------------

def random_funcexpr(rng: np.random.Generator, domain=DomainTag.HALF_LINE,
                    max_bumps=3) -> FuncExpr:
    """Sum of 1..max_bumps weighted bumps.

    Centers lie in [0.5, 4], radii in [0.2, 1] and weights have modulus at
    most 2.  On the half-line the radius is shrunk so every support stays
    inside [0.1, inf).  On the line, centers are reflected with probability
    one half.
    """
    domain = DomainTag(domain)
    n = int(rng.integers(1, max_bumps + 1))
    terms = []
    for _ in range(n):
        center = float(rng.uniform(0.5, 4.0))
        radius = float(rng.uniform(0.2, 1.0))
        if domain is DomainTag.HALF_LINE:
            radius = min(radius, center - 0.1)
        elif rng.random() < 0.5:
            center = -center
        mod = float(rng.uniform(0.25, 2.0))
        c = complex(mod * np.exp(2j * np.pi * rng.random()))
        terms.append(Scale(c, Bump(center, radius)))
    return terms[0] if n == 1 else Sum(tuple(terms))


def random_plane(rng: np.random.Generator, max_terms=2) -> PlaneFunc:
    n = int(rng.integers(1, max_terms + 1))
    terms = []
    for _ in range(n):
        w = complex(np.exp(2j * np.pi * rng.random()) * rng.uniform(0.5, 1.5))
        fx = random_funcexpr(rng, DomainTag.LINE, max_bumps=1)
        fy = random_funcexpr(rng, DomainTag.LINE, max_bumps=1)
        terms.append((w, fx, fy))
    return PlaneFunc(tuple(terms))
