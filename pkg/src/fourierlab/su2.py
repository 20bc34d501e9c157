"""SU(2): Wigner representations, Haar quadrature and the torus derivation.

Group elements are unit quaternions (w, x, y, z) with matrix

    U = [[w - i z, -y - i x],
         [y - i x,  w + i z]].

Euler angles are ZYZ: U = s(alpha) r(beta) s(gamma) with
s(phi) = diag(exp(i phi/2), exp(-i phi/2)) and r(beta) the real rotation by
beta/2.  The ranges alpha in [0, 2 pi), beta in [0, pi], gamma in [0, 4 pi)
cover SU(2) exactly once.

The irreducible representation of dimension n + 1 acts on homogeneous
polynomials of degree n by (D(U) P)(u, v) = P((u, v) U), in the orthonormal
basis e_k = sqrt(C(n, k)) u^(n-k) v^k, k = 0..n.  The weight of e_k is
(n - 2k)/2, so D(s(phi)) = diag(exp(i (n - 2k) phi / 2)) and e_0 carries the
top weight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DomainError, NumericalError
from .quadrature import IntegralResult, gauss_legendre

__all__ = [
    "SU2Element", "SU2Irrep", "TrigTerm", "TrigPoly", "wigner_d", "wigner_d_batch",
    "f_pi", "f_pi_norm_ratio", "s_phi", "conj_intertwiner", "trig_eval", "conj_trig",
    "partial_phi", "haar_integrate_su2", "haar_nodes", "a_norm_su2", "d_flat_su2",
    "schur_pairing", "su2_l2_inner",
]


@dataclass(frozen=True)
class SU2Element:
    w: float
    x: float
    y: float
    z: float

    def __post_init__(self):
        norm = math.sqrt(self.w ** 2 + self.x ** 2 + self.y ** 2 + self.z ** 2)
        if abs(norm - 1.0) > 1e-12:
            raise DomainError(f"quaternion is not a unit vector (norm {norm})")

    @classmethod
    def normalized(cls, w, x, y, z) -> "SU2Element":
        v = np.array([w, x, y, z], dtype=float)
        v /= np.linalg.norm(v)
        return cls(*map(float, v))

    @classmethod
    def from_matrix(cls, u: np.ndarray) -> "SU2Element":
        alpha, beta = u[0, 0], u[1, 0]
        return cls.normalized(alpha.real, -beta.imag, beta.real, -alpha.imag)

    @classmethod
    def from_euler(cls, alpha: float, beta: float, gamma: float) -> "SU2Element":
        return cls.from_matrix(euler_matrix(alpha, beta, gamma))

    @classmethod
    def random(cls, rng: np.random.Generator) -> "SU2Element":
        # normalized Gaussian 4-vectors are Haar distributed on the 3-sphere
        return cls.normalized(*rng.normal(size=4))

    def matrix(self) -> np.ndarray:
        w, x, y, z = self.w, self.x, self.y, self.z
        return np.array([[w - 1j * z, -y - 1j * x], [y - 1j * x, w + 1j * z]])

    def euler(self) -> tuple:
        """(alpha, beta, gamma) in [0, 2 pi) x [0, pi] x [0, 4 pi)."""
        u = self.matrix()
        beta = 2.0 * math.atan2(abs(u[1, 0]), abs(u[0, 0]))
        plus = 2.0 * np.angle(u[0, 0]) if abs(u[0, 0]) > 1e-300 else 0.0
        minus = 2.0 * np.angle(u[1, 0]) if abs(u[1, 0]) > 1e-300 else plus
        # plus = alpha + gamma, minus = gamma - alpha (both mod 4 pi)
        alpha = 0.5 * (plus - minus)
        gamma = 0.5 * (plus + minus)
        alpha, gamma = alpha % (2 * math.pi), gamma
        # restore the sign lost by reducing alpha mod 2 pi
        if not np.allclose(euler_matrix(alpha, beta, gamma), u, atol=1e-9):
            gamma += 2 * math.pi
        return alpha, beta, gamma % (4 * math.pi)

    def __mul__(self, other: "SU2Element") -> "SU2Element":
        return SU2Element.from_matrix(self.matrix() @ other.matrix())

    def inverse(self) -> "SU2Element":
        return SU2Element(self.w, -self.x, -self.y, -self.z)

    @staticmethod
    def identity() -> "SU2Element":
        return SU2Element(1.0, 0.0, 0.0, 0.0)


def euler_matrix(alpha, beta, gamma) -> np.ndarray:
    """s(alpha) r(beta) s(gamma); broadcasts over array arguments."""
    alpha, beta, gamma = np.broadcast_arrays(*(np.asarray(v, dtype=float)
                                               for v in (alpha, beta, gamma)))
    c, s = np.cos(0.5 * beta), np.sin(0.5 * beta)
    ep, em = np.exp(0.5j * (alpha + gamma)), np.exp(0.5j * (gamma - alpha))
    out = np.empty(alpha.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = ep * c
    out[..., 0, 1] = -np.conj(em) * s
    out[..., 1, 0] = em * s
    out[..., 1, 1] = np.conj(ep) * c
    return out


def s_phi(phi: float) -> SU2Element:
    return SU2Element.normalized(math.cos(0.5 * phi), 0.0, 0.0, -math.sin(0.5 * phi))


def _matrices(g) -> np.ndarray:
    if isinstance(g, SU2Element):
        return g.matrix()
    return np.asarray(g, dtype=complex)


@lru_cache(maxsize=64)
def _wigner_table(n: int):
    """Nonzero monomials of every entry: (j, k, coefficient, pa, pb, pc, pd)."""
    rows = []
    for j in range(n + 1):
        for k in range(n + 1):
            norm = math.sqrt(math.comb(n, k) / math.comb(n, j))
            for s in range(max(0, k - j), min(k, n - j) + 1):
                coef = math.comb(n - k, n - j - s) * math.comb(k, s) * norm
                rows.append((j, k, coef, n - j - s, s, j - k + s, k - s))
    return tuple(rows)


def wigner_d_batch(n: int, u: np.ndarray) -> np.ndarray:
    """D_n at a stack of SU(2) matrices, shape (..., 2, 2) -> (..., n+1, n+1).

    Entries are the explicit binomial sums
        D[j, k] = sqrt(C(n,k)/C(n,j)) sum_s C(n-k, n-j-s) C(k, s) a^(n-j-s) b^s c^(j-k+s) d^(k-s)
    for U = [[a, b], [c, d]], accumulated in extended precision.
    """
    if n < 0 or int(n) != n:
        raise DomainError("representation index must be a non-negative integer")
    u = np.asarray(u, dtype=np.clongdouble)
    a, b, c, d = u[..., 0, 0], u[..., 0, 1], u[..., 1, 0], u[..., 1, 1]
    powers = [np.stack([x ** p for p in range(n + 1)]) for x in (a, b, c, d)]
    out = np.zeros(u.shape[:-2] + (n + 1, n + 1), dtype=np.clongdouble)
    for j, k, coef, pa, pb, pc, pd in _wigner_table(n):
        out[..., j, k] += coef * powers[0][pa] * powers[1][pb] * powers[2][pc] * powers[3][pd]
    return out.astype(complex)


def wigner_d(n: int, g) -> np.ndarray:
    return wigner_d_batch(n, _matrices(g))


@dataclass(frozen=True)
class SU2Irrep:
    n: int

    def __post_init__(self):
        if self.n < 0:
            raise DomainError("n must be non-negative")

    @property
    def dim(self) -> int:
        return self.n + 1

    def __call__(self, g) -> np.ndarray:
        return wigner_d(self.n, g)

    def weights(self) -> np.ndarray:
        return (self.n - 2 * np.arange(self.n + 1)) / 2.0


def f_pi(n: int) -> np.ndarray:
    """Derivative of D_n(s(phi)) at phi = 0: diag(i k/2), k = n, n-2, ..., -n."""
    if n < 0:
        raise DomainError("n must be non-negative")
    return np.diag(1j * (n - 2 * np.arange(n + 1)) / 2.0)


def f_pi_norm_ratio(n: int) -> float:
    """Operator norm of f_pi(n) divided by the dimension, via SVD."""
    return float(np.linalg.svd(f_pi(n), compute_uv=False).max()) / (n + 1)


@lru_cache(maxsize=64)
def conj_intertwiner(n: int) -> np.ndarray:
    """J with conj(D_n(g)) = J D_n(g) J^{-1}; J e_k = (-1)^k e_{n-k}."""
    j = np.zeros((n + 1, n + 1))
    for k in range(n + 1):
        j[n - k, k] = (-1) ** k
    return j


@dataclass(frozen=True)
class TrigTerm:
    n: int
    xi: tuple
    eta: tuple
    weight: complex = 1.0 + 0j

    def __post_init__(self):
        if self.n < 0 or len(self.xi) != self.n + 1 or len(self.eta) != self.n + 1:
            raise DomainError("vectors must have length n + 1")

    @classmethod
    def make(cls, n, xi, eta, weight=1.0):
        return cls(int(n), tuple(complex(v) for v in np.ravel(xi)),
                   tuple(complex(v) for v in np.ravel(eta)), complex(weight))


@dataclass(frozen=True)
class TrigPoly:
    """f(g) = sum weight <D_n(g) xi, eta>."""

    terms: tuple = ()

    def __add__(self, other: "TrigPoly") -> "TrigPoly":
        return TrigPoly(self.terms + other.terms)

    @property
    def max_n(self) -> int:
        return max((t.n for t in self.terms), default=0)

    def blocks(self) -> dict:
        out = {}
        for t in self.terms:
            out.setdefault(t.n, []).append(t)
        return out

    def __call__(self, g) -> complex:
        return trig_eval(self, _matrices(g))


def trig_eval(f: TrigPoly, u: np.ndarray) -> np.ndarray:
    """Evaluate at a stack of matrices (..., 2, 2)."""
    u = np.asarray(u, dtype=complex)
    out = np.zeros(u.shape[:-2], dtype=complex)
    for n, terms in f.blocks().items():
        d = wigner_d_batch(n, u)
        # sum_i w_i eta_i^H D xi_i = tr(D M) with M = sum_i w_i xi_i eta_i^H
        m = sum(t.weight * np.outer(t.xi, np.conj(t.eta)) for t in terms)
        out = out + np.einsum("...jk,kj->...", d, m)
    return out


def conj_trig(f: TrigPoly) -> TrigPoly:
    """The polynomial g -> conj(f(g)), rewritten in the same representations."""
    out = []
    for t in f.terms:
        j = conj_intertwiner(t.n)
        out.append(TrigTerm.make(t.n, j @ np.conj(t.xi), j @ np.conj(t.eta), np.conj(t.weight)))
    return TrigPoly(tuple(out))


def partial_phi(f: TrigPoly) -> TrigPoly:
    """d/dphi f(g s(phi)) at phi = 0: each xi becomes f_pi(n) xi."""
    return TrigPoly(tuple(TrigTerm.make(t.n, f_pi(t.n) @ np.array(t.xi), t.eta, t.weight)
                          for t in f.terms if t.n > 0))


def haar_nodes(n_max: int):
    """Product rule exact for products of two coefficients with blocks <= n_max.

    Returns (matrices (N, 2, 2), weights (N,)) with weights summing to 1.
    """
    m = 2 * n_max + 2
    alpha = 2 * np.pi * np.arange(m) / m
    gamma = 4 * np.pi * np.arange(m) / m
    x, w = gauss_legendre(n_max + 2)
    beta = np.arccos(x)
    A, B, G = np.meshgrid(alpha, beta, gamma, indexing="ij")
    W = np.broadcast_to(w[None, :, None] / (2.0 * m * m), A.shape)
    return euler_matrix(A.ravel(), B.ravel(), G.ravel()), W.ravel()


def haar_integrate_su2(f: Callable, n_max: int) -> IntegralResult:
    """Normalized Haar integral of f, given on stacks of matrices.

    ``n_max`` is the largest block of the two coefficient factors in f.  The
    rule is exact at that degree; the error estimate compares against the
    rule of the next degree.
    """
    if n_max < 0:
        raise DomainError("n_max must be non-negative")
    vals = []
    for deg in (n_max, n_max + 1):
        u, w = haar_nodes(deg)
        vals.append(np.tensordot(w, np.asarray(f(u)), axes=(0, 0)))
    value = vals[0]
    err = float(np.max(np.abs(vals[1] - vals[0])))
    if not np.all(np.isfinite(value)):
        raise NumericalError("non-finite Haar integral")
    return IntegralResult(value if np.ndim(value) else complex(value), err, 0.0,
                          (2 * n_max + 2) ** 2 * (n_max + 2), None)


def su2_l2_inner(f: TrigPoly, g: TrigPoly) -> IntegralResult:
    n = max(f.max_n, g.max_n)
    return haar_integrate_su2(lambda u: trig_eval(f, u) * np.conj(trig_eval(g, u)), n)


def d_flat_su2(f: TrigPoly, g: TrigPoly) -> IntegralResult:
    """Integral of (d_phi f) g against normalized Haar measure."""
    df = partial_phi(f)
    n = max(f.max_n, g.max_n)
    return haar_integrate_su2(lambda u: trig_eval(df, u) * trig_eval(g, u), n)


def schur_pairing(n1, xi1, eta1, n2, xi2, eta2) -> complex:
    """Closed form of the integral of <D xi1, eta1> conj(<D xi2, eta2>)."""
    if n1 != n2:
        return 0j
    return complex(np.vdot(xi2, xi1) * np.vdot(eta1, eta2) / (n1 + 1))


def a_norm_su2(f: TrigPoly) -> float:
    """Sum over blocks of the trace norm of sum w |xi><eta|."""
    total = 0.0
    for n, terms in f.blocks().items():
        m = sum(t.weight * np.outer(t.xi, np.conj(t.eta)) for t in terms)
        try:
            total += float(np.sum(np.linalg.svd(m, compute_uv=False)))
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"SVD failed on block {n}") from exc
    return total
