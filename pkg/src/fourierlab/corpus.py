"""Seeded test inputs and stable digests.

Every corpus is drawn from a PCG64 stream seeded by (seed, kind), so one
kind of input never shifts the stream of another and a suite can be rerun on
its own.  ``digest`` hashes a canonical JSON encoding of the inputs.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List

import numpy as np

from .axb import AlgebraElem, AxbElement, CoeffSum, CoeffTerm, Rep, conj_term, term_a_support
from .funcexpr import (Bump, DomainTag, FuncExpr, PlaneFunc, Scale, random_funcexpr,
                       random_plane, to_dict)
from .heis import HeisElement, HrElem, Lambda0CoeffTerm, SchCoeffTerm, conj_term as heis_conj
from .su2 import SU2Element, TrigPoly, TrigTerm, conj_trig

__all__ = ["CorpusSpec", "gen_corpus", "digest", "encode", "rng_for", "GENERATORS"]


def _kind_key(kind: str) -> int:
    return int.from_bytes(hashlib.blake2b(kind.encode(), digest_size=8).digest(), "little")


def rng_for(seed: int, kind: str) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed) & (2**64 - 1),
                                                                        _kind_key(kind)])))


# --- canonical encoding -------------------------------------------------------

def encode(obj: Any) -> Any:
    """JSON-ready canonical form of corpus items."""
    if isinstance(obj, FuncExpr):
        return to_dict(obj)
    if isinstance(obj, PlaneFunc):
        return {"plane": [[encode(w), encode(fx), encode(fy)] for w, fx, fy in obj.terms]}
    if isinstance(obj, CoeffTerm):
        return {"axb_term": [obj.rep.name, encode(obj.xi), encode(obj.eta), encode(obj.weight)]}
    if isinstance(obj, CoeffSum):
        return {"axb_sum": [encode(t) for t in obj.terms]}
    if isinstance(obj, AlgebraElem):
        return {"axb_alg": [[encode(c), [encode(f) for f in fs]] for c, fs in obj.monomials]}
    if isinstance(obj, SchCoeffTerm):
        return {"sch": [obj.n, encode(obj.xi), encode(obj.eta), encode(obj.weight)]}
    if isinstance(obj, Lambda0CoeffTerm):
        return {"lambda0": [encode(obj.xi), encode(obj.eta), encode(obj.weight)]}
    if isinstance(obj, HrElem):
        return {"hr": [encode(t) for t in obj.terms]}
    if isinstance(obj, TrigTerm):
        return {"trig": [obj.n, encode(obj.xi), encode(obj.eta), encode(obj.weight)]}
    if isinstance(obj, TrigPoly):
        return {"trigpoly": [encode(t) for t in obj.terms]}
    if isinstance(obj, AxbElement):
        return {"axb_point": [obj.b, obj.a]}
    if isinstance(obj, HeisElement):
        return {"heis_point": [obj.p, obj.q, obj.theta]}
    if isinstance(obj, SU2Element):
        return {"su2_point": [obj.w, obj.x, obj.y, obj.z]}
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [encode(v) for v in obj.tolist()]
    if isinstance(obj, dict):
        return {str(k): encode(v) for k, v in sorted(obj.items())}
    if isinstance(obj, (list, tuple)):
        return [encode(v) for v in obj]
    if isinstance(obj, str) or obj is None:
        return obj
    raise TypeError(f"cannot encode {type(obj).__name__}")


def digest(obj: Any) -> str:
    """16 hex digits of blake2b over the canonical JSON of ``obj``."""
    text = json.dumps(encode(obj), sort_keys=True, separators=(",", ":"))
    return hashlib.blake2b(text.encode(), digest_size=8).hexdigest()


# --- generators ----------------------------------------------------------------

def _phase(rng) -> complex:
    return complex(np.exp(2j * np.pi * rng.random()) * rng.uniform(0.5, 1.5))


def _half(rng, bumps=1) -> FuncExpr:
    return random_funcexpr(rng, DomainTag.HALF_LINE, max_bumps=bumps)


def _line(rng, bumps=2) -> FuncExpr:
    return random_funcexpr(rng, DomainTag.LINE, max_bumps=bumps)


def _perturb(rng, f: FuncExpr) -> FuncExpr:
    """f plus a small random bump, so paired vectors overlap."""
    extra = _half(rng)
    return f + Scale(complex(0.3 * rng.random()), extra)


def gen_axb_quadruple(rng) -> dict:
    xi1, eta1 = _half(rng, 2), _half(rng, 2)
    if rng.random() < 0.5:
        xi2, eta2 = _perturb(rng, xi1), _perturb(rng, eta1)
    else:
        xi2, eta2 = _half(rng, 2), _half(rng, 2)
    return {"xi1": xi1, "eta1": eta1, "xi2": xi2, "eta2": eta2}


def _axb_term(rng, rep=None, bumps=1) -> CoeffTerm:
    rep = rep or (Rep.PLUS if rng.random() < 0.5 else Rep.MINUS)
    return CoeffTerm(rep, _half(rng, bumps), _half(rng, bumps), _phase(rng))


def _axb_sum(rng, max_terms=4) -> CoeffSum:
    return CoeffSum(tuple(_axb_term(rng) for _ in range(int(rng.integers(1, max_terms + 1)))))


def gen_axb_pair(rng) -> dict:
    """CoeffSum pair; half the time g contains the conjugates of f's terms."""
    f = _axb_sum(rng)
    if rng.random() < 0.5:
        extra = int(rng.integers(0, 4 - min(len(f.terms), 3) + 1))
        terms = tuple(conj_term(t) for t in f.terms)[:4 - extra] + \
            tuple(_axb_term(rng) for _ in range(extra))
        g = CoeffSum(terms[:4])
    else:
        g = _axb_sum(rng)
    return {"f": f, "g": g}


def gen_axb_fd(rng) -> dict:
    term = _axb_term(rng, bumps=2)
    lo, hi = term_a_support(term)
    a = float(np.exp(rng.uniform(np.log(lo), np.log(hi)) * 0.8 + 0.1 * (np.log(lo) + np.log(hi))))
    b = float(rng.uniform(-2.0, 2.0))
    return {"term": term, "point": AxbElement(b, a)}


def _matched_terms(rng, k: int) -> list:
    """k coefficient terms whose product has a non-trivial Haar integral.

    A plus term oscillates in b at frequencies near -c and a minus term near
    +c, where c is the center of eta; the eta centers are chosen so these
    frequencies sum to zero.  All xi are centered at a0 * c so the a-supports
    overlap near a0.
    """
    while True:
        freqs = [float(rng.choice([-1.0, 1.0]) * rng.uniform(0.6, 1.6)) for _ in range(k - 1)]
        last = -sum(freqs)
        if 0.6 <= abs(last) <= 4.0:
            break
    freqs.append(last)
    a0 = float(np.exp(rng.uniform(-0.4, 0.4)))
    terms = []
    for w in freqs:
        c = abs(w)
        r = float(rng.uniform(0.35, 0.5)) * c
        rep = Rep.PLUS if w < 0 else Rep.MINUS
        xi = Scale(_phase(rng), Bump(a0 * c, a0 * r * float(rng.uniform(0.8, 1.2))))
        eta = Scale(_phase(rng), Bump(c, r))
        terms.append(CoeffTerm(rep, xi, eta, _phase(rng)))
    rng.shuffle(terms)
    return terms


def gen_axb_triple(rng, index: int) -> dict:
    """Leibniz triples; even indices carry a genuine two-factor product in f."""
    if index % 2 == 0:
        t1, t2, g, h = _matched_terms(rng, 4)
        f = AlgebraElem(((1.0 + 0j, (t1, t2)),))
    else:
        f, g, h = _matched_terms(rng, 3)
    return {"f": f, "g": g, "h": h, "has_product": index % 2 == 0}


def gen_axb_vector(rng) -> dict:
    return {"xi": _half(rng, 2)}


def gen_heis_pair(rng) -> dict:
    return {"xi": _line(rng), "eta": _line(rng), "xi2": _line(rng), "eta2": _line(rng)}


def _heis_term(rng, n_max=2) -> SchCoeffTerm:
    n = int(rng.choice([k for k in range(-n_max, n_max + 1) if k]))
    return SchCoeffTerm(n, _line(rng, 1), _line(rng, 1), _phase(rng))


def _lambda0(rng) -> Lambda0CoeffTerm:
    return Lambda0CoeffTerm(random_plane(rng, 1), random_plane(rng, 1), _phase(rng))


def gen_heis_key_pair(rng) -> dict:
    """Up to five terms with n in -2..2; w pairs with v half the time."""
    k = int(rng.integers(1, 5))
    v = HrElem(tuple(_heis_term(rng) for _ in range(k)),
               (_lambda0(rng),) if rng.random() < 0.3 else ())
    if rng.random() < 0.5:
        w_terms = tuple(heis_conj(t) for t in v.sch_terms) + \
            tuple(_heis_term(rng) for _ in range(int(rng.integers(0, 5 - k + 1))))
    else:
        w_terms = tuple(_heis_term(rng) for _ in range(int(rng.integers(1, 5))))
    w = HrElem(w_terms[:5], (_lambda0(rng),) if rng.random() < 0.3 else ())
    return {"v": v, "w": w}


def gen_heis_lambda0(rng) -> dict:
    n = int(rng.integers(1, 4))
    v = SchCoeffTerm(n, _line(rng, 1), _line(rng, 1), _phase(rng))
    return {"v": v, "w": heis_conj(v), "v0": _lambda0(rng), "w0": _lambda0(rng)}


def _matched_sch(rng, n: int, p0: float) -> SchCoeffTerm:
    # the coefficient lives near p = c_eta - c_xi, so all factors overlap near p0
    c = float(rng.uniform(-2.0, 2.0))
    xi = Scale(_phase(rng), Bump(c, float(rng.uniform(0.5, 1.0))))
    eta = Scale(_phase(rng), Bump(c + p0 + float(rng.uniform(-0.2, 0.2)), float(rng.uniform(0.5, 1.0))))
    return SchCoeffTerm(n, xi, eta, _phase(rng))


def gen_heis_triple(rng) -> dict:
    """Triples whose total theta-order is zero and whose p-supports overlap."""
    n1, n2 = (int(rng.choice([-2, -1, 1, 2])) for _ in range(2))
    n3 = -(n1 + n2)
    p0 = float(rng.uniform(-1.0, 1.0))
    f, g = _matched_sch(rng, n1, p0), _matched_sch(rng, n2, p0)
    h = _matched_sch(rng, n3, p0) if n3 else _lambda0(rng)
    return {"f": f, "g": g, "h": h}


def gen_heis_point(rng) -> dict:
    def point():
        return HeisElement(float(rng.uniform(-2, 2)), float(rng.uniform(-2, 2)), float(rng.random()))
    return {"f": random_plane(rng), "n": int(rng.integers(-3, 4)), "g": point(), "g2": point()}


def _unit_vector(rng, n):
    v = rng.normal(size=n + 1) + 1j * rng.normal(size=n + 1)
    return v / np.linalg.norm(v)


def _trig(rng, n_max: int, max_terms=3) -> TrigPoly:
    terms = []
    for _ in range(int(rng.integers(1, max_terms + 1))):
        n = int(rng.integers(0, n_max + 1))
        terms.append(TrigTerm.make(n, _unit_vector(rng, n), _unit_vector(rng, n), _phase(rng)))
    return TrigPoly(tuple(terms))


def gen_su2_pair(rng, n_max: int = 4) -> dict:
    f = _trig(rng, n_max)
    g = conj_trig(f) + _trig(rng, n_max, 1) if rng.random() < 0.5 else _trig(rng, n_max)
    return {"f": f, "g": g}


def gen_su2_vectors(rng, n_max: int = 4, index: int = 0) -> dict:
    """Unit vectors for the block pair number ``index`` in row-major order."""
    n1, n2 = divmod(index % ((n_max + 1) ** 2), n_max + 1)
    return {"n1": n1, "xi1": _unit_vector(rng, n1), "eta1": _unit_vector(rng, n1),
            "n2": n2, "xi2": _unit_vector(rng, n2), "eta2": _unit_vector(rng, n2)}


def gen_decomp_input(rng) -> dict:
    points = [AxbElement(float(rng.uniform(-3, 3)), float(np.exp(rng.uniform(-1, 1))))
              for _ in range(10)]
    return {"xi": _half(rng, 2), "eta": _half(rng, 2), "xi2": _half(rng, 2), "eta2": _half(rng, 2),
            "points": points}


def gen_w_sample(rng) -> dict:
    return {"phi": _line(rng, 1), "psi": _half(rng, 2)}


GENERATORS: Dict[str, Callable] = {
    "axb.quadruple": lambda rng, i, p: gen_axb_quadruple(rng),
    "axb.pair": lambda rng, i, p: gen_axb_pair(rng),
    "axb.fd": lambda rng, i, p: gen_axb_fd(rng),
    "axb.triple": lambda rng, i, p: gen_axb_triple(rng, i),
    "axb.vector": lambda rng, i, p: gen_axb_vector(rng),
    "heis.pair": lambda rng, i, p: gen_heis_pair(rng),
    "heis.key_pair": lambda rng, i, p: gen_heis_key_pair(rng),
    "heis.lambda0": lambda rng, i, p: gen_heis_lambda0(rng),
    "heis.triple": lambda rng, i, p: gen_heis_triple(rng),
    "heis.point": lambda rng, i, p: gen_heis_point(rng),
    "su2.pair": lambda rng, i, p: gen_su2_pair(rng, p.get("n_max", 4)),
    "su2.vectors": lambda rng, i, p: gen_su2_vectors(rng, p.get("n_max", 4), i),
    "decomp.input": lambda rng, i, p: gen_decomp_input(rng),
    "decomp.w_sample": lambda rng, i, p: gen_w_sample(rng),
}


@dataclass(frozen=True)
class CorpusSpec:
    kind: str
    size: int
    params: tuple = ()  # sorted (key, value) pairs

    def __post_init__(self):
        if self.kind not in GENERATORS:
            raise KeyError(f"unknown corpus kind {self.kind!r}")
        if self.size < 0:
            raise ValueError("corpus size must be non-negative")


def gen_corpus(seed: int, spec: CorpusSpec) -> List[dict]:
    rng = rng_for(seed, spec.kind)
    gen = GENERATORS[spec.kind]
    params = dict(spec.params)
    return [gen(rng, i, params) for i in range(spec.size)]
