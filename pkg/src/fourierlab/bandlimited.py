"""Error models for uniform sampling of band-limited oscillatory integrands.

The group integrals in this package have one direction (b on the ax+b
group, q on the Heisenberg group) in which every factor is a Fourier
transform of a smooth compactly supported profile.  On a grid of cells in
the remaining variable each factor carries an envelope

    |f| <= E[k] / |x|^k,   k = 0..order,

stored as an array of shape (order + 1, n_cells).  ``comps`` below is a
list of components, each a list of ``(|coefficient|, [E_1, ..., E_m])``
monomials, and ``weights`` holds the measure of each cell.  A monomial may
carry a third entry, a list of booleans marking which factors are sampled
through a periodic rule and therefore alias.
"""

from __future__ import annotations

import numpy as np

__all__ = ["product_envelope", "tail_model", "b_l1", "alias_model", "choose_margin",
           "choose_cell_margins", "choose_cell_cutoffs", "waterfill"]


def product_envelope(envs):
    """Envelope of a product: order k on one factor, sup on the rest."""
    sups = [e[0] for e in envs]
    best = None
    for i, e in enumerate(envs):
        cand = e * np.prod(sups[:i] + sups[i + 1:], axis=0)
        best = cand if best is None else np.minimum(best, cand)
    return best


def tail_model(weights, comps):
    """Integral of |monomial| over |b| > X, summed over monomials.

    ``tail(x)`` is the worst component total; ``tail.cells(x)`` gives a
    per-cell bound valid for every component, with ``x`` a scalar or one
    cutoff per cell.
    """
    prods = [[(c, len(envs), np.prod(envs, axis=0)) for c, envs, *_ in comp] for comp in comps]

    def per_comp(x):
        x = np.asarray(x, dtype=float)
        out = []
        for comp in prods:
            total = np.zeros(weights.shape)
            for c, m, prod in comp:
                ks = np.arange(prod.shape[0])
                ok = m * ks > 1
                kk = (m * ks[ok] - 1)[:, None]
                per_k = prod[ok] * 2.0 / (kk * x ** kk)
                total += c * weights * per_k.min(axis=0)
            out.append(total)
        return out

    def tail(x):
        return max(float(np.sum(t)) for t in per_comp(x))

    def cells(x):
        return np.max(per_comp(x), axis=0)

    tail.cells = cells
    return tail


def b_l1(env):
    """Per-cell bound on the integral over b of |f| from |f| <= min(E_0, E_k/|b|^k)."""
    sup = env[0]
    safe = np.where(sup > 0, sup, 1.0)
    best = np.full(sup.shape, np.inf)
    for k in range(2, env.shape[0]):
        knee = (env[k] / safe) ** (1.0 / k)
        with np.errstate(divide="ignore", invalid="ignore"):
            val = 2.0 * (sup * knee + np.where(knee > 0, env[k] * knee ** (1 - k), 0.0) / (k - 1))
        best = np.minimum(best, val)
    return np.where(sup > 0, best, 0.0)


def alias_model(weights, comps):
    """Bound on the integral error caused by t-trapezoid aliasing.

    A sampled factor differs from the true one by sum_{m != 0} f(b + m P)
    where P is the b-period, so for |b| <= B the error is at most
    2.2 E_k / (P - B)^k.  One other factor is bounded in L1 over b and the
    rest by their sup over b, slice by slice in a.
    """
    parts = []
    for comp in comps:
        for c, envs, *flags in comp:
            flags = flags[0] if flags else [True] * len(envs)
            sups = [e[0] for e in envs]
            l1s = [b_l1(e) for e in envs]
            for i, e in enumerate(envs):
                if not flags[i]:
                    continue
                rest = [j for j in range(len(envs)) if j != i]
                if not rest:
                    parts.append((c * weights, e, True))
                    continue
                other = np.full(weights.shape, np.inf)
                for j in rest:
                    cand = l1s[j] * np.prod([sups[q] for q in rest if q != j], axis=0)
                    other = np.minimum(other, cand)
                parts.append((c * weights * other, e, False))

    def cells(margin, cutoff):
        """Per-cell bound; ``margin`` is a scalar or one value per cell."""
        margin = np.asarray(margin, dtype=float)
        total = np.zeros(weights.shape)
        for w, e, alone in parts:
            ks = np.arange(1, e.shape[0])
            env = (e[1:] / margin ** ks[:, None]).min(axis=0)
            total += w * env * 2.2 * (2.0 * cutoff if alone else 1.0)
        return total

    def bound(margin, cutoff):
        return float(np.sum(cells(margin, cutoff)))

    bound.cells = cells
    return bound


def choose_margin(alias, cutoff: float, target: float, max_factor: float = 64.0) -> float:
    """Smallest margin on a geometric grid with alias(margin, cutoff) <= target."""
    margin = cutoff
    while alias(margin, cutoff) > target and margin < max_factor * cutoff:
        margin *= 1.25
    return margin


def waterfill(table: np.ndarray, target: float) -> np.ndarray:
    """Pick one rung per cell from ``table`` (rungs x cells, non-increasing down rungs).

    Each cell takes its first rung whose entry is below a common threshold;
    the threshold is the largest one keeping the total within ``target``.
    Cells that never get below it take the last rung.
    """
    n_levels, n_cells = table.shape

    def pick(tau):
        ok = table <= tau
        idx = np.where(ok.any(axis=0), ok.argmax(axis=0), n_levels - 1)
        return idx, float(table[idx, np.arange(n_cells)].sum())

    candidates = np.unique(table)
    lo, hi = 0, candidates.size - 1
    best, _ = pick(candidates[0])
    while lo <= hi:
        mid = (lo + hi) // 2
        idx, total = pick(candidates[mid])
        if total <= target:
            best, lo = idx, mid + 1
        else:
            hi = mid - 1
    return best


def choose_cell_margins(alias, cutoff, target: float, max_factor: float = 64.0,
                        ratio: float = 1.25) -> np.ndarray:
    """Per-cell margins on the ladder cutoff * ratio^j with total bound <= target.

    ``cutoff`` may be a scalar or one value per cell.
    """
    n_levels = int(np.ceil(np.log(max_factor) / np.log(ratio))) + 1
    cutoff = np.asarray(cutoff, dtype=float)
    levels = [cutoff * ratio ** j for j in range(n_levels)]
    table = np.array([np.broadcast_to(alias.cells(m, cutoff), alias.cells(levels[0], cutoff).shape)
                      for m in levels])
    idx = waterfill(table, target)
    levels = np.array([np.broadcast_to(m, table.shape[1:]) for m in levels])
    return levels[idx, np.arange(table.shape[1])]


def choose_cell_cutoffs(tail, cutoff: float, target: float, min_factor: float = 1.0 / 32,
                        ratio: float = 1.25) -> np.ndarray:
    """Per-cell cutoffs on the ladder cutoff / ratio^j, largest rung = ``cutoff``.

    Cells whose integrand decays fast get a smaller cutoff as long as the
    summed per-cell tail stays within ``target``.
    """
    n_levels = int(np.ceil(np.log(1.0 / min_factor) / np.log(ratio))) + 1
    levels = cutoff * ratio ** -np.arange(n_levels)[::-1]
    table = np.array([tail.cells(x) for x in levels])
    return levels[waterfill(table, target)]
