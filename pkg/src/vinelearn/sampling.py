"""
Synthetic data from a fitted vine by conditional inversion.

Each row picks a random start variable and visits the remaining variables
breadth-first along the first tree.  A newly visited variable ``x`` is
drawn by composing inverse h-functions from its deepest edge towards the
first tree::

    u_x = h^-1_{x,s1} o h^-1_{x,s2|s1} o ... o h^-1_{x,sm|s1..s(m-1)} (w_x)

where ``s1, s2, ...`` are already sampled variables linked to ``x`` at
levels 1, 2, ....  A candidate is visited only when such a nested chain of
edges exists among the sampled variables; breadth-first order is the
preference and the first admissible candidate is taken.  Truncated levels
are completed with independence edges, whose inverse h-function is the
identity.
"""
from __future__ import annotations

from collections import deque
from functools import lru_cache

import numpy as np
from scipy import stats

from . import copulas as cop
from .errors import StructureError
from .marginals import from_uniform, to_uniform
from .vine import PseudoObservations, complete


def _chain(full, var, sampled):
    """Edges linking ``var`` to ``sampled``, level 1 first, or None if not nested."""
    chain = []
    cond = frozenset()
    for tree in full.trees[:len(sampled)]:
        match = [e for e in tree
                 if var in e.conditioned and e.conditioning == cond and e.union <= sampled | {var}]
        if len(match) != 1:
            return None
        e = match[0]
        partner = e.conditioned[0] if e.conditioned[1] == var else e.conditioned[1]
        chain.append((e, partner))
        cond = cond | {partner}
    return chain


def visit_order(structure, start):
    """
    Sampling order and inversion chains for a given start variable.

    Returns ``[(var, chain), ...]`` with ``chain`` a list of
    ``(edge, partner)`` from level 1 upwards (empty for the start).
    """
    full = complete(structure) if structure.truncation < structure.d - 1 else structure
    d = full.d
    neighbours = {i: set() for i in range(d)}
    if d > 1:
        for e in full.trees[0]:
            i, j = e.conditioned
            neighbours[i].add(j)
            neighbours[j].add(i)

    def search(order, sampled, queue):
        if len(order) == d:
            return order
        preferred = [x for x in queue if x not in sampled]
        rest = [x for x in range(d) if x not in sampled and x not in preferred]
        for x in preferred + rest:
            chain = _chain(full, x, sampled)
            if chain is None:
                continue
            new_queue = [q for q in queue if q != x] + sorted(neighbours[x] - sampled - set(queue))
            found = search(order + [(x, chain)], sampled | {x}, new_queue)
            if found is not None:
                return found
        return None

    order = search([(start, [])], frozenset([start]), sorted(neighbours[start]))
    if order is None:
        raise StructureError(f"no admissible sampling order from variable {start}")
    return order


def _sample_block(structure, order, w):
    """Copula-scale rows for one start variable; ``w`` holds the raw uniforms."""
    n, d = w.shape
    u = np.full((n, d), np.nan)
    po = PseudoObservations(complete(structure) if structure.truncation < d - 1 else structure, u)
    for var, chain in order:
        cur = w[:, var]
        for level in range(len(chain), 0, -1):
            e, partner = chain[level - 1]
            cur = cop.h_inverse(e.copula, cur, po.get(partner, e.conditioning))
            if e.conditioning:
                po._cache[(var, e.conditioning)] = cur
        u[:, var] = cur
    return u


def sample_uniform(structure, n, seed=None, start=None):
    """
    Draw ``n`` rows on the copula scale.

    ``start`` fixes the first visited variable for every row; by default
    each row draws its own start variable.
    """
    if not structure.is_fitted:
        raise StructureError("cannot sample from a vine with unfitted edges")
    d = structure.d
    rng = np.random.default_rng(seed)
    w = cop._clip(rng.random((n, d)))
    starts = rng.integers(d, size=n) if start is None else np.full(n, int(start))
    out = np.empty((n, d))
    orders = _orders(structure)
    for s in np.unique(starts):
        rows = starts == s
        out[rows] = _sample_block(structure, orders(int(s)), w[rows])
    return out


def _orders(structure):
    @lru_cache(maxsize=None)
    def get(start):
        return visit_order(structure, start)
    return get


def sample(structure, marginals, n, seed=None, start=None):
    """
    Synthetic rows in original units.

    Parameters
    ----------
    structure : VineStructure
        Fitted vine (every stored edge has a copula).
    marginals : list of MarginalModel
        One per variable; ``None`` returns copula-scale values.
    n : int
    seed : int, optional
        Seeds the single numpy ``default_rng`` stream used for both the
        uniforms and the start variables.
    """
    u = sample_uniform(structure, n, seed=seed, start=start)
    if marginals is None:
        return u
    if len(marginals) != structure.d:
        raise ValueError(f"expected {structure.d} marginals, got {len(marginals)}")
    return from_uniform(marginals, u)


def uniformity_check(samples, marginals):
    """Kolmogorov-Smirnov distance to Uniform(0, 1) of each transformed column."""
    u = to_uniform(marginals, samples)
    return np.array([stats.kstest(u[:, j], "uniform").statistic for j in range(u.shape[1])])
