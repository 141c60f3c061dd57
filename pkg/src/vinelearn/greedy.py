"""Tree-by-tree maximum spanning tree baseline (Dissmann-style)."""
from __future__ import annotations

import itertools

import numpy as np

from . import copulas as cop
from .vine import PseudoObservations, VineStructure, _UnionFind, edge_between, proximity_ok


def kruskal_max(n_nodes, weighted_edges):
    """
    Maximum spanning forest by Kruskal.

    ``weighted_edges`` holds ``(weight, tiebreak, a, b)`` tuples; larger
    weights win and equal weights go to the smaller tiebreak key.
    """
    uf = _UnionFind(n_nodes)
    chosen = []
    for w, _, a, b in sorted(weighted_edges, key=lambda t: (-t[0], t[1])):
        if uf.union(a, b):
            chosen.append((a, b))
            if len(chosen) == n_nodes - 1:
                break
    return chosen


def fit_greedy(data, truncation=None, selector=None):
    """
    Fit a vine tree by tree on the copula-scale ``data`` (n x d in (0, 1)).

    Each level takes the maximum spanning tree of |Kendall tau| among the
    proximity-allowed node pairs, then selects a pair-copula per edge and
    propagates pseudo-observations to the next level.
    """
    data = np.asarray(data, dtype=float)
    n, d = data.shape
    if d < 2:
        raise ValueError("need at least two variables")
    if n < 10:
        raise ValueError("need at least 10 observations")
    K = d - 1 if truncation is None else max(0, min(int(truncation), d - 1))
    selector = selector or cop.select_family

    trees = []
    for k in range(1, K + 1):
        po = PseudoObservations(VineStructure(d, trees), data)
        if k == 1:
            unions = [frozenset([i]) for i in range(d)]
            pairs = list(itertools.combinations(range(d), 2))
        else:
            prev = trees[-1]
            unions = [e.union for e in prev]
            pairs = [(a, b) for a, b in itertools.combinations(range(len(prev)), 2)
                     if proximity_ok(prev, a, b)]
        weighted = []
        for a, b in pairs:
            e = edge_between(unions, a, b)
            tau = cop.kendall_tau(*po.pair(e))
            weighted.append((abs(tau), (e.conditioned, tuple(sorted(e.conditioning))), a, b))
        chosen = kruskal_max(len(unions), weighted)
        tree = []
        for a, b in chosen:
            e = edge_between(unions, a, b)
            tree.append(e.with_copula(selector(*po.pair(e))))
        trees.append(tree)
    return VineStructure(d, trees)
