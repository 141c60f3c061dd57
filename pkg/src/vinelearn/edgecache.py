"""
Memoised pair-copula fits shared by the search-based learners.

Every pseudo-observation column is identified by how it was derived: a raw
column, or the h-transform of one column given another.  Fitted copulas
and everything derived from them are cached under these ids, so a given
edge is fitted once per dataset no matter how many candidate structures
contain it.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import copulas as cop
from .vine import StructureError, VineEdge, VineStructure, join


class EdgeCache:
    """
    Fit cache bound to one copula-scale data matrix.

    Value ids are small integers; ``leaf(i)`` is column ``i`` and
    ``h_out(a, b)`` is ``h(u_a | u_b)`` under the copula fitted to the
    pair ``(a, b)``.
    """

    def __init__(self, data, selector=None):
        self.data = np.asarray(data, dtype=float)
        self.n, self.d = self.data.shape
        self.selector = selector or cop.select_family
        self._ids = {}
        self._recipes = []
        self._values = {}
        self._fits = {}
        self._logdens = {}
        self._tau = {}
        self.n_fits = 0
        for i in range(self.d):
            self._intern(("x", i))

    def _intern(self, recipe):
        vid = self._ids.get(recipe)
        if vid is None:
            vid = len(self._recipes)
            self._ids[recipe] = vid
            self._recipes.append(recipe)
        return vid

    def leaf(self, var):
        return self._ids[("x", var)]

    def h_out(self, vid_cond, vid_given):
        return self._intern(("h", vid_cond, vid_given))

    def values(self, vid):
        arr = self._values.get(vid)
        if arr is None:
            recipe = self._recipes[vid]
            if recipe[0] == "x":
                arr = self.data[:, recipe[1]]
            else:
                _, a, b = recipe
                arr = cop.h(self.fit(a, b), self.values(a), self.values(b))
            self._values[vid] = arr
        return arr

    def fit(self, a, b):
        key = (a, b) if a <= b else (b, a)
        c = self._fits.get(key)
        if c is None:
            c = self.selector(self.values(key[0]), self.values(key[1]))
            self._fits[key] = c
            self.n_fits += 1
        return c

    def logdens(self, a, b):
        """Per-row log-density of the fitted pair copula."""
        key = (a, b) if a <= b else (b, a)
        arr = self._logdens.get(key)
        if arr is None:
            c = self.fit(*key)
            if c.is_independence:
                arr = np.zeros(self.n)
            else:
                arr = cop.log_density(c, self.values(key[0]), self.values(key[1]))
            self._logdens[key] = arr
        return arr

    def loglik(self, a, b):
        return float(np.sum(self.logdens(a, b)))

    def abs_tau(self, a, b):
        key = (a, b) if a <= b else (b, a)
        t = self._tau.get(key)
        if t is None:
            t = abs(cop.kendall_tau(self.values(key[0]), self.values(key[1])))
            self._tau[key] = t
        return t


@dataclass(frozen=True, eq=False)
class Node:
    """
    A node of some tree: a raw variable (level 1) or an edge of the tree above.

    ``out`` maps each variable this node can pass on to the value id of its
    conditional pseudo-observation.  Only conditioned variables appear, so
    two nodes may be joined exactly when each holds its half of the new
    conditioned pair.
    """

    union: frozenset
    out: dict
    conditioned: tuple = ()
    inputs: tuple = ()

    @property
    def level(self):
        # level of the edge this node represents; raw variables are level 0
        return len(self.union) - 1

    @property
    def conditioning(self):
        return self.union - frozenset(self.conditioned)


def leaf_nodes(cache):
    return [Node(frozenset([i]), {i: cache.leaf(i)}) for i in range(cache.d)]


def try_join(cache, a, b):
    """Edge node joining ``a`` and ``b``, or None if proximity fails."""
    try:
        (i, j), _ = join(a.union, b.union)
    except StructureError:
        return None
    if i not in a.out:
        a, b = b, a
    if i not in a.out or j not in b.out:
        return None
    vi, vj = a.out[i], b.out[j]
    return Node(a.union | b.union, {i: cache.h_out(vi, vj), j: cache.h_out(vj, vi)},
                (i, j), (vi, vj))


def node_loglik(cache, node):
    return cache.loglik(*node.inputs)


def to_structure(cache, levels):
    """Fitted :class:`VineStructure` from per-level lists of edge nodes."""
    trees = []
    for nodes in levels:
        tree = []
        for nd in nodes:
            c = cache.fit(*nd.inputs)
            tree.append(VineEdge(nd.conditioned, nd.conditioning, c))
        trees.append(tree)
    return VineStructure(cache.d, trees)
