"""
Regular-vine structures.

A vine on ``d`` variables is stored as a list of trees; tree ``k`` (1-based)
is a list of :class:`VineEdge`.  Every edge records its conditioned pair
and conditioning set next to its pair-copula.  The nodes of tree ``k`` are the
edges of tree ``k - 1``; an edge joining nodes ``a`` and ``b`` has
conditioning set ``U_a & U_b`` and conditioned pair ``U_a ^ U_b`` where
``U`` is the complete union of a node.  Because of this bookkeeping the
parents of any edge can be recovered from complete unions alone, so the
edge list is the whole structure.

Variables are 0-based throughout.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import copulas as cop
from .copulas import BivariateCopula, Family
from .errors import ParameterError, StructureError


@dataclass(frozen=True)
class VineEdge:
    conditioned: tuple
    conditioning: frozenset = frozenset()
    copula: BivariateCopula | None = None

    def __post_init__(self):
        i, j = (int(x) for x in self.conditioned)
        object.__setattr__(self, "conditioned", (min(i, j), max(i, j)))
        object.__setattr__(self, "conditioning", frozenset(int(x) for x in self.conditioning))

    @property
    def level(self):
        return len(self.conditioning) + 1

    @property
    def union(self):
        return frozenset(self.conditioned) | self.conditioning

    @property
    def key(self):
        """Copula-independent identity of the edge."""
        return self.conditioned, self.conditioning

    def with_copula(self, copula):
        return replace(self, copula=copula)

    def label(self, one_based=True):
        off = 1 if one_based else 0
        i, j = (x + off for x in self.conditioned)
        text = f"{i},{j}"
        if self.conditioning:
            text += "|" + ",".join(str(x + off) for x in sorted(self.conditioning))
        return text

    def __str__(self):
        return self.label()


@dataclass(frozen=True)
class VineStructure:
    """
    Regular vine, possibly truncated after ``len(trees)`` levels.

    Levels beyond the stored ones are implicitly independence copulas.
    """

    d: int
    trees: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "trees", tuple(tuple(t) for t in self.trees))

    @property
    def truncation(self):
        return len(self.trees)

    @property
    def edges(self):
        return [e for tree in self.trees for e in tree]

    @property
    def n_edges(self):
        return sum(len(t) for t in self.trees)

    @property
    def is_fitted(self):
        return all(e.copula is not None for e in self.edges)

    def tree(self, k):
        """Edges of tree ``k`` (1-based)."""
        return self.trees[k - 1]

    def nodes(self, k):
        """Complete unions of the nodes of tree ``k``."""
        if k == 1:
            return [frozenset([i]) for i in range(self.d)]
        return [e.union for e in self.trees[k - 2]]

    def truncate(self, k):
        return VineStructure(self.d, self.trees[:k])

    def edge_keys(self, k=None):
        trees = self.trees if k is None else self.trees[:k]
        return [{e.key for e in t} for t in trees]

    def __str__(self):
        lines = [f"VineStructure(d={self.d}, truncation={self.truncation})"]
        for k, tree in enumerate(self.trees, start=1):
            parts = []
            for e in tree:
                fam = "?" if e.copula is None else e.copula.family.value
                parts.append(f"{e.label()}:{fam}")
            lines.append(f"  T{k}: " + "  ".join(parts))
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# construction helpers
# ---------------------------------------------------------------------------

def join(union_a, union_b):
    """
    Conditioned pair and conditioning set of the edge joining two nodes.

    Raises :class:`StructureError` when the complete unions do not overlap
    in all but one element each.
    """
    union_a = frozenset(union_a)
    union_b = frozenset(union_b)
    common = union_a & union_b
    diff = union_a ^ union_b
    if len(union_a) != len(union_b) or len(diff) != 2 or len(common) != len(union_a) - 1:
        raise StructureError(f"nodes {sorted(union_a)} and {sorted(union_b)} cannot be joined")
    return tuple(sorted(diff)), common


def proximity_ok(prev_tree, a, b):
    """Whether nodes ``a`` and ``b`` of the tree above ``prev_tree`` may be joined."""
    ea, eb = prev_tree[a], prev_tree[b]
    if ea.level == 1:
        return bool(set(ea.conditioned) & set(eb.conditioned))
    try:
        (i, j), _ = join(ea.union, eb.union)
    except StructureError:
        return False
    # i belongs to a, j to b, or the other way round; both must be conditioned
    if i in ea.union:
        return i in ea.conditioned and j in eb.conditioned
    return j in ea.conditioned and i in eb.conditioned


def edge_between(prev_level_unions, a, b, copula=None):
    (i, j), common = join(prev_level_unions[a], prev_level_unions[b])
    return VineEdge((i, j), common, copula)


def from_node_pairs(d, levels):
    """
    Build a structure from per-level node-index pairs.

    ``levels[k-1]`` lists pairs of node indices of tree ``k``; node indices
    of tree 1 are variables and node indices of tree ``k > 1`` index the
    edges of tree ``k - 1`` in the order they were given.
    """
    trees = []
    for k, pairs in enumerate(levels, start=1):
        unions = [frozenset([i]) for i in range(d)] if k == 1 else [e.union for e in trees[-1]]
        trees.append([edge_between(unions, a, b) for a, b in pairs])
    return VineStructure(d, trees)


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[rb] = ra
        return True


def parent_indices(structure, k, edge):
    """Indices in tree ``k - 1`` of the two nodes joined by ``edge`` (k >= 2)."""
    prev = structure.trees[k - 2]
    lookup = {e.union: idx for idx, e in enumerate(prev)}
    i, j = edge.conditioned
    a = lookup.get(edge.conditioning | {i})
    b = lookup.get(edge.conditioning | {j})
    return a, b


# ---------------------------------------------------------------------------
# validation and counting
# ---------------------------------------------------------------------------

def validate(structure):
    """
    List every violation of the regular-vine rules.

    Checks edge well-formedness, the d - k edge count of each stored tree,
    acyclicity, that every deeper edge joins two edges of the tree above
    and the proximity condition.  An empty list means the structure is a
    valid (possibly truncated) regular vine.
    """
    d = structure.d
    out = []
    if d < 2:
        return [f"d must be >= 2, got {d}"]
    if structure.truncation > d - 1:
        out.append(f"{structure.truncation} trees stored but a {d}-dim vine has {d - 1}")
    for k, tree in enumerate(structure.trees, start=1):
        if len(tree) != d - k:
            out.append(f"level {k}: {len(tree)} edges, expected {d - k}")
        seen = set()
        for e in tree:
            i, j = e.conditioned
            if i == j:
                out.append(f"level {k} edge {e}: self-loop")
            if not all(0 <= x < d for x in e.union):
                out.append(f"level {k} edge {e}: variable index out of range")
            if i in e.conditioning or j in e.conditioning:
                out.append(f"level {k} edge {e}: conditioned variable in conditioning set")
            if e.level != k:
                out.append(f"level {k} edge {e}: conditioning set has size {len(e.conditioning)}, "
                           f"expected {k - 1}")
            if e.union in seen:
                out.append(f"level {k} edge {e}: duplicate edge")
            seen.add(e.union)
        if any(m.startswith(f"level {k} edge") for m in out):
            continue
        if k == 1:
            uf = _UnionFind(d)
            for e in tree:
                if not uf.union(*e.conditioned):
                    out.append(f"level 1 edge {e}: creates a cycle")
            continue
        prev = structure.trees[k - 2]
        uf = _UnionFind(len(prev))
        for e in tree:
            a, b = parent_indices(structure, k, e)
            if a is None or b is None:
                out.append(f"level {k} edge {e}: proximity violated "
                           f"(not formed from two level-{k - 1} edges sharing a node)")
                continue
            if not proximity_ok(prev, a, b):
                out.append(f"level {k} edge {e}: proximity violated "
                           f"({prev[a]} and {prev[b]} share no node)")
                continue
            if not uf.union(a, b):
                out.append(f"level {k} edge {e}: creates a cycle")
    return out


def validate_node_pairs(d, levels):
    """
    Validate a structure given as per-level node-index pairs.

    This form can express edges that the conditioned/conditioning form
    cannot, such as joining two tree-1 edges with no common variable.
    """
    out = []
    prev = None
    for k, pairs in enumerate(levels, start=1):
        n_nodes = d if k == 1 else len(prev)
        if len(pairs) != d - k:
            out.append(f"level {k}: {len(pairs)} edges, expected {d - k}")
        uf = _UnionFind(n_nodes)
        tree = []
        for a, b in pairs:
            if not (0 <= a < n_nodes and 0 <= b < n_nodes) or a == b:
                out.append(f"level {k} edge ({a},{b}): invalid node indices")
                continue
            if k > 1 and not proximity_ok(prev, a, b):
                out.append(f"level {k} edge ({a},{b}): proximity violated "
                           f"({prev[a]} and {prev[b]} share no node)")
                continue
            if not uf.union(a, b):
                out.append(f"level {k} edge ({a},{b}): creates a cycle")
                continue
            unions = [frozenset([i]) for i in range(d)] if k == 1 else [e.union for e in prev]
            tree.append(edge_between(unions, a, b))
        if out:
            break
        prev = tree
    return out


def is_valid(structure):
    return not validate(structure)


def count_structures(d):
    """Number of distinct regular vines on ``d`` labelled variables."""
    d = int(d)
    if d < 2:
        raise ValueError("count_structures needs d >= 2")
    if d == 2:
        return 1
    return math.factorial(d) // 2 * 2 ** math.comb(d - 2, 2)


def _spanning_trees(n_nodes, candidates):
    for combo in itertools.combinations(candidates, n_nodes - 1):
        uf = _UnionFind(n_nodes)
        if all(uf.union(a, b) for a, b in combo):
            yield combo


def enumerate_structures(d):
    """Yield every untruncated regular vine on ``d`` variables (copulas unset)."""
    def extend(trees):
        k = len(trees) + 1
        if k == d:
            yield VineStructure(d, trees)
            return
        if k == 1:
            unions = [frozenset([i]) for i in range(d)]
            cands = list(itertools.combinations(range(d), 2))
        else:
            prev = trees[-1]
            unions = [e.union for e in prev]
            cands = [(a, b) for a, b in itertools.combinations(range(len(prev)), 2)
                     if proximity_ok(prev, a, b)]
        for combo in _spanning_trees(len(unions), cands):
            tree = [edge_between(unions, a, b) for a, b in combo]
            yield from extend(trees + [tree])

    yield from extend([])


def complete(structure):
    """
    Extend a truncated vine to all ``d - 1`` trees with independence edges.

    Each added tree is the first spanning tree of the proximity graph found
    in index order.
    """
    trees = [list(t) for t in structure.trees]
    d = structure.d
    if not trees and d >= 2:
        trees.append([VineEdge((0, i), frozenset(), cop.INDEPENDENCE) for i in range(1, d)])
    while len(trees) < d - 1:
        prev = trees[-1]
        unions = [e.union for e in prev]
        uf = _UnionFind(len(prev))
        tree = []
        for a, b in itertools.combinations(range(len(prev)), 2):
            if proximity_ok(prev, a, b) and uf.union(a, b):
                tree.append(edge_between(unions, a, b, cop.INDEPENDENCE))
        trees.append(tree)
    return VineStructure(d, trees)


# ---------------------------------------------------------------------------
# pseudo-observations and likelihood
# ---------------------------------------------------------------------------

class PseudoObservations:
    """
    Lazily computed conditional pseudo-observations ``u_{i|D}``.

    ``get(i, D)`` finds the edge with complete union ``D | {i}`` in which
    ``i`` is conditioned and applies that edge's h-function to the values
    one level up.  Results are memoised.
    """

    def __init__(self, structure, data):
        data = np.asarray(data, dtype=float)
        if data.ndim != 2 or data.shape[1] != structure.d:
            raise ValueError(f"data must have {structure.d} columns, got shape {data.shape}")
        self.structure = structure
        self.data = data
        self._by_union = [{e.union: e for e in tree} for tree in structure.trees]
        self._cache = {}

    def get(self, var, conditioning=frozenset()):
        conditioning = frozenset(conditioning)
        if not conditioning:
            return self.data[:, var]
        key = (var, conditioning)
        if key in self._cache:
            return self._cache[key]
        level = len(conditioning)
        if level > len(self._by_union):
            raise StructureError(f"u_{var}|{sorted(conditioning)} lies beyond the truncation level")
        e = self._by_union[level - 1].get(conditioning | {var})
        if e is None or var not in e.conditioned:
            raise StructureError(f"no edge produces u_{var}|{sorted(conditioning)}")
        if e.copula is None:
            raise StructureError(f"edge {e} at level {level} is not fitted")
        other = e.conditioned[1] if e.conditioned[0] == var else e.conditioned[0]
        val = cop.h(e.copula, self.get(var, e.conditioning), self.get(other, e.conditioning))
        self._cache[key] = val
        return val

    def pair(self, edge):
        i, j = edge.conditioned
        return self.get(i, edge.conditioning), self.get(j, edge.conditioning)


def pseudo_observations(structure, data):
    """Conditioned pairs ``(u_{i|D}, u_{j|D})`` for every edge, level by level."""
    po = PseudoObservations(structure, data)
    return [[po.pair(e) for e in tree] for tree in structure.trees]


def edge_logliks(structure, data):
    """Per-edge log-likelihood contributions, nested like ``structure.trees``."""
    po = PseudoObservations(structure, data)
    out = []
    for tree in structure.trees:
        row = []
        for e in tree:
            if e.copula is None:
                raise StructureError(f"edge {e} is not fitted")
            row.append(cop.loglik(e.copula, *po.pair(e)))
        out.append(row)
    return out


def vine_loglik(structure, data):
    """Total copula log-likelihood of ``data`` (n x d, in (0, 1))."""
    return float(sum(sum(row) for row in edge_logliks(structure, data)))


def fit_copulas(structure, data, selector=None):
    """Select and fit a pair-copula for every edge, shallow levels first."""
    selector = selector or cop.select_family
    data = np.asarray(data, dtype=float)
    fitted = []
    for tree in structure.trees:
        po = PseudoObservations(VineStructure(structure.d, fitted), data)
        fitted.append([e.with_copula(selector(*po.pair(e))) for e in tree])
    return VineStructure(structure.d, fitted)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def serialize(structure):
    """JSON-ready document of the structure; theta kept as an exact decimal string."""
    trees = []
    for tree in structure.trees:
        rows = []
        for e in tree:
            row = {"conditioned": list(e.conditioned),
                   "conditioning": sorted(e.conditioning)}
            if e.copula is not None:
                row["family"] = e.copula.family.value
                row["theta"] = repr(float(e.copula.theta))
            rows.append(row)
        trees.append(rows)
    return {"d": structure.d, "trees": trees}


def deserialize(doc, path="$"):
    """Inverse of :func:`serialize`; raises with a path to the offending entry."""
    if not isinstance(doc, dict):
        raise StructureError(f"{path}: expected an object")
    d = doc.get("d")
    if not isinstance(d, int) or isinstance(d, bool) or d < 2:
        raise StructureError(f"{path}.d: expected an integer >= 2, got {d!r}")
    raw_trees = doc.get("trees")
    if not isinstance(raw_trees, list):
        raise StructureError(f"{path}.trees: expected a list")
    trees = []
    for k, raw in enumerate(raw_trees):
        if not isinstance(raw, list):
            raise StructureError(f"{path}.trees[{k}]: expected a list of edges")
        tree = []
        for m, row in enumerate(raw):
            where = f"{path}.trees[{k}][{m}]"
            if not isinstance(row, dict):
                raise StructureError(f"{where}: expected an object")
            pair = row.get("conditioned")
            if (not isinstance(pair, list) or len(pair) != 2
                    or not all(isinstance(x, int) and not isinstance(x, bool) for x in pair)):
                raise StructureError(f"{where}.conditioned: expected two integers")
            cond = row.get("conditioning", [])
            if not isinstance(cond, list) or not all(isinstance(x, int) for x in cond):
                raise StructureError(f"{where}.conditioning: expected a list of integers")
            copula = None
            if "family" in row:
                try:
                    family = Family(row["family"])
                except ValueError:
                    raise StructureError(f"{where}.family: unknown family {row['family']!r}") from None
                try:
                    theta = float(row.get("theta", "0"))
                except (TypeError, ValueError):
                    raise StructureError(f"{where}.theta: not a number") from None
                try:
                    copula = BivariateCopula(family, theta)
                except ParameterError as exc:
                    raise ParameterError(f"{where}.theta: {exc}") from None
            tree.append(VineEdge(tuple(pair), frozenset(cond), copula))
        trees.append(tree)
    structure = VineStructure(d, trees)
    problems = validate(structure)
    if problems:
        raise StructureError(f"{path}: invalid vine: " + "; ".join(problems))
    return structure
