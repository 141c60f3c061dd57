"""
Vector-representation structure search.

A vine over ``K`` levels is written as one concatenated vector of slots.
Level ``k`` has one slot per node of tree ``k`` (``d - k + 1`` of them);
a slot holds either ``PHI`` (the node proposes no edge) or the index of
another node of the same level, proposing an edge to it.  The nodes of
level ``k + 1`` are the distinct edges decoded at level ``k``, taken in
canonical order, so a vector always decodes to *some* graph, possibly one
that breaks the tree property or the proximity condition.

A feed-forward network maps a fixed random input to one softmax head per
slot.  Each training step samples ``m`` vectors, scores them with the
penalised objective

    J = L / n - lam * sum_k C_k / k + mu / max(1, |E|)

(``L`` the log-likelihood of the decoded edges, ``C_k`` the number of
independent cycles at level ``k``) and follows the score-function
gradient.  Every sampled vector is also repaired into a valid vine; the
best repaired vine seen during training is returned.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .edgecache import EdgeCache, leaf_nodes, to_structure, try_join
from .errors import TrainingDivergenceError
from .nn import Adam, Fcnn
from .vine import _UnionFind

log = logging.getLogger(__name__)

#: Slot value meaning "not connected".
PHI = -1


@dataclass
class VectorTrainConfig:
    lam: float | None = None
    mu: float = 1.0
    samples: int = 16
    epochs: int = 50
    batch_size: int = 128
    lr: float = 1e-3
    truncation: int | None = None
    hidden: tuple = (64, 64)
    input_size: int = 16
    baseline_decay: float = 0.9
    seed: int | None = 0

    def __post_init__(self):
        if self.lam is not None and self.lam < 0.0:
            raise ValueError("lam must be >= 0")
        if self.mu < 0.0:
            raise ValueError("mu must be >= 0")
        if self.samples < 1:
            raise ValueError("samples must be >= 1")


def slot_sizes(d, K):
    """Number of slots per level: ``d - k + 1`` for k = 1..K."""
    return [d - k + 1 for k in range(1, K + 1)]


def head_masks(d, K):
    """Per-slot category masks; category 0 is PHI, category j + 1 is node j."""
    masks = []
    for n_k in slot_sizes(d, K):
        for i in range(n_k):
            m = np.ones(n_k + 1, dtype=bool)
            m[i + 1] = False
            masks.append(m)
    return masks


def split_levels(flat, d, K):
    """Split a flat slot array into per-level arrays."""
    out, s = [], 0
    for n_k in slot_sizes(d, K):
        out.append(np.asarray(flat[s:s + n_k], dtype=int))
        s += n_k
    return out


@dataclass
class Decoded:
    """
    Graph read off a vine vector.

    ``levels[k-1]`` holds the distinct edge nodes kept at level ``k`` in
    canonical order; ``cycles[k-1]`` counts independent cycles at level
    ``k`` plus the proximity-violating slots dropped there.
    """

    levels: list
    cycles: list
    dropped: list = field(default_factory=list)

    @property
    def n_edges(self):
        return sum(len(lvl) for lvl in self.levels)

    @property
    def has_cycle(self):
        return any(c > 0 for c in self.cycles)


def _canonical(node):
    return (node.conditioned, tuple(sorted(node.conditioning)))


def decode(vec, cache, K=None):
    """
    Assemble the graph encoded by ``vec``.

    ``vec`` is a flat sequence of slot values (or a list of per-level
    arrays) using ``PHI`` for "not connected" and 0-based node indices
    otherwise.  Slots that point outside the level's node range, or that
    belong to nodes the previous level did not produce, are ignored.
    """
    d = cache.d
    if K is None:
        K = len(vec) if isinstance(vec, (list, tuple)) and vec and np.ndim(vec[0]) else None
    if K is None:
        total = len(vec)
        K = next(k for k in range(1, d) if sum(slot_sizes(d, k)) == total)
    levels_slots = vec if (isinstance(vec, (list, tuple)) and vec and np.ndim(vec[0])) \
        else split_levels(vec, d, K)
    nodes = leaf_nodes(cache)
    levels, cycles, dropped = [], [], []
    for k, slots in enumerate(levels_slots, start=1):
        pairs = set()
        for i, j in enumerate(np.asarray(slots, dtype=int)):
            if j == PHI or i >= len(nodes) or not 0 <= j < len(nodes) or i == j:
                continue
            pairs.add((min(i, j), max(i, j)))
        kept, bad = [], 0
        uf = _UnionFind(len(nodes))
        n_cycles = 0
        for a, b in sorted(pairs):
            nd = try_join(cache, nodes[a], nodes[b])
            if nd is None:
                bad += 1
                continue
            if not uf.union(a, b):
                n_cycles += 1
            kept.append(nd)
        kept.sort(key=_canonical)
        levels.append(kept)
        cycles.append(n_cycles + bad)
        dropped.append(bad)
        nodes = kept
    return Decoded(levels, cycles, dropped)


def cycle_count(n_nodes, pairs):
    """Independent cycles of a simple graph: ``|E| - |N| + components``."""
    uf = _UnionFind(n_nodes)
    for a, b in pairs:
        uf.union(a, b)
    components = len({uf.find(x) for x in range(n_nodes)})
    return len(pairs) - n_nodes + components


def objective(decoded, cache, lam, mu, rows=None):
    """
    Penalised score of a decoded vector.

    The likelihood term is the per-instance mean over ``rows`` (all rows
    by default) of the decoded edges' log-densities.
    """
    if rows is None:
        lik = sum(cache.loglik(*nd.inputs) for lvl in decoded.levels for nd in lvl) / cache.n
    else:
        lik = sum(float(np.mean(cache.logdens(*nd.inputs)[rows]))
                  for lvl in decoded.levels for nd in lvl)
    j1 = sum(c / k for k, c in enumerate(decoded.cycles, start=1))
    j2 = 1.0 / max(1, decoded.n_edges)
    return lik - lam * j1 + mu * j2


def repair(decoded, cache, K):
    """
    Valid vine (as per-level edge nodes) closest to a decoded graph.

    At each level the decoded edges whose parent nodes survived are kept in
    canonical order while they do not close a cycle; the tree is then
    completed by maximum |Kendall tau| among proximity-valid pairs.
    """
    nodes = leaf_nodes(cache)
    levels = []
    for k in range(1, K + 1):
        by_union = {nd.union: idx for idx, nd in enumerate(nodes)}
        uf = _UnionFind(len(nodes))
        tree = []
        wanted = decoded.levels[k - 1] if k - 1 < len(decoded.levels) else []
        for e in wanted:
            i, j = e.conditioned
            a, b = by_union.get(e.union - {j}), by_union.get(e.union - {i})
            if a is None or b is None:
                continue
            nd = try_join(cache, nodes[a], nodes[b])
            if nd is not None and uf.union(a, b):
                tree.append(nd)
        if len(tree) < len(nodes) - 1:
            weighted = []
            for a in range(len(nodes)):
                for b in range(a + 1, len(nodes)):
                    if uf.find(a) == uf.find(b):
                        continue
                    nd = try_join(cache, nodes[a], nodes[b])
                    if nd is not None:
                        weighted.append((cache.abs_tau(*nd.inputs), (a, b), a, b))
            # Kruskal continued from the forest of kept edges
            for _, _, a, b in sorted(weighted, key=lambda t: (-t[0], t[1])):
                if uf.union(a, b):
                    tree.append(try_join(cache, nodes[a], nodes[b]))
        tree.sort(key=_canonical)
        levels.append(tree)
        nodes = tree
    return levels


def levels_loglik(cache, levels):
    return float(sum(cache.loglik(*nd.inputs) for lvl in levels for nd in lvl))


def sample_vectors(net, x, masks, m, rng):
    """
    Draw ``m`` slot vectors from the network's per-slot distributions.

    Returns ``(choices, probs, cache)`` with ``choices`` of shape
    (m, n_slots) holding category indices (0 = PHI) and ``probs`` the list
    of per-slot probability vectors.
    """
    flat, fcache = net.logits(x)
    probs = [p for p in net.forward(x, masks)]
    choices = np.empty((m, len(probs)), dtype=int)
    for s, p in enumerate(probs):
        choices[:, s] = rng.choice(len(p), size=m, p=p)
    return choices, probs, fcache


def categories_to_vector(choices):
    """Map category indices (0 = PHI, j + 1 = node j) to slot values."""
    return np.asarray(choices, dtype=int) - 1


def score_gradient(net, fcache, probs, choices, advantages):
    """
    Score-function gradient of the *loss* ``-mean_s A_s log p(v_s)``.

    All heads share one input, so the per-sample scores ``onehot - p`` are
    averaged into a single logit gradient before backpropagation.
    """
    advantages = np.asarray(advantages, dtype=float)
    m = len(advantages)
    blocks = []
    for s, p in enumerate(probs):
        onehot = np.zeros((m, len(p)))
        onehot[np.arange(m), choices[:, s]] = 1.0
        blocks.append(-(advantages[:, None] * (onehot - p)).mean(axis=0))
    return net.backward(fcache, np.concatenate(blocks))


@dataclass
class VectorResult:
    structure: object
    loglik: float
    history: list
    n_fits: int


def fit_vector(data, cfg=None, return_result=False, cache=None):
    """
    Learn a vine structure with the vector-representation search.

    ``data`` is on the copula scale (n x d in (0, 1)).  Returns the best
    repaired valid vine seen during training (highest full-data
    log-likelihood), with copulas fitted on the full data.
    """
    cfg = cfg or VectorTrainConfig()
    data = np.asarray(data, dtype=float)
    n, d = data.shape
    if n < 10:
        raise ValueError("need at least 10 observations")
    if d < 2:
        raise ValueError("need at least two variables")
    K = d - 1 if cfg.truncation is None else max(1, min(int(cfg.truncation), d - 1))
    lam = float(d) if cfg.lam is None else cfg.lam
    cache = cache or EdgeCache(data)
    rng = np.random.default_rng(cfg.seed)
    masks = head_masks(d, K)
    net = Fcnn(cfg.input_size, [len(m) for m in masks], hidden=cfg.hidden, rng=rng)
    x = rng.standard_normal(cfg.input_size)
    opt = Adam(cfg.lr)
    baseline = None
    best_ll, best_levels = -math.inf, None
    history = []
    bad = 0
    batch = min(cfg.batch_size, n)
    for epoch in range(cfg.epochs):
        perm = rng.permutation(n)
        with_cycle = 0
        scores = []
        for s in range(0, n - batch + 1, batch):
            rows = perm[s:s + batch]
            choices, probs, fcache = sample_vectors(net, x, masks, cfg.samples, rng)
            vals = np.empty(cfg.samples)
            for r in range(cfg.samples):
                dec = decode(categories_to_vector(choices[r]), cache, K)
                vals[r] = objective(dec, cache, lam, cfg.mu, rows)
                with_cycle += dec.has_cycle
                levels = repair(dec, cache, K)
                ll = levels_loglik(cache, levels)
                if ll > best_ll:
                    best_ll, best_levels = ll, levels
            if not np.all(np.isfinite(vals)):
                bad += 1
                if bad >= 10:
                    raise TrainingDivergenceError("objective non-finite for 10 consecutive steps")
                continue
            bad = 0
            scores.extend(vals)
            if baseline is None:
                baseline = float(vals.mean())
            grads = score_gradient(net, fcache, probs, choices, vals - baseline)
            opt.step(net.params, grads)
            baseline = cfg.baseline_decay * baseline + (1 - cfg.baseline_decay) * float(vals.mean())
        n_drawn = max(1, len(scores))
        history.append({"epoch": epoch, "best_loglik": best_ll,
                        "mean_objective": float(np.mean(scores)) if scores else math.nan,
                        "cycle_fraction": with_cycle / n_drawn})
        log.debug("epoch %d best loglik %.3f", epoch, best_ll)
    structure = to_structure(cache, best_levels)
    if return_result:
        return VectorResult(structure, best_ll, history, cache.n_fits)
    return structure
