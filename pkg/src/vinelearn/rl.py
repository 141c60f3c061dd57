"""
Sequential edge-selection learner trained with policy gradients.

An episode builds the vine one edge at a time.  Within a tree the nodes
are split into those already attached (``N_L``) and the rest (``N_R``);
every action joins one attached node with one unattached node, so a tree
can never close a cycle.  The first action of each tree may pick any
proximity-valid pair.  After ``d - k`` edges the tree is complete and its
edges become the nodes of tree ``k + 1``.

An LSTM reads a short encoding of the previous action and emits logits
over all node pairs; invalid pairs are masked out.  Step rewards are the
increase of the batch log-likelihood (with unattached first-tree variables
contributing ``log u``), plus ``lam`` times -1 for every non-independence
pair-copula.  Training uses REINFORCE with discounted reward-to-go and a
running-mean baseline per step index.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .edgecache import EdgeCache, leaf_nodes, to_structure, try_join
from .errors import StructureError, TrainingDivergenceError
from .nn import Adam, LstmPolicy, softmax
from .vine import _UnionFind

log = logging.getLogger(__name__)


@dataclass
class RlTrainConfig:
    lam: float = 0.1
    gamma: float = 0.95
    batch_size: int = 64
    rollouts: int = 16
    epochs: int = 50
    lr: float = 1e-3
    truncation: int | None = None
    hidden: int = 64
    baseline_decay: float = 0.9
    seed: int | None = 0
    check_invariants: bool = False

    def __post_init__(self):
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must lie in (0, 1]")
        if self.lam < 0.0:
            raise ValueError("lam must be >= 0")


class PolicyState:
    """
    Partial vine during an episode.

    Attributes
    ----------
    level : int
        Tree currently being built (1-based).
    nodes : list of Node
        Nodes of the current tree.
    left, right : set of int
        Indices into ``nodes`` of attached / unattached nodes.
    edges : list of list of Node
        Edges placed so far, one list per tree.
    """

    def __init__(self, cache, truncation):
        self.cache = cache
        self.d = cache.d
        self.truncation = truncation
        self.level = 1
        self.edges = [[]]
        self.steps = 0
        self._start_level(leaf_nodes(cache))

    def _start_level(self, nodes):
        self.nodes = nodes
        self.left = set()
        self.right = set(range(len(nodes)))
        self._joins = {}
        for a, b in itertools.combinations(range(len(nodes)), 2):
            nd = try_join(self.cache, nodes[a], nodes[b])
            if nd is not None:
                self._joins[(a, b)] = nd
        self._uf = _UnionFind(len(nodes))

    @property
    def total_steps(self):
        return sum(self.d - k for k in range(1, self.truncation + 1))

    @property
    def done(self):
        return self.steps >= self.total_steps

    def actions(self):
        """Admissible node pairs ``(a, b)`` with ``a < b``."""
        if not self.left:
            return list(self._joins)
        return [p for p in self._joins
                if (p[0] in self.left) != (p[1] in self.left)]

    def apply(self, pair):
        """Place the edge for ``pair``; returns (edge node, newly attached nodes)."""
        a, b = pair
        node = self._joins.get((min(a, b), max(a, b)))
        if node is None:
            raise StructureError(f"pair {pair} is not a valid edge at level {self.level}")
        if self.left and ((a in self.left) == (b in self.left)):
            raise StructureError(f"pair {pair} does not cross the attached/unattached split")
        attached = [x for x in (a, b) if x in self.right]
        for x in attached:
            self.right.discard(x)
            self.left.add(x)
        self._uf.union(a, b)
        self.edges[-1].append(node)
        self.steps += 1
        if len(self.edges[-1]) == len(self.nodes) - 1 and not self.done:
            self.level += 1
            nodes = self.edges[-1]
            self.edges.append([])
            self._start_level(nodes)
        return node, attached

    def check(self):
        """Assert the partition and tree invariants of the current tree."""
        _check_state(self)

    def structure(self):
        levels = [lvl for lvl in self.edges if lvl]
        return to_structure(self.cache, levels)

    def loglik(self):
        """Full-data log-likelihood of the edges placed so far."""
        return float(sum(self.cache.loglik(*e.inputs) for lvl in self.edges for e in lvl))


def _endpoints(nodes, edge):
    i, j = edge.conditioned
    a = next(k for k, n in enumerate(nodes) if n.union == edge.union - {j})
    b = next(k for k, n in enumerate(nodes) if n.union == edge.union - {i})
    return a, b


def _action_index(d):
    pairs = list(itertools.combinations(range(d), 2))
    return pairs, {p: k for k, p in enumerate(pairs)}


def encode(d, last_pair, level, fraction):
    """Policy input: two-hot last action, one-hot level, fraction of edges placed."""
    x = np.zeros(2 * d + 1)
    if last_pair is not None:
        x[list(last_pair)] = 1.0
    x[d + level - 1] = 1.0
    x[-1] = fraction
    return x


def step_reward(state, pair, rows, lam):
    """
    Reward for adding ``pair`` to ``state`` (applies the action).

    Returns ``(reward, likelihood_part, node)``.  The likelihood part is the
    batch mean of ``log c_e`` minus ``log u`` of first-tree variables that
    leave ``N_R`` with this action; the penalty is -1 for a non-independence
    copula.
    """
    node, attached = state.apply(pair)
    cache = state.cache
    r_lik = float(np.mean(cache.logdens(*node.inputs)[rows]))
    if node.level == 1:
        for x in attached:
            r_lik -= float(np.mean(np.log(cache.data[rows, x])))
    penalty = 0.0 if cache.fit(*node.inputs).is_independence else -1.0
    return r_lik + lam * penalty, r_lik, node


def initial_loglik(cache, rows):
    """The episode's starting value: sum over variables of the batch mean of log u."""
    return float(np.sum(np.mean(np.log(cache.data[rows]), axis=0)))


@dataclass
class Rollouts:
    states: list
    rewards: np.ndarray
    likelihood_rewards: np.ndarray
    actions: np.ndarray
    scores: list = field(default_factory=list)
    caches: list = field(default_factory=list)


def rollout(policy, cache, rows, cfg, rng, m=None, greedy=False):
    """
    Run ``m`` episodes in lockstep through a batched policy.

    Returns a :class:`Rollouts` with per-step rewards of shape (m, T), the
    chosen action indices and, per step, ``onehot - p`` (the gradient of
    the action log-probability w.r.t. the logits) plus the LSTM caches.
    """
    d = cache.d
    K = d - 1 if cfg.truncation is None else max(1, min(cfg.truncation, d - 1))
    m = cfg.rollouts if m is None else m
    pairs, index = _action_index(d)
    states = [PolicyState(cache, K) for _ in range(m)]
    T = states[0].total_steps
    rewards = np.zeros((m, T))
    r_lik = np.zeros((m, T))
    actions = np.zeros((m, T), dtype=int)
    h = policy.initial_state(m)
    x = np.stack([encode(d, None, 1, 0.0) for _ in range(m)])
    out = Rollouts(states, rewards, r_lik, actions)
    for t in range(T):
        logits, h, lstm_cache = policy.step(x, h)
        mask = np.zeros((m, len(pairs)), dtype=bool)
        for r, st in enumerate(states):
            acts = st.actions()
            if not acts:
                raise StructureError("empty action space")
            mask[r, [index[p] for p in acts]] = True
        p = softmax(logits, mask)
        if greedy:
            chosen = np.argmax(np.where(mask, p, -1.0), axis=1)
        else:
            cum = np.cumsum(p, axis=1)
            draws = rng.random(m)[:, None] * cum[:, -1:]
            chosen = np.minimum((cum <= draws).sum(axis=1), len(pairs) - 1)
            # guard against landing on a masked slot through round-off
            for r in range(m):
                if not mask[r, chosen[r]]:
                    chosen[r] = int(np.flatnonzero(mask[r])[-1])
        score = -p
        score[np.arange(m), chosen] += 1.0
        out.scores.append(score)
        out.caches.append(lstm_cache)
        nxt = []
        for r, st in enumerate(states):
            level = st.level
            rew, lik, _ = step_reward(st, pairs[chosen[r]], rows, cfg.lam)
            rewards[r, t] = rew
            r_lik[r, t] = lik
            actions[r, t] = chosen[r]
            if cfg.check_invariants and not st.done:
                _check_state(st)
            nxt.append(encode(d, pairs[chosen[r]], st.level if not st.done else level,
                              (t + 1) / T))
        x = np.stack(nxt)
    return out


def _check_state(st):
    assert st.left.isdisjoint(st.right)
    assert st.left | st.right == set(range(len(st.nodes)))
    uf = _UnionFind(len(st.nodes))
    for e in st.edges[-1]:
        a, b = _endpoints(st.nodes, e)
        assert uf.union(a, b), "cycle in current tree"


def discounted_returns(rewards, gamma):
    """Reward-to-go ``G_t = sum_{t' >= t} gamma^(t'-t) R_t'`` along the last axis."""
    rewards = np.asarray(rewards, dtype=float)
    G = np.zeros_like(rewards)
    acc = np.zeros(rewards.shape[:-1])
    for t in range(rewards.shape[-1] - 1, -1, -1):
        acc = rewards[..., t] + gamma * acc
        G[..., t] = acc
    return G


def policy_gradient(policy, ro, advantages):
    """
    REINFORCE gradient of the *loss* (negative objective).

    ``advantages`` has shape (m, T); the estimate averages over the ``m``
    episodes.  Ascend the objective by descending the returned gradient.
    """
    advantages = np.asarray(advantages, dtype=float)
    m = advantages.shape[0]
    dlogits = [-(advantages[:, t:t + 1] * ro.scores[t]) / m for t in range(len(ro.scores))]
    grads = policy.backward(ro.caches, dlogits)
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise TrainingDivergenceError(f"non-finite policy gradient for {name!r}")
    return grads


@dataclass
class RlResult:
    structure: object
    loglik: float
    greedy_structure: object
    greedy_loglik: float
    history: list
    n_fits: int


def fit_rl(data, cfg=None, return_result=False, cache=None):
    """
    Learn a vine structure with the sequential RL policy.

    ``data`` is on the copula scale (n x d in (0, 1)).  Returns the
    structure with the highest full-data log-likelihood among all sampled
    episodes; with ``return_result=True`` an :class:`RlResult` that also
    carries the greedy decode of the final policy and a training history.
    """
    cfg = cfg or RlTrainConfig()
    data = np.asarray(data, dtype=float)
    n, d = data.shape
    if n < 10:
        raise ValueError("need at least 10 observations")
    if d < 2:
        raise ValueError("need at least two variables")
    cache = cache or EdgeCache(data)
    rng = np.random.default_rng(cfg.seed)
    pairs, _ = _action_index(d)
    policy = LstmPolicy(2 * d + 1, len(pairs), hidden=cfg.hidden, rng=rng)
    opt = Adam(cfg.lr)
    baseline = None
    best_ll, best_levels = -math.inf, None
    history = []
    bad_steps = 0
    batch = min(cfg.batch_size, n)
    for epoch in range(cfg.epochs):
        perm = rng.permutation(n)
        for s in range(0, n - batch + 1, batch):
            rows = perm[s:s + batch]
            ro = rollout(policy, cache, rows, cfg, rng)
            for st in ro.states:
                ll = st.loglik()
                if ll > best_ll:
                    best_ll, best_levels = ll, [list(lvl) for lvl in st.edges if lvl]
            if not np.all(np.isfinite(ro.rewards)):
                bad_steps += 1
                if bad_steps >= 10:
                    raise TrainingDivergenceError("rewards non-finite for 10 consecutive steps")
                continue
            bad_steps = 0
            G = discounted_returns(ro.rewards, cfg.gamma)
            if baseline is None:
                baseline = G.mean(axis=0)
            grads = policy_gradient(policy, ro, G - baseline)
            opt.step(policy.params, grads)
            baseline = cfg.baseline_decay * baseline + (1 - cfg.baseline_decay) * G.mean(axis=0)
        history.append({"epoch": epoch, "best_loglik": best_ll,
                        "mean_return": float(ro.rewards.sum(axis=1).mean())})
        log.debug("epoch %d best loglik %.3f", epoch, best_ll)

    structure = to_structure(cache, best_levels)
    if not return_result:
        return structure
    g = rollout(policy, cache, np.arange(n), cfg, rng, m=1, greedy=True)
    st = g.states[0]
    return RlResult(structure, best_ll, st.structure(), st.loglik(), history, cache.n_fits)
