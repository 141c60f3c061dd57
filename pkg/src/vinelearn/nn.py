"""
Small numpy neural-network engine with hand-written backward passes.

Only what the two structure learners need.  The vector learner uses a
ReLU feed-forward network with per-slot softmax heads; the RL learner uses
a single-layer LSTM cell with a linear action head.  Both share the masked
softmax helpers and the Adam optimiser.  Parameters live in
plain ``dict[str, ndarray]`` so gradients and optimiser state line up by
name.
"""
from __future__ import annotations

import numpy as np

from .errors import TrainingDivergenceError


def _uniform_init(rng, fan_in, shape):
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


def sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def softmax(logits, mask=None, axis=-1):
    """Softmax along ``axis``; entries where ``mask`` is False get probability 0."""
    z = np.asarray(logits, dtype=float)
    if mask is not None:
        z = np.where(mask, z, -np.inf)
    z = z - np.max(z, axis=axis, keepdims=True)
    e = np.exp(z)
    return e / np.sum(e, axis=axis, keepdims=True)


def log_softmax(logits, mask=None, axis=-1):
    z = np.asarray(logits, dtype=float)
    if mask is not None:
        z = np.where(mask, z, -np.inf)
    m = np.max(z, axis=axis, keepdims=True)
    return z - m - np.log(np.sum(np.exp(z - m), axis=axis, keepdims=True))


class Fcnn:
    """
    Fully connected ReLU network whose output is split into softmax heads.

    Parameters
    ----------
    n_in : int
        Input width.
    heads : sequence of int
        Number of categories per output slot; the final layer emits
        ``sum(heads)`` logits.
    hidden : sequence of int
        Hidden layer widths (default two layers of 64).
    rng : int or Generator, optional
    """

    def __init__(self, n_in, heads, hidden=(64, 64), rng=None):
        rng = np.random.default_rng(rng)
        self.heads = tuple(int(h) for h in heads)
        self.sizes = (int(n_in), *map(int, hidden), sum(self.heads))
        self.params = {}
        for k, (a, b) in enumerate(zip(self.sizes[:-1], self.sizes[1:])):
            self.params[f"W{k}"] = _uniform_init(rng, a, (a, b))
            self.params[f"b{k}"] = _uniform_init(rng, a, (b,))
        self._bounds = np.cumsum((0,) + self.heads)

    @property
    def n_layers(self):
        return len(self.sizes) - 1

    def split(self, flat):
        """Split the last axis of ``flat`` into per-head blocks."""
        return [flat[..., a:b] for a, b in zip(self._bounds[:-1], self._bounds[1:])]

    def logits(self, x):
        """Return (logits, cache) for input of shape (n_in,) or (batch, n_in)."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.sizes[0]:
            raise ValueError(f"expected input width {self.sizes[0]}, got {x.shape[-1]}")
        acts = [x]
        pre = []
        a = x
        for k in range(self.n_layers):
            z = a @ self.params[f"W{k}"] + self.params[f"b{k}"]
            pre.append(z)
            a = np.maximum(z, 0.0) if k < self.n_layers - 1 else z
            acts.append(a)
        return a, (acts, pre)

    def forward(self, x, masks=None):
        """Per-head probability vectors."""
        flat, _ = self.logits(x)
        blocks = self.split(flat)
        masks = masks or [None] * len(blocks)
        return [softmax(b, m) for b, m in zip(blocks, masks)]

    def backward(self, cache, dlogits):
        """Gradients of a scalar loss given its gradient w.r.t. the logits."""
        acts, pre = cache
        grads = {}
        delta = np.asarray(dlogits, dtype=float)
        for k in reversed(range(self.n_layers)):
            a_in = acts[k]
            if a_in.ndim == 1:
                grads[f"W{k}"] = np.outer(a_in, delta)
                grads[f"b{k}"] = delta.copy()
            else:
                grads[f"W{k}"] = a_in.T @ delta
                grads[f"b{k}"] = delta.sum(axis=0)
            if k > 0:
                delta = (delta @ self.params[f"W{k}"].T) * (pre[k - 1] > 0.0)
        return grads


def fcnn_forward(net, x, masks=None):
    return net.forward(x, masks)


class LstmPolicy:
    """
    Single-layer LSTM with a linear head producing action logits.

    Gates are stacked in the order input, forget, output, candidate.  The
    cell works on batches: inputs of shape (batch, n_in), state arrays of
    shape (batch, hidden).
    """

    def __init__(self, n_in, n_actions, hidden=64, rng=None):
        rng = np.random.default_rng(rng)
        self.n_in = int(n_in)
        self.hidden = int(hidden)
        self.n_actions = int(n_actions)
        H = self.hidden
        self.params = {
            "Wx": _uniform_init(rng, n_in + H, (n_in, 4 * H)),
            "Wh": _uniform_init(rng, n_in + H, (H, 4 * H)),
            "b": _uniform_init(rng, n_in + H, (4 * H,)),
            "Wo": _uniform_init(rng, H, (H, n_actions)),
            "bo": _uniform_init(rng, H, (n_actions,)),
        }

    def initial_state(self, batch=1):
        return np.zeros((batch, self.hidden)), np.zeros((batch, self.hidden))

    def step(self, x, state):
        """One time step.  Returns (logits, new_state, cache)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        h_prev, c_prev = state
        if x.shape[1] != self.n_in or h_prev.shape[1] != self.hidden:
            raise ValueError("input or state width does not match the cell")
        p = self.params
        H = self.hidden
        z = x @ p["Wx"] + h_prev @ p["Wh"] + p["b"]
        i = sigmoid(z[:, :H])
        f = sigmoid(z[:, H:2 * H])
        o = sigmoid(z[:, 2 * H:3 * H])
        g = np.tanh(z[:, 3 * H:])
        c = f * c_prev + i * g
        tc = np.tanh(c)
        h = o * tc
        logits = h @ p["Wo"] + p["bo"]
        cache = (x, h_prev, c_prev, i, f, o, g, tc, h)
        return logits, (h, c), cache

    def backward(self, caches, dlogits):
        """
        Backpropagation through time.

        ``caches`` and ``dlogits`` are per-step lists from one forward
        sequence; returns the gradient of ``sum_t <dlogits[t], logits[t]>``.
        """
        p = self.params
        H = self.hidden
        grads = {k: np.zeros_like(v) for k, v in p.items()}
        dh_next = None
        dc_next = None
        for cache, dl in zip(reversed(caches), reversed(dlogits)):
            x, h_prev, c_prev, i, f, o, g, tc, h = cache
            dl = np.atleast_2d(dl)
            grads["Wo"] += h.T @ dl
            grads["bo"] += dl.sum(axis=0)
            dh = dl @ p["Wo"].T
            if dh_next is not None:
                dh = dh + dh_next
            dc = dh * o * (1.0 - tc * tc)
            if dc_next is not None:
                dc = dc + dc_next
            dz = np.concatenate([
                dc * g * i * (1.0 - i),
                dc * c_prev * f * (1.0 - f),
                dh * tc * o * (1.0 - o),
                dc * i * (1.0 - g * g),
            ], axis=1)
            grads["Wx"] += x.T @ dz
            grads["Wh"] += h_prev.T @ dz
            grads["b"] += dz.sum(axis=0)
            dh_next = dz @ p["Wh"].T
            dc_next = dc * f
        return grads


def lstm_step(policy, x, state):
    logits, new_state, _ = policy.step(x, state)
    return logits, new_state


class Adam:
    """Adam optimiser over a parameter dict; updates arrays in place."""

    def __init__(self, lr=1e-3, betas=(0.9, 0.999), eps=1e-8):
        self.lr = lr
        self.b1, self.b2 = betas
        self.eps = eps
        self.t = 0
        self.m = {}
        self.v = {}

    def step(self, params, grads):
        for name, g in grads.items():
            if not np.all(np.isfinite(g)):
                raise TrainingDivergenceError(f"non-finite gradient for {name!r}")
        self.t += 1
        for name, g in grads.items():
            m = self.m.setdefault(name, np.zeros_like(g))
            v = self.v.setdefault(name, np.zeros_like(g))
            m *= self.b1
            m += (1.0 - self.b1) * g
            v *= self.b2
            v += (1.0 - self.b2) * g * g
            mhat = m / (1.0 - self.b1 ** self.t)
            vhat = v / (1.0 - self.b2 ** self.t)
            params[name] -= self.lr * mhat / (np.sqrt(vhat) + self.eps)
        return params


def grad_step(params, grads, opt):
    """Descend ``grads`` with optimiser ``opt``; returns the updated params."""
    return opt.step(params, grads)
