"""Empirical marginal distributions: probability integral transform and its inverse."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDataError


@dataclass(frozen=True, eq=False)
class MarginalModel:
    """
    Empirical CDF of one column with an interpolated quantile function.

    ``sorted_values`` holds the (tie-jittered) training sample in ascending
    order.  The transform is the rank-interpolated ECDF rescaled by
    n / (n + 1), so it never returns 0 or 1.
    """

    sorted_values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.sorted_values, dtype=float)
        if values.ndim != 1 or values.size < 2:
            raise DegenerateDataError("a marginal needs at least two values")
        if np.any(np.diff(values) < 0):
            raise ValueError("sorted_values must be nondecreasing")
        values.setflags(write=False)
        object.__setattr__(self, "sorted_values", values)

    @property
    def n(self):
        return self.sorted_values.size

    def transform(self, x):
        return transform(self, x)

    def inverse(self, u):
        return inverse(self, u)

    def __eq__(self, other):
        return isinstance(other, MarginalModel) and np.array_equal(
            self.sorted_values, other.sorted_values)

    __hash__ = None


def fit_ecdf(column, rng=None):
    """
    Fit an empirical marginal to a column of finite reals.

    Ties are broken by uniform jitter of magnitude ``1e-9 * (max - min)``
    so that stored values are strictly increasing.
    """
    x = np.asarray(column, dtype=float).ravel()
    if x.size < 2 or not np.all(np.isfinite(x)):
        raise DegenerateDataError("column needs at least two finite values")
    span = float(np.ptp(x))
    if span == 0.0:
        raise DegenerateDataError("column has fewer than two distinct values")
    x = np.sort(x)
    if np.any(np.diff(x) == 0.0):
        rng = np.random.default_rng(0 if rng is None else rng)
        x = np.sort(x + rng.uniform(-0.5, 0.5, size=x.size) * 1e-9 * span)
        # jitter magnitude is far below any real gap; resolve float collisions
        while np.any(np.diff(x) <= 0.0):
            dup = np.flatnonzero(np.diff(x) <= 0.0) + 1
            x[dup] = np.nextafter(x[dup - 1], np.inf)
            x = np.sort(x)
    return MarginalModel(x)


def transform(m, x):
    """
    Map ``x`` to the unit interval: u = (i + frac) / (n + 1).

    ``i`` is the 1-based position of the largest order statistic <= x and
    ``frac`` the linear position towards the next one.  Values outside the
    observed range clamp to 1/(n+1) and n/(n+1).
    """
    scalar = np.ndim(x) == 0
    x = np.asarray(x, dtype=float)
    s = m.sorted_values
    n = s.size
    ranks = np.interp(x, s, np.arange(1, n + 1, dtype=float))
    u = ranks / (n + 1.0)
    return float(u) if scalar else u


def inverse(m, u):
    """Empirical quantile function, linear between order statistics."""
    scalar = np.ndim(u) == 0
    u = np.asarray(u, dtype=float)
    s = m.sorted_values
    n = s.size
    x = np.interp(u * (n + 1.0), np.arange(1, n + 1, dtype=float), s)
    return float(x) if scalar else x


def fit_marginals(data, rng=None):
    """Fit one :class:`MarginalModel` per column of a 2-D array."""
    data = np.asarray(data, dtype=float)
    return [fit_ecdf(data[:, j], rng=rng) for j in range(data.shape[1])]


def to_uniform(marginals, data):
    """Apply each column's transform; returns an array in (0, 1)."""
    data = np.asarray(data, dtype=float)
    if data.ndim != 2 or data.shape[1] != len(marginals):
        raise ValueError(f"expected {len(marginals)} columns, got shape {data.shape}")
    return np.column_stack([m.transform(data[:, j]) for j, m in enumerate(marginals)])


def from_uniform(marginals, u):
    u = np.asarray(u, dtype=float)
    return np.column_stack([m.inverse(u[:, j]) for j, m in enumerate(marginals)])
