"""Model-quality metrics for fitted vines."""
from __future__ import annotations

import numpy as np

from .copulas import kendall_tau
from .errors import DegenerateDataError
from .marginals import to_uniform
from .vine import vine_loglik


def loglik_per_instance(structure, marginals, data):
    """Copula log-likelihood per row of ``data`` given in original units."""
    data = np.atleast_2d(np.asarray(data, dtype=float))
    if data.shape[1] != structure.d or len(marginals) != structure.d:
        raise ValueError(f"model has {structure.d} variables, data has {data.shape[1]} columns "
                         f"and {len(marginals)} marginals were given")
    u = to_uniform(marginals, data)
    return vine_loglik(structure, u) / data.shape[0]


def relative_loglik(fitted, truth, data):
    """
    Log-likelihood of ``fitted`` as a percentage of that of ``truth``.

    Both are evaluated on the same copula-scale ``data``.
    """
    if fitted.d != truth.d:
        raise ValueError(f"models differ in dimension: {fitted.d} vs {truth.d}")
    ll_true = vine_loglik(truth, data)
    if abs(ll_true) < 1e-6:
        raise ZeroDivisionError("reference model log-likelihood is within 1e-6 of zero")
    return 100.0 * vine_loglik(fitted, data) / ll_true


def tau_matrix(data):
    """Pairwise Kendall tau matrix of the columns of ``data``."""
    data = np.asarray(data, dtype=float)
    d = data.shape[1]
    out = np.eye(d)
    for i in range(d):
        for j in range(i + 1, d):
            out[i, j] = out[j, i] = kendall_tau(data[:, i], data[:, j])
    return out


def tau_matrix_distance(real, synthetic):
    """Largest absolute difference between the two Kendall tau matrices."""
    real = np.asarray(real, dtype=float)
    synthetic = np.asarray(synthetic, dtype=float)
    if real.ndim != 2 or synthetic.ndim != 2 or real.shape[1] != synthetic.shape[1]:
        raise ValueError(f"column counts differ: {real.shape} vs {synthetic.shape}")
    try:
        return float(np.max(np.abs(tau_matrix(real) - tau_matrix(synthetic))))
    except DegenerateDataError as exc:
        raise DegenerateDataError(f"cannot compare tau matrices: {exc}") from None
