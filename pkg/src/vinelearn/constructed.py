"""
Known six-dimensional vines used as ground truth in experiments and tests.

``dense_vine`` has a non-independence copula on every one of its 15 edges
with Kendall tau between 0.3 and 0.7.  Its first tree is a path whose
links are weaker than the dependence carried by the second tree, so the
strongest raw pairwise taus are *not* the first-tree pairs and a
tree-by-tree spanning-tree search on |tau| picks a different first tree.

``sparse_vine`` is truncated after its first tree: five dependent edges,
independence everywhere above.
"""
from __future__ import annotations

from importlib import resources

import numpy as np

from .copulas import BivariateCopula, Family, tau_to_theta
from .vine import from_node_pairs


def _copula(family, tau):
    return BivariateCopula(family, tau_to_theta(family, tau))


def _attach(structure, families):
    trees = []
    for tree, row in zip(structure.trees, families):
        trees.append([e.with_copula(_copula(f, t)) for e, (f, t) in zip(tree, row)])
    return type(structure)(structure.d, trees)


G, C, F, U = Family.GAUSSIAN, Family.CLAYTON, Family.FRANK, Family.GUMBEL

# D-vine node pairs: tree k joins consecutive nodes of tree k-1
_PATH = [[(a, a + 1) for a in range(6 - k)] for k in range(1, 6)]


def dense_vine():
    """Six-variable D-vine 1-2-3-4-5-6 (0-based 0..5) with all edges dependent."""
    families = [
        [(C, 0.30), (U, 0.35), (F, 0.30), (C, 0.35), (U, 0.30)],
        [(U, 0.70), (C, 0.65), (U, 0.70), (C, 0.65)],
        [(F, 0.40), (G, 0.35), (F, 0.40)],
        [(C, 0.30), (U, 0.30)],
        [(G, 0.30)],
    ]
    return _attach(from_node_pairs(6, _PATH), families)


def sparse_vine():
    """Six-variable vine truncated after a star-and-path first tree."""
    structure = from_node_pairs(6, [[(0, 1), (1, 2), (1, 3), (3, 4), (4, 5)]])
    families = [[(C, 0.55), (U, 0.60), (F, 0.50), (G, 0.65), (C, 0.45)]]
    return _attach(structure, families)


def benchmark_vine():
    """
    Six-variable vine behind the bundled benchmark table.

    First tree: 0-1, 1-2, 1-3, 3-4, 4-5 with moderate taus; the second tree
    carries the strongest dependence, so raw pairwise taus again mislead a
    tree-by-tree search.
    """
    structure = from_node_pairs(6, [
        [(0, 1), (1, 2), (1, 3), (3, 4), (4, 5)],
        [(0, 1), (1, 2), (2, 3), (3, 4)],
        [(0, 1), (1, 2), (2, 3)],
    ])
    families = [
        [(U, 0.35), (C, 0.30), (F, 0.40), (C, 0.35), (G, 0.30)],
        [(C, 0.65), (U, 0.60), (F, 0.55), (U, 0.65)],
        [(G, 0.30), (C, 0.25), (F, 0.30)],
    ]
    return _attach(structure, families)


BENCHMARK_COLUMNS = ["radius", "texture", "area", "smoothness", "concavity", "grade"]


def make_benchmark(n=500, seed=2024):
    """
    Regenerate the benchmark table: copula draws from :func:`benchmark_vine`
    mapped through fixed non-uniform marginals (one of them discrete).
    """
    from scipy import stats

    from .sampling import sample_uniform

    u = sample_uniform(benchmark_vine(), n, seed=seed)
    cols = [
        stats.lognorm(s=0.25, scale=14.0).ppf(u[:, 0]),
        stats.gamma(a=9.0, scale=2.1).ppf(u[:, 1]),
        stats.lognorm(s=0.5, scale=650.0).ppf(u[:, 2]),
        stats.beta(a=12.0, b=110.0).ppf(u[:, 3]),
        stats.t(df=4, loc=0.09, scale=0.04).ppf(u[:, 4]),
        np.ceil(4.0 * u[:, 5]),
    ]
    digits = [3, 2, 1, 5, 4, 0]
    return list(BENCHMARK_COLUMNS), np.column_stack(
        [np.round(c, k) for c, k in zip(cols, digits)])


def load_benchmark():
    """
    Bundled 500-row, 6-column real-valued benchmark table.

    Returns ``(column_names, data)``.  The rows were drawn once from
    :func:`benchmark_vine` and pushed through fixed non-uniform marginals,
    one of them discrete, so the file exercises ties and awkward margins
    like a small real dataset would.
    """
    with resources.files("vinelearn.data").joinpath("benchmark.csv").open("r") as fh:
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",")
    return header, data
