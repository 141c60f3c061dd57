"""Tree-by-tree spanning-tree baseline."""
import numpy as np
import pytest

from vinelearn.constructed import _copula
from vinelearn.copulas import Family
from vinelearn.greedy import fit_greedy, kruskal_max
from vinelearn.marginals import fit_marginals, to_uniform
from vinelearn.sampling import sample_uniform
from vinelearn.vine import from_node_pairs, validate


def test_kruskal_small():
    # square with a heavy diagonal: 0-2 (5), 0-1 (4), 2-3 (3), 1-3 (3), 1-2 (1)
    edges = [(4, 0, 0, 1), (1, 1, 1, 2), (3, 2, 2, 3), (3, 3, 1, 3), (5, 4, 0, 2)]
    assert kruskal_max(4, edges) == [(0, 2), (0, 1), (2, 3)]


def test_kruskal_tie_break_by_key():
    edges = [(1.0, (1, 2), 1, 2), (1.0, (0, 1), 0, 1), (1.0, (0, 2), 0, 2)]
    assert kruskal_max(3, edges) == [(0, 1), (0, 2)]


def test_two_variables():
    rng = np.random.default_rng(0)
    z = rng.normal(size=300)
    x = np.column_stack([z, z + rng.normal(size=300)])
    v = fit_greedy(to_uniform(fit_marginals(x), x))
    assert v.truncation == 1 and v.tree(1)[0].conditioned == (0, 1)
    assert not v.tree(1)[0].copula.is_independence


def test_near_duplicate_column():
    rng = np.random.default_rng(1)
    x1 = rng.normal(size=400)
    x = np.column_stack([x1, x1 + 1e-3 * rng.normal(size=400), rng.normal(size=400)])
    v = fit_greedy(to_uniform(fit_marginals(x), x))
    assert (0, 1) in {e.conditioned for e in v.tree(1)}


def test_truncation():
    u = sample_uniform(_dvine(), 300, seed=2)
    v = fit_greedy(u, truncation=2)
    assert v.truncation == 2 and validate(v) == []


def test_deterministic():
    u = sample_uniform(_dvine(), 300, seed=3)
    assert fit_greedy(u) == fit_greedy(u)


def _dvine():
    s = from_node_pairs(4, [[(0, 1), (1, 2), (2, 3)]])
    fams = [Family.CLAYTON, Family.GUMBEL, Family.GAUSSIAN]
    return type(s)(4, [[e.with_copula(_copula(f, 0.65)) for e, f in zip(s.tree(1), fams)]])


def test_recovers_dvine_path():
    truth = {(0, 1), (1, 2), (2, 3)}
    hits = 0
    for seed in range(20):
        u = sample_uniform(_dvine(), 400, seed=seed)
        v = fit_greedy(u)
        assert validate(v) == []
        hits += {e.conditioned for e in v.tree(1)} == truth
    assert hits >= 16


def test_needs_rows():
    with pytest.raises(ValueError):
        fit_greedy(np.random.default_rng(0).random((5, 3)))
