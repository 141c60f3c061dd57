"""Vine structures: validity checks plus the likelihood machinery."""
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vinelearn import copulas as cop
from vinelearn.copulas import BivariateCopula
from vinelearn.errors import ParameterError, StructureError
from vinelearn.sampling import sample_uniform
from vinelearn.vine import (VineEdge, VineStructure, complete, count_structures, deserialize,
                            edge_logliks, enumerate_structures, fit_copulas, from_node_pairs,
                            pseudo_observations, serialize, validate, validate_node_pairs,
                            vine_loglik)


def E(i, j, *cond, copula=None):
    """Edge from 1-based labels, as printed in the literature."""
    return VineEdge((i - 1, j - 1), frozenset(c - 1 for c in cond), copula)


def reference_vine(copula=None):
    trees = [
        [E(1, 4), E(2, 4), E(3, 4), E(3, 5)],
        [E(1, 3, 4), E(4, 5, 3), E(2, 3, 4)],
        [E(1, 5, 3, 4), E(2, 5, 3, 4)],
        [E(1, 2, 3, 4, 5)],
    ]
    if copula is not None:
        trees = [[e.with_copula(copula(k, m)) for m, e in enumerate(t)] for k, t in enumerate(trees)]
    return VineStructure(5, trees)


def _reference_copula(k, m):
    fams = ["Clayton", "Gumbel", "Frank", "Gaussian"]
    taus = [0.5, 0.4, 0.3, 0.2]
    fam = fams[(k + m) % 4]
    return BivariateCopula(fam, cop.tau_to_theta(fam, taus[k]))


class TestValidate:
    def test_reference_is_valid(self):
        assert validate(reference_vine()) == []

    def test_triangle_cycle(self):
        v = VineStructure(3, [[E(1, 2), E(2, 3), E(1, 3)]])
        msgs = validate(v)
        assert any("level 1" in m and "cycle" in m for m in msgs)

    def test_proximity_violation(self):
        # T1 path 1-2, 3-4, 2-3 ... nodes 12 and 34 share nothing
        msgs = validate_node_pairs(4, [[(0, 1), (2, 3), (1, 2)], [(0, 1)]])
        assert any("level 2" in m and "proximity" in m for m in msgs)

    def test_proximity_violation_edge_form(self):
        v = VineStructure(4, [[E(1, 2), E(2, 3), E(3, 4)], [E(1, 3, 2), E(1, 4, 2)]])
        msgs = validate(v)
        assert any("level 2" in m and "proximity" in m for m in msgs)

    def test_wrong_edge_count(self):
        v = VineStructure(4, [[E(1, 2), E(2, 3)]])
        assert any("expected 3" in m for m in validate(v))

    def test_duplicate_edge(self):
        v = VineStructure(3, [[E(1, 2), E(1, 2)]])
        assert any("duplicate" in m for m in validate(v))

    def test_edge_count_law(self):
        for v in enumerate_structures(5):
            assert [len(t) for t in v.trees] == [4, 3, 2, 1]
            assert v.n_edges == 10


class TestCounting:
    @pytest.mark.parametrize("d,expected", [(2, 1), (3, 3), (4, 24), (5, 480), (6, 23040)])
    def test_formula(self, d, expected):
        assert count_structures(d) == expected

    def test_wide_integer(self):
        assert count_structures(25) > 2 ** 250

    @pytest.mark.parametrize("d", [3, 4, 5])
    def test_enumeration_matches_formula(self, d):
        seen = {tuple(frozenset(e.key for e in t) for t in v.trees) for v in enumerate_structures(d)}
        assert len(seen) == count_structures(d)

    def test_all_enumerated_valid(self):
        assert all(validate(v) == [] for v in enumerate_structures(4))


class TestPseudoObservations:
    def setup_method(self):
        self.u = np.random.default_rng(0).random((200, 3))

    def test_level_one_raw(self):
        v = VineStructure(3, [[E(1, 2, copula=cop.INDEPENDENCE), E(2, 3, copula=cop.INDEPENDENCE)],
                              [E(1, 3, 2)]])
        po = pseudo_observations(v, self.u)
        np.testing.assert_array_equal(po[0][0][0], self.u[:, 0])
        np.testing.assert_array_equal(po[0][0][1], self.u[:, 1])

    def test_independence_passes_through(self):
        v = VineStructure(3, [[E(1, 2, copula=cop.INDEPENDENCE), E(2, 3, copula=cop.INDEPENDENCE)],
                              [E(1, 3, 2)]])
        a, b = pseudo_observations(v, self.u)[1][0]
        np.testing.assert_allclose(a, self.u[:, 0])
        np.testing.assert_allclose(b, self.u[:, 2])

    def test_clayton_h_transform(self):
        c = BivariateCopula("Clayton", 2.0)
        v = VineStructure(3, [[E(1, 2, copula=c), E(2, 3, copula=c)], [E(1, 3, 2)]])
        a, b = pseudo_observations(v, self.u)[1][0]
        np.testing.assert_allclose(a, cop.h(c, self.u[:, 0], self.u[:, 1]), rtol=1e-14)
        np.testing.assert_allclose(b, cop.h(c, self.u[:, 2], self.u[:, 1]), rtol=1e-14)

    def test_unfitted_parent(self):
        v = VineStructure(3, [[E(1, 2), E(2, 3)], [E(1, 3, 2)]])
        with pytest.raises(StructureError):
            pseudo_observations(v, self.u)


class TestLikelihood:
    def test_independence_zero(self):
        v = complete(VineStructure(4, []))
        assert vine_loglik(v, np.random.default_rng(1).random((50, 4))) == 0.0

    def test_single_edge(self):
        c = BivariateCopula("Gumbel", 1.6)
        u = np.random.default_rng(2).random((100, 2))
        v = VineStructure(2, [[VineEdge((0, 1), frozenset(), c)]])
        assert vine_loglik(v, u) == pytest.approx(cop.loglik(c, u[:, 0], u[:, 1]), rel=1e-14)

    def test_reference_factorisation(self):
        v = reference_vine(_reference_copula)
        u = sample_uniform(v, 300, seed=3)
        # build the ten terms by hand from h-functions
        c = {e.label(): e.copula for e in v.edges}
        x = {i: u[:, i - 1] for i in range(1, 6)}
        H = cop.h
        l1 = sum(cop.loglik(c[k], x[int(k[0])], x[int(k[2])]) for k in ("1,4", "2,4", "3,4", "3,5"))
        u1_4, u3_4, u2_4 = H(c["1,4"], x[1], x[4]), H(c["3,4"], x[3], x[4]), H(c["2,4"], x[2], x[4])
        u4_3, u5_3 = H(c["3,4"], x[4], x[3]), H(c["3,5"], x[5], x[3])
        l2 = (cop.loglik(c["1,3|4"], u1_4, u3_4) + cop.loglik(c["4,5|3"], u4_3, u5_3)
              + cop.loglik(c["2,3|4"], u2_4, u3_4))
        u1_34 = H(c["1,3|4"], u1_4, u3_4)
        u5_34 = H(c["4,5|3"], u5_3, u4_3)
        u2_34 = H(c["2,3|4"], u2_4, u3_4)
        l3 = cop.loglik(c["1,5|3,4"], u1_34, u5_34) + cop.loglik(c["2,5|3,4"], u2_34, u5_34)
        l4 = cop.loglik(c["1,2|3,4,5"], H(c["1,5|3,4"], u1_34, u5_34), H(c["2,5|3,4"], u2_34, u5_34))
        assert vine_loglik(v, u) == pytest.approx(l1 + l2 + l3 + l4, rel=1e-12)

    def test_additive_over_levels(self):
        v = reference_vine(_reference_copula)
        u = sample_uniform(v, 300, seed=4)
        per_edge = edge_logliks(v, u)
        for K in range(1, 4):
            diff = vine_loglik(v.truncate(K + 1), u) - vine_loglik(v.truncate(K), u)
            assert diff == pytest.approx(sum(per_edge[K]), abs=1e-9)

    def test_fit_copulas_fits_everything(self):
        v = reference_vine(_reference_copula)
        u = sample_uniform(v, 500, seed=5)
        fitted = fit_copulas(reference_vine(), u)
        assert fitted.is_fitted and validate(fitted) == []


class TestComplete:
    def test_truncated_completion_valid(self):
        v = from_node_pairs(5, [[(0, 1), (1, 2), (2, 3), (3, 4)]])
        full = complete(v)
        assert validate(full) == [] and full.truncation == 4
        assert all(e.copula.is_independence for t in full.trees[1:] for e in t)


class TestSerialization:
    def test_round_trip(self):
        v = reference_vine(_reference_copula)
        doc = json.loads(json.dumps(serialize(v)))
        assert deserialize(doc) == v

    def test_theta_exact(self):
        c = BivariateCopula("Clayton", 0.1 + 0.2)
        v = VineStructure(2, [[VineEdge((0, 1), frozenset(), c)]])
        assert deserialize(json.loads(json.dumps(serialize(v)))).edges[0].copula.theta == 0.1 + 0.2

    def test_duplicate_edge(self):
        doc = serialize(VineStructure(3, [[E(1, 2, copula=cop.INDEPENDENCE),
                                           E(2, 3, copula=cop.INDEPENDENCE)]]))
        doc["trees"][0][1] = dict(doc["trees"][0][0])
        with pytest.raises(StructureError, match="duplicate"):
            deserialize(doc)

    def test_bad_theta(self):
        doc = serialize(reference_vine(_reference_copula))
        doc["trees"][0][0]["family"] = "Gumbel"
        doc["trees"][0][0]["theta"] = "0.5"
        with pytest.raises(ParameterError, match=r"\$\.trees\[0\]\[0\]\.theta"):
            deserialize(doc)

    def test_bad_shape(self):
        with pytest.raises(StructureError, match=r"\$\.trees\[1\]\[0\]\.conditioned"):
            deserialize({"d": 3, "trees": [[], [{"conditioned": [1]}]]})


@given(st.integers(0, 10_000), st.integers(3, 6))
@settings(max_examples=40, deadline=None)
def test_random_node_pair_vines_validate(seed, d):
    # random spanning trees level by level: always a valid vine
    from vinelearn.vine import _UnionFind, edge_between, proximity_ok
    rng = np.random.default_rng(seed)
    trees = []
    for k in range(1, d):
        unions = [frozenset([i]) for i in range(d)] if k == 1 else [e.union for e in trees[-1]]
        cands = [(a, b) for a in range(len(unions)) for b in range(a + 1, len(unions))
                 if k == 1 or proximity_ok(trees[-1], a, b)]
        rng.shuffle(cands)
        uf = _UnionFind(len(unions))
        trees.append([edge_between(unions, a, b) for a, b in cands if uf.union(a, b)])
    assert validate(VineStructure(d, trees)) == []
