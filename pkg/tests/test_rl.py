"""Sequential RL learner: action space and rewards, plus the policy-gradient estimator."""
import itertools
from collections import Counter

import numpy as np
import pytest

from vinelearn.constructed import _attach
from vinelearn.copulas import Family
from vinelearn.edgecache import EdgeCache
from vinelearn.errors import StructureError
from vinelearn.nn import Adam, LstmPolicy, softmax
from vinelearn.rl import PolicyState, RlTrainConfig, Rollouts, discounted_returns, encode, \
    fit_rl, initial_loglik, policy_gradient, rollout, step_reward
from vinelearn.sampling import sample_uniform
from vinelearn.vine import from_node_pairs, validate, vine_loglik


def dvine(d, tau=0.6):
    s = from_node_pairs(d, [[(a, a + 1) for a in range(d - 1)]])
    return _attach(s, [[(Family.CLAYTON, tau)] * (d - 1)])


def cache_for(d, n=200, seed=0):
    return EdgeCache(sample_uniform(dvine(d), n, seed=seed))


def zero_policy(d, hidden=4):
    pol = LstmPolicy(2 * d + 1, d * (d - 1) // 2, hidden=hidden, rng=0)
    for k in pol.params:
        pol.params[k][...] = 0.0
    return pol


class TestActionSpace:
    def test_two_variables_forced(self):
        st = PolicyState(cache_for(2), 1)
        assert st.total_steps == 1 and st.actions() == [(0, 1)]
        st.apply((0, 1))
        assert st.done

    def test_four_variables_first_step(self):
        assert len(PolicyState(cache_for(4), 3).actions()) == 6

    def test_crossing_mask(self):
        st = PolicyState(cache_for(4), 3)
        st.apply((0, 1))
        assert sorted(st.actions()) == [(0, 2), (0, 3), (1, 2), (1, 3)]
        with pytest.raises(StructureError):
            st.apply((2, 3))

    def test_level_two_proximity(self):
        st = PolicyState(cache_for(4), 3)
        for p in [(0, 1), (1, 2), (2, 3)]:
            st.apply(p)
        # path edges 01, 12, 23: only consecutive edges share a variable
        assert st.level == 2 and sorted(st.actions()) == [(0, 1), (1, 2)]

    def test_total_steps_truncated(self):
        assert PolicyState(cache_for(5), 2).total_steps == 4 + 3

    def test_invariants_hold_through_rollouts(self):
        cache = cache_for(5)
        cfg = RlTrainConfig(rollouts=8, check_invariants=True)
        ro = rollout(zero_policy(5), cache, np.arange(cache.n), cfg, np.random.default_rng(1))
        for st in ro.states:
            assert st.done and validate(st.structure()) == []

    def test_encode_layout(self):
        x = encode(4, (1, 3), 2, 0.5)
        np.testing.assert_array_equal(x, [0, 1, 0, 1, 0, 1, 0, 0, 0.5])


def test_uniform_policy_spanning_trees():
    # zero weights: uniform over admissible pairs, so each of the 3 trees has mass 1/3
    cache = cache_for(3, n=50)
    cfg = RlTrainConfig(rollouts=10_000, truncation=1)
    ro = rollout(zero_policy(3), cache, np.arange(50), cfg, np.random.default_rng(0))
    counts = Counter(frozenset(n.conditioned for n in st.edges[0]) for st in ro.states)
    assert len(counts) == 3
    for c in counts.values():
        assert abs(c / 10_000 - 1 / 3) <= 0.05


class TestRewards:
    def test_telescoping(self):
        cache = cache_for(4)
        rows = np.arange(cache.n)
        st = PolicyState(cache, 3)
        total = initial_loglik(cache, rows)
        rng = np.random.default_rng(3)
        while not st.done:
            acts = st.actions()
            _, lik, _ = step_reward(st, acts[rng.integers(len(acts))], rows, 0.0)
            total += lik
        assert total == pytest.approx(vine_loglik(st.structure(), cache.data) / cache.n, abs=1e-9)

    def test_penalty(self):
        cache = cache_for(3)
        st = PolicyState(cache, 2)
        rew, lik, node = step_reward(st, (0, 1), np.arange(cache.n), 0.25)
        assert not cache.fit(*node.inputs).is_independence
        assert rew - lik == pytest.approx(-0.25)

    def test_independence_no_penalty(self):
        cache = EdgeCache(np.random.default_rng(0).random((200, 2)))
        st = PolicyState(cache, 1)
        rew, lik, node = step_reward(st, (0, 1), np.arange(200), 1.0)
        assert cache.fit(*node.inputs).is_independence and rew == lik


class TestEstimator:
    def test_discounted_returns(self):
        np.testing.assert_allclose(discounted_returns([[1.0, 2.0, 3.0]], 0.5), [[2.75, 3.5, 3.0]])

    def test_zero_advantage_zero_gradient(self):
        cache = cache_for(4)
        pol = LstmPolicy(9, 6, hidden=5, rng=2)
        ro = rollout(pol, cache, np.arange(cache.n), RlTrainConfig(rollouts=6),
                     np.random.default_rng(0))
        G = discounted_returns(np.ones_like(ro.rewards), 0.9)
        baseline = G[0].copy()  # every episode earns exactly the baseline
        for g in policy_gradient(pol, ro, G - baseline).values():
            np.testing.assert_array_equal(g, 0.0)

    def test_bandit_learns_best_arm(self):
        rng = np.random.default_rng(0)
        pol = LstmPolicy(1, 4, hidden=4, rng=1)
        opt = Adam(0.05)
        pay = np.array([1.0, 0.2, 0.0, 0.5])
        m = 16
        baseline = 0.0
        for _ in range(500):
            logits, _, cache = pol.step(np.ones((m, 1)), pol.initial_state(m))
            p = softmax(logits)
            a = np.array([rng.choice(4, p=row) for row in p])
            score = -p
            score[np.arange(m), a] += 1.0
            r = pay[a][:, None]
            ro = Rollouts([], r, r, a[:, None], [score], [cache])
            opt.step(pol.params, policy_gradient(pol, ro, r - baseline))
            baseline = 0.9 * baseline + 0.1 * r.mean()
        logits, _, _ = pol.step(np.ones((1, 1)), pol.initial_state(1))
        assert softmax(logits)[0, 0] > 0.95

    def test_unbiased_on_enumerable_mdp(self):
        # two steps, three actions each; the second input is the first action
        rng = np.random.default_rng(4)
        pol = LstmPolicy(3, 3, hidden=3, rng=5)
        R1 = np.array([0.5, -1.0, 2.0])
        R2 = rng.normal(size=(3, 3))
        x0 = np.array([[1.0, 0.0, 0.0]])

        def objective():
            logits, state, _ = pol.step(x0, pol.initial_state(1))
            p1 = softmax(logits)[0]
            J = 0.0
            for a1 in range(3):
                l2, _, _ = pol.step(np.eye(3)[[a1]], state)
                p2 = softmax(l2)[0]
                J += p1[a1] * sum(p2[a2] * (R1[a1] + R2[a1, a2]) for a2 in range(3))
            return J

        exact = {}
        for name, arr in pol.params.items():
            g = np.zeros_like(arr)
            for idx in itertools.product(*map(range, arr.shape)):
                old = arr[idx]
                arr[idx] = old + 1e-6
                fp = objective()
                arr[idx] = old - 1e-6
                fm = objective()
                arr[idx] = old
                g[idx] = (fp - fm) / 2e-6
            exact[name] = g

        m, batches = 5000, 20
        ests = {k: [] for k in pol.params}
        for _ in range(batches):
            state = pol.initial_state(m)
            x = np.repeat(x0, m, axis=0)
            scores, caches, rewards, prev = [], [], [], None
            for t in range(2):
                logits, state, cache = pol.step(x, state)
                p = softmax(logits)
                a = (rng.random(m)[:, None] > np.cumsum(p, axis=1)).sum(axis=1)
                score = -p
                score[np.arange(m), a] += 1.0
                scores.append(score)
                caches.append(cache)
                rewards.append(R1[a] if t == 0 else R2[prev, a])
                prev = a
                x = np.eye(3)[a]
            r = np.column_stack(rewards)
            ro = Rollouts([], r, r, None, scores, caches)
            for k, g in policy_gradient(pol, ro, discounted_returns(r, 1.0)).items():
                ests[k].append(-g)  # gradient of the loss is minus the objective's
        for k in pol.params:
            e = np.array(ests[k])
            mean, se = e.mean(axis=0), e.std(axis=0, ddof=1) / np.sqrt(batches)
            assert np.all(np.abs(mean - exact[k]) <= 3 * se + 1e-9), k


class TestFit:
    def test_small_fit_valid_and_deterministic(self):
        u = sample_uniform(dvine(4, 0.7), 200, seed=1)
        cfg = RlTrainConfig(epochs=2, batch_size=100, rollouts=4, hidden=8, seed=3)
        a = fit_rl(u, cfg)
        assert validate(a) == [] and a.is_fitted
        assert a == fit_rl(u, cfg)

    def test_result_and_truncation(self):
        u = sample_uniform(dvine(4, 0.7), 200, seed=2)
        cfg = RlTrainConfig(epochs=2, batch_size=100, rollouts=4, hidden=8, truncation=2)
        res = fit_rl(u, cfg, return_result=True)
        assert res.structure.truncation == 2 and res.greedy_structure.truncation == 2
        assert res.loglik == pytest.approx(vine_loglik(res.structure, u))
        assert res.loglik >= res.greedy_loglik - 1e-9
        assert len(res.history) == 2

    def test_finds_strong_path(self):
        u = sample_uniform(dvine(4, 0.7), 300, seed=3)
        s = fit_rl(u, RlTrainConfig(epochs=5, batch_size=100, rollouts=8, hidden=16,
                                    truncation=1))
        assert {e.conditioned for e in s.tree(1)} == {(0, 1), (1, 2), (2, 3)}

    @pytest.mark.parametrize("kw", [{"gamma": 0.0}, {"gamma": 1.5}, {"lam": -1.0}])
    def test_bad_config(self, kw):
        with pytest.raises(ValueError):
            RlTrainConfig(**kw)

    def test_too_few_rows(self):
        with pytest.raises(ValueError):
            fit_rl(np.random.default_rng(0).random((5, 3)))
