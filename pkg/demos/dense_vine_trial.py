"""
One trial of the dense-vine experiment: all three learners on 500 rows.

The generating vine's first tree is a path whose links are weaker than the
dependence carried one level up, which misleads the tree-by-tree baseline.
Scores are relative log-likelihoods on 5000 held-out rows.  Takes about a
minute on one core.  Pass a seed as the first argument to vary the trial.
"""
import sys

from vinelearn import RlTrainConfig, VectorTrainConfig, fit_greedy, fit_rl, fit_vector, \
    relative_loglik, sample_uniform
from vinelearn.constructed import dense_vine
from vinelearn.edgecache import EdgeCache


def main(seed=0):
    truth = dense_vine()
    u = sample_uniform(truth, 500, seed=seed)
    held = sample_uniform(truth, 5000, seed=10_000 + seed)
    cache = EdgeCache(u)
    fits = {
        "greedy": fit_greedy(u),
        "vector": fit_vector(u, VectorTrainConfig(seed=seed), cache=cache),
        "rl": fit_rl(u, RlTrainConfig(seed=seed), cache=cache),
    }
    true_t1 = {e.conditioned for e in truth.tree(1)}
    for name, s in fits.items():
        hit = {e.conditioned for e in s.tree(1)} == true_t1
        print(f"{name:>6}: relative loglik {relative_loglik(s, truth, held):6.1f}%  "
              f"first tree {'recovered' if hit else 'missed'}")


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 0)
