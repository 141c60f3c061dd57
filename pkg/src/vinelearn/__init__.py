"""
Regular-vine copula learning.

The package fits vine copulas to tabular data and draws synthetic rows
from the fitted model.  ``fit_greedy`` is the tree-by-tree spanning-tree
baseline; ``fit_vector`` and ``fit_rl`` are the two neural structure
searches.

Typical use::

    from vinelearn import fit_marginals, to_uniform, fit_rl, sample

    marginals = fit_marginals(data)
    structure = fit_rl(to_uniform(marginals, data))
    synthetic = sample(structure, marginals, 1000, seed=0)
"""
from .copulas import BivariateCopula, Family, select_family
from .errors import (ConvergenceError, DegenerateDataError, DomainError, ParameterError,
                     StructureError, TrainingDivergenceError, VineError)
from .evaluation import loglik_per_instance, relative_loglik, tau_matrix, tau_matrix_distance
from .greedy import fit_greedy
from .marginals import MarginalModel, fit_marginals, from_uniform, to_uniform
from .persist import FittedModel, load_model, save_model
from .rl import RlTrainConfig, fit_rl
from .sampling import sample, sample_uniform
from .vector import VectorTrainConfig, fit_vector
from .vine import (VineEdge, VineStructure, count_structures, fit_copulas, validate,
                   vine_loglik)

__version__ = "0.1.0"

__all__ = [
    "BivariateCopula", "Family", "select_family",
    "VineError", "DomainError", "ParameterError", "DegenerateDataError", "StructureError",
    "ConvergenceError", "TrainingDivergenceError",
    "MarginalModel", "fit_marginals", "to_uniform", "from_uniform",
    "VineEdge", "VineStructure", "validate", "count_structures", "fit_copulas", "vine_loglik",
    "fit_greedy", "RlTrainConfig", "fit_rl", "VectorTrainConfig", "fit_vector",
    "sample", "sample_uniform",
    "loglik_per_instance", "relative_loglik", "tau_matrix", "tau_matrix_distance",
    "FittedModel", "save_model", "load_model",
]
