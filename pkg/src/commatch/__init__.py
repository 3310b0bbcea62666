"""Seedless social-network de-anonymization with overlapping communities.

The package generates benchmark worlds from an overlapping stochastic block
model, scores candidate node mappings with a community-weighted edge
residual, solves the matching by convex-concave continuation over the
doubly stochastic polytope, and validates everything against exhaustive
small-size oracles.
"""

from .baseline_ga import GaConfig, ga_average_accuracy, ga_solve
from .cbda import CbdaConfig, CbdaTrace, cbda_solve, line_search
from .errors import (CapacityError, CommatchError, ConfigError,
                     DimensionError, NumericError, ParameterError, ParseError)
from .graph_core import (GraphTriple, OsbmEdgeModel, Permutation,
                         apply_permutation, conjugate, edge_probability,
                         make_triple, osbm_generate, read_communities,
                         read_edge_list, sample_network, write_communities,
                         write_edge_list)
from .harness import ExperimentConfig, run_experiment
from .lap import BACKEND as LAP_BACKEND
from .lap import nearest_permutation, solve_lap
from .model import (ProblemInstance, assemble_instance, build_instance,
                    build_weight_matrix, default_mu, unweighted_weight_matrix,
                    weight_of)
from .objective import (accuracy, f0, f_xi, grad_f_xi, mmse_objective, nme,
                        relative_nme, residual)
from .oracle import approx_ratio, brute_mmse, brute_wemp

__version__ = "0.1.0"

__all__ = [
    "CapacityError", "CbdaConfig", "CbdaTrace", "CommatchError",
    "ConfigError", "DimensionError", "ExperimentConfig", "GaConfig",
    "GraphTriple", "LAP_BACKEND", "NumericError", "OsbmEdgeModel",
    "ParameterError", "ParseError", "Permutation", "ProblemInstance",
    "accuracy", "apply_permutation", "approx_ratio", "assemble_instance",
    "brute_mmse", "brute_wemp", "build_instance", "build_weight_matrix",
    "cbda_solve", "conjugate", "default_mu", "edge_probability", "f0",
    "f_xi", "ga_average_accuracy", "ga_solve", "grad_f_xi", "line_search",
    "make_triple", "mmse_objective", "nearest_permutation", "nme",
    "osbm_generate", "read_communities", "read_edge_list", "relative_nme",
    "residual", "run_experiment", "sample_network", "solve_lap",
    "unweighted_weight_matrix", "weight_of", "write_communities",
    "write_edge_list",
]
