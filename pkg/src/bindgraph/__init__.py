"""Edge-probability graph models with binding-based realizations.

Given per-pair edge probabilities from a model (Erdos-Renyi, Chung-Lu,
stochastic block, stochastic Kronecker), a realization scheme decides how the
pairs are sampled jointly. Edge-independent sampling is the usual baseline;
local and parallel binding share uniform draws among groups of pairs, which
keeps every marginal but yields many more triangles.
"""

from .fitting import FitError, FitObjective, FitReport, fit_binding, fit_binding_joint
from .graph import Graph, GraphStats, compute_stats, empirical_overlap, read_edge_list, write_edge_list
from .models import (CLModel, EdgeProbModel, ERModel, KRModel, SBModel, fit_cl, fit_er, fit_sb, load_kr,
                     load_model, save_model)
from .motifs import (ExpectedCounts, MotifDistribution3, TripleSpec, analytic_overlap, expected_counts,
                     motif3, motif3_eigm, motif3_local, motif3_maximal, motif3_parallel)
from .realization import (BindingParams, generate_batch, sample, sample_eigm, sample_local_binding,
                          sample_parallel_binding)

__version__ = "0.1.0"

__all__ = [
    "BindingParams", "CLModel", "ERModel", "EdgeProbModel", "ExpectedCounts", "FitError", "FitObjective",
    "FitReport", "Graph", "GraphStats", "KRModel", "MotifDistribution3", "SBModel", "TripleSpec",
    "analytic_overlap", "compute_stats", "empirical_overlap", "expected_counts", "fit_binding",
    "fit_binding_joint", "fit_cl", "fit_er", "fit_sb", "generate_batch", "load_kr", "load_model", "motif3",
    "motif3_eigm", "motif3_local", "motif3_maximal", "motif3_parallel", "read_edge_list", "sample",
    "sample_eigm", "sample_local_binding", "sample_parallel_binding", "save_model", "write_edge_list",
]
