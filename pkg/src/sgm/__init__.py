"""Stratified graphical log-linear models over binary variables.

Fit context-specific graphical models by cyclical ML projection, score them
with BIC, and search for the best stratified graph by non-reversible
Metropolis-Hastings.
"""
from .distribution import (
    JointTable,
    LogLinearParams,
    kl_divergence,
    marginal,
    phi_to_theta,
    sample,
    theta_to_phi,
)
from .errors import *  # noqa: F401,F403
from .estimation import (
    ConvergenceReport,
    check_restrictions,
    cyclical_mle,
    project_context,
    project_graph,
)
from .graph import (
    JunctionTree,
    UndirectedGraph,
    common_neighbors,
    is_chordal,
    junction_tree,
    maximal_cliques,
    separates,
)
from .model import (
    Context,
    Restriction,
    RestrictionSet,
    StratifiedGraph,
    Stratum,
    all_instances,
    derive_restrictions,
    dimension,
    graph_dimension,
    is_hierarchical,
    validate,
)
from .scoring import Dataset, ModelScore, ScoreCache, bic_score, graph_prior, log_likelihood
from .search import (
    SearchState,
    SearchTrace,
    exhaustive_strata,
    full_search,
    posterior_estimate,
    propose_graph,
    propose_strata,
    strata_search,
)

__version__ = "0.1.0"
