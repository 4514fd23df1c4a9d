"""Potts/random-cluster phase coexistence workbench.

Belief-propagation fixed points and the critical line of the Potts model
on the d-regular tree, Edwards-Sokal coupled Swendsen-Wang sampling on
(random regular) graphs with a ghost-vertex external field, exact
small-graph references, and the small-subgraph-conditioning asymptotics
that tune free/wired coexistence ratios.
"""
from .params import ModelParams
from .errors import (PottsError, UnsupportedSpinSpace, ConvergenceFailure,
                     DomainError, OutsideCriticalWindow, OutsideCriticalLine,
                     SolverFailure, BudgetExceeded, InvalidArity, InvalidState,
                     NotConnected, PlacementFailure, ConfigError,
                     DivergentRegime, NumericalFailure, PlanFailure,
                     ConditionUnsatisfied)
from .bp import (ColorLaw, bp_step, bp_fixed_points, bethe_functional,
                 root_marginal, edge_overlap)
from .critical import (Regime, PhasePoint, critical_line, b_plus,
                       classify_regime, is_critical)
from .rcm import RcmBp, rcm_bp_fixed_points, bphat
from .ising import IsingReduction, ising_reduction, ising_magnetization
from .graphs import (MultiGraph, CycleStats, from_edges, sample_pairing_model,
                     sample_with_girth, cycle_counts, augment, modify_graph,
                     second_eigenvalue, to_edge_list, from_edge_list,
                     save_edge_list, load_edge_list)
from .asymptotics import (SscData, CavityPlan, QMatrixData, GammaPrefactor,
                          q_matrix_eigs, ssc_products, gamma_prefactor,
                          upsilon1, upsilon2, cavity_delta, b6_chain,
                          predicted_ratio, tune_mixture, x_roots,
                          second_moment_identity)

__version__ = "0.1.0"

__all__ = [
    "ModelParams", "ColorLaw", "Regime", "PhasePoint", "RcmBp",
    "IsingReduction", "MultiGraph", "CycleStats", "SscData", "CavityPlan",
    "QMatrixData", "GammaPrefactor", "q_matrix_eigs", "ssc_products",
    "gamma_prefactor", "upsilon1", "upsilon2", "cavity_delta", "b6_chain",
    "predicted_ratio", "tune_mixture", "x_roots", "second_moment_identity",
    "bp_step", "bp_fixed_points", "bethe_functional", "root_marginal",
    "edge_overlap", "critical_line", "b_plus", "classify_regime",
    "is_critical", "rcm_bp_fixed_points", "bphat", "ising_reduction",
    "ising_magnetization", "from_edges", "sample_pairing_model",
    "sample_with_girth", "cycle_counts", "augment", "modify_graph",
    "second_eigenvalue", "to_edge_list", "from_edge_list", "save_edge_list",
    "load_edge_list",
    "PottsError", "UnsupportedSpinSpace", "ConvergenceFailure", "DomainError",
    "OutsideCriticalWindow", "OutsideCriticalLine", "SolverFailure",
    "BudgetExceeded", "InvalidArity", "InvalidState", "NotConnected",
    "PlacementFailure", "ConfigError", "DivergentRegime", "NumericalFailure",
    "PlanFailure", "ConditionUnsatisfied",
]
