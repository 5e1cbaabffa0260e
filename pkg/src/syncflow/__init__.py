"""Synchronized states of lossless power grids and oscillator networks.

Computes fixed points of coupled phase-oscillator / lossless power-flow
networks via a convex program over line flows, enumerates all normal
synchronized states by winding numbers, evaluates the linear (DC)
approximation with rigorous error bounds, and certifies feasibility by
maximum-flow arguments.
"""

from .network import Network, NetworkError, adjacency_lists
from .graphcore import (
    CycleBasis,
    GroundedFactor,
    build_incidence,
    build_laplacian,
    cycle_basis,
    cycle_norm_bound_check,
    grounded_factor,
    helmholtz_decompose,
    k_inner,
    k_norm,
    laplacian_pinv_apply,
    projectors,
    resistance_distance,
)
from .linflow import LinearSolution, linear_objective, solve_linear
from .solver import (
    Classification,
    EnumerationCapError,
    NormalStates,
    SolveOutcome,
    enumerate_windings,
    find_all_normal_states,
    realpower_objective,
    recover_phases,
    solve_base,
    solve_winding,
    stability_check,
    winding_bounds,
    winding_vector,
)
from .approx import (
    ApproxReport,
    CycleHomogeneity,
    approx_report,
    cycle_homogeneity_check,
    descent_direction_heuristic,
    error_bounds,
    g_function,
    gradient_step,
    heavy_load_sums,
    improved_approximation,
    loading_indicator,
    max_loading_comparison,
    optimal_step_size,
    per_line_bound,
    projected_descent_direction,
)
from .feasibility import (
    FeasibilityCertificate,
    extended_graph,
    max_flow_feasible,
    partition_check,
)
from .caseio import (
    CaseFormatError,
    MatpowerCase,
    network_from_json,
    network_to_json,
    parse_matpower,
    to_network,
    write_results_csv,
)

__version__ = "0.1.0"

__all__ = [
    "ApproxReport",
    "CaseFormatError",
    "Classification",
    "CycleBasis",
    "CycleHomogeneity",
    "EnumerationCapError",
    "FeasibilityCertificate",
    "GroundedFactor",
    "LinearSolution",
    "MatpowerCase",
    "Network",
    "NetworkError",
    "NormalStates",
    "SolveOutcome",
    "adjacency_lists",
    "approx_report",
    "build_incidence",
    "build_laplacian",
    "cycle_basis",
    "cycle_homogeneity_check",
    "cycle_norm_bound_check",
    "descent_direction_heuristic",
    "enumerate_windings",
    "error_bounds",
    "extended_graph",
    "find_all_normal_states",
    "g_function",
    "gradient_step",
    "grounded_factor",
    "heavy_load_sums",
    "helmholtz_decompose",
    "improved_approximation",
    "k_inner",
    "k_norm",
    "laplacian_pinv_apply",
    "linear_objective",
    "loading_indicator",
    "max_flow_feasible",
    "max_loading_comparison",
    "network_from_json",
    "network_to_json",
    "optimal_step_size",
    "parse_matpower",
    "partition_check",
    "per_line_bound",
    "projectors",
    "projected_descent_direction",
    "realpower_objective",
    "recover_phases",
    "resistance_distance",
    "solve_base",
    "solve_linear",
    "solve_winding",
    "stability_check",
    "to_network",
    "winding_bounds",
    "winding_vector",
    "write_results_csv",
]
