"""Budget-constrained Katz-centrality network formation.

A library and CLI for the game in which each agent allocates a bounded
resource budget over permitted outgoing edges to maximize its own Katz
centrality: exact best responses, sequential and modified best-response
dynamics, fixed-point computation of the unique equilibrium centralities,
Nash certification, and structural analysis of equilibrium networks.
"""

__version__ = "0.1.0"

from .analysis import (
    CheckResult,
    CondensationGraph,
    SccComponent,
    StructureReport,
    check_complete_topology,
    check_cycle_parity,
    check_hierarchy,
    check_scc_uniformity,
    export_condensation_dot,
    run_structure_checks,
    scc_condensation,
    tarjan_scc,
)
from .centrality import (
    WalkDecomposition,
    fractional_linear_centrality,
    katz_series,
    katz_solve,
    walk_decomposition,
)
from .dynamics import (
    BrdConfig,
    BrdStep,
    BrdTrace,
    Scheduler,
    run_brd,
    run_modified_brd,
    select_agents_with_improvement,
    write_trace_allocations_json,
    write_trace_csv,
)
from .game import (
    BestResponseResult,
    EquilibriumCertificate,
    NashVerdict,
    best_response,
    best_response_oracle,
    equilibrium_centralities,
    is_best_response,
    is_nash,
    strict_better_response_exists,
    unilateral_swap_check,
    v_map,
)
from .instance import (
    AllocationProfile,
    FeasibilityError,
    GameInstance,
    KatzforgeError,
    ParseError,
    RescaleParameters,
    UnderlyingTopology,
    ValidationReport,
    generate_random_instance,
    instance_digest,
    is_feasible,
    parse_allocation,
    parse_instance,
    random_profile,
    rescale,
    serialize_allocation,
    serialize_instance,
    topology_from_edges,
    validate_instance,
)

__all__ = [
    "__version__",
    # instance
    "UnderlyingTopology",
    "GameInstance",
    "AllocationProfile",
    "RescaleParameters",
    "ValidationReport",
    "KatzforgeError",
    "ParseError",
    "FeasibilityError",
    "validate_instance",
    "is_feasible",
    "rescale",
    "parse_instance",
    "serialize_instance",
    "parse_allocation",
    "serialize_allocation",
    "generate_random_instance",
    "random_profile",
    "instance_digest",
    "topology_from_edges",
    # centrality
    "katz_solve",
    "katz_series",
    "walk_decomposition",
    "fractional_linear_centrality",
    "WalkDecomposition",
    # game
    "v_map",
    "equilibrium_centralities",
    "EquilibriumCertificate",
    "best_response",
    "best_response_oracle",
    "BestResponseResult",
    "strict_better_response_exists",
    "is_best_response",
    "is_nash",
    "NashVerdict",
    "unilateral_swap_check",
    # dynamics
    "Scheduler",
    "BrdConfig",
    "BrdStep",
    "BrdTrace",
    "run_brd",
    "run_modified_brd",
    "select_agents_with_improvement",
    "write_trace_csv",
    "write_trace_allocations_json",
    # analysis
    "tarjan_scc",
    "scc_condensation",
    "SccComponent",
    "CondensationGraph",
    "CheckResult",
    "StructureReport",
    "check_complete_topology",
    "check_hierarchy",
    "check_scc_uniformity",
    "check_cycle_parity",
    "run_structure_checks",
    "export_condensation_dot",
]
