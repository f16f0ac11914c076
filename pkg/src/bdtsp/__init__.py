"""Exact TSP for bounded-degree graphs via branch-and-reduce backtracking,
with independent oracles and a query-cost model for quantum backtracking."""

from .errors import (
    BdtspError,
    InfeasibleError,
    InputError,
    InternalError,
    ResourceLimitError,
    UnsupportedDegreeError,
)
from .graph_core import (
    DELETED,
    FORCE,
    FORCED,
    REMOVE,
    UNFORCED,
    Circuit,
    Edge,
    Instance,
    Tour,
    build_instance,
    circuits_of,
    cut_edges,
    two_edge_connected,
    u_components,
    verify_tour,
)
from .oracle import brute_force, held_karp, min_ham_path
from .quantum_cost import (
    QuantumCostReport,
    backtracking_calls,
    exponent_table,
    tsp_estimate,
)
from .reductions import (
    ReducedInstance,
    SplitChoice,
    circuit_procedure,
    eliminate_parallel_edges,
    enumerate_splits,
    four_cut_reducible,
    parity_condition,
    propagate_forcing,
    reduce,
    replay_trace,
    split_vertex,
    three_cut_reduce,
)
from .solver import (
    SearchStats,
    SolveReport,
    backtrack,
    binary_search_optimum,
    compute_upper_bound,
    heuristic,
    lemma1_finish,
    predicate,
    reconstruct_tour,
    solve,
)
