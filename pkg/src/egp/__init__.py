"""Ego group partition experiments on social networks."""
from egp._accel import backend
from egp.clustering import Clustering, label_propagation
from egp.estimation import (
    Design,
    EstimateRecord,
    SimReport,
    analytic_bias_linear,
    approx_bias_convex,
    ego_diff_in_means,
    monte_carlo_bias,
)
from egp.graph import EgoSubgraph, Graph, GraphLoadError, load_graph, second_neighborhood_ego_graph
from egp.outcomes import OutcomeModel, generate_outcomes, true_gate
from egp.partition import (
    DeltaScores,
    DesignError,
    ExposureSummary,
    Partition,
    assign_alters_convex,
    assign_alters_linear,
    assign_alters_snc,
    build_partition,
    compute_delta,
    compute_delta_tilde,
    exposure_summary,
    oracle_max_R,
    randomize_egos,
    select_egos,
)

__version__ = "0.1.0"
