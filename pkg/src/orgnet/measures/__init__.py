"""Communication-structure measures."""

from .centrality import Centrality, centralities
from .degree import DegreeRecord, PowerLawFit, degree_arrays, degree_strength, fit_power_law
from .reciprocity import (
    PositionRecord,
    bootstrap_reciprocity,
    network_reciprocity,
    node_reciprocity,
    positions,
)
from .stats import OLSResult, binned_curve, ols, pearson, team_stat_correlation
from .structure import (
    GROUP_KINDS,
    EIRecord,
    MixingMatrix,
    ei_index,
    group_comm_rates,
    team_mixing_matrix,
    weighted_modularity,
)

__all__ = [
    "Centrality", "DegreeRecord", "EIRecord", "GROUP_KINDS", "MixingMatrix", "OLSResult",
    "PositionRecord", "PowerLawFit", "binned_curve", "bootstrap_reciprocity", "centralities",
    "degree_arrays", "degree_strength", "ei_index", "fit_power_law", "group_comm_rates",
    "network_reciprocity", "node_reciprocity", "ols", "pearson", "positions",
    "team_mixing_matrix", "team_stat_correlation", "weighted_modularity",
]
