"""Organizational tree reconstruction and its evaluation."""

from .evaluate import (LEVEL_HEADER, METHODS, RECORD_HEADER, EvaluationRecord, evaluate_all,
                       evaluate_team, level_rows, record_rows, run_method, summarize)
from .methods import (VIRTUAL_ROOT, HierarchyEstimate, agony_objective, agony_ranking,
                      distance_hierarchy, orient_from_root, ranking_to_edges, spanning_tree,
                      symmetric_edges)
from .metrics import (directed_edges, level_mse, manager_classification, managers,
                      tree_centrality_distance, tree_frobenius)
