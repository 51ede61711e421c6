"""Binary classifiers from On/Off (class-conditionally noisy) labels.

Models are trained and thresholded by maximizing the Li & Ma significance
of detection. See the README for the CLI and the protocols.
"""

from ._backend import available_backends, backend_name, set_backend, use_backend
from .cluster import (ClusterDetector, cluster_counts, exhaustive_assignment,
                      fit_cluster_detector, fit_kmeans, optimize_assignment)
from .ensemble import EnsembleModel, ModelSpec, fit_ensemble, oob_scores, tune_ensemble
from .evaluation import (EvalReport, NoiseSpec, evaluate_grouped, fake_on_transform,
                         grouped_cv_predict, inject_ccn_noise, stratified_cv_f1)
from .metrics import auc, f1, mean_ranks, pearson, roc_points, spearman
from .persistence import load_model, save_model
from .significance import (CountPair, ScoredPredictions, ThresholdResult, alpha_from_p_minus,
                           li_ma_significance, significance_at_threshold,
                           significance_gradient, tune_threshold)
from .table import CsvSchema, DataError, EventTable, read_event_csv, write_event_csv
from .tree import SigTree, SplitCandidate, best_split, grow_tree

__version__ = "0.1.0"

__all__ = [
    "ClusterDetector", "CountPair", "CsvSchema", "DataError", "EnsembleModel", "EvalReport",
    "EventTable", "ModelSpec", "NoiseSpec", "ScoredPredictions", "SigTree", "SplitCandidate",
    "ThresholdResult", "alpha_from_p_minus", "auc", "available_backends", "backend_name",
    "best_split", "cluster_counts", "evaluate_grouped", "exhaustive_assignment", "f1",
    "fake_on_transform", "fit_cluster_detector", "fit_ensemble", "fit_kmeans", "grow_tree",
    "grouped_cv_predict", "inject_ccn_noise", "li_ma_significance", "load_model",
    "mean_ranks", "oob_scores", "optimize_assignment", "pearson", "read_event_csv",
    "roc_points", "save_model", "set_backend", "significance_at_threshold",
    "significance_gradient", "spearman", "stratified_cv_f1", "tune_ensemble",
    "tune_threshold", "use_backend", "write_event_csv",
]
