"""Gradient-boosted regression trees with collective inference on partially labeled graphs."""

from .boosting import BoostedModel, fit_gb, fit_rgb, load_model, predict_boosted, residuals, save_model
from .collective import InferenceResult, ica, ica2, sweep_delta
from .graph_store import (AttributedGraph, FoldAssignment, GraphLoadError, induced_subgraph,
                          load_graph, random_known_unknown_split, split_folds, write_graph)
from .harness import EvalReport, Params, rmse, run_ablation, run_experiment
from .mgb import ci_label_estimates, fit_mgb, predict_mgb
from .regtree import RegressionTree, fit_tree, predict_tree
from .relfeat import RELATIONAL, assemble_features, parse_mask, rf_median_over_neighbors
from .synthgen import SynthConfig, generate, measure_edge_correlation

__version__ = "0.1.0"

__all__ = [
    "AttributedGraph", "BoostedModel", "EvalReport", "FoldAssignment", "GraphLoadError",
    "InferenceResult", "Params", "RELATIONAL", "RegressionTree", "SynthConfig",
    "assemble_features", "ci_label_estimates", "fit_gb", "fit_mgb", "fit_rgb", "fit_tree",
    "generate", "ica", "ica2", "induced_subgraph", "load_graph", "load_model",
    "measure_edge_correlation", "parse_mask", "predict_boosted", "predict_mgb", "predict_tree",
    "random_known_unknown_split", "residuals", "rf_median_over_neighbors", "rmse",
    "run_ablation", "run_experiment", "save_model", "split_folds", "sweep_delta", "write_graph",
]
