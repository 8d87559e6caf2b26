"""Gradient boosting with collective inference inside the training loop (MGB).

Training on a fully labeled graph alternates two steps. A tree is fit to
the current residuals using relational features of the neighbors' labels
and residuals; then the labels are re-estimated by collective inference
with the extended model, hiding a random share of the nodes in each of
``t`` trials. The averaged estimates define the next stage's residuals.
"""

from __future__ import annotations

import logging
import math
import time

import numpy as np

from ._util import derive_seed
from .boosting import BoostedModel
from .collective import InferenceResult, ica2
from .graph_store import AttributedGraph
from .regtree import fit_tree
from .relfeat import RELATIONAL, training_features

log = logging.getLogger(__name__)

DEFAULTS = {"M": 10, "max_leaves": 5, "t": 3, "frac_known": 0.8, "itr": 50}


def hidden_sets(n: int, t: int, frac_known: float, seed: int) -> list[np.ndarray]:
    """Hide-sets for ``t`` inference trials over ``n`` nodes.

    Each trial hides a random ``1 - frac_known`` share of the nodes; the last
    trial additionally hides every node no earlier draw reached, so the
    union of the hide-sets is always the full node set.
    """
    if t < 1:
        raise ValueError("t must be at least 1")
    if not 0.0 < frac_known < 1.0:
        raise ValueError("frac_known must lie strictly between 0 and 1")
    n_known = int(math.floor(frac_known * n + 0.5))
    n_hidden = n - n_known
    if n_hidden < 1 or n_known < 1:
        raise ValueError(f"frac_known={frac_known} leaves one side empty for n={n}")
    sets = []
    for trial in range(t):
        rng = np.random.default_rng(derive_seed(seed, trial, 0))
        sets.append(np.sort(rng.permutation(n)[:n_hidden]))
    covered = np.zeros(n, dtype=bool)
    for s in sets:
        covered[s] = True
    sets[-1] = np.union1d(sets[-1], np.flatnonzero(~covered))
    if sets[-1].size >= n:
        raise ValueError(
            f"t={t} trials cannot cover all {n} nodes at frac_known={frac_known} "
            "while leaving any node known"
        )
    return sets


def ci_label_estimates(g_tr: AttributedGraph, model: BoostedModel, t: int = 3,
                       frac_known: float = 0.8, itr: int = 50, seed: int = 0,
                       trace: list | None = None) -> np.ndarray:
    """Average collective-inference estimate of every node's label.

    In each trial the nodes of one hide-set lose their labels and ``ica2``
    estimates them from the rest; a node hidden in several trials gets the
    mean of its estimates. ``trace`` collects the per-trial results.
    """
    if np.isnan(g_tr.y).any():
        raise ValueError("training graph must be fully labeled")
    total = np.zeros(g_tr.n)
    count = np.zeros(g_tr.n, dtype=np.int64)
    for trial, hidden in enumerate(hidden_sets(g_tr.n, t, frac_known, seed)):
        res = ica2(g_tr.hide_labels(hidden), model, itr, derive_seed(seed, trial, 1))
        if trace is not None:
            trace.append(res)
        # Running mean: exact when every trial returns the same value.
        count[res.nodes] += 1
        total[res.nodes] += (res.predictions - total[res.nodes]) / count[res.nodes]
    return total


def fit_mgb(g_tr: AttributedGraph, M: int = 10, max_leaves: int = 5, t: int = 3,
            frac_known: float = 0.8, itr: int = 50, seed: int = 0,
            relational=RELATIONAL, trace: list | None = None) -> BoostedModel:
    """Fit an MGB model on a fully labeled graph.

    Args:
        g_tr: training graph (every node labeled).
        M: number of residual stages after the initial tree.
        max_leaves: leaf budget per tree.
        t: collective-inference trials per stage.
        frac_known: share of nodes left labeled in each trial.
        itr: maximum sweeps per inference run.
        seed: master seed; trial seeds derive from (seed, stage, trial).
        relational: relational columns to use (ablation mask).
        trace: optional list receiving every trial's :class:`InferenceResult`.

    The returned model's ``history`` holds one row per stage:
    ``(stage, train_rmse, mean_abs_residual, seconds)``.
    """
    if np.isnan(g_tr.y).any():
        raise ValueError("fit_mgb needs every training node labeled")
    if M < 0:
        raise ValueError("M must be non-negative")
    relational = tuple(relational)
    if g_tr.p == 0 and not relational:
        raise ValueError("no features: zero attributes and an empty relational mask")
    y = g_tr.y.copy()

    def wrap(stages, history=()):
        return BoostedModel(tuple(stages), "MGB", max_leaves, g_tr.p, relational, tuple(history))

    history = []
    start = time.perf_counter()
    A = training_features(g_tr, 0, y, relational=relational)
    stages = [fit_tree(A, y, max_leaves)]
    prev_target = y
    est = ci_label_estimates(g_tr, wrap(stages), t, frac_known, itr,
                             derive_seed(seed, 0), trace)
    history.append(_log_row(0, y, est, start))

    for m in range(1, M + 1):
        start = time.perf_counter()
        target = y - est
        A = training_features(g_tr, m, target, prev_target, est, relational)
        stages.append(fit_tree(A, target, max_leaves))
        prev_target = target
        est = ci_label_estimates(g_tr, wrap(stages), t, frac_known, itr,
                                 derive_seed(seed, m), trace)
        history.append(_log_row(m, y, est, start))
    return wrap(stages, history)


def _log_row(stage, y, est, start):
    r = y - est
    row = (stage, float(np.sqrt(np.mean(r * r))), float(np.mean(np.abs(r))),
           time.perf_counter() - start)
    log.debug("stage %d: rmse=%.6g mean|r|=%.6g (%.2fs)", *row)
    return row


def predict_mgb(g: AttributedGraph, model: BoostedModel, itr: int = 50,
                seed: int = 0) -> InferenceResult:
    """Collective prediction of the unknown nodes of ``g``."""
    if model.model_kind != "MGB":
        raise ValueError(f"expected an MGB model, got {model.model_kind}")
    return ica2(g, model, itr, seed)


def write_training_log(model: BoostedModel, path) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["stage", "train_rmse", "mean_abs_residual", "seconds"])
        for row in model.history:
            w.writerow(row)
