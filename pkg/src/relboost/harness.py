"""Cross-validated comparison of GB, RGB and MGB on one labeled graph.

Nodes are split into ``k`` folds once per seed. A training fraction ``f``
marks ``ceil(f * k)`` consecutive folds (rotating the starting fold) as
known; the rest are the test nodes. Each model is trained on the subgraph
induced by the known nodes and predicts the test nodes of the full graph
through its own inference path: GB directly from attributes, RGB with ICA,
MGB with the staged ICA2.
"""

from __future__ import annotations

import csv
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._util import derive_seed
from .boosting import BoostedModel, fit_gb, fit_rgb
from .collective import InferenceResult, ica
from .graph_store import AttributedGraph, induced_subgraph, split_folds
from .mgb import fit_mgb, predict_mgb
from .relfeat import RELATIONAL, mask_name, parse_mask

MODELS = ("GB", "RGB", "MGB")
DEFAULT_FRACTIONS = (0.2, 0.4, 0.6, 0.8)
POISON = 1e300
REPORT_HEADER = ["model", "mask", "fraction", "fold", "seed", "rmse", "seconds"]
PLOT_HEADER = ["fraction", "model", "mean_rmse", "std_rmse"]


class LeakageError(AssertionError):
    """Held-out labels influenced a prediction."""


@dataclass(frozen=True)
class Params:
    M: int = 10
    max_leaves: int = 5
    itr: int = 50
    t: int = 3
    frac_known: float = 0.8


@dataclass
class ReportRow:
    model: str
    mask: str
    fraction: float
    fold: int
    seed: int
    rmse: float
    seconds: float

    @property
    def key(self):
        return (self.fraction, self.fold, MODELS.index(self.model), self.mask, self.seed)


@dataclass
class EvalReport:
    """RMSE per (model, mask, fraction, fold, seed) plus convergence diagnostics."""

    rows: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    def sort(self) -> None:
        self.rows.sort(key=lambda r: r.key)

    def label(self, row: ReportRow) -> str:
        default = {"GB": "none", "RGB": "rf1", "MGB": "all"}[row.model]
        return row.model if row.mask == default else f"{row.model}[{row.mask}]"

    def write_csv(self, path, timing: bool = True) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv(timing))

    def to_csv(self, timing: bool = True) -> str:
        lines = [",".join(REPORT_HEADER)]
        for r in self.rows:
            secs = repr(r.seconds) if timing else ""
            lines.append(f"{r.model},{r.mask},{r.fraction!r},{r.fold},{r.seed},{r.rmse!r},{secs}")
        return "\n".join(lines) + "\n"

    def aggregate(self) -> list[tuple]:
        """(fraction, model label, mean rmse, sample std) per configuration."""
        groups: dict = {}
        for r in self.rows:
            groups.setdefault((r.fraction, self.label(r)), []).append(r.rmse)
        out = []
        for (frac, lab), vals in sorted(groups.items()):
            v = np.asarray(vals)
            sd = float(v.std(ddof=1)) if v.size > 1 else 0.0
            out.append((frac, lab, float(v.mean()), sd))
        return out

    def write_plot_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(PLOT_HEADER)
            for frac, lab, mean, sd in self.aggregate():
                w.writerow([repr(frac), lab, repr(mean), repr(sd)])

    def mean_rmse(self, model: str, fraction: float, mask: str | None = None) -> float:
        vals = [r.rmse for r in self.rows if r.model == model and r.fraction == fraction
                and (mask is None or r.mask == mask)]
        if not vals:
            raise KeyError((model, fraction, mask))
        return float(np.mean(vals))


def rmse(preds, truth) -> float:
    """Root mean squared error."""
    preds = np.asarray(preds, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if preds.shape != truth.shape:
        raise ValueError(f"length mismatch: {preds.shape} vs {truth.shape}")
    if preds.size == 0:
        raise ValueError("rmse of an empty set is undefined")
    d = preds - truth
    return float(np.sqrt(np.mean(d * d)))


def known_folds(fraction: float, k: int, fold: int) -> list[int]:
    """Folds used for training when the rotation starts at ``fold``."""
    if not 0.0 < fraction < 1.0:
        raise ValueError("training fraction must lie strictly between 0 and 1")
    j = math.ceil(fraction * k - 1e-9)
    if not 1 <= j < k:
        raise ValueError(f"fraction {fraction} with {k} folds leaves no test fold")
    return [(fold + s) % k for s in range(j)]


def cell_seed(seed: int, fraction: float, fold: int) -> int:
    return derive_seed(seed, int(round(fraction * 1_000_000)), fold)


def cell_known_mask(g: AttributedGraph, k: int, seed: int, fraction: float, fold: int) -> np.ndarray:
    folds = split_folds(g, k, seed)
    return np.isin(folds.fold_of, known_folds(fraction, k, fold))


def train_model(g_obs: AttributedGraph, model: str, params: Params, seed: int,
                relational=RELATIONAL) -> BoostedModel:
    """Train ``model`` on the subgraph induced by the labeled nodes of ``g_obs``."""
    g_tr = induced_subgraph(g_obs, g_obs.known_mask)
    if model == "GB":
        return fit_gb(g_tr.X, g_tr.y, params.M, params.max_leaves)
    if model == "RGB":
        return fit_rgb(g_tr, params.M, params.max_leaves)
    if model == "MGB":
        return fit_mgb(g_tr, params.M, params.max_leaves, params.t, params.frac_known,
                       params.itr, derive_seed(seed, 0), relational)
    raise ValueError(f"unknown model kind {model!r}")


def predict_model(g_obs: AttributedGraph, model: BoostedModel, params: Params,
                  seed: int) -> InferenceResult:
    """Predict the unlabeled nodes of ``g_obs`` with the model's inference path."""
    unknown = g_obs.unknown_nodes
    if model.model_kind == "GB":
        return InferenceResult(unknown, model.predict(g_obs.X[unknown]), [], True)
    if model.model_kind == "RGB":
        return ica(g_obs, model, params.itr, derive_seed(seed, 1))
    return predict_mgb(g_obs, model, params.itr, derive_seed(seed, 1))


def run_cell(g: AttributedGraph, known: np.ndarray, model: str, params: Params,
             seed: int, relational=RELATIONAL) -> InferenceResult:
    """Hide every label outside ``known``, train, and predict the hidden nodes."""
    g_obs = g.hide_labels(~known)
    fitted = train_model(g_obs, model, params, seed, relational)
    return predict_model(g_obs, fitted, params, seed)


def _job(args):
    g, known, model, mask, params, seed, c_seed, fraction, fold, audit = args
    relational = parse_mask(mask)
    start = time.perf_counter()
    res = run_cell(g, known, model, params, c_seed, relational)
    seconds = time.perf_counter() - start
    truth = g.y[res.nodes]
    if audit:
        y_poison = g.y.copy()
        y_poison[~known] = POISON
        again = run_cell(g.with_labels(y_poison), known, model, params, c_seed, relational)
        if not (np.array_equal(again.nodes, res.nodes)
                and np.array_equal(again.predictions, res.predictions)):
            raise LeakageError(f"held-out labels leaked into {model}[{mask}] "
                               f"fraction={fraction} fold={fold}")
    row = ReportRow(model, mask, fraction, fold, seed, rmse(res.predictions, truth), seconds)
    diag = {"converged": res.converged, "sweeps": res.sweeps, "deltas": list(res.deltas),
            "tolerance": res.tolerance, "audited": audit}
    return row, diag


def run_experiment(g: AttributedGraph, models=MODELS, fractions=DEFAULT_FRACTIONS,
                   k: int = 5, params: Params = Params(), seed: int = 0, masks=None,
                   audit: bool = False, workers: int = 1) -> EvalReport:
    """Evaluate every (fraction, fold, model[, mask]) cell.

    ``masks`` optionally maps a model kind to a list of relational masks
    (strings understood by :func:`relboost.relfeat.parse_mask`); by default
    GB uses none, RGB ``rf1`` and MGB all four. With ``audit`` every cell is
    re-run with the held-out labels replaced by a sentinel and must return
    bit-identical predictions.
    """
    if np.isnan(g.y).any():
        raise ValueError("evaluation needs ground truth for every node")
    for m in models:
        if m not in MODELS:
            raise ValueError(f"unknown model kind {m!r}")
    defaults = {"GB": ["none"], "RGB": ["rf1"], "MGB": ["all"]}
    masks = {**defaults, **(masks or {})}
    folds = split_folds(g, k, seed)
    jobs = []
    for fraction in fractions:
        for fold in range(k):
            known = np.isin(folds.fold_of, known_folds(fraction, k, fold))
            c_seed = cell_seed(seed, fraction, fold)
            for model in models:
                for mask in masks[model]:
                    mask = mask_name(parse_mask(mask))
                    if model == "MGB" and g.p == 0 and mask == "none":
                        raise ValueError("empty feature mask with zero attributes")
                    jobs.append((g, known, model, mask, params, seed, c_seed,
                                 fraction, fold, audit))

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_job, jobs))
    else:
        results = [_job(j) for j in jobs]

    report = EvalReport()
    for row, diag in results:
        report.rows.append(row)
        report.diagnostics[(row.model, row.mask, row.fraction, row.fold, row.seed)] = diag
    report.sort()
    return report


ABLATION_MASKS = ("rf1", "all", "all-rf4", "rf4", "rf2+rf3")


def run_ablation(g: AttributedGraph, masks=ABLATION_MASKS, params: Params = Params(),
                 seed: int = 0, fractions=DEFAULT_FRACTIONS, k: int = 5,
                 audit: bool = False, workers: int = 1) -> EvalReport:
    """MGB with restricted relational feature sets."""
    masks = [mask_name(parse_mask(m)) for m in masks]
    if g.p == 0 and "none" in masks:
        raise ValueError("empty feature mask with zero attributes")
    return run_experiment(g, ("MGB",), fractions, k, params, seed, {"MGB": masks},
                          audit, workers)
