"""Squared-loss gradient boosting of median-leaf regression trees.

The model is ``F_M(x) = h_0(x) + h_1(x) + ... + h_M(x)``. With the loss
``L(y, F) = (y - F)**2 / 2`` the negative gradient is exactly the residual
``y - F``, and every residual tree's leaf medians play the role of the
per-region step length, so no separate line search or shrinkage is used.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .graph_store import AttributedGraph
from .regtree import RegressionTree, constant_tree, fit_tree
from .relfeat import RELATIONAL, training_features

MODEL_KINDS = ("GB", "RGB", "MGB")
FORMAT_VERSION = 1


@dataclass(frozen=True, eq=False)
class BoostedModel:
    """Initial tree plus M residual trees sharing one column layout.

    Every stage sees ``n_attributes`` attribute columns followed by the
    ``relational`` columns; for MGB the relational values are recomputed
    per stage from that stage's residual channel.
    """

    stages: tuple[RegressionTree, ...]
    model_kind: str
    max_leaves: int
    n_attributes: int
    relational: tuple[str, ...] = ()
    history: tuple = field(default=(), compare=False)

    def __post_init__(self):
        if self.model_kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {self.model_kind!r}")
        width = self.n_attributes + len(self.relational)
        for m, tree in enumerate(self.stages):
            if tree.n_features != width:
                raise ValueError(
                    f"stage {m} tree expects {tree.n_features} inputs, schema has {width}"
                )

    @property
    def M(self) -> int:
        return len(self.stages) - 1

    @property
    def n_features(self) -> int:
        return self.n_attributes + len(self.relational)

    @property
    def feature_schema(self) -> list[list[str]]:
        cols = [f"x_{k}" for k in range(self.n_attributes)] + list(self.relational)
        return [list(cols) for _ in self.stages]

    def truncated(self, n_stages: int) -> "BoostedModel":
        return BoostedModel(self.stages[:n_stages], self.model_kind, self.max_leaves,
                            self.n_attributes, self.relational)

    def staged_predict(self, X) -> np.ndarray:
        """Cumulative predictions after each stage, shape (M+1, n), for a shared feature matrix."""
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X.reshape(1, -1)
        out = np.empty((len(self.stages), X.shape[0]))
        cum = np.zeros(X.shape[0])
        for m, tree in enumerate(self.stages):
            cum = cum + tree.predict(X)
            out[m] = cum
        return out

    def predict(self, X) -> np.ndarray:
        return self.staged_predict(X)[-1]

    def to_dict(self) -> dict:
        return {
            "format": "relboost-model",
            "version": FORMAT_VERSION,
            "model_kind": self.model_kind,
            "M": self.M,
            "max_leaves": self.max_leaves,
            "n_attributes": self.n_attributes,
            "relational": list(self.relational),
            "feature_schema": self.feature_schema,
            "stages": [t.to_dict() for t in self.stages],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "BoostedModel":
        if doc.get("format") != "relboost-model":
            raise ValueError("not a relboost model document")
        if doc.get("version") != FORMAT_VERSION:
            raise ValueError(f"unsupported model version {doc.get('version')}")
        width = doc["n_attributes"] + len(doc["relational"])
        stages = tuple(RegressionTree.from_dict(s, width, doc["max_leaves"])
                       for s in doc["stages"])
        if len(stages) != doc["M"] + 1:
            raise ValueError("stage count does not match M")
        return cls(stages, doc["model_kind"], doc["max_leaves"], doc["n_attributes"],
                   tuple(doc["relational"]))


def save_model(model: BoostedModel, path) -> None:
    with open(path, "w") as fh:
        json.dump(model.to_dict(), fh, indent=1)
        fh.write("\n")


def load_model(path) -> BoostedModel:
    with open(path) as fh:
        return BoostedModel.from_dict(json.load(fh))


def residuals(y, preds) -> np.ndarray:
    """Negative gradient of ``(y - F)**2 / 2`` at ``F = preds``."""
    y = np.asarray(y, dtype=np.float64)
    preds = np.asarray(preds, dtype=np.float64)
    if y.shape != preds.shape:
        raise ValueError(f"length mismatch: {y.shape} vs {preds.shape}")
    return y - preds


def squared_loss(y, preds) -> float:
    r = residuals(y, preds)
    return 0.5 * float(r @ r)


def fit_gb(X, y, M: int, max_leaves: int, init: str = "tree",
           model_kind: str = "GB", n_attributes: int | None = None,
           relational=()) -> BoostedModel:
    """Classic gradient boosting on a fixed feature matrix.

    ``init="tree"`` fits the initial stage as a regression tree on ``y``;
    ``init="mean"`` uses the constant mean instead.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    y = np.asarray(y, dtype=np.float64).ravel()
    if X.shape[0] < 1 or X.shape[0] != y.size:
        raise ValueError("X and y must have the same, nonzero number of rows")
    if not np.all(np.isfinite(y)):
        raise ValueError("targets must be finite")
    if M < 0:
        raise ValueError("M must be non-negative")
    if init == "tree":
        h0 = fit_tree(X, y, max_leaves)
    elif init == "mean":
        h0 = constant_tree(float(np.mean(y)), X.shape[1])
    else:
        raise ValueError(f"unknown init {init!r}")

    stages = [h0]
    F = np.zeros(y.size) + h0.predict(X)
    for _ in range(M):
        h = fit_tree(X, residuals(y, F), max_leaves)
        stages.append(h)
        F = F + h.predict(X)
    n_attr = X.shape[1] if n_attributes is None else n_attributes
    return BoostedModel(tuple(stages), model_kind, max_leaves, n_attr, tuple(relational))


def predict_boosted(model: BoostedModel, x) -> float:
    """Sum of stage outputs for one feature vector shared by all stages."""
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.size != model.n_features:
        raise ValueError(f"model expects {model.n_features} features, got {x.size}")
    return float(model.predict(x.reshape(1, -1))[0])


def rgb_features(g: AttributedGraph) -> np.ndarray:
    """Attributes plus the static neighbor-label median column used by RGB."""
    return training_features(g, 0, g.y, relational=("rf1",))


def fit_rgb(g: AttributedGraph, M: int, max_leaves: int) -> BoostedModel:
    """Gradient boosting on ``[x, rf1]`` with ``rf1`` computed once from the known labels."""
    if np.isnan(g.y).any():
        raise ValueError("RGB training needs every node labeled")
    return fit_gb(rgb_features(g), g.y, M, max_leaves, model_kind="RGB",
                  n_attributes=g.p, relational=("rf1",))


__all__ = [
    "BoostedModel", "MODEL_KINDS", "RELATIONAL", "fit_gb", "fit_rgb", "load_model",
    "predict_boosted", "residuals", "rgb_features", "save_model", "squared_loss",
]
