"""Relational features built from neighbor medians.

Four relational columns follow the node attributes in every stage's
feature vector, in this order (any subset may be switched off):

* ``rf1``: median of neighbors' labels (true label if known, else the
  current cumulative estimate).
* ``rf2``: median of neighbors' stage-m residuals. At stage 0 the residual
  channel is the label itself.
* ``rf3``: median of neighbors' stage-(m-1) residuals; 0 at stage 0.
* ``rf4``: the node's own estimate from the stages before m. Before any
  estimate exists (stage 0) it is the median of known neighbors' labels.

Nodes with no available neighbors get 0 for the median features, and
isolated nodes get 0 for ``rf4`` at every stage.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from ._util import lower_median
from .graph_store import AttributedGraph

RELATIONAL = ("rf1", "rf2", "rf3", "rf4")
REL_CODE = {name: k + 1 for k, name in enumerate(RELATIONAL)}


def parse_mask(text) -> tuple[str, ...]:
    """Turn ``"all"``, ``"none"``, ``"rf1+rf4"`` or an iterable of names into a canonical tuple."""
    if isinstance(text, str):
        text = text.strip().lower()
        if text == "all":
            return RELATIONAL
        if text in ("", "none"):
            return ()
        if text.startswith("all-"):
            drop = set(parse_mask(text[4:]))
            return tuple(r for r in RELATIONAL if r not in drop)
        parts = [s.strip() for s in text.replace(",", "+").split("+") if s.strip()]
    else:
        parts = list(text)
    bad = [s for s in parts if s not in REL_CODE]
    if bad:
        raise ValueError(f"unknown relational feature(s): {bad}")
    return tuple(r for r in RELATIONAL if r in parts)


def mask_name(relational) -> str:
    rel = tuple(relational)
    if rel == RELATIONAL:
        return "all"
    if not rel:
        return "none"
    missing = [r for r in RELATIONAL if r not in rel]
    if len(missing) == 1:
        return f"all-{missing[0]}"
    return "+".join(rel)


def rf_median_over_neighbors(g: AttributedGraph, node: int, channel, availability) -> float:
    """Median of ``channel`` over the available neighbors of ``node``; 0 if there are none.

    ``channel`` and ``availability`` are per-node arrays or callables of a
    node index.
    """
    if not 0 <= node < g.n:
        raise IndexError(f"node {node} not in graph")
    get = channel if callable(channel) else channel.__getitem__
    ok = availability if callable(availability) else availability.__getitem__
    vals = [get(int(j)) for j in g.neighbors(node) if ok(int(j))]
    return lower_median(vals) if vals else 0.0


class StageState:
    """Per-node stage slots for one collective inference run.

    ``slots[i, m]`` holds, for an unknown node, the stage-m output of the
    model (class estimate at m = 0, residual estimate afterwards); for a
    known node it holds the true residual at stage m, with slot 0 equal to
    the label. ``known_estimate[i, m]`` is the estimate a known node carried
    into stage m.
    """

    def __init__(self, g: AttributedGraph, n_stages: int):
        self.g = g
        self.n_stages = n_stages
        self.known = g.known_mask.copy()
        self.slots = np.zeros((g.n, n_stages))
        self.written = np.zeros((g.n, n_stages), dtype=bool)
        self.known_estimate = np.zeros((g.n, n_stages))
        self.slots[self.known, 0] = g.y[self.known]
        self.written[self.known, :] = True

    def cumulative(self, i: int) -> float:
        total = 0.0
        for v in self.slots[i]:
            total += v
        return total

    def label_value(self, j: int) -> float:
        return float(self.g.y[j]) if self.known[j] else self.cumulative(j)

    def label_available(self, j: int, observed_only: bool = False) -> bool:
        if self.known[j]:
            return True
        return not observed_only and bool(self.written[j].all())

    def slot_available(self, j: int, m: int, observed_only: bool = False) -> bool:
        if self.known[j]:
            return True
        return not observed_only and bool(self.written[j, m])


def known_neighbor_median(g: AttributedGraph, node: int) -> float:
    known = g.known_mask
    return rf_median_over_neighbors(g, node, g.y, known)


def rf4_current_prediction(state: StageState, node: int, upto_stage: int) -> float:
    """The node's own estimate from stages ``< upto_stage``."""
    if not 0 <= upto_stage < state.n_stages:
        raise IndexError(f"stage {upto_stage} out of range [0, {state.n_stages})")
    g = state.g
    if g.indptr[node + 1] == g.indptr[node]:
        return 0.0
    if upto_stage == 0:
        return known_neighbor_median(g, node)
    if state.known[node]:
        return float(state.known_estimate[node, upto_stage])
    total = 0.0
    for m in range(upto_stage):
        total += state.slots[node, m]
    return total


def assemble_features(g: AttributedGraph, node: int, stage: int, state: StageState,
                      relational=RELATIONAL, observed_only: bool = False) -> np.ndarray:
    """Feature vector ``[x_node, rf...]`` of ``node`` at ``stage``.

    With ``observed_only`` the median features only look at neighbors with
    known labels, as in the bootstrap pass of collective inference.
    """
    out = list(g.X[node])
    for name in relational:
        if name == "rf1":
            val = rf_median_over_neighbors(
                g, node, state.label_value,
                lambda j: state.label_available(j, observed_only))
        elif name == "rf2":
            val = rf_median_over_neighbors(
                g, node, lambda j: state.slots[j, stage],
                lambda j: state.slot_available(j, stage, observed_only))
        elif name == "rf3":
            if stage == 0:
                val = 0.0
            else:
                val = rf_median_over_neighbors(
                    g, node, lambda j: state.slots[j, stage - 1],
                    lambda j: state.slot_available(j, stage - 1, observed_only))
        elif name == "rf4":
            val = rf4_current_prediction(state, node, stage)
        else:
            raise ValueError(f"unknown relational feature {name!r}")
        out.append(val)
    return np.array(out, dtype=np.float64)


@njit(cache=True)
def _csr_median(indptr, indices, values, available, buf):
    n = indptr.shape[0] - 1
    out = np.zeros(n)
    for i in range(n):
        cnt = 0
        for e in range(indptr[i], indptr[i + 1]):
            j = indices[e]
            if available[j]:
                buf[cnt] = values[j]
                cnt += 1
        if cnt > 0:
            s = np.sort(buf[:cnt])
            out[i] = s[(cnt - 1) // 2]
    return out


def neighbor_medians(g: AttributedGraph, values, available=None) -> np.ndarray:
    """Vector of neighbor medians for every node (0 where no neighbor is available)."""
    values = np.ascontiguousarray(values, dtype=np.float64)
    if available is None:
        available = np.ones(g.n, dtype=np.bool_)
    available = np.ascontiguousarray(available, dtype=np.bool_)
    values = np.where(available, values, 0.0)
    buf = np.empty(max(1, int(g.degree.max())))
    return _csr_median(g.indptr, g.indices, values, available, buf)


def training_features(g: AttributedGraph, stage: int, residual, prev_residual=None,
                      estimate=None, relational=RELATIONAL) -> np.ndarray:
    """Stage-``stage`` feature matrix for a fully labeled training graph.

    Args:
        g: graph whose nodes all carry labels.
        stage: boosting stage m.
        residual: stage-m targets of every node (the labels at stage 0).
        prev_residual: stage-(m-1) targets; ignored at stage 0.
        estimate: each node's current estimate of its own label, used for
            ``rf4`` when ``stage > 0``.
        relational: relational columns to append.
    """
    y = g.y
    if np.isnan(y).any():
        raise ValueError("training features need a fully labeled graph")
    isolated = g.degree == 0
    cols = [g.X]
    for name in relational:
        if name == "rf1":
            col = neighbor_medians(g, y)
        elif name == "rf2":
            col = neighbor_medians(g, residual)
        elif name == "rf3":
            col = np.zeros(g.n) if stage == 0 else neighbor_medians(g, prev_residual)
        elif name == "rf4":
            if stage == 0:
                col = neighbor_medians(g, y)
            else:
                col = np.where(isolated, 0.0, np.asarray(estimate, dtype=np.float64))
        else:
            raise ValueError(f"unknown relational feature {name!r}")
        cols.append(np.asarray(col, dtype=np.float64).reshape(-1, 1))
    return np.hstack(cols)
