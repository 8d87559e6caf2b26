"""Iterative collective inference for boosted relational regressors.

``ica`` runs classic iterative classification with a single-stage feature
layout (the RGB model). ``ica2`` runs the staged variant used by MGB: it
first derives true residuals for known nodes, bootstraps every unknown
node's stage slots from observed neighbors, then sweeps the unknown nodes in
a fresh random order, recomputing each stage's relational features from
known labels/residuals and the current estimates of unknown neighbors.

Updates inside a sweep are in place, so a node sees estimates written
earlier in the same sweep. A run stops early once the largest change of any
unknown node's cumulative prediction is within ``1e-6`` times the range of
the known labels.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .boosting import BoostedModel
from .graph_store import AttributedGraph
from .relfeat import REL_CODE, neighbor_medians

TOL_SCALE = 1e-6


@dataclass
class InferenceResult:
    """Estimates for the unknown nodes of one inference run.

    ``slots`` has one row per node of the graph: for unknown nodes the
    per-stage outputs, for known nodes the true residuals (slot 0 = label).
    """

    nodes: np.ndarray
    predictions: np.ndarray
    deltas: list = field(default_factory=list)
    converged: bool = False
    tolerance: float = 0.0
    slots: np.ndarray | None = None

    @property
    def sweeps(self) -> int:
        return len(self.deltas)

    def as_full(self, n: int) -> np.ndarray:
        out = np.full(n, np.nan)
        out[self.nodes] = self.predictions
        return out


def sweep_delta(prev, cur) -> float:
    """Largest absolute elementwise change between two prediction vectors."""
    prev = np.asarray(prev, dtype=np.float64)
    cur = np.asarray(cur, dtype=np.float64)
    if prev.shape != cur.shape:
        raise ValueError(f"length mismatch: {prev.shape} vs {cur.shape}")
    if prev.size == 0:
        return 0.0
    return float(np.max(np.abs(cur - prev)))


def write_delta_trace(result: InferenceResult, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["sweep", "delta", "tolerance"])
        for k, d in enumerate(result.deltas, start=1):
            w.writerow([k, repr(d), repr(result.tolerance)])


def convergence_tolerance(g: AttributedGraph) -> float:
    known = g.y[g.known_mask]
    if known.size == 0:
        return 0.0
    return TOL_SCALE * float(known.max() - known.min())


# --------------------------------------------------------------------------
# numba kernels

@njit(cache=True)
def _median(buf, cnt):
    s = np.sort(buf[:cnt])
    return s[(cnt - 1) // 2]


@njit(cache=True)
def _tree_eval(feat, thr, left, right, value, root, a):
    k = root
    while feat[k] >= 0:
        if a[feat[k]] <= thr[k]:
            k = left[k]
        else:
            k = right[k]
    return value[k]


@njit(cache=True)
def _stage_features(i, m, a, X, indptr, indices, known, y, slots, label,
                    use_est, codes, rf4_init, own_est, buf):
    p = X.shape[1]
    for c in range(p):
        a[c] = X[i, c]
    lo = indptr[i]
    hi = indptr[i + 1]
    for r in range(codes.shape[0]):
        code = codes[r]
        v = 0.0
        if code == 4:
            if hi > lo:
                v = rf4_init[i] if m == 0 else own_est
        elif not (code == 3 and m == 0):
            col = m if code == 2 else m - 1
            cnt = 0
            for e in range(lo, hi):
                j = indices[e]
                if known[j]:
                    buf[cnt] = y[j] if code == 1 else slots[j, col]
                    cnt += 1
                elif use_est:
                    buf[cnt] = label[j] if code == 1 else slots[j, col]
                    cnt += 1
            if cnt > 0:
                v = _median(buf, cnt)
        a[p + r] = v


@njit(cache=True)
def _ica2_known_phase(known_nodes, X, indptr, indices, known, y, slots, label,
                      codes, rf4_init, feat, thr, left, right, value, roots, buf, a):
    n_stages = roots.shape[0]
    cum = np.zeros(known_nodes.shape[0])
    for m in range(n_stages):
        for q in range(known_nodes.shape[0]):
            i = known_nodes[q]
            _stage_features(i, m, a, X, indptr, indices, known, y, slots, label,
                            False, codes, rf4_init, cum[q], buf)
            cum[q] += _tree_eval(feat, thr, left, right, value, roots[m], a)
        if m + 1 < n_stages:
            for q in range(known_nodes.shape[0]):
                i = known_nodes[q]
                slots[i, m + 1] = y[i] - cum[q]
    return cum


@njit(cache=True)
def _ica2_update(i, use_est, X, indptr, indices, known, y, slots, label,
                 codes, rf4_init, feat, thr, left, right, value, roots, buf, a):
    est = 0.0
    for m in range(roots.shape[0]):
        _stage_features(i, m, a, X, indptr, indices, known, y, slots, label,
                        use_est, codes, rf4_init, est, buf)
        out = _tree_eval(feat, thr, left, right, value, roots[m], a)
        slots[i, m] = out
        est += out
    label[i] = est
    return est


@njit(cache=True)
def _ica2_bootstrap(unknown_nodes, X, indptr, indices, known, y, slots, label,
                    codes, rf4_init, feat, thr, left, right, value, roots, buf, a):
    for q in range(unknown_nodes.shape[0]):
        _ica2_update(unknown_nodes[q], False, X, indptr, indices, known, y, slots,
                     label, codes, rf4_init, feat, thr, left, right, value, roots, buf, a)


@njit(cache=True)
def _ica2_sweep(order, X, indptr, indices, known, y, slots, label,
                codes, rf4_init, feat, thr, left, right, value, roots, buf, a):
    delta = 0.0
    for q in range(order.shape[0]):
        i = order[q]
        old = label[i]
        new = _ica2_update(i, True, X, indptr, indices, known, y, slots, label,
                           codes, rf4_init, feat, thr, left, right, value, roots, buf, a)
        d = abs(new - old)
        if d > delta:
            delta = d
    return delta


@njit(cache=True)
def _ica_pass(nodes, sweep, X, indptr, indices, known, y, est,
              codes, rf4_init, feat, thr, left, right, value, roots, buf, a):
    """One pass of single-layout ICA; ``sweep=False`` is the bootstrap pass."""
    p = X.shape[1]
    delta = 0.0
    for q in range(nodes.shape[0]):
        i = nodes[q]
        for c in range(p):
            a[c] = X[i, c]
        lo = indptr[i]
        hi = indptr[i + 1]
        for r in range(codes.shape[0]):
            code = codes[r]
            v = 0.0
            if code == 4:
                if hi > lo:
                    v = rf4_init[i]
            elif code != 3:
                cnt = 0
                for e in range(lo, hi):
                    j = indices[e]
                    if known[j]:
                        buf[cnt] = y[j]
                        cnt += 1
                    elif sweep:
                        buf[cnt] = est[j]
                        cnt += 1
                if cnt > 0:
                    v = _median(buf, cnt)
            a[p + r] = v
        new = 0.0
        for m in range(roots.shape[0]):
            new += _tree_eval(feat, thr, left, right, value, roots[m], a)
        if sweep:
            d = abs(new - est[i])
            if d > delta:
                delta = d
        est[i] = new
    return delta


# --------------------------------------------------------------------------

def _flatten(stages):
    feat, thr, left, right, value, roots = [], [], [], [], [], []
    offset = 0
    for tree in stages:
        roots.append(offset)
        feat.append(tree.feature)
        thr.append(tree.threshold)
        left.append(np.where(tree.left >= 0, tree.left + offset, -1))
        right.append(np.where(tree.right >= 0, tree.right + offset, -1))
        value.append(tree.value)
        offset += tree.n_nodes
    return (np.concatenate(feat).astype(np.int64), np.concatenate(thr),
            np.concatenate(left).astype(np.int64), np.concatenate(right).astype(np.int64),
            np.concatenate(value), np.array(roots, dtype=np.int64))


def _check(g: AttributedGraph, model: BoostedModel, itr: int):
    if itr < 1:
        raise ValueError("itr must be at least 1")
    if model.n_attributes != g.p:
        raise ValueError(
            f"model expects {model.n_attributes} attributes, graph has {g.p}"
        )
    for m, tree in enumerate(model.stages):
        if tree.n_features != model.n_features:
            raise ValueError(f"stage {m} schema mismatch")
    if g.unknown_nodes.size == 0:
        raise ValueError("graph has no unknown nodes to infer")


def _common(g: AttributedGraph, model: BoostedModel):
    known = g.known_mask
    y = np.where(known, g.y, 0.0)
    codes = np.array([REL_CODE[r] for r in model.relational], dtype=np.int64)
    rf4_init = neighbor_medians(g, y, known)
    buf = np.empty(max(1, int(g.degree.max()) if g.n else 1))
    a = np.empty(model.n_features)
    X = np.ascontiguousarray(g.X)
    return known, y, codes, rf4_init, buf, a, X


def ica(g: AttributedGraph, model: BoostedModel, itr: int = 50, seed: int = 0) -> InferenceResult:
    """Iterative classification with a model whose stages share one feature vector.

    The model output is the sum of its trees on ``[x, rf...]`` where the
    relational columns take their stage-0 meaning (see
    :mod:`relboost.relfeat`); the usual input is an RGB model on ``[x, rf1]``.
    """
    _check(g, model, itr)
    if model.model_kind == "MGB" and model.M > 0:
        raise ValueError("staged MGB models need ica2")
    known, y, codes, rf4_init, buf, a, X = _common(g, model)
    feat, thr, left, right, value, roots = _flatten(model.stages)
    unknown = g.unknown_nodes
    est = np.zeros(g.n)
    args = (X, g.indptr, g.indices, known, y, est, codes, rf4_init,
            feat, thr, left, right, value, roots, buf, a)

    _ica_pass(unknown, False, *args)
    tol = convergence_tolerance(g)
    rng = np.random.default_rng(seed)
    deltas, converged = [], False
    for _ in range(itr):
        delta = _ica_pass(rng.permutation(unknown), True, *args)
        deltas.append(float(delta))
        if delta <= tol:
            converged = True
            break
    return InferenceResult(unknown, est[unknown].copy(), deltas, converged, tol)


def ica2(g: AttributedGraph, model: BoostedModel, itr: int = 50, seed: int = 0) -> InferenceResult:
    """Staged collective inference for an MGB model.

    Returns the cumulative prediction (sum of stage slots) of every unknown
    node. Known-node labels and their true residuals are computed once and
    never modified by the sweeps.
    """
    _check(g, model, itr)
    known, y, codes, rf4_init, buf, a, X = _common(g, model)
    feat, thr, left, right, value, roots = _flatten(model.stages)
    unknown = g.unknown_nodes
    known_nodes = g.known_nodes
    n_stages = len(model.stages)
    slots = np.zeros((g.n, n_stages))
    slots[known_nodes, 0] = y[known_nodes]
    label = y.copy()
    args = (X, g.indptr, g.indices, known, y, slots, label, codes, rf4_init,
            feat, thr, left, right, value, roots, buf, a)

    if known_nodes.size:
        _ica2_known_phase(known_nodes, *args)
    _ica2_bootstrap(unknown, *args)

    tol = convergence_tolerance(g)
    rng = np.random.default_rng(seed)
    deltas, converged = [], False
    for _ in range(itr):
        order = rng.permutation(unknown)
        delta = _ica2_sweep(order, *args)
        deltas.append(float(delta))
        if delta <= tol:
            converged = True
            break
    return InferenceResult(unknown, label[unknown].copy(), deltas, converged, tol, slots)
