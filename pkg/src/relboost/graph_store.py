"""Partially labeled attributed graphs: loading, validation and partitioning.

Node ids in files may be arbitrary non-negative integers. Internally every
node is addressed by a dense index in ``[0, n)``; ``AttributedGraph.ids``
keeps the original id of each index so results can be written back.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np


class GraphLoadError(ValueError):
    """Raised when a node or edge file is malformed."""


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class AttributedGraph:
    """Undirected graph with a real attribute vector and an optional real label per node.

    Unknown labels are stored as NaN. The graph is read-only after
    construction; relabelled views are produced with :meth:`with_labels`
    and :meth:`hide_labels`, which share the topology arrays.
    """

    ids: np.ndarray
    X: np.ndarray
    y: np.ndarray
    edges: np.ndarray
    indptr: np.ndarray
    indices: np.ndarray

    @classmethod
    def from_arrays(cls, X, y, edges, ids=None) -> "AttributedGraph":
        """Build a validated graph from dense-index arrays.

        ``edges`` holds pairs of dense indices. Duplicate undirected edges are
        dropped with a warning; self-loops and out-of-range endpoints raise.
        """
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        if X.ndim != 2:
            raise ValueError("attribute matrix must be 2-dimensional")
        n = X.shape[0]
        y = np.asarray(y, dtype=np.float64).ravel()
        if y.shape[0] != n:
            raise ValueError(f"label vector has length {y.shape[0]}, expected {n}")
        if not np.all(np.isfinite(X)):
            raise ValueError("attributes must be finite")
        if np.any(np.isinf(y)):
            raise ValueError("labels must be finite")
        ids = np.arange(n, dtype=np.int64) if ids is None else np.asarray(ids, dtype=np.int64)
        if ids.shape != (n,):
            raise ValueError("ids must have one entry per node")
        if np.unique(ids).size != n:
            raise ValueError("node ids must be unique")

        e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if e.size and (e.min() < 0 or e.max() >= n):
            raise ValueError("dangling endpoint: edge references a node that does not exist")
        if np.any(e[:, 0] == e[:, 1]):
            raise ValueError("self-loops are not allowed")
        e = np.sort(e, axis=1)
        uniq = np.unique(e, axis=0) if e.size else e.reshape(0, 2)
        if uniq.shape[0] < e.shape[0]:
            warnings.warn(
                f"dropped {e.shape[0] - uniq.shape[0]} duplicate edge(s)", stacklevel=2
            )
        e = uniq

        src = np.concatenate([e[:, 0], e[:, 1]])
        dst = np.concatenate([e[:, 1], e[:, 0]])
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
        return cls(
            ids=_frozen(ids),
            X=_frozen(X),
            y=_frozen(y),
            edges=_frozen(e),
            indptr=_frozen(indptr),
            indices=_frozen(dst.astype(np.int64)),
        )

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def n_edges(self) -> int:
        return self.edges.shape[0]

    @property
    def known_mask(self) -> np.ndarray:
        return ~np.isnan(self.y)

    @property
    def known_nodes(self) -> np.ndarray:
        return np.flatnonzero(self.known_mask)

    @property
    def unknown_nodes(self) -> np.ndarray:
        return np.flatnonzero(np.isnan(self.y))

    @property
    def degree(self) -> np.ndarray:
        return np.diff(self.indptr)

    @property
    def adjacency(self) -> list[np.ndarray]:
        return [self.neighbors(i) for i in range(self.n)]

    def neighbors(self, i: int) -> np.ndarray:
        if not 0 <= i < self.n:
            raise IndexError(f"node {i} not in graph")
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    def index_of(self, node_id: int) -> int:
        hits = np.flatnonzero(self.ids == node_id)
        if hits.size == 0:
            raise KeyError(node_id)
        return int(hits[0])

    def with_labels(self, y) -> "AttributedGraph":
        """Same topology and attributes with a replaced label vector (NaN = unknown)."""
        y = np.asarray(y, dtype=np.float64).ravel()
        if y.shape != (self.n,):
            raise ValueError("label vector length does not match node count")
        if np.any(np.isinf(y)):
            raise ValueError("labels must be finite")
        return AttributedGraph(self.ids, self.X, _frozen(y.copy()), self.edges,
                               self.indptr, self.indices)

    def hide_labels(self, hidden) -> "AttributedGraph":
        """Copy with the labels of ``hidden`` (index array or boolean mask) removed."""
        y = self.y.copy()
        y[np.asarray(hidden)] = np.nan
        return self.with_labels(y)

    def to_networkx(self):
        import networkx as nx

        G = nx.Graph()
        G.add_nodes_from(range(self.n))
        G.add_edges_from(map(tuple, self.edges.tolist()))
        return G


@dataclass(frozen=True)
class FoldAssignment:
    fold_of: np.ndarray
    k: int

    def members(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of == fold)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.fold_of, minlength=self.k)


def _parse_float(text: str, line: int, what: str) -> float:
    try:
        val = float(text)
    except ValueError:
        raise GraphLoadError(f"line {line}: cannot parse {what} {text!r}") from None
    if not math.isfinite(val):
        raise GraphLoadError(f"line {line}: {what} must be finite, got {text!r}")
    return val


def _parse_id(text: str, line: int) -> int:
    try:
        val = int(text)
    except ValueError:
        raise GraphLoadError(f"line {line}: cannot parse node id {text!r}") from None
    if val < 0:
        raise GraphLoadError(f"line {line}: node ids must be non-negative")
    return val


def load_graph(nodes_path, edges_path) -> AttributedGraph:
    """Read a graph from a nodes CSV (``id,x_0..x_{p-1},y``) and an edges CSV (``src,dst``).

    An empty ``y`` field marks the node as unknown. Errors name the offending
    line number (1-based, header included).
    """
    ids: list[int] = []
    rows: list[list[float]] = []
    labels: list[float] = []
    with open(nodes_path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise GraphLoadError("line 1: nodes file is empty")
        header = [h.strip() for h in header]
        if len(header) < 2 or header[0] != "id" or header[-1] != "y":
            raise GraphLoadError("line 1: nodes header must be 'id,x_0,...,x_{p-1},y'")
        p = len(header) - 2
        for line, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != p + 2:
                raise GraphLoadError(
                    f"line {line}: expected {p + 2} fields, got {len(rec)} "
                    "(inconsistent attribute arity)"
                )
            ids.append(_parse_id(rec[0].strip(), line))
            rows.append([_parse_float(v, line, "attribute") for v in rec[1:-1]])
            lab = rec[-1].strip()
            labels.append(math.nan if lab == "" else _parse_float(lab, line, "label"))

    if not ids:
        raise GraphLoadError("nodes file contains no nodes")
    index = {}
    for i, nid in enumerate(ids):
        if nid in index:
            raise GraphLoadError(f"duplicate node id {nid}")
        index[nid] = i

    pairs: list[tuple[int, int]] = []
    with open(edges_path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["src", "dst"]:
            raise GraphLoadError("line 1: edges header must be 'src,dst'")
        for line, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != 2:
                raise GraphLoadError(f"line {line}: expected 2 fields, got {len(rec)}")
            a, b = _parse_id(rec[0].strip(), line), _parse_id(rec[1].strip(), line)
            for end in (a, b):
                if end not in index:
                    raise GraphLoadError(f"line {line}: dangling endpoint {end}")
            if a == b:
                raise GraphLoadError(f"line {line}: self-loop on node {a}")
            pairs.append((index[a], index[b]))

    X = np.array(rows, dtype=np.float64).reshape(len(ids), p)
    return AttributedGraph.from_arrays(X, labels, pairs, ids=ids)


def write_graph(g: AttributedGraph, nodes_path, edges_path) -> None:
    """Write ``g`` in the CSV formats read by :func:`load_graph` (lossless for float64)."""
    Path(nodes_path).parent.mkdir(parents=True, exist_ok=True)
    Path(edges_path).parent.mkdir(parents=True, exist_ok=True)
    with open(nodes_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id"] + [f"x_{k}" for k in range(g.p)] + ["y"])
        for i in range(g.n):
            lab = "" if np.isnan(g.y[i]) else repr(float(g.y[i]))
            w.writerow([int(g.ids[i])] + [repr(float(v)) for v in g.X[i]] + [lab])
    with open(edges_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["src", "dst"])
        for a, b in g.edges:
            w.writerow([int(g.ids[a]), int(g.ids[b])])


def _as_index(g: AttributedGraph, keep) -> np.ndarray:
    keep = np.asarray(keep if not isinstance(keep, (set, frozenset)) else sorted(keep))
    if keep.dtype == bool:
        if keep.shape != (g.n,):
            raise ValueError("boolean node mask has the wrong length")
        return np.flatnonzero(keep)
    keep = np.unique(keep.astype(np.int64))
    if keep.size and (keep[0] < 0 or keep[-1] >= g.n):
        raise ValueError("node set is not a subset of the graph")
    return keep


def induced_subgraph(g: AttributedGraph, keep: Iterable[int] | np.ndarray) -> AttributedGraph:
    """Subgraph on ``keep`` (dense indices or boolean mask) with edges inside it.

    Node order follows increasing dense index of ``g``; original ids are kept.
    """
    idx = _as_index(g, keep)
    if idx.size == 0:
        raise ValueError("cannot induce a subgraph on an empty node set")
    remap = np.full(g.n, -1, dtype=np.int64)
    remap[idx] = np.arange(idx.size)
    e = remap[g.edges] if g.n_edges else g.edges.reshape(0, 2)
    e = e[(e >= 0).all(axis=1)]
    return AttributedGraph.from_arrays(g.X[idx], g.y[idx], e, ids=g.ids[idx])


def split_folds(g: AttributedGraph, k: int, seed: int) -> FoldAssignment:
    """Uniform random partition of the nodes into ``k`` folds whose sizes differ by at most one."""
    if k < 2:
        raise ValueError("need at least 2 folds")
    if k > g.n:
        raise ValueError(f"cannot split {g.n} nodes into {k} folds")
    perm = np.random.default_rng(seed).permutation(g.n)
    fold_of = np.empty(g.n, dtype=np.int64)
    fold_of[perm] = np.arange(g.n) % k
    return FoldAssignment(fold_of=fold_of, k=k)


def random_known_unknown_split(g: AttributedGraph, frac_known: float, seed: int):
    """Randomly split the nodes into (known, unknown) index arrays.

    ``|known| = round(frac_known * n)`` with halves rounded up.
    """
    if not 0.0 < frac_known < 1.0:
        raise ValueError("frac_known must lie strictly between 0 and 1")
    n_known = int(math.floor(frac_known * g.n + 0.5))
    if n_known == 0 or n_known == g.n:
        raise ValueError(f"frac_known={frac_known} leaves one side empty for n={g.n}")
    perm = np.random.default_rng(seed).permutation(g.n)
    return np.sort(perm[:n_known]), np.sort(perm[n_known:])
