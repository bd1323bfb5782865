"""Undirected weighted graphs, normalized Laplacians, KNN sparsification."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import (
    DuplicateEdgeError,
    IndexOutOfRangeError,
    NonPositiveWeightError,
    ParseError,
    SelfLoopError,
)


@dataclass(frozen=True)
class Graph:
    """Undirected weighted graph without self-loops.

    The adjacency is a symmetric CSR matrix with strictly positive stored
    weights; absent entries mean weight zero. Instances are immutable after
    construction and safe to share read-only across workers.
    """

    n: int
    adjacency: sp.csr_matrix
    degrees: np.ndarray

    def neighbors(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """Neighbor indices of vertex ``i`` (ascending) and their weights."""
        row = self.adjacency.getrow(i)
        return row.indices.copy(), row.data.copy()

    def edge_list(self) -> list[tuple[int, int, float]]:
        """All edges as (i, j, w) with i < j, sorted by (i, j)."""
        coo = sp.triu(self.adjacency, k=1).tocoo()
        order = np.lexsort((coo.col, coo.row))
        return [
            (int(coo.row[t]), int(coo.col[t]), float(coo.data[t])) for t in order
        ]

    @property
    def num_edges(self) -> int:
        return self.adjacency.nnz // 2


@dataclass(frozen=True)
class NormalizedLaplacian:
    """Symmetric normalized Laplacian D^{-1/2} (D - W) D^{-1/2}.

    PSD with spectrum in [0, 2]. Rows and columns of isolated vertices are
    all zero (the D^{-1/2} entry is taken as 0 when the degree is 0).
    """

    n: int
    matrix: sp.csr_matrix

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self.matrix @ x


@dataclass(frozen=True)
class IndexMap:
    """Vertex correspondence between a subgraph and its parent graph."""

    to_original: np.ndarray  # local index -> original index
    to_local: dict  # original index -> local index


def _graph_from_csr(n: int, adj: sp.csr_matrix) -> Graph:
    # Internal constructor: adjacency is assumed symmetric, positive,
    # zero-diagonal. Canonicalizes storage so iteration order is stable.
    adj = adj.tocsr()
    adj.eliminate_zeros()
    adj.sort_indices()
    degrees = np.asarray(adj.sum(axis=1)).ravel()
    return Graph(n=n, adjacency=adj, degrees=degrees)


def build_graph(n: int, edge_list) -> Graph:
    """Build a Graph from (i, j, w) entries, applying symmetric closure.

    Raises SelfLoopError, NonPositiveWeightError, DuplicateEdgeError or
    IndexOutOfRangeError on invalid input.
    """
    if n < 0:
        raise IndexOutOfRangeError(f"vertex count must be nonnegative, got {n}")
    rows, cols, vals = [], [], []
    seen = set()
    for i, j, w in edge_list:
        i, j, w = int(i), int(j), float(w)
        if not (0 <= i < n and 0 <= j < n):
            raise IndexOutOfRangeError(f"edge ({i},{j}) outside [0,{n})")
        if i == j:
            raise SelfLoopError(f"self-loop at vertex {i}")
        if w <= 0 or not np.isfinite(w):
            raise NonPositiveWeightError(f"edge ({i},{j}) has weight {w}")
        key = (min(i, j), max(i, j))
        if key in seen:
            raise DuplicateEdgeError(f"duplicate edge ({i},{j})")
        seen.add(key)
        rows += [i, j]
        cols += [j, i]
        vals += [w, w]
    adj = sp.csr_matrix(
        (vals, (rows, cols)), shape=(n, n), dtype=np.float64
    )
    return _graph_from_csr(n, adj)


def normalized_laplacian(g: Graph) -> NormalizedLaplacian:
    """Compute D^{-1/2} (D - W) D^{-1/2} with zero rows for isolated vertices."""
    d = g.degrees
    with np.errstate(divide="ignore"):
        dinv_sqrt = np.where(d > 0, 1.0 / np.sqrt(np.where(d > 0, d, 1.0)), 0.0)
    dhalf = sp.diags(dinv_sqrt)
    lap = -(dhalf @ g.adjacency @ dhalf)
    lap = lap.tolil()
    lap.setdiag(np.where(d > 0, 1.0, 0.0))
    lap = lap.tocsr()
    lap.sort_indices()
    # enforce exact symmetry against rounding in the two-sided scaling
    lap = (lap + lap.T) * 0.5
    lap = lap.tocsr()
    lap.sort_indices()
    return NormalizedLaplacian(n=g.n, matrix=lap)


def knn_sparsify(g: Graph, K: int) -> Graph:
    """Keep each vertex's top-K heaviest links; an edge survives if it is in
    the top-K list of either endpoint.

    Ties are broken by ascending neighbor index, so runs are reproducible.
    """
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    keep_rows, keep_cols = [], []
    indptr = g.adjacency.indptr
    indices = g.adjacency.indices
    data = g.adjacency.data
    for i in range(g.n):
        lo, hi = indptr[i], indptr[i + 1]
        nbrs = indices[lo:hi]
        w = data[lo:hi]
        if len(nbrs) > K:
            order = np.lexsort((nbrs, -w))[:K]
            nbrs = nbrs[order]
        keep_rows.append(np.full(len(nbrs), i, dtype=np.int64))
        keep_cols.append(nbrs.astype(np.int64))
    rows = np.concatenate(keep_rows) if keep_rows else np.empty(0, dtype=np.int64)
    cols = np.concatenate(keep_cols) if keep_cols else np.empty(0, dtype=np.int64)
    mask = sp.csr_matrix(
        (np.ones(len(rows), dtype=bool), (rows, cols)), shape=(g.n, g.n)
    )
    union = mask.maximum(mask.T)
    kept = g.adjacency.multiply(union)
    return _graph_from_csr(g.n, kept.tocsr())


def induce_subgraph(g: Graph, vertices) -> tuple[Graph, IndexMap]:
    """Subgraph over ``vertices`` (kept in the given order) with all internal
    edges, plus the original<->local index correspondence."""
    vs = np.asarray(list(vertices), dtype=np.int64)
    if len(np.unique(vs)) != len(vs):
        raise IndexOutOfRangeError("subgraph vertex list contains duplicates")
    if len(vs) and (vs.min() < 0 or vs.max() >= g.n):
        raise IndexOutOfRangeError(f"subgraph vertices outside [0,{g.n})")
    sub = g.adjacency[vs][:, vs]
    idx = IndexMap(
        to_original=vs.copy(),
        to_local={int(v): k for k, v in enumerate(vs)},
    )
    return _graph_from_csr(len(vs), sub.tocsr()), idx


def read_edge_file(path) -> Graph:
    """Read the edge-list fixture format: a `n=<count>` header, then one
    `i<TAB>j<TAB>w` edge per line; `#` starts a comment."""
    n = None
    edges = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("n="):
                if n is not None:
                    raise ParseError("duplicate n= header", line=lineno)
                try:
                    n = int(line[2:])
                except ValueError:
                    raise ParseError(f"bad vertex count {line!r}", line=lineno)
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ParseError(f"expected 'i j w', got {line!r}", line=lineno)
            if n is None:
                raise ParseError("edge before n= header", line=lineno)
            try:
                edges.append((int(parts[0]), int(parts[1]), float(parts[2])))
            except ValueError:
                raise ParseError(f"bad edge {line!r}", line=lineno)
    if n is None:
        raise ParseError("missing n= header")
    return build_graph(n, edges)


def write_edge_file(path, g: Graph) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"n={g.n}\n")
        for i, j, w in g.edge_list():
            fh.write(f"{i}\t{j}\t{w!r}\n")
