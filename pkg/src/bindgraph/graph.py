"""Undirected simple graphs, edge-list I/O and clustering statistics."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from os import PathLike
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components, shortest_path

__all__ = [
    "Graph",
    "GraphStats",
    "EdgeListError",
    "read_edge_list",
    "write_edge_list",
    "compute_stats",
    "empirical_overlap",
    "stats_record",
    "ccdf_rows",
]

log = logging.getLogger(__name__)


class EdgeListError(ValueError):
    """Malformed edge-list input."""


class Graph:
    """Undirected simple graph on nodes ``0..n-1``.

    Edges are stored canonically as an ``(m, 2)`` int64 array with ``u < v``,
    sorted lexicographically and free of duplicates. Self-loops and duplicate
    pairs passed to the constructor are dropped.
    """

    __slots__ = ("n", "edges", "_adj")

    def __init__(self, n: int, edges: Iterable[Sequence[int]] | np.ndarray = ()):
        n = int(n)
        if n < 0:
            raise ValueError("node count must be nonnegative")
        arr = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges, dtype=np.int64)
        if arr.size == 0:
            arr = np.empty((0, 2), dtype=np.int64)
        arr = arr.reshape(-1, 2)
        if arr.size and (arr.min() < 0 or arr.max() >= n):
            raise ValueError(f"edge endpoint outside 0..{n - 1}")
        lo = np.minimum(arr[:, 0], arr[:, 1])
        hi = np.maximum(arr[:, 0], arr[:, 1])
        keep = lo != hi
        keys = np.unique(lo[keep] * n + hi[keep])
        self.n = n
        self.edges = np.column_stack((keys // max(n, 1), keys % max(n, 1))).astype(np.int64)
        self._adj: sp.csr_matrix | None = None

    @classmethod
    def from_keys(cls, n: int, keys: np.ndarray) -> "Graph":
        """Build from pair keys ``u * n + v`` (``u < v``); duplicates allowed."""
        g = cls.__new__(cls)
        keys = np.unique(np.asarray(keys, dtype=np.int64))
        g.n = int(n)
        g.edges = np.column_stack((keys // max(n, 1), keys % max(n, 1))).astype(np.int64)
        g._adj = None
        return g

    @property
    def num_edges(self) -> int:
        return int(self.edges.shape[0])

    def edge_keys(self) -> np.ndarray:
        return self.edges[:, 0] * self.n + self.edges[:, 1]

    def adjacency(self) -> sp.csr_matrix:
        if self._adj is None:
            u, v = self.edges[:, 0], self.edges[:, 1]
            data = np.ones(2 * len(u), dtype=np.int64)
            a = sp.coo_matrix((data, (np.r_[u, v], np.r_[v, u])), shape=(self.n, self.n))
            self._adj = a.tocsr()
        return self._adj

    def degrees(self) -> np.ndarray:
        return np.bincount(self.edges.ravel(), minlength=self.n).astype(np.int64)

    def neighbors(self, v: int) -> np.ndarray:
        a = self.adjacency()
        return a.indices[a.indptr[v]:a.indptr[v + 1]]

    def has_edge(self, u: int, v: int) -> bool:
        if u == v:
            return False
        u, v = min(u, v), max(u, v)
        k = u * self.n + v
        keys = self.edge_keys()
        i = np.searchsorted(keys, k)
        return bool(i < len(keys) and keys[i] == k)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.edges, other.edges)

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.num_edges})"


def read_edge_list(path: str | PathLike, *, n: int | None = None, with_report: bool = False):
    """Read a whitespace-delimited ``u v`` edge list.

    Lines starting with ``#`` or ``%`` are comments, except a header of the
    form ``# nodes: N`` which fixes the node count. Otherwise ``n`` defaults
    to one more than the largest node id. Self-loops and duplicate pairs are
    dropped and counted.

    Returns the graph, or ``(graph, report)`` when ``with_report`` is set;
    the report maps ``"self_loops"`` and ``"duplicates"`` to drop counts.
    """
    header_n = None
    pairs = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            s = line.strip()
            if not s:
                continue
            if s[0] in "#%":
                body = s[1:].strip().lower()
                if body.startswith("nodes:"):
                    try:
                        header_n = int(body.split(":", 1)[1])
                    except ValueError as exc:
                        raise EdgeListError(f"line {lineno}: bad nodes header {s!r}") from exc
                continue
            tok = s.split()
            if len(tok) < 2:
                raise EdgeListError(f"line {lineno}: expected two node ids, got {s!r}")
            try:
                u, v = int(tok[0]), int(tok[1])
            except ValueError as exc:
                raise EdgeListError(f"line {lineno}: non-integer node id in {s!r}") from exc
            if u < 0 or v < 0:
                raise EdgeListError(f"line {lineno}: negative node id")
            pairs.append((u, v))

    arr = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    if n is None:
        n = header_n
    if n is None:
        n = int(arr.max()) + 1 if arr.size else 0
    loops = int(np.count_nonzero(arr[:, 0] == arr[:, 1]))
    g = Graph(n, arr)
    report = {"self_loops": loops, "duplicates": len(arr) - loops - g.num_edges}
    if loops or report["duplicates"]:
        log.info("%s: dropped %d self-loops and %d duplicate pairs", path, loops, report["duplicates"])
    return (g, report) if with_report else g


def write_edge_list(g: Graph, path: str | PathLike) -> None:
    with open(path, "w") as fh:
        fh.write(f"# nodes: {g.n}\n")
        np.savetxt(fh, g.edges, fmt="%d")


@dataclass
class GraphStats:
    """Clustering and distribution statistics of one graph.

    ``degree_ccdf[k]`` is the number of nodes with degree at least ``k``;
    ``distance_ccdf[d]`` the number of node pairs of the largest connected
    component at distance at least ``d`` (index 0 unused, equals index 1).
    """

    n: int
    num_edges: int
    triangle_count: int
    wedge_count: int
    gcc: float
    alcc: float
    degree_ccdf: np.ndarray
    distance_ccdf: np.ndarray


def _triangles_per_node(a: sp.csr_matrix) -> np.ndarray:
    # (A^2 ∘ A) row sums count each triangle at v twice
    a2 = a @ a
    return np.asarray(a2.multiply(a).sum(axis=1)).ravel() // 2


def compute_stats(g: Graph, distance_sample: int | None = None, seed: int = 0) -> GraphStats:
    """Exact triangle/wedge counts, GCC, ALCC and degree/distance CCDFs.

    GCC is ``3 * triangles / wedges`` with wedges ``sum_v C(d(v), 2)``; ALCC
    is averaged over nodes of degree at least two. Distances are measured
    inside the largest connected component, from every node or from a
    uniform sample of ``distance_sample`` source nodes (counts then rescaled).
    """
    a = g.adjacency()
    deg = g.degrees()
    tri_v = _triangles_per_node(a) if g.num_edges else np.zeros(g.n, dtype=np.int64)
    triangles = int(tri_v.sum()) // 3
    pairs_v = deg * (deg - 1) // 2
    wedges = int(pairs_v.sum())
    gcc = 3 * triangles / wedges if wedges else 0.0
    mask = deg >= 2
    alcc = float(np.mean(tri_v[mask] / pairs_v[mask])) if mask.any() else 0.0

    dmax = int(deg.max()) if g.n else 0
    hist = np.bincount(deg, minlength=max(dmax + 1, 2))
    degree_ccdf = np.cumsum(hist[::-1])[::-1]

    return GraphStats(
        n=g.n,
        num_edges=g.num_edges,
        triangle_count=triangles,
        wedge_count=wedges,
        gcc=float(gcc),
        alcc=alcc,
        degree_ccdf=degree_ccdf,
        distance_ccdf=_distance_ccdf(a, distance_sample, seed),
    )


def _distance_ccdf(a: sp.csr_matrix, sample: int | None, seed: int) -> np.ndarray:
    n = a.shape[0]
    if n == 0 or a.nnz == 0:
        return np.zeros(1)
    _, labels = connected_components(a, directed=False)
    lcc = np.flatnonzero(labels == np.argmax(np.bincount(labels)))
    sub = a[lcc][:, lcc]
    size = len(lcc)
    sources = np.arange(size)
    scale = 0.5
    if sample is not None and sample < size:
        sources = np.sort(np.random.default_rng(seed).choice(size, sample, replace=False))
        scale = size / (2.0 * sample)
    dist = shortest_path(sub, method="D", unweighted=True, directed=False, indices=sources)
    d = dist[np.isfinite(dist) & (dist > 0)].astype(np.int64)
    if d.size == 0:
        return np.zeros(1)
    hist = np.bincount(d)
    ccdf = np.cumsum(hist[::-1])[::-1] * scale
    ccdf[0] = ccdf[1] if len(ccdf) > 1 else 0
    return ccdf


def empirical_overlap(graphs: Sequence[Graph]) -> float:
    """Mean pairwise shared-edge count divided by the mean edge count."""
    if len(graphs) < 2:
        raise ValueError("overlap needs at least two graphs")
    n = graphs[0].n
    if any(h.n != n for h in graphs):
        raise ValueError("graphs must share the node set")
    sizes = np.array([h.num_edges for h in graphs], dtype=float)
    if sizes.mean() == 0:
        raise ValueError("overlap undefined: no edges")
    keys = np.concatenate([h.edge_keys() for h in graphs])
    rows = np.repeat(np.arange(len(graphs)), sizes.astype(np.int64))
    uniq, cols = np.unique(keys, return_inverse=True)
    x = sp.csr_matrix((np.ones(len(keys)), (rows, cols)), shape=(len(graphs), len(uniq)))
    inter = (x @ x.T).toarray()
    k = len(graphs)
    shared = (inter.sum() - np.trace(inter)) / (k * (k - 1))
    return float(shared / sizes.mean())


def stats_record(stats: GraphStats) -> dict:
    """Flat key/value view of the scalar statistics."""
    return {
        "n": stats.n,
        "edges": stats.num_edges,
        "triangles": stats.triangle_count,
        "wedges": stats.wedge_count,
        "gcc": stats.gcc,
        "alcc": stats.alcc,
    }


def ccdf_rows(kind: str, ccdfs: Sequence[np.ndarray]) -> list[dict]:
    """Mean and standard deviation per CCDF point across several graphs.

    One row per point ``x >= 1``; shorter curves are zero-padded.
    """
    width = max(len(c) for c in ccdfs)
    mat = np.zeros((len(ccdfs), width))
    for i, c in enumerate(ccdfs):
        mat[i, : len(c)] = c
    mean, std = mat.mean(axis=0), mat.std(axis=0)
    return [
        {"kind": kind, "x": x, "mean": float(mean[x]), "std": float(std[x])}
        for x in range(1, width)
    ]
