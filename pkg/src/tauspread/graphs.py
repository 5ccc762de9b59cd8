"""Construction of the four weighted graphs and cumulative connectivity.

From one raw connectome four symmetric nonnegative graphs are derived:

* ``structural_NL`` -- edge weight fiber_count / fiber_length
* ``structural_L``  -- edge weight fiber_length
* ``proximity``     -- Gaussian of fiber length, edges longer than ``r_p`` dropped
* ``cumulative``    -- pair weight sums the count/length cost of every
  admissible path between the pair (admissible: simple, fiber-length cost
  at most ``r_c``)

The cumulative build and the per-vertex cumulative connectivity both reduce
to one depth-first pass per source vertex (see ``_pathcore``); sources are
independent, so the pass parallelizes over a thread pool and is merged
deterministically by source index.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from . import _pathcore
from .errors import PathBudgetError, TauspreadError
from .io import RawConnectome

GRAPH_KINDS = ("structural_L", "structural_NL", "proximity", "cumulative")

DEFAULT_PATH_BUDGET = 10_000_000


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    """Symmetric nonnegative weight matrix with zero diagonal."""

    weights: np.ndarray  # (n, n) float64
    kind: str

    @property
    def n(self) -> int:
        return int(self.weights.shape[0])

    def validate(self) -> None:
        w = self.weights
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise TauspreadError(f"weight matrix must be square, got {w.shape}")
        if self.kind not in GRAPH_KINDS:
            raise TauspreadError(f"unknown graph kind {self.kind!r}")
        if not np.array_equal(w, w.T):
            raise TauspreadError(f"{self.kind} graph is not symmetric")
        if np.any(np.diagonal(w) != 0.0):
            raise TauspreadError(f"{self.kind} graph has nonzero diagonal")
        if np.any(w < 0.0):
            raise TauspreadError(f"{self.kind} graph has negative weights")


@dataclass(frozen=True)
class AdmissiblePath:
    """One simple path with its two length measures."""

    vertices: tuple[int, ...]
    length_l: float
    length_nl: float

    @property
    def target(self) -> int:
        return self.vertices[-1]


@dataclass(frozen=True)
class PathEnumeration:
    """All admissible paths leaving one source, in lexicographic order."""

    source: int
    r_c: float
    paths: tuple[AdmissiblePath, ...]

    def to_target(self, j: int) -> tuple[AdmissiblePath, ...]:
        return tuple(p for p in self.paths if p.target == j)

    @property
    def reachable(self) -> tuple[int, ...]:
        return tuple(sorted({p.target for p in self.paths}))


@dataclass(frozen=True, eq=False)
class CumulativeConnectivity:
    """Per-vertex sum of fiber-length costs over all admissible paths."""

    d: np.ndarray  # (n,) float64 >= 0


@dataclass(frozen=True, eq=False)
class _Adjacency:
    """CSR view of the shared edge topology with both weightings."""

    indptr: np.ndarray
    indices: np.ndarray
    length_l: np.ndarray
    weight_nl: np.ndarray

    @property
    def n(self) -> int:
        return int(self.indptr.shape[0] - 1)


def _adjacency_from_raw(raw: RawConnectome) -> _Adjacency:
    n = raw.vertex_count
    m = raw.edge_count
    src = np.concatenate([raw.edge_index[:, 0], raw.edge_index[:, 1]])
    dst = np.concatenate([raw.edge_index[:, 1], raw.edge_index[:, 0]])
    lengths = np.concatenate([raw.fiber_length, raw.fiber_length])
    wnl = raw.fiber_count / raw.fiber_length
    wnls = np.concatenate([wnl, wnl])
    order = np.lexsort((dst, src))
    src, dst, lengths, wnls = src[order], dst[order], lengths[order], wnls[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, src + 1, 1)
    indptr = np.cumsum(indptr)
    assert indptr[-1] == 2 * m
    return _Adjacency(indptr=indptr, indices=dst.astype(np.int64),
                      length_l=lengths, weight_nl=wnls)


def _adjacency_from_graphs(g_l: WeightedGraph, g_nl: WeightedGraph) -> _Adjacency:
    if g_l.weights.shape != g_nl.weights.shape:
        raise TauspreadError("length and count/length graphs have different sizes")
    mask_l = g_l.weights != 0.0
    if not np.array_equal(mask_l, g_nl.weights != 0.0):
        raise TauspreadError("length and count/length graphs must share edge topology")
    n = g_l.n
    src, dst = np.nonzero(mask_l)
    order = np.lexsort((dst, src))
    src, dst = src[order], dst[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, src + 1, 1)
    indptr = np.cumsum(indptr)
    return _Adjacency(
        indptr=indptr,
        indices=dst.astype(np.int64),
        length_l=g_l.weights[src, dst],
        weight_nl=g_nl.weights[src, dst],
    )


def _ball_distances(adj: _Adjacency, r_c: float, sources=None) -> np.ndarray:
    """Shortest fiber-length distances, truncated just past r_c.

    The limit is nudged one ulp above r_c so vertices exactly at the
    threshold stay finite (admissibility is non-strict).
    """
    graph = csr_matrix((adj.length_l, adj.indices, adj.indptr), shape=(adj.n, adj.n))
    limit = np.nextafter(r_c, np.inf)
    dist = dijkstra(graph, directed=True, limit=limit, indices=sources)
    return dist


def build_structural(raw: RawConnectome, weighting: str) -> WeightedGraph:
    """The structural graph under the requested weighting ("L" or "NL")."""
    if weighting not in ("L", "NL"):
        raise ValueError(f"weighting must be 'L' or 'NL', got {weighting!r}")
    n = raw.vertex_count
    w = np.zeros((n, n), dtype=np.float64)
    i, j = raw.edge_index[:, 0], raw.edge_index[:, 1]
    vals = raw.fiber_length if weighting == "L" else raw.fiber_count / raw.fiber_length
    w[i, j] = vals
    w[j, i] = vals
    kind = "structural_L" if weighting == "L" else "structural_NL"
    g = WeightedGraph(weights=w, kind=kind)
    g.validate()
    return g


def build_proximity(raw: RawConnectome, r_p: float, delta_p: float) -> WeightedGraph:
    """Gaussian proximity graph: exp(-length^2/delta_p) on edges of length <= r_p."""
    if r_p <= 0 or delta_p <= 0:
        raise ValueError("r_p and delta_p must be positive")
    n = raw.vertex_count
    w = np.zeros((n, n), dtype=np.float64)
    keep = raw.fiber_length <= r_p
    i = raw.edge_index[keep, 0]
    j = raw.edge_index[keep, 1]
    lengths = raw.fiber_length[keep]
    vals = np.exp(-(lengths * lengths) / delta_p)
    w[i, j] = vals
    w[j, i] = vals
    g = WeightedGraph(weights=w, kind="proximity")
    g.validate()
    return g


def enumerate_admissible_paths(
    g_l: WeightedGraph,
    g_nl: WeightedGraph,
    source: int,
    r_c: float,
    max_paths: int = DEFAULT_PATH_BUDGET,
) -> PathEnumeration:
    """Materialize every admissible simple path leaving ``source``.

    Requires the two structural graphs to share edge topology. Paths come
    out in lexicographic order of their vertex sequences; a path whose
    fiber-length cost equals ``r_c`` exactly is included.
    """
    if r_c <= 0:
        raise ValueError("r_c must be positive")
    adj = _adjacency_from_graphs(g_l, g_nl)
    if not 0 <= source < adj.n:
        raise ValueError(f"source {source} out of range for {adj.n} vertices")
    dist = _ball_distances(adj, r_c, sources=[source])[0]
    try:
        raw_paths = _pathcore.dfs_collect(
            adj.indptr, adj.indices, adj.length_l, adj.weight_nl,
            dist, source, r_c, max_paths,
        )
    except OverflowError:
        raise PathBudgetError(source, max_paths) from None
    paths = tuple(AdmissiblePath(vertices=v, length_l=cl, length_nl=cnl)
                  for v, cl, cnl in raw_paths)
    return PathEnumeration(source=source, r_c=r_c, paths=paths)


def _accumulate_all_sources(adj, r_c, max_paths, threads, backend):
    kernel = _pathcore.get_accumulator(backend)
    dist = _ball_distances(adj, r_c)

    def work(src):
        return kernel(adj.indptr, adj.indices, adj.length_l, adj.weight_nl,
                      dist[src], src, r_c, max_paths)

    n = adj.n
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(work, range(n)))
    else:
        results = [work(src) for src in range(n)]

    rows = np.empty((n, n), dtype=np.float64)
    d = np.empty(n, dtype=np.float64)
    for src, (wc_row, d_total, n_paths) in enumerate(results):
        if n_paths < 0:
            raise PathBudgetError(src, max_paths)
        rows[src] = wc_row
        d[src] = d_total
    return rows, d


def cumulative_build(
    raw: RawConnectome,
    r_c: float,
    *,
    max_paths: int = DEFAULT_PATH_BUDGET,
    threads: int = 1,
    backend: str | None = None,
) -> tuple[WeightedGraph, CumulativeConnectivity]:
    """One enumeration pass producing both the cumulative graph and d.

    The pair weight ``w(i, j)`` is taken from the pass of the smaller-index
    endpoint and mirrored, which makes the matrix exactly symmetric and the
    result independent of thread count.
    """
    if r_c <= 0:
        raise ValueError("r_c must be positive")
    if max_paths <= 0:
        raise ValueError("max_paths must be positive")
    adj = _adjacency_from_raw(raw)
    rows, d = _accumulate_all_sources(adj, r_c, max_paths, threads, backend)
    n = adj.n
    w = np.zeros((n, n), dtype=np.float64)
    iu = np.triu_indices(n, k=1)
    w[iu] = rows[iu]
    w += w.T
    g = WeightedGraph(weights=w, kind="cumulative")
    g.validate()
    return g, CumulativeConnectivity(d=d)


def build_cumulative(raw: RawConnectome, r_c: float, **kwargs) -> WeightedGraph:
    """Cumulative graph: pair weights sum count/length costs of admissible paths."""
    graph, _ = cumulative_build(raw, r_c, **kwargs)
    return graph


def cumulative_connectivity(raw: RawConnectome, r_c: float, **kwargs) -> CumulativeConnectivity:
    """Per-vertex sum of fiber-length costs over all admissible paths."""
    _, conn = cumulative_build(raw, r_c, **kwargs)
    return conn


def write_graph_csv(graph: WeightedGraph, path) -> None:
    """Export the upper triangle as ``source_id,target_id,weight`` rows."""
    w = graph.weights
    i, j = np.nonzero(np.triu(w, k=1))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("source_id,target_id,weight\n")
        for a, b in zip(i, j):
            fh.write(f"{a},{b},{float(w[a, b])!r}\n")
