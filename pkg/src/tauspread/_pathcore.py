"""Hot kernels for bounded-length admissible-path enumeration.

The depth-first accumulation below dominates runtime on realistic
connectomes, so it is compiled with numba by default. A pure-Python
fallback (the same function, uncompiled) is selected with::

    TAUSPREAD_BACKEND=python

Both backends execute the identical statements in the identical order, so
their floating-point results are bit-for-bit equal; ``benchmarks/bench_paths.py``
times the two against each other and checks that equality.

A path is *admissible* when it is simple (no repeated vertex) and its
accumulated fiber-length cost stays at or below the threshold ``r_c``
(non-strict). Enumeration from a source visits neighbors in ascending
vertex order, which makes the emission order the lexicographic order of
the vertex sequences; all accumulations happen in that order.
"""

from __future__ import annotations

import os

import numpy as np

_ENV_FLAG = "TAUSPREAD_BACKEND"
_VALID_BACKENDS = ("numba", "python")


def _dfs_accumulate(indptr, indices, length_l, weight_nl, dist, source, r_c, budget):
    """Aggregate all admissible simple paths leaving ``source``.

    Returns ``(wc_row, d_total, n_paths)`` where ``wc_row[j]`` is the sum of
    path lengths measured in the count/length weighting over every admissible
    path source -> j, and ``d_total`` sums the fiber-length cost of every
    admissible path leaving the source. ``n_paths`` is -1 when the budget was
    exceeded.

    ``dist[v]`` must hold the single-source shortest fiber-length distance to
    ``v``; vertices with ``dist[v] > r_c`` can sit on no admissible path and
    are pruned before the cost check.
    """
    n = indptr.shape[0] - 1
    wc_row = np.zeros(n, dtype=np.float64)
    d_total = 0.0
    stack_vertex = np.empty(n + 1, dtype=np.int64)
    stack_edge = np.empty(n + 1, dtype=np.int64)
    stack_cost_l = np.empty(n + 1, dtype=np.float64)
    stack_cost_nl = np.empty(n + 1, dtype=np.float64)
    on_path = np.zeros(n, dtype=np.bool_)

    depth = 0
    stack_vertex[0] = source
    stack_edge[0] = indptr[source]
    stack_cost_l[0] = 0.0
    stack_cost_nl[0] = 0.0
    on_path[source] = True
    n_paths = 0

    while depth >= 0:
        u = stack_vertex[depth]
        e = stack_edge[depth]
        if e < indptr[u + 1]:
            stack_edge[depth] = e + 1
            v = indices[e]
            if on_path[v]:
                continue
            if dist[v] > r_c:
                continue
            cl = stack_cost_l[depth] + length_l[e]
            if cl > r_c:
                continue
            cnl = stack_cost_nl[depth] + weight_nl[e]
            n_paths += 1
            if n_paths > budget:
                return wc_row, d_total, np.int64(-1)
            wc_row[v] += cnl
            d_total += cl
            depth += 1
            stack_vertex[depth] = v
            stack_edge[depth] = indptr[v]
            stack_cost_l[depth] = cl
            stack_cost_nl[depth] = cnl
            on_path[v] = True
        else:
            on_path[u] = False
            depth -= 1
    return wc_row, d_total, np.int64(n_paths)


_PY_IMPL = _dfs_accumulate
_JIT_IMPL = None


def env_backend() -> str:
    """The backend chosen by the environment (default: numba)."""
    value = os.environ.get(_ENV_FLAG, "numba").strip().lower()
    if value not in _VALID_BACKENDS:
        raise ValueError(
            f"{_ENV_FLAG} must be one of {_VALID_BACKENDS}, got {value!r}"
        )
    return value


def get_accumulator(backend: str | None = None):
    """Return the DFS accumulation kernel for the requested backend.

    ``backend`` is ``"numba"``, ``"python"`` or None (environment default).
    The numba variant is compiled lazily on first request; no fastmath is
    enabled so results stay IEEE-identical to the Python variant.
    """
    global _JIT_IMPL
    if backend is None:
        backend = env_backend()
    if backend == "python":
        return _PY_IMPL
    if backend != "numba":
        raise ValueError(f"unknown backend {backend!r}")
    if _JIT_IMPL is None:
        from numba import njit

        _JIT_IMPL = njit(cache=True, nogil=True)(_PY_IMPL)
    return _JIT_IMPL


def dfs_collect(indptr, indices, length_l, weight_nl, dist, source, r_c, budget):
    """Materialize every admissible simple path leaving ``source``.

    Returns a list of ``(vertices, cost_l, cost_nl)`` tuples in lexicographic
    order of the vertex sequences, or raises ``OverflowError`` past the
    budget (wrapped by callers into PathBudgetError). Pure Python: used for
    inspection and small-scale verification, not in the hot path.
    """
    chain = [int(source)]
    paths = []
    n = indptr.shape[0] - 1
    on_path = np.zeros(n, dtype=bool)
    on_path[source] = True
    stack_edge = [indptr[source]]
    cost_l = [0.0]
    cost_nl = [0.0]

    while chain:
        u = chain[-1]
        e = stack_edge[-1]
        if e < indptr[u + 1]:
            stack_edge[-1] = e + 1
            v = indices[e]
            if on_path[v] or dist[v] > r_c:
                continue
            cl = cost_l[-1] + length_l[e]
            if cl > r_c:
                continue
            cnl = cost_nl[-1] + weight_nl[e]
            if len(paths) >= budget:
                raise OverflowError
            chain.append(int(v))
            paths.append((tuple(chain), float(cl), float(cnl)))
            stack_edge.append(indptr[v])
            cost_l.append(cl)
            cost_nl.append(cnl)
            on_path[v] = True
        else:
            on_path[u] = False
            chain.pop()
            stack_edge.pop()
            cost_l.pop()
            cost_nl.pop()
    return paths
