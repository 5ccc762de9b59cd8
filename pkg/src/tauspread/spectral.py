"""Graph Laplacians, eigenbases, graph Fourier transform and tau kernels.

The Laplacian convention is L = D - W with D the diagonal of row sums.
Because the transform-domain product in ``convolve`` is not invariant under
per-eigenvector sign flips, eigenvectors carry a deterministic sign
convention: each column is flipped so its largest-magnitude component is
positive (ties resolved by lowest index). Within exactly-degenerate
eigenvalues, columns are ordered by the index of their largest-magnitude
component. Convolution output inside degenerate eigenspaces remains
basis-dependent; the convention only pins the basis reproducibly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EvaluationError, SpectralError
from .graphs import CumulativeConnectivity, WeightedGraph, _adjacency_from_graphs, _ball_distances

KERNEL_KINDS = ("cumulative", "shortest_path", "custom")


@dataclass(frozen=True, eq=False)
class Laplacian:
    """L = D - W for a weighted graph; symmetric positive semidefinite."""

    matrix: np.ndarray
    source_kind: str

    @property
    def n(self) -> int:
        return int(self.matrix.shape[0])

    def validate(self) -> None:
        m = self.matrix
        if not np.array_equal(m, m.T):
            raise SpectralError("Laplacian is not symmetric")
        scale = max(1.0, float(np.max(np.abs(m))) if m.size else 0.0)
        tol = 1e-12 * self.n * scale
        row_sums = m.sum(axis=1)
        if np.any(np.abs(row_sums) > tol):
            raise SpectralError(f"Laplacian row sums exceed {tol:g}")


@dataclass(frozen=True, eq=False)
class SpectralBasis:
    """Ascending eigenvalues and orthonormal, sign-fixed eigenvectors."""

    eigenvalues: np.ndarray  # (n,) ascending, >= 0
    vectors: np.ndarray  # (n, n), columns orthonormal
    sign_convention: str = "max-component-positive"

    @property
    def n(self) -> int:
        return int(self.vectors.shape[0])


@dataclass(frozen=True, eq=False)
class Kernel:
    """Vertex-domain kernel vector with its provenance."""

    values: np.ndarray
    provenance: str

    @property
    def n(self) -> int:
        return int(self.values.shape[0])

    def validate(self) -> None:
        if self.provenance not in KERNEL_KINDS:
            raise EvaluationError(f"unknown kernel provenance {self.provenance!r}")
        if not np.all(np.isfinite(self.values)):
            raise EvaluationError("kernel has non-finite entries")


def laplacian(graph: WeightedGraph) -> Laplacian:
    """L = D - W with D the diagonal of row sums of W."""
    w = graph.weights
    lap = np.diag(w.sum(axis=1)) - w
    out = Laplacian(matrix=lap, source_kind=graph.kind)
    out.validate()
    return out


def _fix_signs_and_ties(eigenvalues: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    n = vectors.shape[1]
    anchors = np.empty(n, dtype=np.int64)
    for k in range(n):
        col = vectors[:, k]
        idx = int(np.argmax(np.abs(col)))  # first occurrence wins on ties
        if col[idx] < 0:
            vectors[:, k] = -col
        anchors[k] = idx
    # reorder columns inside exactly-equal eigenvalue groups by anchor index
    start = 0
    while start < n:
        stop = start + 1
        while stop < n and eigenvalues[stop] == eigenvalues[start]:
            stop += 1
        if stop - start > 1:
            order = np.argsort(anchors[start:stop], kind="stable") + start
            vectors[:, start:stop] = vectors[:, order]
        start = stop
    return vectors


def eigendecompose(lap: Laplacian) -> SpectralBasis:
    """Full symmetric eigendecomposition with the deterministic sign convention.

    Eigenvalues below -1e-10 * scale indicate a non-PSD input and raise;
    tiny negative round-off is clamped to zero.
    """
    try:
        eigenvalues, vectors = np.linalg.eigh(lap.matrix)
    except np.linalg.LinAlgError as exc:
        raise SpectralError(f"eigensolver failed to converge: {exc}") from exc
    scale = max(1.0, float(np.max(np.abs(eigenvalues))) if eigenvalues.size else 0.0)
    if np.any(eigenvalues < -1e-10 * scale):
        raise SpectralError(
            f"Laplacian not positive semidefinite (min eigenvalue {eigenvalues.min():g})"
        )
    eigenvalues = np.where(eigenvalues < 0.0, 0.0, eigenvalues)
    vectors = _fix_signs_and_ties(eigenvalues, np.array(vectors))
    return SpectralBasis(eigenvalues=eigenvalues, vectors=vectors)


def gft(basis: SpectralBasis, x: np.ndarray) -> np.ndarray:
    """Forward graph Fourier transform: project onto the eigenbasis."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (basis.n,):
        raise EvaluationError(f"signal length {x.shape} != {basis.n}")
    return basis.vectors.T @ x


def igft(basis: SpectralBasis, xhat: np.ndarray) -> np.ndarray:
    """Inverse graph Fourier transform."""
    xhat = np.asarray(xhat, dtype=np.float64)
    if xhat.shape != (basis.n,):
        raise EvaluationError(f"spectrum length {xhat.shape} != {basis.n}")
    return basis.vectors @ xhat


def convolve(basis: SpectralBasis, kernel: Kernel, w: np.ndarray) -> np.ndarray:
    """Spectral convolution: inverse transform of the elementwise product
    of the transformed kernel and signal."""
    if kernel.n != basis.n:
        raise EvaluationError(f"kernel length {kernel.n} != {basis.n}")
    return igft(basis, gft(basis, kernel.values) * gft(basis, w))


def cumulative_kernel(
    d: CumulativeConnectivity | np.ndarray,
    delta_k: float,
    normalize: bool = False,
) -> Kernel:
    """Gaussian-like kernel exp(-d_i^2 / delta_k) of cumulative connectivity.

    With ``normalize`` the connectivity vector is scaled by its maximum
    first; that option exists because raw path-length sums on realistic
    connectomes push exp(-d^2/delta_k) into underflow for small delta_k.
    """
    if delta_k <= 0:
        raise ValueError("delta_k must be positive")
    values = d.d if isinstance(d, CumulativeConnectivity) else np.asarray(d, dtype=np.float64)
    if np.any(values < 0):
        raise ValueError("cumulative connectivity must be nonnegative")
    if normalize:
        top = values.max() if values.size else 0.0
        if top <= 0.0:
            raise ValueError("cannot normalize an all-zero connectivity vector")
        values = values / top
    kern = Kernel(values=np.exp(-(values * values) / delta_k), provenance="cumulative")
    kern.validate()
    return kern


def shortest_path_kernel(g_l: WeightedGraph, r_c: float, delta_k_sp: float) -> Kernel:
    """Kernel summing exp(-sp_ij / delta_k_sp) over shortest-path distances.

    Only other vertices whose shortest fiber-length distance is at most
    ``r_c`` (non-strict, mirroring admissibility) contribute; an isolated
    vertex gets an empty sum of zero.
    """
    if r_c <= 0 or delta_k_sp <= 0:
        raise ValueError("r_c and delta_k_sp must be positive")
    adj = _adjacency_from_graphs(g_l, g_l)
    dist = _ball_distances(adj, r_c)
    np.fill_diagonal(dist, np.inf)
    contrib = np.where(dist <= r_c, np.exp(-dist / delta_k_sp), 0.0)
    kern = Kernel(values=contrib.sum(axis=1), provenance="shortest_path")
    kern.validate()
    return kern


def write_kernel_csv(kernel: Kernel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("vertex_id,value\n")
        for v, value in enumerate(kernel.values):
            fh.write(f"{v},{float(value)!r}\n")


def write_spectrum_csv(basis: SpectralBasis, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("index,eigenvalue\n")
        for k, value in enumerate(basis.eigenvalues):
            fh.write(f"{k},{float(value)!r}\n")
