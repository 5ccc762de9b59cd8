"""Parsing, validation and serialization of the canonical CSV inputs.

Four file kinds are handled here:

* nodes CSV      -- header ``vertex_id,label``
* edges CSV      -- header ``source_id,target_id,fiber_count,mean_length_mm``
* atlas CSV      -- header ``vertex_id,roi_name,network_label``
* clinical CSV   -- header ``roi_name,network_label,p_value,ad_mean,ad_std,cn_mean,cn_std``

All files are UTF-8 with ``.`` as decimal separator; lines starting with ``#``
are comments. Parsed objects are immutable after construction.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ParseError

NETWORK_LABELS = ("T", "F", "O", "L", "S")
ATLAS_LABELS = NETWORK_LABELS + ("other",)

NODES_HEADER = ["vertex_id", "label"]
EDGES_HEADER = ["source_id", "target_id", "fiber_count", "mean_length_mm"]
ATLAS_HEADER = ["vertex_id", "roi_name", "network_label"]
CLINICAL_HEADER = ["roi_name", "network_label", "p_value", "ad_mean", "ad_std", "cn_mean", "cn_std"]

# ROI-name substrings identifying the seeding region for the misfolded-tau
# source term. Both common spellings are matched so atlases transcribed from
# differently spelled sources resolve to the same vertex set.
SOURCE_ROI_SUBSTRINGS = ("entorhinal", "enthorinal")


@dataclass(frozen=True, eq=False)
class RawConnectome:
    """Vertex labels plus an undirected edge list with fiber statistics.

    Edges are stored canonically: ``edge_index[k] = (i, j)`` with ``i < j``,
    sorted lexicographically. ``fiber_count`` may be non-integer (averaged
    connectomes carry non-integer means).
    """

    labels: tuple[str, ...]
    edge_index: np.ndarray  # (m, 2) int64, i < j
    fiber_count: np.ndarray  # (m,) float64 > 0
    fiber_length: np.ndarray  # (m,) float64 > 0, millimetres

    @property
    def vertex_count(self) -> int:
        return len(self.labels)

    @property
    def edge_count(self) -> int:
        return int(self.edge_index.shape[0])


@dataclass(frozen=True, eq=False)
class RoiAtlas:
    """Total mapping vertex -> (ROI name, network label), indexed by vertex id."""

    roi_names: tuple[str, ...]
    network_labels: tuple[str, ...]

    @property
    def vertex_count(self) -> int:
        return len(self.roi_names)

    def vertices_of_network(self, label: str) -> np.ndarray:
        return np.flatnonzero(np.array([lab == label for lab in self.network_labels]))

    def vertices_of_rois(self, roi_names) -> np.ndarray:
        wanted = set(roi_names)
        return np.flatnonzero(np.array([name in wanted for name in self.roi_names]))

    def source_vertices(self, substrings=SOURCE_ROI_SUBSTRINGS) -> tuple[int, ...]:
        hits = []
        for v, name in enumerate(self.roi_names):
            low = name.lower()
            if any(sub in low for sub in substrings):
                hits.append(v)
        return tuple(hits)


@dataclass(frozen=True)
class ClinicalRow:
    roi_name: str
    network_label: str
    p_value: float
    ad_mean: float
    ad_std: float
    cn_mean: float
    cn_std: float


@dataclass(frozen=True)
class ClinicalTable:
    """ROI-level clinical tau concentrations with group-difference p-values."""

    rows: tuple[ClinicalRow, ...]

    @property
    def roi_names(self) -> tuple[str, ...]:
        return tuple(r.roi_name for r in self.rows)


def _read_rows(path):
    """Yield (line_number, fields) skipping comments and blank lines."""
    path = Path(path)
    if not path.is_file():
        raise ParseError("file not found", path=path)
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, fields in enumerate(csv.reader(fh), start=1):
            if not fields or fields[0].lstrip().startswith("#"):
                continue
            yield lineno, [f.strip() for f in fields]


def _check_header(fields, expected, path, lineno):
    if fields != expected:
        raise ParseError(
            f"bad header: expected {','.join(expected)!r}, got {','.join(fields)!r}",
            path=path, line=lineno,
        )


def _parse_int(text, what, path, lineno):
    try:
        return int(text)
    except ValueError:
        raise ParseError(f"invalid integer for {what}: {text!r}", path=path, line=lineno) from None


def _parse_float(text, what, path, lineno):
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"invalid number for {what}: {text!r}", path=path, line=lineno) from None
    if not np.isfinite(value):
        raise ParseError(f"non-finite value for {what}: {text!r}", path=path, line=lineno)
    return value


def parse_connectome(nodes_path, edges_path) -> RawConnectome:
    """Parse the node and edge CSV files into a validated RawConnectome.

    Rejects self-loops, duplicate undirected edges, nonpositive fiber counts
    or lengths, and edge endpoints not declared in the nodes file.
    """
    rows = _read_rows(nodes_path)
    try:
        lineno, fields = next(rows)
    except StopIteration:
        raise ParseError("empty nodes file", path=nodes_path) from None
    _check_header(fields, NODES_HEADER, nodes_path, lineno)

    seen: dict[int, str] = {}
    for lineno, fields in rows:
        if len(fields) != 2:
            raise ParseError(f"expected 2 fields, got {len(fields)}", path=nodes_path, line=lineno)
        vid = _parse_int(fields[0], "vertex_id", nodes_path, lineno)
        if vid < 0:
            raise ParseError(f"negative vertex_id {vid}", path=nodes_path, line=lineno)
        if vid in seen:
            raise ParseError(f"duplicate vertex_id {vid}", path=nodes_path, line=lineno)
        seen[vid] = fields[1]
    if not seen:
        raise ParseError("nodes file declares no vertices", path=nodes_path)
    n = len(seen)
    missing = sorted(set(range(n)) - set(seen))
    if missing:
        raise ParseError(
            f"vertex ids must cover 0..{n - 1}; missing {missing[:5]}", path=nodes_path
        )
    labels = tuple(seen[v] for v in range(n))

    rows = _read_rows(edges_path)
    try:
        lineno, fields = next(rows)
    except StopIteration:
        raise ParseError("empty edges file", path=edges_path) from None
    _check_header(fields, EDGES_HEADER, edges_path, lineno)

    pairs: dict[tuple[int, int], int] = {}
    ii, jj, counts, lengths = [], [], [], []
    for lineno, fields in rows:
        if len(fields) != 4:
            raise ParseError(f"expected 4 fields, got {len(fields)}", path=edges_path, line=lineno)
        i = _parse_int(fields[0], "source_id", edges_path, lineno)
        j = _parse_int(fields[1], "target_id", edges_path, lineno)
        cnt = _parse_float(fields[2], "fiber_count", edges_path, lineno)
        length = _parse_float(fields[3], "mean_length_mm", edges_path, lineno)
        if i == j:
            raise ParseError(f"self-loop at vertex {i}", path=edges_path, line=lineno)
        for v in (i, j):
            if v < 0 or v >= n:
                raise ParseError(f"dangling endpoint {v} (graph has {n} vertices)",
                                 path=edges_path, line=lineno)
        if cnt <= 0:
            raise ParseError("nonpositive fiber count", path=edges_path, line=lineno)
        if length <= 0:
            raise ParseError("nonpositive fiber length", path=edges_path, line=lineno)
        key = (min(i, j), max(i, j))
        if key in pairs:
            raise ParseError(
                f"duplicate edge ({key[0]},{key[1]}), first seen at line {pairs[key]}",
                path=edges_path, line=lineno,
            )
        pairs[key] = lineno
        ii.append(key[0])
        jj.append(key[1])
        counts.append(cnt)
        lengths.append(length)

    edge_index = np.array(list(zip(ii, jj)), dtype=np.int64).reshape(-1, 2)
    order = np.lexsort((edge_index[:, 1], edge_index[:, 0])) if len(ii) else np.array([], dtype=np.int64)
    return RawConnectome(
        labels=labels,
        edge_index=edge_index[order],
        fiber_count=np.array(counts, dtype=np.float64)[order],
        fiber_length=np.array(lengths, dtype=np.float64)[order],
    )


def parse_atlas(path, vertex_count: int | None = None) -> RoiAtlas:
    """Parse the vertex -> ROI -> network atlas.

    The mapping must be total: every vertex id in ``[0, N)`` appears exactly
    once (``N`` is ``vertex_count`` when given, otherwise inferred from the
    file).
    """
    rows = _read_rows(path)
    try:
        lineno, fields = next(rows)
    except StopIteration:
        raise ParseError("empty atlas file", path=path) from None
    _check_header(fields, ATLAS_HEADER, path, lineno)

    entries: dict[int, tuple[str, str]] = {}
    for lineno, fields in rows:
        if len(fields) != 3:
            raise ParseError(f"expected 3 fields, got {len(fields)}", path=path, line=lineno)
        vid = _parse_int(fields[0], "vertex_id", path, lineno)
        roi, label = fields[1], fields[2]
        if label not in ATLAS_LABELS:
            raise ParseError(
                f"unknown network label {label!r} (expected one of {ATLAS_LABELS})",
                path=path, line=lineno,
            )
        if vid in entries:
            raise ParseError(f"duplicate vertex_id {vid}", path=path, line=lineno)
        entries[vid] = (roi, label)

    n = vertex_count if vertex_count is not None else len(entries)
    missing = sorted(set(range(n)) - set(entries))
    extra = sorted(set(entries) - set(range(n)))
    if missing or extra:
        raise ParseError(
            f"atlas must map every vertex in 0..{n - 1} exactly once "
            f"(missing {missing[:5]}, unexpected {extra[:5]})", path=path,
        )
    return RoiAtlas(
        roi_names=tuple(entries[v][0] for v in range(n)),
        network_labels=tuple(entries[v][1] for v in range(n)),
    )


def parse_clinical_table(path) -> ClinicalTable:
    """Parse the ROI-level clinical concentration table."""
    rows = _read_rows(path)
    try:
        lineno, fields = next(rows)
    except StopIteration:
        raise ParseError("empty clinical file", path=path) from None
    _check_header(fields, CLINICAL_HEADER, path, lineno)

    out = []
    seen: dict[str, int] = {}
    for lineno, fields in rows:
        if len(fields) != 7:
            raise ParseError(f"expected 7 fields, got {len(fields)}", path=path, line=lineno)
        roi, label = fields[0], fields[1]
        if label not in NETWORK_LABELS:
            raise ParseError(
                f"unknown network label {label!r} (expected one of {NETWORK_LABELS})",
                path=path, line=lineno,
            )
        if roi in seen:
            raise ParseError(f"duplicate roi_name {roi!r}, first seen at line {seen[roi]}",
                             path=path, line=lineno)
        seen[roi] = lineno
        p = _parse_float(fields[2], "p_value", path, lineno)
        if not 0.0 < p < 1.0:
            raise ParseError(f"p_value {p} outside (0, 1)", path=path, line=lineno)
        stats = [_parse_float(fields[k], CLINICAL_HEADER[k], path, lineno) for k in range(3, 7)]
        if any(s < 0 for s in stats):
            raise ParseError("negative concentration statistic", path=path, line=lineno)
        out.append(ClinicalRow(roi, label, p, *stats))
    return ClinicalTable(rows=tuple(out))


def select_significant_rois(table: ClinicalTable, k: int) -> list[str]:
    """The k ROI names with smallest p-value; ties broken by ascending name."""
    if k <= 0:
        raise ValueError(f"roi_count must be positive, got {k}")
    if k > len(table.rows):
        raise ValueError(f"roi_count {k} exceeds table size {len(table.rows)}")
    ranked = sorted(table.rows, key=lambda r: (r.p_value, r.roi_name))
    return [r.roi_name for r in ranked[:k]]


def _fmt(value: float) -> str:
    return repr(float(value))


def write_connectome(raw: RawConnectome, nodes_path, edges_path) -> None:
    with open(nodes_path, "w", encoding="utf-8") as fh:
        fh.write(",".join(NODES_HEADER) + "\n")
        for v, label in enumerate(raw.labels):
            fh.write(f"{v},{label}\n")
    with open(edges_path, "w", encoding="utf-8") as fh:
        fh.write(",".join(EDGES_HEADER) + "\n")
        for k in range(raw.edge_count):
            i, j = raw.edge_index[k]
            fh.write(f"{i},{j},{_fmt(raw.fiber_count[k])},{_fmt(raw.fiber_length[k])}\n")


def write_atlas(atlas: RoiAtlas, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(ATLAS_HEADER) + "\n")
        for v in range(atlas.vertex_count):
            fh.write(f"{v},{atlas.roi_names[v]},{atlas.network_labels[v]}\n")


def write_clinical_table(table: ClinicalTable, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(CLINICAL_HEADER) + "\n")
        for r in table.rows:
            fh.write(
                f"{r.roi_name},{r.network_label},{_fmt(r.p_value)},{_fmt(r.ad_mean)},"
                f"{_fmt(r.ad_std)},{_fmt(r.cn_mean)},{_fmt(r.cn_std)}\n"
            )
