"""Network-mean tau values, deterioration patterns and the sweep harness.

A deterioration pattern orders network labels by descending mean tau.
Exactly equal means are resolved by the fixed priority T, F, O, L, S and
reported as ties, so every pattern is deterministic. Simulated means
average over member vertices; clinical means average over ROI rows (the
clinical table is ROI-level). The sensorimotor network is special-cased:
its simulated mean runs over all atlas vertices labelled S regardless of
which ROIs were selected as significant, and its clinical mean is a
supplied scalar (the significance table does not contain it).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import EvaluationError
from .io import ClinicalTable, RoiAtlas, select_significant_rois

TIE_BREAK_ORDER = ("T", "F", "O", "L", "S")
_PRIORITY = {label: k for k, label in enumerate(TIE_BREAK_ORDER)}


@dataclass(frozen=True)
class NetworkAverages:
    """Ordered (label, mean) pairs plus the ROI selection that produced them."""

    entries: tuple[tuple[str, float], ...]
    roi_selection: tuple[str, ...]
    source: str  # "clinical" | "simulated"

    def as_dict(self) -> dict:
        return {label: value for label, value in self.entries}


@dataclass(frozen=True)
class PatternResult:
    """Pattern text plus any exactly-tied label pairs (already resolved)."""

    pattern: str
    ties: tuple[tuple[str, str], ...] = ()


@dataclass(frozen=True)
class SweepPoint:
    gamma3: float
    c_w: float
    pattern: str | None
    hd: int | None
    status: str  # "ok" | "error"
    error: str | None = None

    def as_dict(self) -> dict:
        return {"gamma3": self.gamma3, "c_w": self.c_w, "pattern": self.pattern,
                "hd": self.hd, "status": self.status, "error": self.error}


@dataclass(frozen=True)
class SweepResult:
    reference: str
    points: tuple[SweepPoint, ...]
    min_hd: int | None
    representative: SweepPoint | None


def _canonical_labels(labels) -> list[str]:
    unknown = [lab for lab in labels if lab not in _PRIORITY]
    if unknown:
        raise EvaluationError(f"unknown network labels {unknown}")
    return [lab for lab in TIE_BREAK_ORDER if lab in set(labels)]


def network_means_simulated(
    w_final: np.ndarray,
    atlas: RoiAtlas,
    roi_selection,
    networks=TIE_BREAK_ORDER,
) -> NetworkAverages:
    """Mean final tau per network over vertices of the selected ROIs.

    The S network averages over every S-labelled vertex independent of the
    selection. A configured network with no member vertices is an error.
    """
    w_final = np.asarray(w_final, dtype=np.float64)
    if w_final.shape != (atlas.vertex_count,):
        raise EvaluationError(
            f"tau vector length {w_final.shape} does not match atlas ({atlas.vertex_count})"
        )
    selection = tuple(roi_selection)
    atlas_names = set(atlas.roi_names)
    missing = [name for name in selection if name not in atlas_names]
    if missing:
        raise EvaluationError(f"selected ROIs absent from atlas: {missing}")
    selected = set(selection)
    selected_mask = np.array([name in selected for name in atlas.roi_names])
    labels_arr = np.array(atlas.network_labels)
    entries = []
    for label in _canonical_labels(networks):
        if label == "S":
            members = np.flatnonzero(labels_arr == "S")
        else:
            members = np.flatnonzero((labels_arr == label) & selected_mask)
        if members.size == 0:
            raise EvaluationError(f"network {label} has no member vertices")
        entries.append((label, float(np.mean(w_final[members]))))
    return NetworkAverages(entries=tuple(entries), roi_selection=selection, source="simulated")


def clinical_network_means(table: ClinicalTable, k: int, sensorimotor_value: float) -> NetworkAverages:
    """ROI-level mean AD tau per network over the k most significant ROIs."""
    selection = select_significant_rois(table, k)
    selected = set(selection)
    chosen = sorted(
        (row for row in table.rows if row.roi_name in selected),
        key=lambda r: (r.p_value, r.roi_name),
    )
    grouped: dict[str, list[float]] = {}
    for row in chosen:
        grouped.setdefault(row.network_label, []).append(row.ad_mean)
    entries = []
    for label in _canonical_labels(list(grouped) + ["S"]):
        if label == "S":
            entries.append(("S", float(sensorimotor_value)))
        else:
            entries.append((label, float(np.mean(grouped[label]))))
    return NetworkAverages(entries=tuple(entries), roi_selection=tuple(selection), source="clinical")


def pattern_string(averages: NetworkAverages) -> PatternResult:
    """Labels ordered by descending mean; exact ties resolved by priority."""
    entries = averages.entries
    if not entries:
        raise EvaluationError("no network means to order")
    labels = [lab for lab, _ in entries]
    if len(set(labels)) != len(labels):
        raise EvaluationError(f"duplicate network labels in {labels}")
    _canonical_labels(labels)
    ranked = sorted(entries, key=lambda e: (-e[1], _PRIORITY[e[0]]))
    ties = tuple(
        (a[0], b[0]) if _PRIORITY[a[0]] < _PRIORITY[b[0]] else (b[0], a[0])
        for a, b in combinations(entries, 2)
        if a[1] == b[1]
    )
    return PatternResult(pattern="".join(lab for lab, _ in ranked), ties=ties)


def clinical_pattern(table: ClinicalTable, k: int, sensorimotor_value: float) -> PatternResult:
    """Deterioration pattern of the clinical table at selection size k."""
    return pattern_string(clinical_network_means(table, k, sensorimotor_value))


def hamming(a: str, b: str) -> int:
    """Number of positions at which two equal-length strings differ."""
    if len(a) != len(b):
        raise EvaluationError(f"pattern lengths differ: {a!r} vs {b!r}")
    return sum(1 for x, y in zip(a, b) if x != y)


def sweep(
    simulate_fn,
    gamma3_grid,
    c_w_grid,
    reference: str,
    threads: int = 1,
) -> SweepResult:
    """Evaluate the pattern on the (gamma3, c_w) grid against a reference.

    ``simulate_fn(gamma3, c_w)`` must return a PatternResult; failures are
    recorded per point without aborting. Points run concurrently when
    ``threads > 1`` and are assembled in grid order, so the result is
    identical to a sequential run. The representative is the minimal-HD
    point with smallest gamma3, then smallest c_w.
    """
    gamma3_grid = [float(g) for g in gamma3_grid]
    c_w_grid = [float(c) for c in c_w_grid]
    if not gamma3_grid or not c_w_grid:
        raise EvaluationError("sweep grids must be nonempty")
    grid = [(g3, cw) for g3 in gamma3_grid for cw in c_w_grid]

    def run_point(point):
        g3, cw = point
        try:
            result = simulate_fn(g3, cw)
            return SweepPoint(gamma3=g3, c_w=cw, pattern=result.pattern,
                              hd=hamming(result.pattern, reference), status="ok")
        except Exception as exc:  # recorded, not raised: one bad point must not kill the sweep
            return SweepPoint(gamma3=g3, c_w=cw, pattern=None, hd=None,
                              status="error", error=f"{type(exc).__name__}: {exc}")

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            points = tuple(ex.map(run_point, grid))
    else:
        points = tuple(run_point(point) for point in grid)

    ok = [pt for pt in points if pt.status == "ok"]
    if ok:
        min_hd = min(pt.hd for pt in ok)
        representative = min(
            (pt for pt in ok if pt.hd == min_hd),
            key=lambda pt: (pt.gamma3, pt.c_w),
        )
    else:
        min_hd = None
        representative = None
    return SweepResult(reference=reference, points=points, min_hd=min_hd,
                       representative=representative)
