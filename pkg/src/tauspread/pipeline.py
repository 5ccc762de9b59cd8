"""Orchestration: inputs -> graphs -> operators -> simulation -> reports.

Eigendecomposition and admissible-path enumeration dominate runtime on
realistic connectomes, so both are cached on disk under ``<out>/cache/``
keyed by a content hash of the connectome plus the governing parameters;
cache hits reproduce the computed arrays bit-for-bit (lossless .npz).
Reports are written with sorted keys and no timestamps, so identical
configs and inputs yield byte-identical files.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import __version__, evaluation, graphs, io, spectral
from .config import RunConfig
from .dynamics import (
    ModelParams,
    SimulationSetup,
    Trajectory,
    make_tau_operator,
    run_simulation,
    source_vector,
    with_sweep_point,
)
from .errors import ConfigError
from ._pathcore import env_backend


@dataclass(frozen=True, eq=False)
class Workspace:
    """Parsed inputs plus every precomputed operator ingredient for one config."""

    cfg: RunConfig
    raw: io.RawConnectome
    atlas: io.RoiAtlas
    clinical: io.ClinicalTable | None
    graph_p: graphs.WeightedGraph
    graph_l: graphs.WeightedGraph
    graph_nl: graphs.WeightedGraph
    graph_c: graphs.WeightedGraph
    connectivity: graphs.CumulativeConnectivity
    lap_ab: np.ndarray
    tau_op: object
    tau_lap_kind: str | None
    basis: spectral.SpectralBasis | None
    kernel: spectral.Kernel | None
    source_vertices: tuple[int, ...]


def _raw_digest(raw: io.RawConnectome) -> str:
    h = hashlib.sha256()
    h.update("\n".join(raw.labels).encode())
    h.update(raw.edge_index.tobytes())
    h.update(raw.fiber_count.tobytes())
    h.update(raw.fiber_length.tobytes())
    return h.hexdigest()


def _cache_dir(cfg: RunConfig) -> Path:
    path = cfg.out_dir / "cache"
    path.mkdir(parents=True, exist_ok=True)
    return path


def cached_cumulative(cfg: RunConfig, raw: io.RawConnectome, threads: int):
    """Cumulative graph + connectivity, cached by connectome content, r_c and budget."""
    key = hashlib.sha256(
        f"cumulative|{_raw_digest(raw)}|{cfg.r_c!r}|{cfg.path_budget}".encode()
    ).hexdigest()[:24]
    cache_file = _cache_dir(cfg) / f"cumulative_{key}.npz"
    if cache_file.is_file():
        data = np.load(cache_file)
        graph = graphs.WeightedGraph(weights=data["weights"], kind="cumulative")
        return graph, graphs.CumulativeConnectivity(d=data["d"])
    graph, conn = graphs.cumulative_build(
        raw, cfg.r_c, max_paths=cfg.path_budget, threads=threads
    )
    np.savez(cache_file, weights=graph.weights, d=conn.d)
    return graph, conn


def cached_basis(cfg: RunConfig, lap: spectral.Laplacian) -> spectral.SpectralBasis:
    """Spectral basis cached by the Laplacian content."""
    key = hashlib.sha256(b"basis|" + lap.matrix.tobytes()).hexdigest()[:24]
    cache_file = _cache_dir(cfg) / f"basis_{key}.npz"
    if cache_file.is_file():
        data = np.load(cache_file)
        return spectral.SpectralBasis(eigenvalues=data["eigenvalues"], vectors=data["vectors"])
    basis = spectral.eigendecompose(lap)
    np.savez(cache_file, eigenvalues=basis.eigenvalues, vectors=basis.vectors)
    return basis


def resolve_sources(cfg: RunConfig, atlas: io.RoiAtlas, required: bool = True) -> tuple[int, ...]:
    if cfg.source_spec == "auto":
        vertices = atlas.source_vertices()
        if not vertices and required:
            raise ConfigError(
                "model.source is 'auto' but no atlas ROI name contains "
                f"any of {io.SOURCE_ROI_SUBSTRINGS}"
            )
        return vertices
    names = list(cfg.source_spec)
    if not names:
        return ()
    vertices = atlas.vertices_of_rois(names)
    found = {atlas.roi_names[v] for v in vertices}
    missing = sorted(set(names) - found)
    if missing:
        raise ConfigError(f"model.source ROIs absent from atlas: {missing}")
    return tuple(int(v) for v in vertices)


def build_workspace(cfg: RunConfig, threads: int = 1, need_clinical: bool = True) -> Workspace:
    raw = io.parse_connectome(cfg.nodes_path, cfg.edges_path)
    atlas = io.parse_atlas(cfg.atlas_path, raw.vertex_count)
    clinical = None
    if cfg.clinical_path is not None:
        clinical = io.parse_clinical_table(cfg.clinical_path)
    elif need_clinical:
        raise ConfigError("paths.clinical is required for this command")

    graph_l = graphs.build_structural(raw, "L")
    graph_nl = graphs.build_structural(raw, "NL")
    graph_p = graphs.build_proximity(raw, cfg.r_p, cfg.delta_p)
    graph_c, connectivity = cached_cumulative(cfg, raw, threads)
    lap_ab = spectral.laplacian(graph_p).matrix

    choice = cfg.operator
    basis = None
    kernel = None
    tau_lap_kind = None
    if choice.is_convolution:
        basis_graph = graph_l if choice.variant == "convolution_GL" else graph_nl
        basis = cached_basis(cfg, spectral.laplacian(basis_graph))
        if choice.kernel_kind == "cumulative":
            kernel = spectral.cumulative_kernel(connectivity, cfg.delta_k, cfg.normalize_kernel)
        else:
            kernel = spectral.shortest_path_kernel(graph_l, cfg.r_c, cfg.delta_k_sp)
        tau_op = make_tau_operator(choice, basis=basis, kernel=kernel)
    else:
        tau_graph = {"diffusion_GC": graph_c, "diffusion_GL": graph_l,
                     "diffusion_GNL": graph_nl}[choice.variant]
        tau_lap_kind = tau_graph.kind
        tau_op = make_tau_operator(choice, lap_tau=spectral.laplacian(tau_graph).matrix)

    return Workspace(
        cfg=cfg, raw=raw, atlas=atlas, clinical=clinical,
        graph_p=graph_p, graph_l=graph_l, graph_nl=graph_nl, graph_c=graph_c,
        connectivity=connectivity, lap_ab=lap_ab, tau_op=tau_op,
        tau_lap_kind=tau_lap_kind, basis=basis, kernel=kernel,
        source_vertices=resolve_sources(cfg, atlas, required=need_clinical),
    )


def _params_for(ws: Workspace) -> ModelParams:
    return replace(ws.cfg.model, source_vertices=ws.source_vertices)


def _c_u1_vector(ws: Workspace) -> np.ndarray | None:
    if ws.cfg.c_u1_rois is None:
        return None
    vertices = ws.atlas.vertices_of_rois(ws.cfg.c_u1_rois)
    if vertices.size == 0:
        raise ConfigError(f"model.c_u1_rois matched no atlas vertices: {ws.cfg.c_u1_rois}")
    return source_vector(ws.raw.vertex_count, vertices, value=ws.cfg.model.c_u1)


def simulation_setup(ws: Workspace, params: ModelParams | None = None) -> SimulationSetup:
    return SimulationSetup(
        params=params if params is not None else _params_for(ws),
        operator=ws.cfg.operator,
        lap_ab=ws.lap_ab,
        tau_op=ws.tau_op,
        n=ws.raw.vertex_count,
        c_u1_vector=_c_u1_vector(ws),
    )


def default_output_times(cfg: RunConfig) -> tuple[float, ...]:
    if cfg.output_times is not None:
        return cfg.output_times
    return tuple(np.linspace(cfg.model.t0, cfg.model.tf, 11))


def evaluate_final_w(ws: Workspace, w_final: np.ndarray):
    """Network means and pattern for one simulated final tau vector."""
    selection = io.select_significant_rois(ws.clinical, ws.cfg.roi_count)
    labels_present = {ws.atlas.network_labels[v]
                      for v in ws.atlas.vertices_of_rois(selection)}
    networks = [lab for lab in evaluation.TIE_BREAK_ORDER
                if lab in labels_present or lab == "S"]
    means = evaluation.network_means_simulated(w_final, ws.atlas, selection, networks)
    return means, evaluation.pattern_string(means)


def simulate_with_report(
    ws: Workspace,
    rtol: float | None = None,
    atol: float | None = None,
    store_steps: bool = True,
) -> tuple[Trajectory, dict]:
    cfg = ws.cfg
    rtol = cfg.rtol if rtol is None else rtol
    atol = cfg.atol if atol is None else atol
    traj, report = run_simulation(
        simulation_setup(ws), rtol=rtol, atol=atol,
        output_times=default_output_times(cfg), store_steps=store_steps,
    )
    means, pattern = evaluate_final_w(ws, traj.w[-1])
    report["network_means"] = [[label, value] for label, value in means.entries]
    report["roi_selection"] = list(means.roi_selection)
    report["pattern"] = pattern.pattern
    report["pattern_ties"] = [list(pair) for pair in pattern.ties]
    report["version"] = __version__
    report["config_hash"] = cfg.config_hash
    report["backend"] = env_backend()
    return traj, report


def sweep_with_report(ws: Workspace, threads: int = 1,
                      rtol: float | None = None, atol: float | None = None) -> dict:
    cfg = ws.cfg
    if cfg.sweep_gamma3 is None or cfg.sweep_c_w is None:
        raise ConfigError("sweep.gamma3 and sweep.c_w are required for the sweep command")
    rtol = cfg.rtol if rtol is None else rtol
    atol = cfg.atol if atol is None else atol

    if cfg.sweep_reference is not None:
        reference = cfg.sweep_reference
    else:
        reference = evaluation.clinical_pattern(
            ws.clinical, cfg.roi_count, cfg.sensorimotor_mean
        ).pattern

    base_params = _params_for(ws)
    c_vec = _c_u1_vector(ws)

    def simulate_point(gamma3, c_w):
        setup = SimulationSetup(
            params=with_sweep_point(base_params, gamma3, c_w),
            operator=cfg.operator, lap_ab=ws.lap_ab, tau_op=ws.tau_op,
            n=ws.raw.vertex_count, c_u1_vector=c_vec,
        )
        traj, _ = run_simulation(setup, rtol=rtol, atol=atol,
                                 output_times=None, store_steps=False)
        _, pattern = evaluate_final_w(ws, traj.w[-1])
        return pattern

    result = evaluation.sweep(simulate_point, cfg.sweep_gamma3, cfg.sweep_c_w,
                              reference, threads=threads)
    return {
        "version": __version__,
        "config_hash": cfg.config_hash,
        "backend": env_backend(),
        "reference": result.reference,
        "grid": {"gamma3": list(cfg.sweep_gamma3), "c_w": list(cfg.sweep_c_w)},
        "points": [pt.as_dict() for pt in result.points],
        "min_hd": result.min_hd,
        "representative": result.representative.as_dict() if result.representative else None,
        "solver": {"rtol": rtol, "atol": atol},
    }


def write_json(payload: dict, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_trajectory_csv(traj: Trajectory, path: Path) -> None:
    """Rows ``t,vertex_id,u1,u2,u3,w`` at the requested output times."""
    idx = np.flatnonzero(traj.requested)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("t,vertex_id,u1,u2,u3,w\n")
        for k in idx:
            t = float(traj.t[k])
            for v in range(traj.u1.shape[1]):
                fh.write(
                    f"{t!r},{v},{float(traj.u1[k, v])!r},{float(traj.u2[k, v])!r},"
                    f"{float(traj.u3[k, v])!r},{float(traj.w[k, v])!r}\n"
                )


def cmd_build(cfg: RunConfig, threads: int = 1) -> dict:
    """Write graph and spectrum artifacts; idempotent."""
    ws = build_workspace(cfg, threads=threads, need_clinical=False)
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    graphs.write_graph_csv(ws.graph_l, out / "graph_L.csv")
    graphs.write_graph_csv(ws.graph_nl, out / "graph_NL.csv")
    graphs.write_graph_csv(ws.graph_p, out / "graph_P.csv")
    graphs.write_graph_csv(ws.graph_c, out / "graph_C.csv")
    with open(out / "cumulative_connectivity.csv", "w", encoding="utf-8") as fh:
        fh.write("vertex_id,value\n")
        for v, value in enumerate(ws.connectivity.d):
            fh.write(f"{v},{float(value)!r}\n")
    if ws.basis is not None:
        spectral.write_spectrum_csv(ws.basis, out / "eigenvalues.csv")
    else:
        tau_graph = {"cumulative": ws.graph_c, "structural_L": ws.graph_l,
                     "structural_NL": ws.graph_nl}[ws.tau_lap_kind]
        basis = cached_basis(cfg, spectral.laplacian(tau_graph))
        spectral.write_spectrum_csv(basis, out / "eigenvalues.csv")
    if ws.kernel is not None:
        spectral.write_kernel_csv(ws.kernel, out / "kernel.csv")
    return {"out_dir": str(out), "vertices": ws.raw.vertex_count,
            "edges": ws.raw.edge_count, "config_hash": cfg.config_hash}


def cmd_simulate(cfg: RunConfig, threads: int = 1,
                 rtol: float | None = None, atol: float | None = None) -> dict:
    ws = build_workspace(cfg, threads=threads)
    traj, report = simulate_with_report(ws, rtol=rtol, atol=atol)
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    write_json(report, out / "report.json")
    write_trajectory_csv(traj, out / "trajectory.csv")
    return report


def cmd_sweep(cfg: RunConfig, threads: int = 1,
              rtol: float | None = None, atol: float | None = None) -> dict:
    ws = build_workspace(cfg, threads=threads)
    report = sweep_with_report(ws, threads=threads, rtol=rtol, atol=atol)
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    write_json(report, out / "sweep.json")
    return report


def cmd_evaluate_clinical(cfg: RunConfig) -> dict:
    if cfg.clinical_path is None:
        raise ConfigError("paths.clinical is required for evaluate-clinical")
    table = io.parse_clinical_table(cfg.clinical_path)
    means = evaluation.clinical_network_means(table, cfg.roi_count, cfg.sensorimotor_mean)
    pattern = evaluation.pattern_string(means)
    report = {
        "version": __version__,
        "config_hash": cfg.config_hash,
        "roi_count": cfg.roi_count,
        "sensorimotor_mean": cfg.sensorimotor_mean,
        "roi_selection": list(means.roi_selection),
        "network_means": [[label, value] for label, value in means.entries],
        "pattern": pattern.pattern,
        "pattern_ties": [list(pair) for pair in pattern.ties],
    }
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    write_json(report, out / "clinical.json")
    return report
