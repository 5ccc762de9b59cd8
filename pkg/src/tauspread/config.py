"""Declarative YAML run configuration with schema validation and defaults.

Every experiment is one config file; unknown sections or keys are rejected
so typos cannot silently fall back to defaults. Numeric defaults follow the
fixed calibration used throughout: proximity threshold 25 with Gaussian
scale 150, admissibility threshold 30, kernel scales 1e-4 (cumulative) and
1 (shortest-path), clearances 0.1/0.1/0.1/0.11, aggregation 0.1, monomer
source 0.05, coupling threshold 0.01, window [0, 500], solver tolerances
1e-3/1e-6.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .dynamics import ModelParams, OperatorChoice
from .errors import ConfigError
from .graphs import DEFAULT_PATH_BUDGET


@dataclass(frozen=True)
class RunConfig:
    nodes_path: Path
    edges_path: Path
    atlas_path: Path
    clinical_path: Path | None
    r_p: float
    delta_p: float
    r_c: float
    path_budget: int
    delta_k: float
    delta_k_sp: float
    normalize_kernel: bool
    model: ModelParams  # source_vertices resolved later from the atlas
    source_spec: object  # "auto" | list of ROI names (possibly empty)
    c_u1_rois: tuple[str, ...] | None
    operator: OperatorChoice
    roi_count: int
    sensorimotor_mean: float
    rtol: float
    atol: float
    output_times: tuple[float, ...] | None
    out_dir: Path
    sweep_gamma3: tuple[float, ...] | None
    sweep_c_w: tuple[float, ...] | None
    sweep_reference: str | None
    resolved: dict = field(repr=False, default_factory=dict)

    @property
    def config_hash(self) -> str:
        # the output location is not a semantic input, so it does not
        # participate in the hash
        semantic = {k: v for k, v in self.resolved.items() if k != "output"}
        payload = json.dumps(semantic, sort_keys=True).encode()
        return hashlib.sha256(payload).hexdigest()[:16]


_SCHEMA = {
    "paths": {"nodes", "edges", "atlas", "clinical"},
    "graph": {"r_p", "delta_p", "r_c", "path_budget"},
    "kernel": {"delta_k", "delta_k_sp", "normalize"},
    "model": {"eps", "gamma1", "gamma2", "gamma3", "alpha", "c_u1", "c_w", "u_w",
              "sigma1", "sigma2", "sigma3", "sigma4", "t0", "tf", "source", "c_u1_rois"},
    "operator": {"variant", "kernel_kind"},
    "evaluation": {"roi_count", "sensorimotor_mean"},
    "solver": {"rtol", "atol", "output_times"},
    "output": {"dir"},
    "sweep": {"gamma3", "c_w", "reference"},
}


def _check_schema(data: dict) -> None:
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")
    for section, content in data.items():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown config section {section!r}")
        if content is None:
            continue
        if not isinstance(content, dict):
            raise ConfigError(f"section {section!r} must be a mapping")
        for key in content:
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key {section}.{key!r}")


def _get(data, section, key, default=None):
    sect = data.get(section) or {}
    return sect.get(key, default)


def _number(data, section, key, default, *, positive=False, nonnegative=False):
    value = _get(data, section, key, default)
    if value is None:
        raise ConfigError(f"{section}.{key} is required")
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{section}.{key} must be a number, got {value!r}")
    value = float(value)
    if positive and value <= 0:
        raise ConfigError(f"{section}.{key} must be positive, got {value}")
    if nonnegative and value < 0:
        raise ConfigError(f"{section}.{key} must be nonnegative, got {value}")
    return value


def _integer(data, section, key, default, *, positive=False):
    value = _get(data, section, key, default)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{section}.{key} must be an integer, got {value!r}")
    if positive and value <= 0:
        raise ConfigError(f"{section}.{key} must be positive, got {value}")
    return value


def _float_list(data, section, key):
    value = _get(data, section, key)
    if value is None:
        return None
    if not isinstance(value, list) or not value:
        raise ConfigError(f"{section}.{key} must be a nonempty list of numbers")
    out = []
    for item in value:
        if isinstance(item, bool) or not isinstance(item, (int, float)):
            raise ConfigError(f"{section}.{key} must contain only numbers, got {item!r}")
        out.append(float(item))
    return tuple(out)


def load_config(path, overrides: dict | None = None, check_files: bool = True) -> RunConfig:
    """Load, validate and resolve a YAML config.

    ``overrides`` maps flat keys (``"solver.rtol"``, ``"output.dir"``,
    ``"threads"`` excluded -- that is a CLI flag) onto replacement values
    applied before validation. With ``check_files`` every referenced input
    file must exist.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path}: {exc}") from exc
    if data is None:
        data = {}
    if overrides:
        for dotted, value in overrides.items():
            section, _, key = dotted.partition(".")
            if not key:
                raise ConfigError(f"override key must be section.key, got {dotted!r}")
            data.setdefault(section, {})
            if data[section] is None:
                data[section] = {}
            data[section][key] = value
    _check_schema(data)

    base = path.parent

    def _resolve_path(section, key, required):
        value = _get(data, section, key)
        if value is None:
            if required:
                raise ConfigError(f"{section}.{key} is required")
            return None
        if not isinstance(value, str):
            raise ConfigError(f"{section}.{key} must be a path string")
        resolved = (base / value).resolve()
        if check_files and not resolved.is_file():
            raise ConfigError(f"{section}.{key} does not exist: {resolved}")
        return resolved

    nodes = _resolve_path("paths", "nodes", required=True)
    edges = _resolve_path("paths", "edges", required=True)
    atlas = _resolve_path("paths", "atlas", required=True)
    clinical = _resolve_path("paths", "clinical", required=False)

    r_p = _number(data, "graph", "r_p", 25.0, positive=True)
    delta_p = _number(data, "graph", "delta_p", 150.0, positive=True)
    r_c = _number(data, "graph", "r_c", 30.0, positive=True)
    path_budget = _integer(data, "graph", "path_budget", DEFAULT_PATH_BUDGET, positive=True)

    delta_k = _number(data, "kernel", "delta_k", 1e-4, positive=True)
    delta_k_sp = _number(data, "kernel", "delta_k_sp", 1.0, positive=True)
    normalize = _get(data, "kernel", "normalize", False)
    if not isinstance(normalize, bool):
        raise ConfigError("kernel.normalize must be a boolean")

    model = ModelParams(
        eps=_number(data, "model", "eps", 0.1, positive=True),
        gamma1=_number(data, "model", "gamma1", 0.001, nonnegative=True),
        gamma2=_number(data, "model", "gamma2", 0.001, nonnegative=True),
        gamma3=_number(data, "model", "gamma3", None, nonnegative=True),
        alpha=_number(data, "model", "alpha", 0.1, nonnegative=True),
        c_u1=_number(data, "model", "c_u1", 0.05, nonnegative=True),
        c_w=_number(data, "model", "c_w", None, nonnegative=True),
        u_w=_number(data, "model", "u_w", 0.01, nonnegative=True),
        sigma1=_number(data, "model", "sigma1", 0.1, nonnegative=True),
        sigma2=_number(data, "model", "sigma2", 0.1, nonnegative=True),
        sigma3=_number(data, "model", "sigma3", 0.1, nonnegative=True),
        sigma4=_number(data, "model", "sigma4", 0.11, nonnegative=True),
        t0=_number(data, "model", "t0", 0.0),
        tf=_number(data, "model", "tf", 500.0),
    )
    model.validate()

    source_spec = _get(data, "model", "source", "auto")
    if source_spec != "auto":
        if not isinstance(source_spec, list) or not all(isinstance(s, str) for s in source_spec):
            raise ConfigError('model.source must be "auto" or a list of ROI names')
        source_spec = list(source_spec)

    c_u1_rois = _get(data, "model", "c_u1_rois")
    if c_u1_rois is not None:
        if not isinstance(c_u1_rois, list) or not all(isinstance(s, str) for s in c_u1_rois):
            raise ConfigError("model.c_u1_rois must be a list of ROI names")
        c_u1_rois = tuple(c_u1_rois)

    variant = _get(data, "operator", "variant", "diffusion_GC")
    kernel_kind = _get(data, "operator", "kernel_kind")
    operator = OperatorChoice(variant=variant, kernel_kind=kernel_kind)
    operator.validate()

    roi_count = _integer(data, "evaluation", "roi_count", 6, positive=True)
    sensorimotor_mean = _number(data, "evaluation", "sensorimotor_mean", 1.0, nonnegative=True)

    rtol = _number(data, "solver", "rtol", 1e-3, positive=True)
    atol = _number(data, "solver", "atol", 1e-6, positive=True)
    output_times = _float_list(data, "solver", "output_times")
    if output_times is not None:
        bad = [t for t in output_times if not model.t0 <= t <= model.tf]
        if bad:
            raise ConfigError(f"solver.output_times outside [{model.t0}, {model.tf}]: {bad}")

    out_value = _get(data, "output", "dir", "out")
    if not isinstance(out_value, str):
        raise ConfigError("output.dir must be a path string")
    out_dir = (base / out_value).resolve()

    sweep_gamma3 = _float_list(data, "sweep", "gamma3")
    sweep_c_w = _float_list(data, "sweep", "c_w")
    sweep_reference = _get(data, "sweep", "reference")
    if sweep_reference is not None and not isinstance(sweep_reference, str):
        raise ConfigError("sweep.reference must be a string")

    resolved = {
        "paths": {"nodes": str(nodes), "edges": str(edges), "atlas": str(atlas),
                  "clinical": str(clinical) if clinical else None},
        "graph": {"r_p": r_p, "delta_p": delta_p, "r_c": r_c, "path_budget": path_budget},
        "kernel": {"delta_k": delta_k, "delta_k_sp": delta_k_sp, "normalize": normalize},
        "model": {**model.as_dict(), "source": source_spec,
                  "c_u1_rois": list(c_u1_rois) if c_u1_rois else None},
        "operator": operator.as_dict(),
        "evaluation": {"roi_count": roi_count, "sensorimotor_mean": sensorimotor_mean},
        "solver": {"rtol": rtol, "atol": atol,
                   "output_times": list(output_times) if output_times else None},
        "output": {"dir": str(out_dir)},
        "sweep": {"gamma3": list(sweep_gamma3) if sweep_gamma3 else None,
                  "c_w": list(sweep_c_w) if sweep_c_w else None,
                  "reference": sweep_reference},
    }
    del resolved["model"]["source_vertices"]  # resolved from the atlas at run time

    return RunConfig(
        nodes_path=nodes, edges_path=edges, atlas_path=atlas, clinical_path=clinical,
        r_p=r_p, delta_p=delta_p, r_c=r_c, path_budget=path_budget,
        delta_k=delta_k, delta_k_sp=delta_k_sp, normalize_kernel=normalize,
        model=model, source_spec=source_spec, c_u1_rois=c_u1_rois,
        operator=operator, roi_count=roi_count, sensorimotor_mean=sensorimotor_mean,
        rtol=rtol, atol=atol, output_times=output_times, out_dir=out_dir,
        sweep_gamma3=sweep_gamma3, sweep_c_w=sweep_c_w, sweep_reference=sweep_reference,
        resolved=resolved,
    )
