"""Shared construction helpers for the test suite."""

from pathlib import Path

import numpy as np

from tauspread.io import RawConnectome

REPO_ROOT = Path(__file__).resolve().parents[1]
DATA_DIR = REPO_ROOT / "data"
CONFIG_DIR = REPO_ROOT / "configs"
DESK12 = DATA_DIR / "desk12"


def make_raw(n, edges):
    """RawConnectome from ``[(i, j, fiber_count, length), ...]``."""
    edges = sorted((min(i, j), max(i, j), c, l) for i, j, c, l in edges)
    return RawConnectome(
        labels=tuple(f"v{k}" for k in range(n)),
        edge_index=np.array([[e[0], e[1]] for e in edges], dtype=np.int64).reshape(-1, 2),
        fiber_count=np.array([e[2] for e in edges], dtype=np.float64),
        fiber_length=np.array([e[3] for e in edges], dtype=np.float64),
    )


def random_connected_raw(rng, max_n=8):
    """Random connected graph: a random spanning tree plus a few extra edges."""
    n = int(rng.integers(2, max_n + 1))
    edges = {}
    for v in range(1, n):
        u = int(rng.integers(0, v))
        edges[(u, v)] = True
    extra = int(rng.integers(0, 2 * n + 1))
    for _ in range(extra):
        u, v = rng.integers(0, n, size=2)
        u, v = int(min(u, v)), int(max(u, v))
        if u != v:
            edges[(u, v)] = True
    elist = [
        (u, v, float(rng.uniform(0.5, 5.0)), float(rng.uniform(0.5, 2.5)))
        for (u, v) in sorted(edges)
    ]
    return make_raw(n, elist)


def weighted_diameter(weights_l):
    """Largest finite pairwise shortest-path distance (0 for edgeless graphs)."""
    from scipy.sparse.csgraph import dijkstra

    dist = dijkstra(weights_l, directed=False)
    finite = dist[np.isfinite(dist)]
    return float(finite.max()) if finite.size else 0.0


def write_desk_config(tmp_path, out_dir, **sections):
    """Write a YAML config pointing at the bundled desk12 dataset.

    ``sections`` maps section name to a dict merged over the defaults below.
    Returns the config path.
    """
    import yaml

    data = {
        "paths": {
            "nodes": str(DESK12 / "nodes.csv"),
            "edges": str(DESK12 / "edges.csv"),
            "atlas": str(DESK12 / "atlas.csv"),
            "clinical": str(DESK12 / "clinical.csv"),
        },
        "model": {"gamma3": 0.002, "c_w": 1.58},
        "operator": {"variant": "diffusion_GC"},
        "evaluation": {"roi_count": 9, "sensorimotor_mean": 1.0},
        "output": {"dir": str(out_dir)},
    }
    for name, content in sections.items():
        base = data.setdefault(name, {})
        base.update(content)
    path = tmp_path / "config.yaml"
    path.write_text(yaml.safe_dump(data), encoding="utf-8")
    return path
