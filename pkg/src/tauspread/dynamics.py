"""Coupled amyloid/tau dynamics on the connectome graphs.

State per vertex: monomer, dimer and plaque concentrations (u1, u2, u3,
fast time scale ``eps``) plus misfolded tau (w, slow). The amyloid block
diffuses with the proximity-graph Laplacian; tau spreads through a
pluggable operator, either ``w -> -L w`` on a chosen graph or a spectral
convolution against a vertex kernel. Diffusion uses the negative Laplacian
so the term dissipates under the L = D - W convention.

Plaque growth sums the ordered aggregation pairs (1,2), (2,1), (2,2),
(1,3), (3,1), (2,3), (3,2) exactly in that order; tests pin the resulting
floating-point value, so do not reorder.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import spectral
from .errors import ConfigError
from .rk45 import IntegrationResult, SolverStats, integrate

OPERATOR_VARIANTS = (
    "diffusion_GC",
    "diffusion_GL",
    "diffusion_GNL",
    "convolution_GL",
    "convolution_GNL",
)
CONVOLUTION_VARIANTS = ("convolution_GL", "convolution_GNL")
KERNEL_KINDS = ("cumulative", "shortest_path")


@dataclass(frozen=True)
class ModelParams:
    """Rate constants and run window. Defaults follow the fixed calibration
    (gamma3 and c_w are the swept pair and carry the six-ROI diffusion
    representatives)."""

    eps: float = 0.1
    gamma1: float = 0.001
    gamma2: float = 0.001
    gamma3: float = 0.002
    alpha: float = 0.1
    c_u1: float = 0.05
    c_w: float = 1.58
    u_w: float = 0.01
    sigma1: float = 0.1
    sigma2: float = 0.1
    sigma3: float = 0.1
    sigma4: float = 0.11
    source_vertices: tuple[int, ...] = ()
    t0: float = 0.0
    tf: float = 500.0

    def validate(self) -> None:
        if self.eps <= 0:
            raise ConfigError("eps must be positive")
        for name in ("gamma1", "gamma2", "gamma3", "alpha", "c_u1", "c_w", "u_w",
                     "sigma1", "sigma2", "sigma3", "sigma4"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be nonnegative")
        if not self.tf > self.t0:
            raise ConfigError("tf must exceed t0")

    def as_dict(self) -> dict:
        return {
            "eps": self.eps, "gamma1": self.gamma1, "gamma2": self.gamma2,
            "gamma3": self.gamma3, "alpha": self.alpha, "c_u1": self.c_u1,
            "c_w": self.c_w, "u_w": self.u_w, "sigma1": self.sigma1,
            "sigma2": self.sigma2, "sigma3": self.sigma3, "sigma4": self.sigma4,
            "source_vertices": list(self.source_vertices),
            "t0": self.t0, "tf": self.tf,
        }


@dataclass(frozen=True)
class OperatorChoice:
    """Tau spreading operator: diffusion on one of the three tau-capable
    graphs, or convolution on a structural basis with a named kernel."""

    variant: str
    kernel_kind: str | None = None

    def validate(self) -> None:
        if self.variant not in OPERATOR_VARIANTS:
            raise ConfigError(f"unknown operator variant {self.variant!r}")
        if self.variant in CONVOLUTION_VARIANTS:
            if self.kernel_kind not in KERNEL_KINDS:
                raise ConfigError(
                    f"operator {self.variant} requires kernel_kind in {KERNEL_KINDS}"
                )
        elif self.kernel_kind is not None:
            raise ConfigError(f"operator {self.variant} takes no kernel_kind")

    @property
    def is_convolution(self) -> bool:
        return self.variant in CONVOLUTION_VARIANTS

    def as_dict(self) -> dict:
        return {"variant": self.variant, "kernel_kind": self.kernel_kind}


@dataclass(frozen=True, eq=False)
class SimulationState:
    """The four concentration vectors at one time."""

    t: float
    u1: np.ndarray
    u2: np.ndarray
    u3: np.ndarray
    w: np.ndarray

    @property
    def n(self) -> int:
        return int(self.u1.shape[0])

    def validate(self) -> None:
        for name in ("u1", "u2", "u3", "w"):
            vec = getattr(self, name)
            if vec.shape != (self.n,):
                raise ValueError(f"{name} has shape {vec.shape}, expected ({self.n},)")
            if not np.all(np.isfinite(vec)):
                raise ValueError(f"{name} has non-finite entries")

    @classmethod
    def zero(cls, n: int, t: float = 0.0) -> "SimulationState":
        z = np.zeros(n, dtype=np.float64)
        return cls(t=t, u1=z.copy(), u2=z.copy(), u3=z.copy(), w=z.copy())


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Sampled states: solver-accepted steps plus requested output times."""

    t: np.ndarray
    u1: np.ndarray  # (m, n)
    u2: np.ndarray
    u3: np.ndarray
    w: np.ndarray
    accepted: np.ndarray
    requested: np.ndarray
    stats: SolverStats

    @property
    def n_samples(self) -> int:
        return int(self.t.shape[0])

    def state(self, idx: int) -> SimulationState:
        return SimulationState(t=float(self.t[idx]), u1=self.u1[idx], u2=self.u2[idx],
                               u3=self.u3[idx], w=self.w[idx])

    @property
    def final(self) -> SimulationState:
        return self.state(self.n_samples - 1)


def source_vector(n: int, source_vertices, value: float = 1.0) -> np.ndarray:
    s = np.zeros(n, dtype=np.float64)
    for v in source_vertices:
        if not 0 <= v < n:
            raise ConfigError(f"source vertex {v} out of range for {n} vertices")
        s[v] = value
    return s


def _derivatives(u1, u2, u3, w, p: ModelParams, lap_ab, tau_op, s_w, c_u1_vec):
    total = u1 + u2 + u3
    du1 = (-p.gamma1 * (lap_ab @ u1) + c_u1_vec - p.alpha * u1 * total - p.sigma1 * u1) / p.eps
    du2 = (-p.gamma2 * (lap_ab @ u2) + (p.alpha / 2.0) * (u1 * u1)
           - p.alpha * u2 * total - p.sigma2 * u2) / p.eps
    agg = u1 * u2 + u2 * u1 + u2 * u2 + u1 * u3 + u3 * u1 + u2 * u3 + u3 * u2
    du3 = ((p.alpha / 2.0) * agg - p.sigma3 * u3) / p.eps
    dw = p.gamma3 * tau_op(w) + p.c_w * np.maximum(u2 - p.u_w, 0.0) + s_w - p.sigma4 * w
    return du1, du2, du3, dw


def rhs(state: SimulationState, params: ModelParams, lap_ab: np.ndarray, tau_op,
        c_u1_vector: np.ndarray | None = None) -> SimulationState:
    """Time derivative of the full state (returned in state form, same t)."""
    state.validate()
    n = state.n
    if lap_ab.shape != (n, n):
        raise ValueError(f"Laplacian shape {lap_ab.shape} does not match n={n}")
    s_w = source_vector(n, params.source_vertices)
    c_vec = np.full(n, params.c_u1) if c_u1_vector is None else np.asarray(c_u1_vector, dtype=np.float64)
    if c_vec.shape != (n,):
        raise ValueError("c_u1_vector has wrong length")
    du1, du2, du3, dw = _derivatives(state.u1, state.u2, state.u3, state.w,
                                     params, lap_ab, tau_op, s_w, c_vec)
    return SimulationState(t=state.t, u1=du1, u2=du2, u3=du3, w=dw)


def make_tau_operator(
    choice: OperatorChoice,
    *,
    lap_tau: np.ndarray | None = None,
    basis: spectral.SpectralBasis | None = None,
    kernel: spectral.Kernel | None = None,
):
    """Build the tau spreading closure K for the chosen variant.

    Diffusion variants need ``lap_tau`` (the Laplacian matrix of the chosen
    graph) and apply ``w -> -lap_tau @ w``. Convolution variants need the
    spectral ``basis`` of the chosen structural graph and a ``kernel``; the
    kernel transform is precomputed once.
    """
    choice.validate()
    if choice.is_convolution:
        if basis is None or kernel is None:
            raise ConfigError(f"{choice.variant} requires a spectral basis and kernel")
        khat = basis.vectors.T @ kernel.values
        vectors = basis.vectors

        def conv_op(w):
            return vectors @ (khat * (vectors.T @ w))

        return conv_op
    if lap_tau is None:
        raise ConfigError(f"{choice.variant} requires the tau-graph Laplacian")
    lap = lap_tau

    def diff_op(w):
        return -(lap @ w)

    return diff_op


@dataclass(frozen=True, eq=False)
class SimulationSetup:
    """Everything one integration needs, precomputed and read-only."""

    params: ModelParams
    operator: OperatorChoice
    lap_ab: np.ndarray
    tau_op: object  # callable w -> K[w]
    n: int
    initial: SimulationState | None = None
    c_u1_vector: np.ndarray | None = None
    source_profile: object = None  # optional callable t -> source vector


def run_simulation(
    setup: SimulationSetup,
    rtol: float = 1e-3,
    atol: float = 1e-6,
    output_times=None,
    store_steps: bool = True,
) -> tuple[Trajectory, dict]:
    """Integrate the system and return the trajectory plus a run report.

    The report carries the parameters, operator, per-vertex final tau and
    solver statistics; orchestration layers extend it with network means
    and the pattern string.
    """
    p = setup.params
    p.validate()
    setup.operator.validate()
    n = setup.n
    state0 = setup.initial if setup.initial is not None else SimulationState.zero(n, t=p.t0)
    state0.validate()
    if state0.n != n:
        raise ConfigError("initial state size does not match the graphs")

    s_w_static = source_vector(n, p.source_vertices)
    profile = setup.source_profile
    c_vec = (np.full(n, p.c_u1) if setup.c_u1_vector is None
             else np.asarray(setup.c_u1_vector, dtype=np.float64))
    lap_ab = setup.lap_ab
    tau_op = setup.tau_op

    def packed_rhs(t, y):
        u1, u2, u3, w = y[:n], y[n:2 * n], y[2 * n:3 * n], y[3 * n:]
        s_w = s_w_static if profile is None else profile(t)
        du1, du2, du3, dw = _derivatives(u1, u2, u3, w, p, lap_ab, tau_op, s_w, c_vec)
        return np.concatenate([du1, du2, du3, dw])

    y0 = np.concatenate([state0.u1, state0.u2, state0.u3, state0.w])
    result = integrate(packed_rhs, p.t0, y0, p.tf, rtol=rtol, atol=atol,
                       output_times=output_times, store_steps=store_steps)
    traj = _unpack(result, n)
    report = {
        "params": p.as_dict(),
        "operator": setup.operator.as_dict(),
        "final_w": [float(v) for v in traj.w[-1]],
        "solver_stats": {**result.stats.as_dict(), "rtol": rtol, "atol": atol},
    }
    return traj, report


def _unpack(result: IntegrationResult, n: int) -> Trajectory:
    y = result.y
    return Trajectory(
        t=result.t,
        u1=y[:, :n],
        u2=y[:, n:2 * n],
        u3=y[:, 2 * n:3 * n],
        w=y[:, 3 * n:],
        accepted=result.accepted,
        requested=result.requested,
        stats=result.stats,
    )


def with_sweep_point(params: ModelParams, gamma3: float, c_w: float) -> ModelParams:
    """The same calibration with the swept pair replaced."""
    return replace(params, gamma3=gamma3, c_w=c_w)
