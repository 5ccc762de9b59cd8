import numpy as np
import pytest
from scipy.linalg import expm

from tauspread import dynamics, graphs, spectral
from tauspread.dynamics import (
    ModelParams,
    OperatorChoice,
    SimulationSetup,
    SimulationState,
    make_tau_operator,
    rhs,
    run_simulation,
)
from tauspread.errors import ConfigError

from helpers import make_raw


def _zero_op(w):
    return np.zeros_like(w)


def _single_vertex_params(**kw):
    defaults = dict(eps=1.0, gamma1=0.0, gamma2=0.0, gamma3=0.0, alpha=0.0,
                    c_u1=0.0, c_w=0.0, u_w=0.01, sigma1=0.0, sigma2=0.0,
                    sigma3=0.0, sigma4=0.0, source_vertices=(), t0=0.0, tf=10.0)
    defaults.update(kw)
    return ModelParams(**defaults)


class TestRhs:
    def test_plaque_pair_sum_exact(self):
        params = _single_vertex_params(alpha=0.1)
        state = SimulationState(t=0.0, u1=np.array([1.0]), u2=np.array([1.0]),
                                u3=np.array([0.0]), w=np.array([0.0]))
        out = rhs(state, params, np.zeros((1, 1)), _zero_op)
        assert out.u3[0] == (0.1 / 2) * 3.0

    def test_coupling_zero_at_threshold(self):
        params = _single_vertex_params(c_w=5.0, u_w=0.25)
        state = SimulationState(t=0.0, u1=np.array([0.0]), u2=np.array([0.25]),
                                u3=np.array([0.0]), w=np.array([0.0]))
        out = rhs(state, params, np.zeros((1, 1)), _zero_op)
        assert out.w[0] == 0.0

    def test_zero_state_is_fixed_point(self):
        params = _single_vertex_params(alpha=0.3, sigma1=0.1, sigma2=0.1,
                                       sigma3=0.1, sigma4=0.1)
        state = SimulationState.zero(1)
        out = rhs(state, params, np.zeros((1, 1)), _zero_op)
        for vec in (out.u1, out.u2, out.u3, out.w):
            assert np.all(vec == 0.0)

    def test_dimension_mismatch_rejected(self):
        params = _single_vertex_params()
        state = SimulationState.zero(2)
        with pytest.raises(ValueError):
            rhs(state, params, np.zeros((1, 1)), _zero_op)

    def test_non_finite_state_rejected(self):
        params = _single_vertex_params()
        state = SimulationState(t=0.0, u1=np.array([np.inf]), u2=np.array([0.0]),
                                u3=np.array([0.0]), w=np.array([0.0]))
        with pytest.raises(ValueError, match="non-finite"):
            rhs(state, params, np.zeros((1, 1)), _zero_op)


class TestOperatorChoice:
    def test_convolution_requires_kernel_kind(self):
        with pytest.raises(ConfigError):
            OperatorChoice(variant="convolution_GL").validate()

    def test_diffusion_rejects_kernel_kind(self):
        with pytest.raises(ConfigError):
            OperatorChoice(variant="diffusion_GC", kernel_kind="cumulative").validate()

    def test_unknown_variant(self):
        with pytest.raises(ConfigError):
            OperatorChoice(variant="diffusion_GP").validate()

    def test_diffusion_operator_is_negative_laplacian(self):
        raw = make_raw(3, [(0, 1, 2.0, 1.0), (1, 2, 1.0, 2.0)])
        lap = spectral.laplacian(graphs.build_structural(raw, "NL")).matrix
        op = make_tau_operator(OperatorChoice(variant="diffusion_GNL"), lap_tau=lap)
        w = np.array([1.0, -2.0, 0.5])
        assert np.array_equal(op(w), -(lap @ w))

    def test_convolution_operator_matches_direct_formula(self):
        raw = make_raw(3, [(0, 1, 2.0, 1.0), (1, 2, 1.0, 2.0), (0, 2, 1.0, 4.0)])
        g_l = graphs.build_structural(raw, "L")
        basis = spectral.eigendecompose(spectral.laplacian(g_l))
        kernel = spectral.shortest_path_kernel(g_l, r_c=30.0, delta_k_sp=1.0)
        op = make_tau_operator(
            OperatorChoice(variant="convolution_GL", kernel_kind="shortest_path"),
            basis=basis, kernel=kernel)
        w = np.array([0.3, -1.0, 2.0])
        assert op(w) == pytest.approx(spectral.convolve(basis, kernel, w), abs=1e-14)


def _decay_setup(sigma4, w0, tf):
    params = _single_vertex_params(sigma4=sigma4, tf=tf)
    initial = SimulationState(t=0.0, u1=np.zeros(1), u2=np.zeros(1),
                              u3=np.zeros(1), w=np.array([w0]))
    return SimulationSetup(params=params, operator=OperatorChoice(variant="diffusion_GC"),
                           lap_ab=np.zeros((1, 1)), tau_op=_zero_op, n=1, initial=initial)


class TestIntegration:
    def test_tau_clearance_decay(self):
        traj, _ = run_simulation(_decay_setup(0.11, 1.0, 10.0), rtol=1e-6, atol=1e-12)
        expected = np.exp(-1.1)
        assert abs(traj.w[-1, 0] - expected) / expected <= 10 * 1e-6

    def test_decoupled_vertices_match_scalar_reference(self):
        # with gamma1 = gamma2 = 0 each vertex's amyloid block evolves alone
        raw = make_raw(3, [(0, 1, 1.0, 1.0), (1, 2, 1.0, 1.0)])
        params = ModelParams(eps=0.1, gamma1=0.0, gamma2=0.0, gamma3=0.0,
                             alpha=0.1, c_u1=0.05, c_w=0.0, u_w=0.01,
                             sigma1=0.1, sigma2=0.1, sigma3=0.1, sigma4=0.11,
                             source_vertices=(), t0=0.0, tf=20.0)
        u1_0 = np.array([0.1, 0.5, 1.0])
        initial = SimulationState(t=0.0, u1=u1_0.copy(), u2=np.zeros(3),
                                  u3=np.zeros(3), w=np.zeros(3))
        lap = spectral.laplacian(graphs.build_structural(raw, "NL")).matrix
        setup = SimulationSetup(params=params, operator=OperatorChoice(variant="diffusion_GNL"),
                                lap_ab=lap, tau_op=make_tau_operator(
                                    OperatorChoice(variant="diffusion_GNL"), lap_tau=lap),
                                n=3, initial=initial)
        traj, _ = run_simulation(setup, rtol=1e-10, atol=1e-12)

        for v in range(3):
            ref_params = ModelParams(eps=0.1, gamma1=0.0, gamma2=0.0, gamma3=0.0,
                                     alpha=0.1, c_u1=0.05, c_w=0.0, u_w=0.01,
                                     sigma1=0.1, sigma2=0.1, sigma3=0.1, sigma4=0.11,
                                     source_vertices=(), t0=0.0, tf=20.0)
            ref_initial = SimulationState(t=0.0, u1=np.array([u1_0[v]]), u2=np.zeros(1),
                                          u3=np.zeros(1), w=np.zeros(1))
            ref = SimulationSetup(params=ref_params, operator=OperatorChoice(variant="diffusion_GC"),
                                  lap_ab=np.zeros((1, 1)), tau_op=_zero_op, n=1,
                                  initial=ref_initial)
            ref_traj, _ = run_simulation(ref, rtol=1e-10, atol=1e-12)
            for field in ("u1", "u2", "u3"):
                got = getattr(traj, field)[-1, v]
                want = getattr(ref_traj, field)[-1, 0]
                assert abs(got - want) <= 1e-8

    def test_plaques_nondecreasing_without_clearance(self):
        raw = make_raw(2, [(0, 1, 1.0, 1.0)])
        params = ModelParams(eps=0.1, gamma1=0.001, gamma2=0.001, gamma3=0.0,
                             alpha=0.1, c_u1=0.05, c_w=0.0, u_w=0.01,
                             sigma1=0.1, sigma2=0.1, sigma3=0.0, sigma4=0.11,
                             source_vertices=(), t0=0.0, tf=30.0)
        lap = spectral.laplacian(graphs.build_proximity(raw, 25.0, 150.0)).matrix
        setup = SimulationSetup(params=params, operator=OperatorChoice(variant="diffusion_GC"),
                                lap_ab=lap, tau_op=_zero_op, n=2)
        traj, _ = run_simulation(setup)
        diffs = np.diff(traj.u3, axis=0)
        assert np.all(diffs >= -1e-10)

    def test_mass_conserved_under_pure_diffusion(self, desk_raw):
        g_c = graphs.build_cumulative(desk_raw, r_c=30.0)
        lap = spectral.laplacian(g_c).matrix
        n = desk_raw.vertex_count
        rng = np.random.default_rng(1)
        w0 = rng.uniform(0.0, 2.0, size=n)
        params = ModelParams(eps=0.1, gamma1=0.0, gamma2=0.0, gamma3=0.05,
                             alpha=0.0, c_u1=0.0, c_w=0.0, u_w=0.01,
                             sigma1=0.0, sigma2=0.0, sigma3=0.0, sigma4=0.0,
                             source_vertices=(), t0=0.0, tf=50.0)
        initial = SimulationState(t=0.0, u1=np.zeros(n), u2=np.zeros(n),
                                  u3=np.zeros(n), w=w0)
        setup = SimulationSetup(params=params, operator=OperatorChoice(variant="diffusion_GC"),
                                lap_ab=np.zeros((n, n)), tau_op=make_tau_operator(
                                    OperatorChoice(variant="diffusion_GC"), lap_tau=lap),
                                n=n, initial=initial)
        traj, _ = run_simulation(setup)
        total0 = traj.w[0].sum()
        assert np.max(np.abs(traj.w.sum(axis=1) - total0)) <= 1e-8

    def test_diffusion_keeps_w_nonnegative(self, desk_raw):
        g_c = graphs.build_cumulative(desk_raw, r_c=30.0)
        lap = spectral.laplacian(g_c).matrix
        n = desk_raw.vertex_count
        atol = 1e-6
        params = ModelParams(gamma3=0.002, c_w=1.58, source_vertices=(5,), tf=100.0)
        setup = SimulationSetup(params=params, operator=OperatorChoice(variant="diffusion_GC"),
                                lap_ab=np.zeros((n, n)), tau_op=make_tau_operator(
                                    OperatorChoice(variant="diffusion_GC"), lap_tau=lap),
                                n=n)
        traj, _ = run_simulation(setup, atol=atol)
        assert traj.w.min() >= -10 * atol


class TestRunSimulation:
    def _sourced_setup(self, desk_raw, gamma3, c_w, tf=60.0):
        g_c = graphs.build_cumulative(desk_raw, r_c=30.0)
        g_p = graphs.build_proximity(desk_raw, 25.0, 150.0)
        n = desk_raw.vertex_count
        params = ModelParams(gamma3=gamma3, c_w=c_w, source_vertices=(5,), tf=tf)
        return SimulationSetup(
            params=params, operator=OperatorChoice(variant="diffusion_GC"),
            lap_ab=spectral.laplacian(g_p).matrix,
            tau_op=make_tau_operator(OperatorChoice(variant="diffusion_GC"),
                                     lap_tau=spectral.laplacian(g_c).matrix),
            n=n)

    def test_source_vertices_positive(self, desk_raw):
        traj, report = run_simulation(self._sourced_setup(desk_raw, 0.002, 1.58))
        assert traj.w[-1, 5] > 0.0
        assert report["final_w"][5] > 0.0

    def test_without_spreading_w_stays_on_sources(self, desk_raw):
        traj, _ = run_simulation(self._sourced_setup(desk_raw, 0.0, 0.0))
        atol = 1e-6
        off_source = [v for v in range(desk_raw.vertex_count) if v != 5]
        assert np.all(traj.w[-1, off_source] <= atol)
        assert traj.w[-1, 5] > 1.0

    def test_diffusion_spreads_mass_matrix_exponential_oracle(self, desk_raw):
        # linear subsystem when c_w = 0: w' = (-gamma3 L - sigma4 I) w + s
        gamma3, sigma4, tf = 0.01, 0.11, 40.0
        g_c = graphs.build_cumulative(desk_raw, r_c=30.0)
        lap = spectral.laplacian(g_c).matrix
        n = desk_raw.vertex_count
        params = ModelParams(gamma3=gamma3, c_w=0.0, sigma4=sigma4,
                             source_vertices=(5,), tf=tf)
        setup = SimulationSetup(
            params=params, operator=OperatorChoice(variant="diffusion_GC"),
            lap_ab=np.zeros((n, n)),
            tau_op=make_tau_operator(OperatorChoice(variant="diffusion_GC"), lap_tau=lap),
            n=n)
        traj, _ = run_simulation(setup, rtol=1e-8, atol=1e-10)
        a = -gamma3 * lap - sigma4 * np.eye(n)
        s = np.zeros(n)
        s[5] = 1.0
        w_ref = np.linalg.solve(a, (expm(a * tf) - np.eye(n)) @ s)
        assert traj.w[-1] == pytest.approx(w_ref, abs=1e-6)
        off_source = [v for v in range(n) if v != 5]
        assert np.max(traj.w[-1, off_source]) > 1e-6

    def test_report_keys(self, desk_raw):
        _, report = run_simulation(self._sourced_setup(desk_raw, 0.002, 1.58))
        assert set(report) == {"params", "operator", "final_w", "solver_stats"}
        assert report["operator"] == {"variant": "diffusion_GC", "kernel_kind": None}
        assert report["solver_stats"]["naccept"] > 0

    def test_time_varying_source_hook(self, desk_raw):
        from dataclasses import replace

        base = self._sourced_setup(desk_raw, 0.0, 0.0, tf=20.0)
        n = desk_raw.vertex_count
        muted = replace(base, source_profile=lambda t: np.zeros(n))
        traj, _ = run_simulation(muted)
        assert np.all(traj.w == 0.0)  # profile overrides the static indicator
