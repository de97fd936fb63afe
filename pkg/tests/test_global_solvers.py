import numpy as np
import pytest

from graphdiff.global_solvers import (GlobalConfig, chebyshev, gauss_seidel,
                                      gradient_descent, hk_taylor_global, sor)
from graphdiff.local_solvers import optimal_omega
from graphdiff.metrics import error_norms
from graphdiff.synth import erdos_renyi
from graphdiff.systems import (dense_solve, make_hk_system, make_katz_system,
                               make_ppr_system, series_oracle)


def zero_source_system(g):
    sys_ = make_ppr_system(g, 0.5, 0, 0.1)
    b = np.zeros(g.n)
    return type(sys_)(op=sys_.op, b=b, theta=sys_.theta, problem="ppr",
                      alpha=0.5, eps=0.1, source=0)


class TestGaussSeidel:
    def test_p2_high_precision(self, p2):
        sys_ = make_ppr_system(p2, 0.5, 0, 1e-8)
        state, report = gauss_seidel(sys_)
        assert report.converged
        f = sys_.back_transform(state.x)
        gap = np.abs(f - np.array([2 / 3, 1 / 3]))
        assert np.all(gap <= 1e-8 * p2.degrees)

    def test_zero_source_zero_sweeps(self, p3):
        state, report = gauss_seidel(zero_source_system(p3))
        assert report.converged and report.sweeps == 0
        assert np.all(state.x == 0.0)
        assert report.total_ops == 0

    def test_k3_katz_matches_oracle(self, k3):
        sys_ = make_katz_system(k3, 0.25, 0, 1e-7)
        state, report = gauss_seidel(sys_)
        assert report.converged
        # stop rule: recomputed residual obeys the threshold
        r_true = sys_.residual(state.x)
        assert np.all(np.abs(r_true) <= sys_.eps * k3.degrees + 1e-9)
        f = sys_.back_transform(state.x)
        assert f == pytest.approx(dense_solve(sys_), abs=1e-6)

    def test_ops_are_sweeps_times_volume(self, er_small):
        sys_ = make_ppr_system(er_small, 0.2, 0, 1e-4)
        _, report = gauss_seidel(sys_)
        assert report.total_ops == report.sweeps * int(er_small.degrees.sum())


class TestSor:
    def test_omega_one_is_gs_bitwise(self, er_small):
        sys_ = make_ppr_system(er_small, 0.2, 0, 1e-5)
        st_gs, rep_gs = gauss_seidel(sys_)
        st_sor, rep_sor = sor(sys_, GlobalConfig(omega=1.0))
        assert np.array_equal(st_gs.x, st_sor.x)
        assert np.array_equal(st_gs.r, st_sor.r)
        assert rep_gs.residual_l1_trace == rep_sor.residual_l1_trace

    def test_optimal_omega_value(self):
        assert optimal_omega(0.25) == pytest.approx(1.2037766123870306, abs=1e-9)

    def test_omega_star_not_slower(self, p2):
        sys_ = make_ppr_system(p2, 0.25, 0, 1e-8)
        _, rep1 = sor(sys_, GlobalConfig(omega=1.0))
        _, rep2 = sor(sys_, GlobalConfig(omega=optimal_omega(0.25)))
        assert rep2.converged
        assert rep2.sweeps <= rep1.sweeps

    def test_omega_validation(self):
        with pytest.raises(ValueError):
            GlobalConfig(omega=2.5)


class TestGradientDescent:
    def test_first_sweep_is_source(self, k3):
        sys_ = make_ppr_system(k3, 0.5, 0, 1e-6)
        state, _ = gradient_descent(sys_, GlobalConfig(max_sweeps=1))
        assert state.x == pytest.approx(sys_.b, abs=0.0)

    def test_p2_contract(self, p2):
        sys_ = make_ppr_system(p2, 0.5, 0, 0.01)
        state, report = gradient_descent(sys_)
        assert report.converged
        f = sys_.back_transform(state.x)
        err = error_norms(f, dense_solve(sys_), p2)
        assert err["linf_dscaled"] <= 0.01

    def test_residual_recurrence(self, k3):
        sys_ = make_ppr_system(k3, 0.3, 0, 1e-9)
        q = sys_.op.dense_matrix()
        prop = np.eye(3) - q  # (I - Q)
        for t in range(1, 6):
            state, _ = gradient_descent(sys_, GlobalConfig(max_sweeps=t))
            expected = np.linalg.matrix_power(prop, t) @ sys_.b
            assert np.abs(state.r - expected).max() <= 1e-9


class TestChebyshev:
    def test_first_step(self, k3):
        sys_ = make_ppr_system(k3, 0.5, 0, 1e-6)
        mu, L = 0.5, 1.5
        state, _ = chebyshev(sys_, GlobalConfig(mu=mu, L=L, max_sweeps=1))
        assert state.x == pytest.approx(2.0 / (L + mu) * sys_.b, abs=1e-15)

    def test_delta_recursion_bounded_monotone(self):
        # fixed point of d <- 1/(2(L+mu)/(L-mu) - d) stays in (0, 1)
        for alpha in (0.1, 0.25, 0.5):
            L, mu = 2 - alpha, alpha
            delta = (L - mu) / (L + mu)
            limit = (L + mu) / (L - mu) - np.sqrt(((L + mu) / (L - mu)) ** 2 - 1.0)
            prev = delta
            for _ in range(100):
                delta = 1.0 / (2.0 * (L + mu) / (L - mu) - delta)
                assert 0.0 < delta <= prev + 1e-15
                prev = delta
            assert delta == pytest.approx(limit, abs=1e-10)

    def test_p2_oracle_and_not_slower_than_gd(self, p2):
        sys_ = make_ppr_system(p2, 0.5, 0, 1e-6, symmetrized=True)
        st_ch, rep_ch = chebyshev(sys_)
        st_gd, rep_gd = gradient_descent(sys_)
        assert rep_ch.converged
        err = error_norms(sys_.back_transform(st_ch.x), dense_solve(sys_), p2)
        assert err["linf_dscaled"] <= 1e-6
        assert rep_ch.sweeps <= rep_gd.sweeps

    def test_rate_beats_gd(self, er_small):
        # log-linear fit of the l2 residual decay over sweeps 5..30
        sys_ = make_ppr_system(er_small, 0.1, 0, 1e-300, symmetrized=True)
        _, rep_ch = chebyshev(sys_, GlobalConfig(max_sweeps=30))
        _, rep_gd = gradient_descent(sys_, GlobalConfig(max_sweeps=30))
        t = np.arange(5, 31)
        slope_ch = np.polyfit(t, np.log(np.array(rep_ch.notes["l2_trace"])[5:31]), 1)[0]
        slope_gd = np.polyfit(t, np.log(np.array(rep_gd.notes["l2_trace"])[5:31]), 1)[0]
        assert slope_ch < slope_gd

    def test_bad_bounds_rejected(self, k3):
        sys_ = make_ppr_system(k3, 0.5, 0, 1e-4)
        with pytest.raises(ValueError):
            chebyshev(sys_, GlobalConfig(mu=1.5, L=1.5))


class TestHkTaylor:
    def test_tiny_tau(self, p2):
        sys_ = make_hk_system(p2, 1e-9, 0, 1e-3)
        state, report = hk_taylor_global(sys_)
        f = sys_.back_transform(state.x)
        assert f == pytest.approx([1.0, 0.0], abs=1e-8)

    def test_k3_vs_series(self, k3):
        from graphdiff.systems import hk_paper_bound

        sys_ = make_hk_system(k3, 1.0, 0, 1e-4)
        state, report = hk_taylor_global(sys_)
        f = sys_.back_transform(state.x)
        gap = np.abs(f - series_oracle(sys_, 60)).sum()
        assert gap <= hk_paper_bound(sys_.op.stage_count) + 1e-4

    def test_stage_bookkeeping(self, k3):
        sys_ = make_hk_system(k3, 2.0, 0, 1e-5)
        _, report = hk_taylor_global(sys_)
        assert report.sweeps == sys_.op.stage_count
        assert report.total_ops == sys_.op.stage_count * int(k3.degrees.sum())


class TestInvariants:
    @pytest.mark.parametrize("seed", range(5))
    def test_stop_rule_and_consistency_at_exit(self, seed):
        g = erdos_renyi(50, 0.12, seed=seed)
        sys_ = make_ppr_system(g, 0.25, 0, 1e-5)
        for solver in (gauss_seidel, gradient_descent, chebyshev):
            state, report = solver(sys_)
            assert report.converged
            r_true = sys_.residual(state.x)
            assert np.abs(r_true - state.r).max() <= 1e-9
            finite = np.isfinite(sys_.theta)
            assert np.all(np.abs(state.r[finite]) < sys_.theta[finite])

    @pytest.mark.parametrize("seed", range(5))
    def test_nonneg_and_monotone(self, seed):
        g = erdos_renyi(50, 0.12, seed=seed)
        systems = [make_ppr_system(g, 0.25, 0, 1e-5),
                   make_katz_system(g, 0.9 / g.d_max, 0, 1e-5)]
        for sys_ in systems:
            for solver, cfg in ((gauss_seidel, None),
                                (sor, GlobalConfig(omega=0.7)),
                                (gradient_descent, None)):
                state, report = solver(sys_, cfg)
                assert report.converged
                assert np.all(state.r >= -1e-15)
                trace = report.residual_l1_trace
                assert all(b <= a + 1e-12 for a, b in zip(trace, trace[1:]))
