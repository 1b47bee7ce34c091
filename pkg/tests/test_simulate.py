"""Generators against moment oracles; the Monte-Carlo runner against the streaming engine."""

import numpy as np
import pytest

from nswchart.limits import LimitConfig, bootstrap_control_limit, standard_normal_reference
from nswchart.monitor import Monitor, MonitorConfig, SignalReport
from nswchart.simulate import (
    MetricsSummary,
    ModelParams,
    ScenarioSpec,
    autocorrelation,
    chart_acf,
    correlation_matrix,
    drv,
    evaluation_times,
    generate_run,
    metrics_row,
    run_scenario,
)

PARAMS = ModelParams()


def make_spec(**kw):
    base = dict(model="I", p=4, W=8, tau=10, delta=1.0, sparsity_v=0.25, horizon_n=40, replications_R=50, seed=3)
    base.update(kw)
    return ScenarioSpec(**base)


def calibrated_cfg(p, W, s, alpha=0.05, horizon=40, seed=17, pool=400, B=2000):
    ref = standard_normal_reference(p, size=pool, seed=seed)
    cfg = LimitConfig(fap_alpha=alpha, bootstrap_B=B, horizon_n=horizon, window_W=W, step_s=s, seed=seed)
    return MonitorConfig(p=p, W=W, s=s, limit=bootstrap_control_limit(ref, cfg))


class TestSpecValidation:
    def test_model_tag(self):
        with pytest.raises(ValueError, match="unknown model"):
            make_spec(model="V")

    def test_tau_bounds(self):
        with pytest.raises(ValueError):
            make_spec(tau=40)

    def test_sparsity_needs_a_variable(self):
        with pytest.raises(ValueError, match=">= 1 shifted"):
            make_spec(p=4, sparsity_v=0.01, delta=1.0)
        make_spec(p=4, sparsity_v=0.01, delta=0.0)  # IC runs don't need one

    def test_shifted_mean_layout(self):
        spec = make_spec(p=10, sparsity_v=0.25, delta=1.5)
        mu = spec.shifted_mean()
        assert spec.shifted_count() == 2  # round(2.5) under banker's rounding
        assert np.array_equal(mu[:2], [1.5, 1.5])
        assert np.all(mu[2:] == 0.0)


class TestGenerateRun:
    def test_ic_run_is_one_normal_block(self):
        spec = make_spec(delta=0.0, model="IV")
        run = generate_run(spec, PARAMS, 7)
        expected = np.random.default_rng([spec.seed, 7]).standard_normal((40, 4))
        np.testing.assert_array_equal(run, expected)

    def test_deterministic_per_run_seed(self):
        spec = make_spec(model="III")
        a = generate_run(spec, PARAMS, 5)
        b = generate_run(spec, PARAMS, 5)
        c = generate_run(spec, PARAMS, 6)
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_model_i_post_change_moments(self):
        spec = ScenarioSpec("I", p=2, W=8, tau=0, delta=2.0, sparsity_v=0.5, horizon_n=100_000, replications_R=1)
        run = generate_run(spec, PARAMS, 0)
        se3 = 3.0 / np.sqrt(run.shape[0])
        assert abs(run[:, 0].mean() - 2.0) < se3
        assert abs(run[:, 1].mean()) < se3

    def test_model_ii_variance_cycle(self):
        spec = ScenarioSpec("II", p=1, W=8, tau=0, delta=1.0, sparsity_v=1.0, horizon_n=200_000, replications_R=1)
        run = generate_run(spec, PARAMS, 1)[:, 0]
        seq = PARAMS.lambda_sequence
        phases = np.arange(run.size) % len(seq)
        for t, lam in ((0, 0.5), (5, 1.0), (9, 0.6)):
            block = run[phases == t]
            sample_var = block.var()
            se3 = 3.0 * lam * np.sqrt(2.0 / block.size)
            assert abs(sample_var - lam) < se3, (t, sample_var, lam)

    def test_model_iii_adjacent_correlation(self):
        spec = ScenarioSpec("III", p=3, W=8, tau=0, delta=1.0, sparsity_v=0.34, horizon_n=100_000, replications_R=1)
        run = generate_run(spec, PARAMS, 2)
        corr = np.corrcoef(run, rowvar=False)
        n = run.shape[0]
        for l, m in ((0, 1), (1, 2)):
            se3 = 3.0 * (1 - 0.995**2) / np.sqrt(n)
            assert abs(corr[l, m] - 0.995) < max(se3, 5e-4)
        assert abs(corr[0, 2] - 0.995**2) < 5e-4

    def test_model_iv_scale_versus_covariance(self):
        # t with 30 dof and scale 1 has variance 30/28, distinguishing the
        # location-scale construction from a covariance parameterization
        spec = ScenarioSpec("IV", p=2, W=8, tau=0, delta=0.5, sparsity_v=0.5, horizon_n=200_000, replications_R=1)
        run = generate_run(spec, PARAMS, 3)
        target = 30.0 / 28.0
        for col in range(2):
            sample_var = run[:, col].var()
            assert abs(sample_var - target) < 0.02, (col, sample_var)

    def test_ic_segment_before_tau(self):
        spec = make_spec(model="II", tau=20, delta=3.0, horizon_n=30)
        run = generate_run(spec, PARAMS, 4)
        direct = np.random.default_rng([spec.seed, 4]).standard_normal((20, 4))
        np.testing.assert_array_equal(run[:20], direct)

    def test_correlation_matrix_shape(self):
        sigma = correlation_matrix(4, 0.9)
        assert sigma[0, 3] == pytest.approx(0.9**3)
        assert np.all(np.diag(sigma) == 1.0)


class TestRunScenario:
    def test_matches_streaming_monitor(self):
        spec = make_spec(model="I", p=4, W=8, tau=15, delta=1.8, sparsity_v=0.5, horizon_n=40, replications_R=60)
        cfg = calibrated_cfg(4, 8, 3)
        summary = run_scenario(spec, PARAMS, cfg)

        # replay every run through the streaming engine
        sig_times, tau_hats, drvs = [], [], []
        for rep in range(60):
            mon = Monitor(cfg)
            report = mon.run(generate_run(spec, PARAMS, rep))
            if report is not None:
                sig_times.append(report.alarm_time_n)
                tau_hats.append(report.change_point_estimate)
                drvs.append(drv(report, spec))
        assert summary.signaling_runs == len(sig_times)
        assert summary.dr == len(sig_times) / 60
        assert summary.ced == pytest.approx(np.mean(sig_times) - 15)
        assert summary.cpe == pytest.approx(np.mean(tau_hats))
        assert summary.drv == pytest.approx(np.mean(drvs))

    def test_chunking_invariance(self):
        spec = make_spec(replications_R=23, delta=1.5)
        cfg = calibrated_cfg(4, 8, 3)
        a = run_scenario(spec, PARAMS, cfg, chunk=23)
        b = run_scenario(spec, PARAMS, cfg, chunk=5)
        assert a == b

    def test_ic_run_reports_fap(self):
        spec = make_spec(delta=0.0, replications_R=40)
        cfg = calibrated_cfg(4, 8, 3)
        summary = run_scenario(spec, PARAMS, cfg)
        assert summary.fap == summary.dr
        assert summary.drv is None

    def test_dr_monotone_in_delta(self):
        cfg = calibrated_cfg(10, 12, 4, alpha=0.05, horizon=60)
        drs = {}
        for delta in (0.5, 1.0, 2.0):
            spec = ScenarioSpec("I", p=10, W=12, tau=20, delta=delta, sparsity_v=0.2,
                                horizon_n=60, replications_R=300, seed=11)
            drs[delta] = run_scenario(spec, PARAMS, cfg).dr
        se2 = 2.0 * np.sqrt(0.25 / 300)
        assert drs[2.0] >= drs[1.0] - se2
        assert drs[1.0] >= drs[0.5] - se2

    def test_config_mismatch(self):
        spec = make_spec(p=5)
        cfg = calibrated_cfg(4, 8, 3)
        with pytest.raises(ValueError, match="does not match scenario"):
            run_scenario(spec, PARAMS, cfg)


class TestDrv:
    def test_set_arithmetic(self):
        spec = make_spec(p=100, sparsity_v=0.1, delta=1.0)
        full = SignalReport(40, 5.0, 25, tuple(range(1, 11)))
        assert drv(full, spec) == 1.0
        disjoint = SignalReport(40, 5.0, 25, (11, 12))
        assert drv(disjoint, spec) == 0.0
        partial = SignalReport(40, 5.0, 25, (1, 5, 99))
        assert drv(partial, spec) == pytest.approx(0.2)


class TestChartAcf:
    def test_white_noise_band(self):
        series = np.random.default_rng(12).standard_normal(2000)
        acf = autocorrelation(series, 10)
        assert np.all(np.abs(acf) < 3.0 / np.sqrt(2000))

    def test_requires_enough_points(self):
        stream = np.random.default_rng(0).standard_normal((40, 3))
        with pytest.raises(ValueError, match="need >= 30"):
            chart_acf(stream, 8, 5, 5)

    def test_overlap_drives_lag_one(self):
        rng = np.random.default_rng(6)
        w, points = 20, 300
        acf_s1 = chart_acf(rng.standard_normal((w + points - 1, 20)), w, 1, 5)
        acf_s5 = chart_acf(rng.standard_normal((w + (points - 1) * 5, 20)), w, 5, 5)
        assert abs(acf_s5[0]) < acf_s1[0]
        assert acf_s1[0] > 0.4

    def test_evaluation_times_layout(self):
        times = evaluation_times(6, 5, 20)
        assert times.tolist() == [6, 11, 16]


class TestMetricsRow:
    def test_row_fields(self):
        spec = make_spec()
        summary = MetricsSummary(dr=0.5, ced=3.0, fap=None, cpe=11.0, drv=0.4, replications=50, signaling_runs=25)
        row = metrics_row(spec, summary)
        assert row["scheme"] == "nsw"
        assert row["model"] == "I"
        assert row["DR"] == 0.5
        assert row["FAP"] is None
        assert row["R"] == 50
