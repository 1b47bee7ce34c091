"""Cleaning pipeline and pooled replay on synthetic fixtures."""

import numpy as np
import pytest

from nswchart.casestudy import load_secom, preprocess_secom, replay_case
from nswchart.limits import LimitConfig, bootstrap_control_limit
from nswchart.monitor import MonitorConfig

NAN = np.nan


def heteroscedastic_fixture(seed=0, n_ic=300, n_oc=80, p=12):
    """IC/OC pools with constant columns, missing cells, outliers, and a mean shift."""
    rng = np.random.default_rng(seed)
    scale = np.linspace(0.5, 4.0, p)
    ic = rng.standard_normal((n_ic, p)) * scale + 10.0
    oc = rng.standard_normal((n_oc, p)) * scale + 10.0
    oc[:, :3] += 6.0 * scale[:3]  # shifted block
    ic[:, 4] = 7.5  # constant in IC
    oc[:, 4] = rng.standard_normal(n_oc)  # varying in OC must not save it
    ic[:, 5] = NAN  # entirely missing in IC
    ic[rng.integers(0, n_ic, 25), 6] = NAN
    oc[rng.integers(0, n_oc, 10), 7] = NAN
    ic[5, 0] += 500.0  # gross outlier
    return ic, oc


class TestPreprocess:
    def test_constant_and_all_missing_columns_dropped(self):
        ic, oc = heteroscedastic_fixture()
        ic_clean, oc_clean, report = preprocess_secom(ic, oc)
        assert report.removed_constant_columns == (5, 6)  # 1-based
        assert ic_clean.shape[1] == oc_clean.shape[1] == 10
        assert report.retained_columns == 10

    def test_outlier_replaced_by_median(self):
        ic = np.array([[1.0], [2.0], [1.0], [2.0], [100.0]])
        oc = np.array([[1.5], [2.5]])
        # fences from Q1=1, Q3=2: [-0.5, 3.5]; median of (1,2,1,2,100) is 2
        ic_clean, _, report = preprocess_secom(ic, oc)
        assert report.outliers_replaced.tolist() == [1]
        recovered = ic_clean[:, 0] * report.ic_stds[0] + report.ic_means[0]
        assert recovered[-1] == pytest.approx(2.0)
        np.testing.assert_allclose(recovered[:-1], ic[:-1, 0], atol=1e-12)

    def test_outlier_collapse_drops_degenerate_column(self):
        ic = np.array([[1.0, 0.0], [1.0, 1.0], [1.0, 2.0], [1.0, 3.0], [100.0, 4.0]])
        oc = np.array([[1.0, 1.0]])
        # column 1: fences are [1, 1], the 100 becomes 1, column degenerates
        ic_clean, _, report = preprocess_secom(ic, oc)
        assert report.removed_constant_columns == ()
        assert report.removed_degenerate_columns == (1,)
        assert ic_clean.shape[1] == 1

    def test_missing_imputed_with_ic_median(self):
        ic = np.array([[1.0, 5.0], [2.0, NAN], [3.0, 6.0], [NAN, 7.0]])
        oc = np.array([[NAN, NAN], [1.0, 2.0]])
        ic_clean, oc_clean, report = preprocess_secom(ic, oc)
        assert report.missing_imputed_ic.tolist() == [1, 1]
        assert report.missing_imputed_oc.tolist() == [1, 1]
        # the OC NaN in column 0 became the IC median 2.0
        recovered = oc_clean[0, 0] * report.ic_stds[0] + report.ic_means[0]
        assert recovered == pytest.approx(2.0)
        assert np.isfinite(ic_clean).all() and np.isfinite(oc_clean).all()

    def test_standardization_oracle(self):
        ic, oc = heteroscedastic_fixture(seed=1)
        ic_clean, _, _ = preprocess_secom(ic, oc)
        np.testing.assert_allclose(ic_clean.mean(axis=0), 0.0, atol=1e-9)
        np.testing.assert_allclose(ic_clean.std(axis=0, ddof=1), 1.0, atol=1e-9)

    def test_oc_outliers_left_alone(self):
        ic = np.vstack([np.linspace(0, 1, 50)] * 2).T
        ic = ic + np.random.default_rng(3).standard_normal(ic.shape) * 0.1
        oc = np.zeros((3, 2))
        oc[1, 0] = 1e4  # wild OC value must survive (it may be the signal)
        _, oc_clean, report = preprocess_secom(ic, oc)
        restored = oc_clean[1, 0] * report.ic_stds[0] + report.ic_means[0]
        assert restored == pytest.approx(1e4)

    def test_schema_mismatch(self):
        with pytest.raises(ValueError, match="column mismatch"):
            preprocess_secom(np.zeros((5, 3)), np.zeros((4, 2)))

    def test_second_pass_reports_stability(self):
        ic, oc = heteroscedastic_fixture(seed=2)
        ic1, oc1, _ = preprocess_secom(ic, oc)
        ic2, oc2, second = preprocess_secom(ic1, oc1)
        # cleaned output has no constants and no missing cells left
        assert second.removed_constant_columns == ()
        assert second.removed_degenerate_columns == ()
        assert second.missing_imputed_ic.sum() == 0
        assert second.missing_imputed_oc.sum() == 0
        # fence replacement on an already-cleaned sample is possible; the
        # report carries the counts either way
        if second.outliers_replaced.sum() == 0:
            np.testing.assert_allclose(ic2, ic1, atol=1e-12)
        else:
            assert second.outliers_replaced.sum() > 0


def replay_cfg(pool, W=10, s=5, alpha=0.05, horizon=60, B=2000, seed=31):
    cfg = LimitConfig(fap_alpha=alpha, bootstrap_B=B, horizon_n=horizon, window_W=W, step_s=s, seed=seed)
    limit = bootstrap_control_limit(pool, cfg)
    return MonitorConfig(p=pool.shape[1], W=W, s=s, limit=limit, horizon_n=horizon)


class TestReplay:
    def test_null_replay_rate_near_alpha(self):
        pool = np.random.default_rng(8).standard_normal((400, 6))
        cfg = replay_cfg(pool)
        summary = replay_case(pool, pool, tau=0, cfg=cfg, replications=400, seed=5)
        se3 = 3.0 * np.sqrt(0.05 * 0.95 / 400)
        assert abs(summary.dr - 0.05) < se3 + 0.02

    def test_detects_shifted_pool(self):
        rng = np.random.default_rng(9)
        ic = rng.standard_normal((300, 6))
        oc = rng.standard_normal((120, 6))
        oc[:, :2] += 3.0
        cfg = replay_cfg(ic)
        summary = replay_case(ic, oc, tau=20, cfg=cfg, replications=200, seed=6)
        assert summary.dr > 0.95
        assert summary.ced is not None and 0 < summary.ced < 30
        assert summary.cpe is not None
        assert summary.drv is None

    def test_deterministic(self):
        pool = np.random.default_rng(10).standard_normal((200, 4))
        cfg = replay_cfg(pool, W=8)
        a = replay_case(pool, pool + 1.0, tau=15, cfg=cfg, replications=50, seed=7)
        b = replay_case(pool, pool + 1.0, tau=15, cfg=cfg, replications=50, seed=7)
        assert a == b

    def test_tau_bounds(self):
        pool = np.random.default_rng(11).standard_normal((50, 3))
        cfg = replay_cfg(pool, W=8)
        with pytest.raises(ValueError, match="tau must be"):
            replay_case(pool, pool, tau=61, cfg=cfg, replications=5, seed=0)


class TestLoadSecom:
    def test_split_by_labels(self, tmp_path):
        data = tmp_path / "secom.data"
        labels = tmp_path / "secom_labels.data"
        data.write_text("1.0 2.0 NaN\n3.0 4.0 5.0\n6.0 7.0 8.0\n")
        labels.write_text("-1 t1\n1 t2\n-1 t3\n".replace("t1", "2008").replace("t2", "2008").replace("t3", "2008"))
        ic, oc = load_secom(str(data), str(labels))
        assert ic.shape == (2, 3)
        assert oc.shape == (1, 3)
        assert np.isnan(ic[0, 2])
        assert oc[0, 0] == 3.0

    def test_row_mismatch(self, tmp_path):
        data = tmp_path / "secom.data"
        labels = tmp_path / "secom_labels.data"
        data.write_text("1.0 2.0\n3.0 4.0\n")
        labels.write_text("-1\n")
        with pytest.raises(ValueError, match="row mismatch"):
            load_secom(str(data), str(labels))
