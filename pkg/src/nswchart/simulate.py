"""Scenario generators and the Monte-Carlo experiment harness.

Four out-of-control families share an in-control segment of i.i.d. standard
normal rows; after the change point the stream switches to

  I   mean shift only,
  II  mean shift with a cyclic variance multiplier (heteroscedastic),
  III mean shift with AR(1)-style cross-correlation 0.995^|l-m|,
  IV  multivariate t (30 df, location-scale) with the same correlation.

The shift puts delta in the first round(v * p) coordinates. delta = 0 encodes
a pure in-control run. Every replication draws from an RNG stream keyed by
(scenario seed, replication index), so results are independent of chunking or
execution order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .monitor import MonitorConfig, SignalReport
from .stats import _split_values_batch

MODELS = ("I", "II", "III", "IV")

DEFAULT_LAMBDA_SEQUENCE = (0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 0.9, 0.8, 0.7, 0.6)


@dataclass(frozen=True)
class ModelParams:
    """Shared distribution constants for the OC model families."""

    lambda_sequence: tuple = DEFAULT_LAMBDA_SEQUENCE
    corr_base: float = 0.995
    t_dof: int = 30


@dataclass(frozen=True)
class ScenarioSpec:
    model: str
    p: int
    W: int
    tau: int
    delta: float
    sparsity_v: float
    horizon_n: int = 100
    replications_R: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}, expected one of {MODELS}")
        if not 0 <= self.tau < self.horizon_n:
            raise ValueError(f"tau must satisfy 0 <= tau < horizon_n, got {self.tau}")
        if not 0.0 < self.sparsity_v <= 1.0:
            raise ValueError(f"sparsity_v must be in (0, 1], got {self.sparsity_v}")
        if self.delta != 0.0 and self.shifted_count() < 1:
            raise ValueError(f"v*p rounds to {self.shifted_count()}, need >= 1 shifted variable")
        if self.replications_R < 1:
            raise ValueError("replications_R must be >= 1")

    def shifted_count(self) -> int:
        return int(round(self.sparsity_v * self.p))

    def shifted_mean(self) -> np.ndarray:
        mu = np.zeros(self.p)
        mu[: self.shifted_count()] = self.delta
        return mu


@dataclass(frozen=True)
class MetricsSummary:
    """Aggregate metrics of one scenario; fields left None when undefined."""

    dr: float
    ced: float | None
    fap: float | None
    cpe: float | None
    drv: float | None
    replications: int
    signaling_runs: int


def correlation_matrix(p: int, base: float = 0.995) -> np.ndarray:
    """Covariance sigma[l, m] = base^|l-m| used by models III and IV."""
    idx = np.arange(p)
    return base ** np.abs(idx[:, None] - idx[None, :])


def generate_run(spec: ScenarioSpec, params: ModelParams, run_seed: int) -> np.ndarray:
    """One (horizon_n, p) stream, deterministic given (spec.seed, run_seed).

    Draw order is pinned: the IC block first, then the OC normal block, then
    (model IV only) the chi-square mixing draws.
    """
    rng = np.random.default_rng([spec.seed, run_seed])
    n, p, tau = spec.horizon_n, spec.p, spec.tau
    if spec.delta == 0.0:
        return rng.standard_normal((n, p))
    out = np.empty((n, p))
    out[:tau] = rng.standard_normal((tau, p))
    m = n - tau
    z = rng.standard_normal((m, p))
    mu = spec.shifted_mean()
    if spec.model == "I":
        out[tau:] = mu + z
    elif spec.model == "II":
        seq = np.asarray(params.lambda_sequence)
        lam = seq[np.arange(m) % seq.size]
        out[tau:] = mu + np.sqrt(lam)[:, None] * z
    else:
        chol = np.linalg.cholesky(correlation_matrix(p, params.corr_base))
        correlated = z @ chol.T
        if spec.model == "III":
            out[tau:] = mu + correlated
        else:  # model IV: location-scale multivariate t, one mixing draw per row
            g = rng.chisquare(params.t_dof, size=m)
            out[tau:] = mu + correlated * np.sqrt(params.t_dof / g)[:, None]
    return out


def evaluation_times(w: int, s: int, horizon_n: int) -> np.ndarray:
    """Window-completion times n = W, W+s, ..., <= horizon."""
    return np.arange(w, horizon_n + 1, s)


@dataclass
class _RunOutcome:
    signaled: np.ndarray
    signal_time: np.ndarray
    tau_hat: np.ndarray
    drv: np.ndarray


def _monitor_chunk(streams: np.ndarray, cfg: MonitorConfig, horizon_n: int, vp: int) -> _RunOutcome:
    """Monitor a stack of streams to first signal; vectorized over runs and splits."""
    m = streams.shape[0]
    h = cfg.limit.h
    signaled = np.zeros(m, dtype=bool)
    signal_time = np.zeros(m, dtype=int)
    tau_hat = np.zeros(m, dtype=int)
    drv_vals = np.full(m, np.nan)
    alive = np.ones(m, dtype=bool)
    for t in evaluation_times(cfg.W, cfg.s, horizon_n):
        if not alive.any():
            break
        idx_alive = np.flatnonzero(alive)
        ks, values = _split_values_batch(streams[idx_alive, t - cfg.W : t, :])
        maxima = values.reshape(len(idx_alive), -1).max(axis=1)
        hits = maxima > h
        if not hits.any():
            continue
        for local in np.flatnonzero(hits):
            run = idx_alive[local]
            flat = int(values[local].argmax())
            ki, _ = divmod(flat, cfg.p)
            signaled[run] = True
            signal_time[run] = t
            tau_hat[run] = t - cfg.W + int(ks[ki])
            if vp > 0:
                hit_vars = np.flatnonzero(values[local, ki] > h)
                drv_vals[run] = np.count_nonzero(hit_vars < vp) / vp
        alive[idx_alive[hits]] = False
    return _RunOutcome(signaled, signal_time, tau_hat, drv_vals)


def run_scenario(
    spec: ScenarioSpec,
    params: ModelParams,
    cfg: MonitorConfig,
    chunk: int = 250,
) -> MetricsSummary:
    """Monte-Carlo metrics over spec.replications_R independent runs.

    Each run is monitored to its first signal or the end of the horizon. DR is
    the fraction of runs that signal; CED, CPE, and DRV average over signaling
    runs only. For delta = 0 the signal fraction is reported as the empirical
    FAP and DRV is undefined.
    """
    if cfg.p != spec.p or cfg.W != spec.W:
        raise ValueError(f"monitor config (p={cfg.p}, W={cfg.W}) does not match scenario (p={spec.p}, W={spec.W})")
    r_total = spec.replications_R
    vp = spec.shifted_count() if spec.delta != 0.0 else 0
    signaled = np.zeros(r_total, dtype=bool)
    signal_time = np.zeros(r_total, dtype=int)
    tau_hat = np.zeros(r_total, dtype=int)
    drv_vals = np.full(r_total, np.nan)
    for lo in range(0, r_total, chunk):
        hi = min(lo + chunk, r_total)
        streams = np.stack([generate_run(spec, params, rep) for rep in range(lo, hi)])
        out = _monitor_chunk(streams, cfg, spec.horizon_n, vp)
        signaled[lo:hi] = out.signaled
        signal_time[lo:hi] = out.signal_time
        tau_hat[lo:hi] = out.tau_hat
        drv_vals[lo:hi] = out.drv
    n_sig = int(signaled.sum())
    is_ic = spec.delta == 0.0
    ced = float(np.mean(signal_time[signaled] - spec.tau)) if n_sig else None
    cpe = float(np.mean(tau_hat[signaled])) if n_sig else None
    drv_mean = float(np.nanmean(drv_vals[signaled])) if (n_sig and not is_ic) else None
    return MetricsSummary(
        dr=n_sig / r_total,
        ced=ced,
        fap=n_sig / r_total if is_ic else None,
        cpe=cpe,
        drv=drv_mean,
        replications=r_total,
        signaling_runs=n_sig,
    )


def drv(report: SignalReport, spec: ScenarioSpec) -> float:
    """Fraction of truly shifted variables recovered by a diagnosis."""
    vp = spec.shifted_count()
    if vp < 1:
        raise ValueError("scenario has no shifted variables")
    recovered = sum(1 for r in report.suspicious_variables if r <= vp)
    return recovered / vp


def autocorrelation(series: np.ndarray, max_lag: int) -> np.ndarray:
    """Sample autocorrelations at lags 1..max_lag."""
    s = np.asarray(series, dtype=float)
    if max_lag < 1 or max_lag >= s.size:
        raise ValueError(f"max_lag must be in [1, {s.size - 1}], got {max_lag}")
    s = s - s.mean()
    den = float(np.dot(s, s))
    if den == 0.0:
        raise ValueError("series is constant; autocorrelation undefined")
    return np.array([float(np.dot(s[k:], s[:-k])) / den for k in range(1, max_lag + 1)])


def chart_acf(stream: np.ndarray, w: int, s: int, max_lag: int, chunk: int = 2000) -> np.ndarray:
    """Autocorrelation of the chart-statistic series of one continued stream.

    The stream is evaluated at every window completion with no stopping rule;
    needs at least 30 chart points.
    """
    stream = np.asarray(stream, dtype=float)
    times = evaluation_times(w, s, stream.shape[0])
    if times.size < 30:
        raise ValueError(f"stream yields only {times.size} chart points, need >= 30")
    values = np.empty(times.size)
    for lo in range(0, times.size, chunk):
        sub = times[lo : lo + chunk]
        windows = np.stack([stream[t - w : t] for t in sub])
        _, vals = _split_values_batch(windows)
        values[lo : lo + len(sub)] = vals.reshape(len(sub), -1).max(axis=1)
    return autocorrelation(values, max_lag)


def metrics_row(spec: ScenarioSpec, summary: MetricsSummary, scheme: str = "nsw") -> dict:
    """One CSV row mirroring the experiment tables."""
    return {
        "scheme": scheme,
        "model": spec.model,
        "p": spec.p,
        "W": spec.W,
        "tau": spec.tau,
        "delta": spec.delta,
        "v": spec.sparsity_v,
        "DR": summary.dr,
        "CED": summary.ced,
        "CPE": summary.cpe,
        "DRV": summary.drv,
        "FAP": summary.fap,
        "R": summary.replications,
        "seed": spec.seed,
    }
