"""Rank-based EWMA comparator chart over a reference sample.

The per-variable statistic at time n ranks each of the last W observations
among the pooled reference-plus-stream values of that variable, applies EWMA
weights (1 - lambda)^(n - i), and standardizes by the Wilcoxon rank-sum scale
sqrt(W (m0 + n + 1) (m0 + n - W) / 12). The chart statistic sums the squared
per-variable terms.

Two centerings are supported. ``as_printed`` subtracts W (m0 + n + 1) / 2
inside every summand, reproducing the comparator formula exactly as published;
that term swamps each rank, so upward mean shifts push the statistic DOWN and
the chart has essentially no power against them. ``per_rank`` subtracts the
expected single rank (m0 + n + 1) / 2, which is the variant with usable power;
the comparison protocol uses it. The published tuning (smoothing value and
online limit procedure) is not fully specified, so comparisons are expected to
agree qualitatively, not cell by cell.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.stats import rankdata

from .simulate import MetricsSummary, ModelParams, ScenarioSpec, generate_run

CENTERINGS = ("as_printed", "per_rank")


@dataclass(frozen=True)
class DfewmaConfig:
    m0: int
    W: int
    p: int
    lambda_: float = 0.1
    fap_alpha: float = 0.01
    limit_h: float | None = None
    centering: str = "as_printed"

    def __post_init__(self):
        if self.m0 < 1:
            raise ValueError(f"m0 must be >= 1, got {self.m0}")
        if not 0.0 < self.lambda_ <= 1.0:
            raise ValueError(f"lambda_ must be in (0, 1], got {self.lambda_}")
        if self.W < 1:
            raise ValueError(f"W must be >= 1, got {self.W}")
        if self.centering not in CENTERINGS:
            raise ValueError(f"centering must be one of {CENTERINGS}, got {self.centering!r}")


@dataclass(frozen=True)
class DfewmaSignal:
    """First alarm of the comparator chart (no change-point or variable diagnosis)."""

    alarm_time_n: int
    statistic_value: float


def _weights(w: int, lambda_: float) -> np.ndarray:
    # weight for row i in the window, oldest first: (1 - lambda)^(n - i)
    return (1.0 - lambda_) ** np.arange(w - 1, -1, -1)


def _centering(n_total: int, w: int, centering: str) -> float:
    if centering == "as_printed":
        return w * (n_total + 1) / 2.0
    return (n_total + 1) / 2.0


def dfewma_per_variable(reference: np.ndarray, stream_prefix: np.ndarray, cfg: DfewmaConfig) -> np.ndarray:
    """Per-variable weighted rank statistics at n = len(stream_prefix).

    Ranks use the average convention on ties. Requires n >= W.
    """
    reference = np.asarray(reference, dtype=float)
    stream_prefix = np.asarray(stream_prefix, dtype=float)
    m0, n = reference.shape[0], stream_prefix.shape[0]
    if n < cfg.W:
        raise ValueError(f"need at least W={cfg.W} stream observations, got {n}")
    if reference.shape[1] != stream_prefix.shape[1]:
        raise ValueError("reference and stream column counts differ")
    ranks = rankdata(np.vstack([reference, stream_prefix]), axis=0, method="average")
    window_ranks = ranks[m0 + n - cfg.W : m0 + n, :]
    total = m0 + n
    center = _centering(total, cfg.W, cfg.centering)
    scale = np.sqrt(cfg.W * (total + 1) * (total - cfg.W) / 12.0)
    w = _weights(cfg.W, cfg.lambda_)
    return (w[:, None] * (window_ranks - center)).sum(axis=0) / scale


def dfewma_statistic(reference: np.ndarray, stream_prefix: np.ndarray, cfg: DfewmaConfig) -> float:
    """Chart statistic: sum of squared per-variable terms."""
    t_r = dfewma_per_variable(reference, stream_prefix, cfg)
    return float((t_r**2).sum())


def dfewma_monitor(reference: np.ndarray, stream: np.ndarray, cfg: DfewmaConfig) -> DfewmaSignal | None:
    """First n with statistic above the calibrated limit, or None."""
    if cfg.limit_h is None:
        raise ValueError("cfg.limit_h is not calibrated")
    stream = np.asarray(stream, dtype=float)
    stats = dfewma_statistics_batch(reference[None, ...], stream[None, ...], cfg)[0]
    exceed = np.flatnonzero(stats > cfg.limit_h)
    if exceed.size == 0:
        return None
    n = int(exceed[0]) + cfg.W
    return DfewmaSignal(alarm_time_n=n, statistic_value=float(stats[exceed[0]]))


def dfewma_statistics_batch(refs: np.ndarray, streams: np.ndarray, cfg: DfewmaConfig) -> np.ndarray:
    """Statistic series for a stack of runs, one column per time n = W..horizon.

    Incremental rank maintenance: for each window row we track how many pooled
    values are below it and how many tie it, updating both counts as new
    observations arrive. Matches ``dfewma_statistic`` exactly (average ranks).
    """
    refs = np.asarray(refs, dtype=float)
    streams = np.asarray(streams, dtype=float)
    m, m0, p = refs.shape
    n = streams.shape[1]
    if n < cfg.W:
        raise ValueError(f"streams shorter than the window: {n} < {cfg.W}")
    w_len = cfg.W
    hist = np.empty((m, m0 + n, p))
    hist[:, :m0] = refs
    below = np.zeros((m, w_len, p))
    ties = np.zeros((m, w_len, p))
    window = np.empty((m, w_len, p))
    weights = _weights(w_len, cfg.lambda_)
    out = np.empty((m, n - w_len + 1))
    pos = 0
    count = 0
    for t in range(1, n + 1):
        x = streams[:, t - 1, :]
        seen = m0 + t - 1
        below_new = (hist[:, :seen, :] < x[:, None, :]).sum(axis=1)
        ties_new = (hist[:, :seen, :] == x[:, None, :]).sum(axis=1) + 1  # self included
        hist[:, seen, :] = x
        if count == w_len:
            below += x[:, None, :] < window
            ties += x[:, None, :] == window
            below[:, pos, :] = below_new
            ties[:, pos, :] = ties_new
            window[:, pos, :] = x
            pos = (pos + 1) % w_len
        else:
            if count:
                below[:, :count, :] += x[:, None, :] < window[:, :count, :]
                ties[:, :count, :] += x[:, None, :] == window[:, :count, :]
            below[:, count, :] = below_new
            ties[:, count, :] = ties_new
            window[:, count, :] = x
            count += 1
        if t >= w_len:
            total = m0 + t
            ranks = below + (ties + 1) / 2.0
            order = (np.arange(w_len) + pos) % w_len if count == w_len else np.arange(w_len)
            center = _centering(total, w_len, cfg.centering)
            scale = np.sqrt(w_len * (total + 1) * (total - w_len) / 12.0)
            t_r = (weights[None, :, None] * (ranks[:, order, :] - center)).sum(axis=1) / scale
            out[:, t - w_len] = (t_r**2).sum(axis=1)
    return out


def calibrate_dfewma_limit(
    cfg: DfewmaConfig,
    horizon_n: int,
    n_runs: int = 1000,
    seed: int = 0,
    chunk: int = 125,
) -> float:
    """Empirical (1 - alpha) quantile of the per-run maximum statistic under IC.

    Each calibration run draws a fresh reference sample and a fresh IC stream
    (RNG streams keyed by (seed, run, 1) and (seed, run, 2)), so the limit
    accounts for reference-sample variability.
    """
    from .limits import empirical_quantile

    maxima = np.empty(n_runs)
    for lo in range(0, n_runs, chunk):
        hi = min(lo + chunk, n_runs)
        refs = np.stack(
            [np.random.default_rng([seed, j, 1]).standard_normal((cfg.m0, cfg.p)) for j in range(lo, hi)]
        )
        streams = np.stack(
            [np.random.default_rng([seed, j, 2]).standard_normal((horizon_n, cfg.p)) for j in range(lo, hi)]
        )
        maxima[lo:hi] = dfewma_statistics_batch(refs, streams, cfg).max(axis=1)
    return empirical_quantile(maxima, 1.0 - cfg.fap_alpha)


def run_dfewma_scenario(
    spec: ScenarioSpec,
    params: ModelParams,
    cfg: DfewmaConfig,
    chunk: int = 125,
) -> MetricsSummary:
    """Monte-Carlo DR/CED of the comparator chart under a scenario.

    Streams reuse the scenario generator (so runs pair with the main chart's);
    each run's reference sample comes from the (spec.seed, run, 1) stream.
    """
    if cfg.limit_h is None:
        raise ValueError("cfg.limit_h is not calibrated; run calibrate_dfewma_limit first")
    if cfg.p != spec.p or cfg.W != spec.W:
        raise ValueError(f"comparator config (p={cfg.p}, W={cfg.W}) does not match scenario (p={spec.p}, W={spec.W})")
    r_total = spec.replications_R
    signaled = np.zeros(r_total, dtype=bool)
    signal_time = np.zeros(r_total, dtype=int)
    for lo in range(0, r_total, chunk):
        hi = min(lo + chunk, r_total)
        refs = np.stack(
            [np.random.default_rng([spec.seed, rep, 1]).standard_normal((cfg.m0, cfg.p)) for rep in range(lo, hi)]
        )
        streams = np.stack([generate_run(spec, params, rep) for rep in range(lo, hi)])
        stats = dfewma_statistics_batch(refs, streams, cfg)
        exceed = stats > cfg.limit_h
        hit = exceed.any(axis=1)
        first = exceed.argmax(axis=1) + cfg.W
        signaled[lo:hi] = hit
        signal_time[lo:hi][hit] = first[hit]
    n_sig = int(signaled.sum())
    is_ic = spec.delta == 0.0
    return MetricsSummary(
        dr=n_sig / r_total,
        ced=float(np.mean(signal_time[signaled] - spec.tau)) if n_sig else None,
        fap=n_sig / r_total if is_ic else None,
        cpe=None,
        drv=None,
        replications=r_total,
        signaling_runs=n_sig,
    )


def comparison_config(p: int, w: int, m0: int = 100, lambda_: float = 0.1, fap_alpha: float = 0.01) -> DfewmaConfig:
    """Config for the head-to-head comparison protocol (per-rank centering)."""
    return DfewmaConfig(m0=m0, W=w, p=p, lambda_=lambda_, fap_alpha=fap_alpha, centering="per_rank")


def with_limit(cfg: DfewmaConfig, limit_h: float) -> DfewmaConfig:
    return replace(cfg, limit_h=limit_h)
