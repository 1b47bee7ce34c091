"""Raw-sensor preprocessing and monitored replay of recorded IC/OC pools.

Cleaning pipeline for paired in-control / out-of-control samples with missing
values (NaN):

  1. drop columns that are constant (or entirely missing) in the IC sample;
  2. replace IC values outside Tukey's fences [Q1 - 1.5 IQR, Q3 + 1.5 IQR]
     with the IC column median (OC values are left alone: an OC outlier may
     be the signal);
  3. impute missing values in both samples with the IC column median;
  4. standardize both samples by the IC mean and sample standard deviation
     computed after steps 2-3; columns degenerating to zero spread are
     dropped and reported.

Quartiles use linear interpolation (numpy default); fence membership depends
on this convention. Medians come from the original non-missing IC values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .monitor import MonitorConfig
from .simulate import MetricsSummary, _monitor_chunk

TUKEY_MULTIPLIER = 1.5


@dataclass(frozen=True)
class PreprocessReport:
    """What the cleaning pass did; column indices are 1-based originals."""

    removed_constant_columns: tuple[int, ...]
    removed_degenerate_columns: tuple[int, ...]
    outliers_replaced: np.ndarray
    missing_imputed_ic: np.ndarray
    missing_imputed_oc: np.ndarray
    ic_means: np.ndarray
    ic_stds: np.ndarray

    @property
    def retained_columns(self) -> int:
        return self.ic_means.size


def _constant_in_sample(x: np.ndarray) -> np.ndarray:
    """Mask of columns with no variation among non-missing values (or all missing)."""
    p = x.shape[1]
    mask = np.zeros(p, dtype=bool)
    for j in range(p):
        col = x[:, j]
        finite = col[~np.isnan(col)]
        mask[j] = finite.size == 0 or np.all(finite == finite[0])
    return mask


def preprocess_secom(ic_raw: np.ndarray, oc_raw: np.ndarray) -> tuple[np.ndarray, np.ndarray, PreprocessReport]:
    """Clean paired raw samples; returns (ic_clean, oc_clean, report).

    Missing entries must be NaN. Both samples need the same column count.
    """
    ic = np.array(ic_raw, dtype=float)
    oc = np.array(oc_raw, dtype=float)
    if ic.ndim != 2 or oc.ndim != 2:
        raise ValueError("samples must be 2-D matrices")
    if ic.shape[1] != oc.shape[1]:
        raise ValueError(f"column mismatch: IC has {ic.shape[1]} columns, OC has {oc.shape[1]}")

    constant = _constant_in_sample(ic)
    removed_constant = tuple((np.flatnonzero(constant) + 1).tolist())
    keep = ~constant
    ic = ic[:, keep]
    oc = oc[:, keep]
    kept_original = np.flatnonzero(keep) + 1

    medians = np.nanmedian(ic, axis=0)
    q1, q3 = np.nanpercentile(ic, [25, 75], axis=0)
    iqr = q3 - q1
    lower = q1 - TUKEY_MULTIPLIER * iqr
    upper = q3 + TUKEY_MULTIPLIER * iqr
    with np.errstate(invalid="ignore"):
        outlier = (ic < lower) | (ic > upper)
    outliers_replaced = outlier.sum(axis=0)
    ic = np.where(outlier, medians, ic)

    missing_ic = np.isnan(ic)
    missing_oc = np.isnan(oc)
    ic = np.where(missing_ic, medians, ic)
    oc = np.where(missing_oc, medians, oc)

    means = ic.mean(axis=0)
    stds = ic.std(axis=0, ddof=1)
    degenerate = stds == 0.0
    removed_degenerate = tuple(kept_original[degenerate].tolist())
    if degenerate.any():
        keep2 = ~degenerate
        ic = ic[:, keep2]
        oc = oc[:, keep2]
        means = means[keep2]
        stds = stds[keep2]
        outliers_replaced = outliers_replaced[keep2]
        missing_ic = missing_ic[:, keep2]
        missing_oc = missing_oc[:, keep2]

    report = PreprocessReport(
        removed_constant_columns=removed_constant,
        removed_degenerate_columns=removed_degenerate,
        outliers_replaced=outliers_replaced.astype(int),
        missing_imputed_ic=missing_ic.sum(axis=0).astype(int),
        missing_imputed_oc=missing_oc.sum(axis=0).astype(int),
        ic_means=means,
        ic_stds=stds,
    )
    return (ic - means) / stds, (oc - means) / stds, report


def replay_case(
    ic: np.ndarray,
    oc: np.ndarray,
    tau: int,
    cfg: MonitorConfig,
    replications: int = 1000,
    seed: int = 0,
    chunk: int = 100,
) -> MetricsSummary:
    """Monitor synthetic streams assembled from recorded IC/OC pools.

    Each replication samples tau rows from the IC pool and horizon - tau rows
    from the OC pool, with replacement (the pools are typically far smaller
    than replications x horizon). Streams are keyed by (seed, replication).
    DRV is undefined here: the truly shifted variables are unknown.
    """
    ic = np.asarray(ic, dtype=float)
    oc = np.asarray(oc, dtype=float)
    if ic.shape[1] != oc.shape[1]:
        raise ValueError("IC and OC pools have different column counts")
    horizon = cfg.horizon_n if cfg.horizon_n is not None else 100
    if not 0 <= tau <= horizon:
        raise ValueError(f"tau must be in [0, {horizon}], got {tau}")
    signaled = np.zeros(replications, dtype=bool)
    signal_time = np.zeros(replications, dtype=int)
    tau_hat = np.zeros(replications, dtype=int)
    for lo in range(0, replications, chunk):
        hi = min(lo + chunk, replications)
        streams = np.empty((hi - lo, horizon, ic.shape[1]))
        for j in range(lo, hi):
            rng = np.random.default_rng([seed, j])
            ic_rows = rng.integers(0, ic.shape[0], size=tau)
            oc_rows = rng.integers(0, oc.shape[0], size=horizon - tau)
            streams[j - lo, :tau] = ic[ic_rows]
            streams[j - lo, tau:] = oc[oc_rows]
        out = _monitor_chunk(streams, cfg, horizon, vp=0)
        signaled[lo:hi] = out.signaled
        signal_time[lo:hi] = out.signal_time
        tau_hat[lo:hi] = out.tau_hat
    n_sig = int(signaled.sum())
    return MetricsSummary(
        dr=n_sig / replications,
        ced=float(np.mean(signal_time[signaled] - tau)) if n_sig else None,
        fap=None,
        cpe=float(np.mean(tau_hat[signaled])) if n_sig else None,
        drv=None,
        replications=replications,
        signaling_runs=n_sig,
    )


def load_secom(data_path: str, labels_path: str) -> tuple[np.ndarray, np.ndarray]:
    """Split the raw semiconductor dataset into (IC, OC) by its pass/fail labels.

    ``data_path`` holds space-separated sensor rows with NaN markers;
    ``labels_path`` holds one label per row, -1 for pass (IC) and 1 for fail.
    """
    data = np.atleast_2d(np.genfromtxt(data_path))
    labels = np.genfromtxt(labels_path)
    if labels.ndim > 1:
        labels = labels[:, 0]
    labels = np.atleast_1d(labels)
    if data.shape[0] != labels.shape[0]:
        raise ValueError(f"row mismatch: {data.shape[0]} data rows vs {labels.shape[0]} labels")
    return data[labels == -1], data[labels == 1]
