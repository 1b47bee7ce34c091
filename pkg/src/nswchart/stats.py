"""Supremum-type two-sample split statistics over multivariate observation windows.

Observations are float matrices with rows in time order and one column per
variable. All statistics here are pure functions of their inputs: for a split
point k the per-variable statistic is

    sqrt(k * (n - k) / n) * |mean(rows 1..k) - mean(rows k+1..n)|

and the charting statistic is the maximum over variables and over all
admissible splits k in {3, ..., n-3} (each side keeps at least 3 rows).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MIN_SEGMENT = 3
MIN_SAMPLE = 2 * MIN_SEGMENT


@dataclass(frozen=True)
class SplitStatistic:
    """Value of the two-sample statistic at one split point.

    ``split_k`` is the pre-split sample size and ``argmax_variable`` the
    1-based index of the variable attaining the maximum (smallest index on
    ties).
    """

    split_k: int
    value: float
    argmax_variable: int


@dataclass(frozen=True)
class ChartPoint:
    """Charting statistic at time ``time_index_n`` with its maximizing split."""

    time_index_n: int
    value: float
    best_split: SplitStatistic


def check_observations(x) -> np.ndarray:
    """Validate and coerce an observation matrix to a finite float64 array."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 2:
        raise ValueError(f"observation matrix must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"observation matrix must be non-empty, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError("observation matrix contains NaN or infinite entries")
    return arr


def column_means(x: np.ndarray, start: int, stop: int) -> np.ndarray:
    """Per-column means of rows ``start:stop`` (0-based, half-open)."""
    x = np.asarray(x, dtype=float)
    if not 0 <= start < stop <= x.shape[0]:
        raise ValueError(f"row range [{start}, {stop}) is empty or out of bounds for {x.shape[0]} rows")
    return x[start:stop].mean(axis=0)


def _split_values(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Standardized mean-difference magnitudes at every admissible split.

    Returns ``(ks, values)`` where ``values[i, r]`` is the statistic for
    split ``ks[i]`` and variable ``r``. Prefix sums make the whole profile
    O(n * p).
    """
    n = x.shape[0]
    if n < MIN_SAMPLE:
        raise ValueError(f"need at least {MIN_SAMPLE} observations, got {n}")
    ks = np.arange(MIN_SEGMENT, n - MIN_SEGMENT + 1)
    # centering on the first row leaves every mean difference unchanged but
    # keeps constant columns exactly at zero and conditions the prefix sums
    prefix = np.cumsum(x - x[0], axis=0)
    total = prefix[-1]
    pre_sums = prefix[ks - 1]
    pre_means = pre_sums / ks[:, None]
    post_means = (total - pre_sums) / (n - ks)[:, None]
    scale = np.sqrt(ks * (n - ks) / n)
    return ks, scale[:, None] * np.abs(pre_means - post_means)


def per_variable_split_values(x: np.ndarray, k: int) -> np.ndarray:
    """Per-variable statistic values at split ``k`` (used by diagnosis)."""
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    if not MIN_SEGMENT <= k <= n - MIN_SEGMENT:
        raise ValueError(f"split k={k} outside admissible range [{MIN_SEGMENT}, {n - MIN_SEGMENT}] for n={n}")
    centered = x - x[0]
    diff = centered[:k].mean(axis=0) - centered[k:].mean(axis=0)
    return np.sqrt(k * (n - k) / n) * np.abs(diff)


def split_statistic(x: np.ndarray, k: int) -> SplitStatistic:
    """Two-sample statistic at split ``k``: max over variables, ties to the smallest index."""
    values = per_variable_split_values(x, k)
    r = int(np.argmax(values))
    return SplitStatistic(split_k=int(k), value=float(values[r]), argmax_variable=r + 1)


def full_sample_chart_statistic(x: np.ndarray) -> ChartPoint:
    """Charting statistic over all admissible splits of the full sample.

    Ties in the (split, variable) argmax go to the smallest split, then the
    smallest variable index.
    """
    x = np.asarray(x, dtype=float)
    ks, values = _split_values(x)
    flat = int(np.argmax(values))
    ki, r = divmod(flat, values.shape[1])
    best = SplitStatistic(split_k=int(ks[ki]), value=float(values[ki, r]), argmax_variable=r + 1)
    return ChartPoint(time_index_n=x.shape[0], value=best.value, best_split=best)


def window_chart_statistic(window: np.ndarray, time_index_n: int) -> ChartPoint:
    """Charting statistic of one sliding window ending at time ``time_index_n``."""
    window = np.asarray(window, dtype=float)
    if window.shape[0] < MIN_SAMPLE:
        raise ValueError(f"window needs at least {MIN_SAMPLE} rows, got {window.shape[0]}")
    cp = full_sample_chart_statistic(window)
    return ChartPoint(time_index_n=int(time_index_n), value=cp.value, best_split=cp.best_split)


def change_point_estimate(cp: ChartPoint, window_w: int) -> int:
    """Change-point estimate for a window of size ``window_w`` ending at ``cp.time_index_n``.

    For a full-sample chart point pass ``window_w = cp.time_index_n``.
    """
    return cp.time_index_n - window_w + cp.best_split.split_k


def _split_values_batch(windows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split-value profiles for a stack of same-size windows.

    ``windows`` has shape (m, W, p); the result is ``(ks, values)`` with
    ``values[j, i, r]`` the statistic of window j at split ``ks[i]`` for
    variable r. Row-lane cumsums keep this bit-identical to the single-window
    path.
    """
    m, w, p = windows.shape
    if w < MIN_SAMPLE:
        raise ValueError(f"windows need at least {MIN_SAMPLE} rows, got {w}")
    ks = np.arange(MIN_SEGMENT, w - MIN_SEGMENT + 1)
    prefix = np.cumsum(windows - windows[:, :1, :], axis=1)
    total = prefix[:, -1, :]
    pre_sums = prefix[:, ks - 1, :]
    pre_means = pre_sums / ks[None, :, None]
    post_means = (total[:, None, :] - pre_sums) / (w - ks)[None, :, None]
    scale = np.sqrt(ks * (w - ks) / w)
    return ks, scale[None, :, None] * np.abs(pre_means - post_means)


def window_chart_values_batch(windows: np.ndarray) -> np.ndarray:
    """Charting statistic (max over splits and variables) of each window in a stack."""
    _, values = _split_values_batch(windows)
    return values.reshape(windows.shape[0], -1).max(axis=1)
