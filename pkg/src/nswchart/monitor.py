"""Online moving-window monitoring with post-signal diagnosis.

A monitor keeps the most recent W observations, evaluates the charting
statistic every s arrivals (at times n = W, W+s, W+2s, ...), and signals when
the statistic strictly exceeds the calibrated control limit. After a signal,
diagnosis reports the change-point estimate and the set of variables whose
per-variable statistic at the maximizing split exceeds the limit on its own.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .limits import ControlLimit
from .stats import (
    MIN_SAMPLE,
    MIN_SEGMENT,
    ChartPoint,
    change_point_estimate,
    per_variable_split_values,
    window_chart_statistic,
)


@dataclass(frozen=True)
class MonitorConfig:
    p: int
    W: int
    s: int
    limit: ControlLimit
    horizon_n: int | None = None

    def __post_init__(self):
        if self.W < MIN_SAMPLE:
            raise ValueError(f"W must be >= {MIN_SAMPLE}, got {self.W}")
        if self.s < 1:
            raise ValueError(f"s must be >= 1, got {self.s}")
        if self.p < 1:
            raise ValueError(f"p must be >= 1, got {self.p}")
        if self.limit.config.window_W != self.W:
            raise ValueError(
                f"control limit was calibrated for W={self.limit.config.window_W}, monitor uses W={self.W}"
            )


@dataclass(frozen=True)
class SignalReport:
    """Alarm time, statistic, change-point estimate, and suspicious variables (1-based)."""

    alarm_time_n: int
    statistic_value: float
    change_point_estimate: int
    suspicious_variables: tuple[int, ...]


def check_signal(cp: ChartPoint, cfg: MonitorConfig) -> bool:
    """True iff the chart point strictly exceeds the control limit."""
    return cp.value > cfg.limit.h


def diagnose(window: np.ndarray, cp: ChartPoint, cfg: MonitorConfig) -> SignalReport:
    """Post-signal diagnosis on the signaling window.

    The suspicious set holds every variable whose statistic at the maximizing
    split k* exceeds h by itself; the variable that raised the alarm is always
    included.
    """
    if not check_signal(cp, cfg):
        raise ValueError(f"diagnose requires a signaling chart point (value {cp.value} <= h {cfg.limit.h})")
    window = np.asarray(window, dtype=float)
    if window.shape[0] != cfg.W:
        raise ValueError(f"window must have exactly W={cfg.W} rows, got {window.shape[0]}")
    k_star = cp.best_split.split_k
    values = per_variable_split_values(window, k_star)
    suspicious = set((np.flatnonzero(values > cfg.limit.h) + 1).tolist())
    suspicious.add(cp.best_split.argmax_variable)
    return SignalReport(
        alarm_time_n=cp.time_index_n,
        statistic_value=cp.value,
        change_point_estimate=change_point_estimate(cp, cfg.W),
        suspicious_variables=tuple(sorted(suspicious)),
    )


@dataclass
class Monitor:
    """Single-writer streaming state: buffer of the last W rows plus the chart history."""

    cfg: MonitorConfig
    time_n: int = 0
    _buffer: list = field(default_factory=list)
    history: list = field(default_factory=list)

    def observe(self, x) -> ChartPoint | None:
        """Ingest one observation; return a ChartPoint when a window completes.

        Rejects non-finite or wrongly sized observations without touching the
        state. Evaluations happen exactly at n = W, W+s, W+2s, ...
        """
        row = np.asarray(x, dtype=float).reshape(-1)
        if row.size != self.cfg.p:
            raise ValueError(f"observation has {row.size} entries, expected p={self.cfg.p}")
        if not np.isfinite(row).all():
            raise ValueError("observation contains NaN or infinite entries")
        self._buffer.append(row)
        if len(self._buffer) > self.cfg.W:
            del self._buffer[0]
        self.time_n += 1
        if self.time_n < self.cfg.W or (self.time_n - self.cfg.W) % self.cfg.s != 0:
            return None
        cp = window_chart_statistic(np.asarray(self._buffer), self.time_n)
        self.history.append(cp)
        return cp

    def current_window(self) -> np.ndarray:
        return np.asarray(self._buffer)

    def run(self, stream: np.ndarray, stop_at_signal: bool = True) -> SignalReport | None:
        """Feed a whole matrix row by row; return the first signal's diagnosis.

        With ``stop_at_signal=False`` the full stream is consumed regardless of
        signals (used for autocorrelation studies) and only the first signal,
        if any, is reported.
        """
        stream = np.asarray(stream, dtype=float)
        report = None
        for row in stream:
            cp = self.observe(row)
            if cp is None or report is not None:
                continue
            if check_signal(cp, self.cfg):
                report = diagnose(self.current_window(), cp, self.cfg)
                if stop_at_signal:
                    break
        return report

    @property
    def chart_values(self) -> np.ndarray:
        return np.asarray([cp.value for cp in self.history])

    @property
    def chart_times(self) -> np.ndarray:
        return np.asarray([cp.time_index_n for cp in self.history], dtype=int)


def admissible_change_point_range(alarm_time_n: int, w: int) -> tuple[int, int]:
    """Closed range of change-point estimates a window of size w can produce."""
    return alarm_time_n - w + MIN_SEGMENT, alarm_time_n - MIN_SEGMENT
